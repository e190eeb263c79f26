#pragma once

// Domain state machines: address catalog, producers, productive resources,
// products with origins/produced links, typed event records, tokens,
// notarizations, asseverations, unlock requests and payments.
//
// World holds the persistent contract state. Every mutation enters through
// World::apply() (called by the ledger for a signed transaction); queries are
// const and safe on a sealed snapshot. Operations validate fully before they
// mutate, so a rejected operation leaves the World untouched.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "agritrace/config.hpp"
#include "agritrace/crypto.hpp"
#include "agritrace/ledger.hpp"
#include "agritrace/params.hpp"

namespace agritrace::contracts {

using config::Role;

struct TxRef {
  std::uint64_t block_height = 0;
  std::uint32_t tx_index = 0;

  auto operator<=>(const TxRef&) const = default;
};

// ---------------------------------------------------------------------------
// Operations (transaction payloads)

struct Genesis {
  static constexpr std::string_view name = "genesis";
  std::string chain_id;
  std::string admin_actor_id;
  config::DescriptorSet config;
  std::map<Address, std::uint64_t> allocations;
  ledger::StorageMode payload_storage = ledger::StorageMode::log;
};

struct RegisterAddress {
  static constexpr std::string_view name = "register_address";
  Address address;
  std::string actor_id;
  std::set<Role> roles;  // empty means the actor's configured role
};

struct SetAddressEnabled {
  static constexpr std::string_view name = "set_address_enabled";
  Address address;
  bool enabled = true;
};

struct CreateResource {
  static constexpr std::string_view name = "create_resource";
  std::string kind_id;
  std::string producer;  // company name
  std::string description;
  std::uint64_t size = 0;
  std::string unit;  // empty means the kind's default unit
};

struct RecordEvent {
  static constexpr std::string_view name = "record_event";
  Address entity;
  std::string event_kind_id;
  std::vector<params::NamedValue> values;
};

struct OutputSpec {
  std::string kind_id;
  std::uint64_t quantity = 0;
  std::string unit;      // empty means the kind's default unit
  std::string producer;  // empty means chosen from the config
};

struct Transform {
  static constexpr std::string_view name = "transform";
  std::vector<Address> inputs;
  std::string event_kind_id;
  std::vector<OutputSpec> outputs;
  std::vector<params::NamedValue> values;
};

struct SplitProduct {
  static constexpr std::string_view name = "split";
  Address product;
  std::vector<std::uint64_t> quantities;
};

struct MergeProducts {
  static constexpr std::string_view name = "merge";
  std::vector<Address> products;
  std::vector<std::uint64_t> quantities;
};

struct Notarize {
  static constexpr std::string_view name = "notarize";
  Address entity;
  std::string digest_hex;
  std::string locator;
  std::vector<params::Triple> metadata;
};

struct Asseverate {
  static constexpr std::string_view name = "asseverate";
  Address entity;
  std::uint32_t record_index = 0;
};

struct RequestUnlock {
  static constexpr std::string_view name = "request_unlock";
  std::string event_kind_id;
  Address target;
};

struct ApproveUnlock {
  static constexpr std::string_view name = "approve_unlock";
  std::uint64_t request_id = 0;
};

struct Pay {
  static constexpr std::string_view name = "pay";
  Address recipient;
  std::uint64_t amount = 0;
};

using Operation = std::variant<Genesis, RegisterAddress, SetAddressEnabled, CreateResource, RecordEvent,
                               Transform, SplitProduct, MergeProducts, Notarize, Asseverate,
                               RequestUnlock, ApproveUnlock, Pay>;

std::string_view operation_name(const Operation& op);
// Canonical JSON arguments (sorted keys, compact).
std::string encode_args(const Operation& op);
// Throws Error{unknown_operation} or Error{invalid_argument}.
Operation decode_operation(std::string_view name, std::string_view args);

// ---------------------------------------------------------------------------
// State

struct CatalogEntry {
  std::string actor_id;
  std::set<Role> roles;
  bool enabled = true;
};

struct ProducerContract {
  Address address;
  std::string company_name;
  std::vector<Address> owned;
};

enum class RecordKind { documentation, transformation, split, merge, notarization };
std::string_view to_string(RecordKind kind);

struct NotarizationRecord {
  Digest document_digest;
  std::string locator;
};

// One entry of an entity's event log. Parameter payloads live in the ledger's
// event log (topic "event:<kind>" or "notarization"); the record keeps their
// digest and, in persistent payload mode, the payload itself.
struct EventRecord {
  RecordKind kind = RecordKind::documentation;
  std::string event_kind_id;  // empty for split/merge/notarization
  Address registrant;
  TxRef tx;
  Digest parameters_digest;
  std::optional<std::string> stored_parameters;
  std::optional<NotarizationRecord> notarization;
};

enum class EntityStatus { active, invalidated };

// Shared shape of productive resources and products. Resources never have
// origins; products get their origins frozen at creation.
struct Entity {
  Address address;
  std::string kind_id;
  config::KindClass kind_class = config::KindClass::product;
  std::string producer;
  Address creator;
  TxRef created;
  EntityStatus status = EntityStatus::active;
  std::vector<EventRecord> records;
  std::vector<Address> produced;
  std::vector<Address> origins;
  std::string description;
  std::uint64_t quantity = 0;  // size for resources, base units for products
  std::string unit;
  Address token_holder;  // products only

  bool active() const { return status == EntityStatus::active; }
  bool is_product() const { return kind_class == config::KindClass::product; }
};

struct Asseveration {
  Address certifier;
  TxRef tx;
};

enum class UnlockStatus { pending, unlocked, consumed };
std::string_view to_string(UnlockStatus status);

struct UnlockRequest {
  std::uint64_t id = 0;
  std::string event_kind_id;
  Address target;
  Address requester;
  std::set<std::string> required_actor_ids;
  std::set<std::string> approved_actor_ids;
  std::vector<Address> approvals;
  UnlockStatus status = UnlockStatus::pending;
};

bool valid_chain_id(std::string_view id);

// Deterministic address for the n-th entity created by a transaction.
Address derive_entity_address(std::string_view chain_id, const TxRef& tx, std::uint32_t index);
Address derive_producer_address(std::string_view company_name);

class World final : public ledger::StateMachine {
 public:
  World() = default;

  // ledger::StateMachine
  std::unique_ptr<ledger::StateMachine> clone() const override;
  void apply(const ledger::ExecContext& ctx, std::string_view operation, std::string_view args) override;
  std::string canonical_state() const override;

  // Typed entry point; apply() decodes and forwards here.
  void execute(const ledger::ExecContext& ctx, const Operation& op);

  // Queries
  bool initialized() const { return config_ != nullptr; }
  const config::SupplyChainConfig& config() const;
  const std::string& chain_id() const { return chain_id_; }
  const Address& owner() const { return owner_; }
  ledger::StorageMode payload_storage() const { return payload_storage_; }

  const std::map<Address, CatalogEntry>& catalog() const { return catalog_; }
  const CatalogEntry* catalog_entry(const Address& address) const;
  const std::map<Address, ProducerContract>& producers() const { return producers_; }
  const ProducerContract* producer_by_name(std::string_view company) const;
  const std::map<Address, Entity>& entities() const { return entities_; }
  const Entity* entity(const Address& address) const;
  const std::vector<Asseveration>& asseverations(const Address& entity, std::uint32_t record) const;
  const std::vector<UnlockRequest>& unlock_requests() const { return unlocks_; }

  std::uint64_t token_balance(std::string_view kind_id, const Address& holder) const;
  const std::map<std::pair<std::string, Address>, std::uint64_t>& token_balances() const {
    return tokens_;
  }
  // Sum of balances of one kind.
  std::uint64_t token_supply(std::string_view kind_id) const;
  std::uint64_t native_balance(const Address& address) const;
  const std::map<Address, std::uint64_t>& native_balances() const { return balances_; }

 private:
  void do_genesis(const ledger::ExecContext& ctx, const Genesis& op);
  void do_register(const ledger::ExecContext& ctx, const RegisterAddress& op);
  void do_set_enabled(const ledger::ExecContext& ctx, const SetAddressEnabled& op);
  void do_create_resource(const ledger::ExecContext& ctx, const CreateResource& op);
  void do_record_event(const ledger::ExecContext& ctx, const RecordEvent& op);
  void do_transform(const ledger::ExecContext& ctx, const Transform& op);
  void do_split(const ledger::ExecContext& ctx, const SplitProduct& op);
  void do_merge(const ledger::ExecContext& ctx, const MergeProducts& op);
  void do_notarize(const ledger::ExecContext& ctx, const Notarize& op);
  void do_asseverate(const ledger::ExecContext& ctx, const Asseverate& op);
  void do_request_unlock(const ledger::ExecContext& ctx, const RequestUnlock& op);
  void do_approve_unlock(const ledger::ExecContext& ctx, const ApproveUnlock& op);
  void do_pay(const ledger::ExecContext& ctx, const Pay& op);

  const CatalogEntry& require_enabled(const Address& caller) const;
  const config::ActorDef& actor_of(const Address& caller) const;
  Entity& require_entity(const Address& address);
  void require_kind_access(const CatalogEntry& who, const std::string& kind_id) const;
  EventRecord make_record(const ledger::ExecContext& ctx, RecordKind kind, std::string event_kind_id,
                          const std::string& payload, const Address& emitter, std::string topic);
  Entity& create_entity(const ledger::ExecContext& ctx, std::uint32_t index, const std::string& kind_id,
                        const std::string& producer);
  std::string choose_producer(const OutputSpec& out, const CatalogEntry& caller,
                              const Entity& first_input) const;
  void burn(const Entity& product);
  void mint(const std::string& kind_id, const Address& holder, std::uint64_t amount);

  std::shared_ptr<const config::SupplyChainConfig> config_;
  std::string chain_id_;
  Address owner_;
  ledger::StorageMode payload_storage_ = ledger::StorageMode::log;
  std::map<Address, CatalogEntry> catalog_;
  std::map<Address, ProducerContract> producers_;
  std::map<Address, Entity> entities_;
  std::map<std::pair<Address, std::uint32_t>, std::vector<Asseveration>> asseverations_;
  std::map<std::pair<std::string, Address>, std::uint64_t> tokens_;
  std::map<Address, std::uint64_t> balances_;
  std::vector<UnlockRequest> unlocks_;
};

ledger::StateFactory world_factory();

// Sends typed operations through a ledger with per-key nonce tracking.
class Client {
 public:
  explicit Client(ledger::Ledger& ledger) : ledger_(ledger) {}

  ledger::Transaction sign(const KeyPair& key, const Operation& op) const;
  // Submits without sealing.
  ledger::Receipt submit(const KeyPair& key, const Operation& op);
  // Submits and seals a block when accepted.
  ledger::Receipt send(const KeyPair& key, const Operation& op);

  ledger::Ledger& ledger() { return ledger_; }

 private:
  ledger::Ledger& ledger_;
};

// Addresses of entities created by an accepted transaction, in creation order.
std::vector<Address> created_entities(const ledger::Receipt& receipt);

// Sealed world snapshot held by a ledger.
std::shared_ptr<const World> sealed_world(const ledger::Ledger& ledger);

}  // namespace agritrace::contracts
