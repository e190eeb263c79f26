#include "agritrace/contracts.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

namespace agritrace::contracts {

using json = nlohmann::json;
using config::KindClass;
using ledger::ExecContext;

namespace {

constexpr std::size_t kEntityBytes = 160;
constexpr std::size_t kRecordBytes = 96;

const std::vector<Role> kCertifierRoles = {Role::certification_authority, Role::professional,
                                           Role::analysis_lab};

[[noreturn]] void reject(ErrorCode code, const std::string& message) { throw Error(code, message); }

std::string short_addr(const Address& a) { return a.hex(); }

// --- JSON argument helpers -------------------------------------------------

const json& field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) reject(ErrorCode::invalid_argument, std::string("missing argument \"") + key + "\"");
  return *it;
}

std::string get_str(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (!v.is_string()) reject(ErrorCode::invalid_argument, std::string("argument \"") + key + "\" must be a string");
  return v.get<std::string>();
}

std::string get_str_or(const json& obj, const char* key, std::string fallback) {
  return obj.contains(key) ? get_str(obj, key) : fallback;
}

std::uint64_t get_u64(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    reject(ErrorCode::invalid_argument, std::string("argument \"") + key + "\" must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::uint64_t as_u64(const json& v) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    reject(ErrorCode::invalid_argument, "quantity must be a non-negative integer");
  return v.get<std::uint64_t>();
}

Address get_addr(const json& obj, const char* key) {
  std::string s = get_str(obj, key);
  try {
    return Address::from_hex(s);
  } catch (const Error&) {
    reject(ErrorCode::invalid_argument, std::string("argument \"") + key + "\" is not an address");
  }
}

Address as_addr(const json& v) {
  if (!v.is_string()) reject(ErrorCode::invalid_argument, "address must be a string");
  try {
    return Address::from_hex(v.get<std::string>());
  } catch (const Error&) {
    reject(ErrorCode::invalid_argument, "malformed address");
  }
}

const json& get_array(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (!v.is_array()) reject(ErrorCode::invalid_argument, std::string("argument \"") + key + "\" must be an array");
  return v;
}

json addresses_json(const std::vector<Address>& v) {
  json arr = json::array();
  for (const auto& a : v) arr.push_back(a.hex());
  return arr;
}

std::vector<Address> addresses_from(const json& arr) {
  std::vector<Address> out;
  for (const auto& v : arr) out.push_back(as_addr(v));
  return out;
}

json values_json(const std::vector<params::NamedValue>& values) {
  json arr = json::array();
  for (const auto& v : values) arr.push_back(json{{"name", v.name}, {"value", v.value}});
  return arr;
}

std::vector<params::NamedValue> values_from(const json& obj) {
  std::vector<params::NamedValue> out;
  if (!obj.contains("params")) return out;
  for (const auto& v : get_array(obj, "params")) {
    if (!v.is_object()) reject(ErrorCode::invalid_argument, "parameter entries must be objects");
    out.push_back(params::NamedValue{get_str(v, "name"), get_str(v, "value")});
  }
  return out;
}

json quantities_json(const std::vector<std::uint64_t>& q) {
  json arr = json::array();
  for (auto v : q) arr.push_back(v);
  return arr;
}

std::vector<std::uint64_t> quantities_from(const json& arr) {
  std::vector<std::uint64_t> out;
  for (const auto& v : arr) out.push_back(as_u64(v));
  return out;
}

std::string dump(const json& j) {
  try {
    return j.dump();
  } catch (const json::type_error& e) {
    reject(ErrorCode::invalid_argument, std::string("arguments are not valid UTF-8: ") + e.what());
  }
}

std::string hex_tx(const TxRef& tx) {
  return std::to_string(tx.block_height) + ":" + std::to_string(tx.tx_index);
}

bool contains(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::uint64_t checked_sum(const std::vector<std::uint64_t>& v) {
  unsigned __int128 total = 0;
  for (auto q : v) total += q;
  if (total > UINT64_MAX) reject(ErrorCode::invalid_argument, "quantity overflow");
  return static_cast<std::uint64_t>(total);
}

}  // namespace

bool valid_chain_id(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
  });
}

// ---------------------------------------------------------------------------
// Operation encoding

std::string_view operation_name(const Operation& op) {
  return std::visit([](const auto& o) { return std::decay_t<decltype(o)>::name; }, op);
}

std::string encode_args(const Operation& op) {
  json j = json::object();
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Genesis>) {
          j["chain_id"] = o.chain_id;
          j["admin_actor_id"] = o.admin_actor_id;
          j["config"] = json::parse(config::serialize_config(o.config));
          json alloc = json::object();
          for (const auto& [a, v] : o.allocations) alloc[a.hex()] = v;
          j["allocations"] = alloc;
          j["payload_storage"] = ledger::to_string(o.payload_storage);
        } else if constexpr (std::is_same_v<T, RegisterAddress>) {
          j["address"] = o.address.hex();
          j["actor_id"] = o.actor_id;
          json roles = json::array();
          for (auto r : o.roles) roles.push_back(config::to_string(r));
          j["roles"] = roles;
        } else if constexpr (std::is_same_v<T, SetAddressEnabled>) {
          j["address"] = o.address.hex();
          j["enabled"] = o.enabled;
        } else if constexpr (std::is_same_v<T, CreateResource>) {
          j["kind_id"] = o.kind_id;
          j["producer"] = o.producer;
          j["description"] = o.description;
          j["size"] = o.size;
          if (!o.unit.empty()) j["unit"] = o.unit;
        } else if constexpr (std::is_same_v<T, RecordEvent>) {
          j["entity"] = o.entity.hex();
          j["event_kind_id"] = o.event_kind_id;
          j["params"] = values_json(o.values);
        } else if constexpr (std::is_same_v<T, Transform>) {
          j["inputs"] = addresses_json(o.inputs);
          j["event_kind_id"] = o.event_kind_id;
          json outs = json::array();
          for (const auto& out : o.outputs) {
            json e{{"kind_id", out.kind_id}, {"quantity", out.quantity}};
            if (!out.unit.empty()) e["unit"] = out.unit;
            if (!out.producer.empty()) e["producer"] = out.producer;
            outs.push_back(e);
          }
          j["outputs"] = outs;
          j["params"] = values_json(o.values);
        } else if constexpr (std::is_same_v<T, SplitProduct>) {
          j["product"] = o.product.hex();
          j["quantities"] = quantities_json(o.quantities);
        } else if constexpr (std::is_same_v<T, MergeProducts>) {
          j["products"] = addresses_json(o.products);
          j["quantities"] = quantities_json(o.quantities);
        } else if constexpr (std::is_same_v<T, Notarize>) {
          j["entity"] = o.entity.hex();
          j["digest"] = o.digest_hex;
          j["locator"] = o.locator;
          json meta = json::array();
          for (const auto& t : o.metadata)
            meta.push_back(json{{"name", t.name}, {"type", config::to_string(t.type)}, {"value", t.value}});
          j["metadata"] = meta;
        } else if constexpr (std::is_same_v<T, Asseverate>) {
          j["entity"] = o.entity.hex();
          j["record_index"] = o.record_index;
        } else if constexpr (std::is_same_v<T, RequestUnlock>) {
          j["event_kind_id"] = o.event_kind_id;
          j["target"] = o.target.hex();
        } else if constexpr (std::is_same_v<T, ApproveUnlock>) {
          j["request_id"] = o.request_id;
        } else if constexpr (std::is_same_v<T, Pay>) {
          j["recipient"] = o.recipient.hex();
          j["amount"] = o.amount;
        }
      },
      op);
  return dump(j);
}

Operation decode_operation(std::string_view name, std::string_view args) {
  json j;
  try {
    j = json::parse(args.begin(), args.end());
  } catch (const json::parse_error&) {
    reject(ErrorCode::invalid_argument, "arguments are not valid JSON");
  }
  if (!j.is_object()) reject(ErrorCode::invalid_argument, "arguments must be a JSON object");

  if (name == Genesis::name) {
    Genesis g;
    g.chain_id = get_str(j, "chain_id");
    g.admin_actor_id = get_str(j, "admin_actor_id");
    try {
      g.config = config::parse_config_document(field(j, "config").dump());
    } catch (const Error& e) {
      reject(ErrorCode::validation_failed, std::string("genesis config: ") + e.what());
    }
    const json& alloc = field(j, "allocations");
    if (!alloc.is_object()) reject(ErrorCode::invalid_argument, "allocations must be an object");
    for (auto it = alloc.begin(); it != alloc.end(); ++it)
      g.allocations[as_addr(json(it.key()))] = as_u64(it.value());
    try {
      g.payload_storage = ledger::parse_storage_mode(get_str_or(j, "payload_storage", "log"));
    } catch (const Error& e) {
      reject(ErrorCode::invalid_argument, e.what());
    }
    return g;
  }
  if (name == RegisterAddress::name) {
    RegisterAddress r;
    r.address = get_addr(j, "address");
    r.actor_id = get_str(j, "actor_id");
    if (j.contains("roles")) {
      for (const auto& v : get_array(j, "roles")) {
        auto role = v.is_string() ? config::parse_role(v.get<std::string>()) : std::nullopt;
        if (!role) reject(ErrorCode::invalid_argument, "unknown role " + v.dump());
        r.roles.insert(*role);
      }
    }
    return r;
  }
  if (name == SetAddressEnabled::name) {
    SetAddressEnabled s;
    s.address = get_addr(j, "address");
    const json& e = field(j, "enabled");
    if (!e.is_boolean()) reject(ErrorCode::invalid_argument, "enabled must be a boolean");
    s.enabled = e.get<bool>();
    return s;
  }
  if (name == CreateResource::name) {
    CreateResource c;
    c.kind_id = get_str(j, "kind_id");
    c.producer = get_str(j, "producer");
    c.description = get_str_or(j, "description", "");
    c.size = get_u64(j, "size");
    c.unit = get_str_or(j, "unit", "");
    return c;
  }
  if (name == RecordEvent::name) {
    RecordEvent r;
    r.entity = get_addr(j, "entity");
    r.event_kind_id = get_str(j, "event_kind_id");
    r.values = values_from(j);
    return r;
  }
  if (name == Transform::name) {
    Transform t;
    t.inputs = addresses_from(get_array(j, "inputs"));
    t.event_kind_id = get_str(j, "event_kind_id");
    for (const auto& o : get_array(j, "outputs")) {
      if (!o.is_object()) reject(ErrorCode::invalid_argument, "output entries must be objects");
      t.outputs.push_back(OutputSpec{get_str(o, "kind_id"), get_u64(o, "quantity"),
                                     get_str_or(o, "unit", ""), get_str_or(o, "producer", "")});
    }
    t.values = values_from(j);
    return t;
  }
  if (name == SplitProduct::name) {
    return SplitProduct{get_addr(j, "product"), quantities_from(get_array(j, "quantities"))};
  }
  if (name == MergeProducts::name) {
    return MergeProducts{addresses_from(get_array(j, "products")),
                         quantities_from(get_array(j, "quantities"))};
  }
  if (name == Notarize::name) {
    Notarize n;
    n.entity = get_addr(j, "entity");
    n.digest_hex = get_str(j, "digest");
    n.locator = get_str_or(j, "locator", "");
    if (j.contains("metadata")) {
      for (const auto& m : get_array(j, "metadata")) {
        if (!m.is_object()) reject(ErrorCode::invalid_argument, "metadata entries must be objects");
        auto type = config::parse_param_type(get_str(m, "type"));
        if (!type) reject(ErrorCode::illegal_type, "illegal metadata type " + get_str(m, "type"));
        n.metadata.push_back(params::Triple{get_str(m, "name"), *type, get_str(m, "value")});
      }
    }
    return n;
  }
  if (name == Asseverate::name) {
    std::uint64_t idx = get_u64(j, "record_index");
    if (idx > UINT32_MAX) reject(ErrorCode::invalid_argument, "record_index out of range");
    return Asseverate{get_addr(j, "entity"), static_cast<std::uint32_t>(idx)};
  }
  if (name == RequestUnlock::name) return RequestUnlock{get_str(j, "event_kind_id"), get_addr(j, "target")};
  if (name == ApproveUnlock::name) return ApproveUnlock{get_u64(j, "request_id")};
  if (name == Pay::name) return Pay{get_addr(j, "recipient"), get_u64(j, "amount")};

  reject(ErrorCode::unknown_operation, "unknown operation \"" + std::string(name) + "\"");
}

// ---------------------------------------------------------------------------
// Misc

std::string_view to_string(RecordKind kind) {
  switch (kind) {
    case RecordKind::documentation: return "documentation";
    case RecordKind::transformation: return "transformation";
    case RecordKind::split: return "split";
    case RecordKind::merge: return "merge";
    case RecordKind::notarization: return "notarization";
  }
  return "?";
}

std::string_view to_string(UnlockStatus status) {
  switch (status) {
    case UnlockStatus::pending: return "pending";
    case UnlockStatus::unlocked: return "unlocked";
    case UnlockStatus::consumed: return "consumed";
  }
  return "?";
}

Address derive_entity_address(std::string_view chain_id, const TxRef& tx, std::uint32_t index) {
  Digest d = Hasher()
                 .update("agritrace-entity")
                 .update_u64(chain_id.size())
                 .update(chain_id)
                 .update_u64(tx.block_height)
                 .update_u64(tx.tx_index)
                 .update_u64(index)
                 .finish();
  Address a;
  std::copy(d.bytes.begin() + 12, d.bytes.end(), a.bytes.begin());
  return a;
}

Address derive_producer_address(std::string_view company_name) {
  Digest d = Hasher().update("agritrace-producer").update(company_name).finish();
  Address a;
  std::copy(d.bytes.begin() + 12, d.bytes.end(), a.bytes.begin());
  return a;
}

// ---------------------------------------------------------------------------
// World: state machine plumbing

std::unique_ptr<ledger::StateMachine> World::clone() const { return std::make_unique<World>(*this); }

void World::apply(const ExecContext& ctx, std::string_view operation, std::string_view args) {
  execute(ctx, decode_operation(operation, args));
}

void World::execute(const ExecContext& ctx, const Operation& op) {
  if (std::holds_alternative<Genesis>(op)) {
    do_genesis(ctx, std::get<Genesis>(op));
    return;
  }
  if (!initialized()) reject(ErrorCode::invalid_argument, "chain has no genesis yet");
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, RegisterAddress>) do_register(ctx, o);
        else if constexpr (std::is_same_v<T, SetAddressEnabled>) do_set_enabled(ctx, o);
        else if constexpr (std::is_same_v<T, CreateResource>) do_create_resource(ctx, o);
        else if constexpr (std::is_same_v<T, RecordEvent>) do_record_event(ctx, o);
        else if constexpr (std::is_same_v<T, Transform>) do_transform(ctx, o);
        else if constexpr (std::is_same_v<T, SplitProduct>) do_split(ctx, o);
        else if constexpr (std::is_same_v<T, MergeProducts>) do_merge(ctx, o);
        else if constexpr (std::is_same_v<T, Notarize>) do_notarize(ctx, o);
        else if constexpr (std::is_same_v<T, Asseverate>) do_asseverate(ctx, o);
        else if constexpr (std::is_same_v<T, RequestUnlock>) do_request_unlock(ctx, o);
        else if constexpr (std::is_same_v<T, ApproveUnlock>) do_approve_unlock(ctx, o);
        else if constexpr (std::is_same_v<T, Pay>) do_pay(ctx, o);
      },
      op);
}

std::string World::canonical_state() const {
  json j = json::object();
  if (!initialized()) return "{}";
  j["chain_id"] = chain_id_;
  j["config_digest"] = sha256(config::serialize_config(config_->descriptors())).hex();
  j["owner"] = owner_.hex();
  j["payload_storage"] = ledger::to_string(payload_storage_);

  json catalog = json::object();
  for (const auto& [a, e] : catalog_) {
    json roles = json::array();
    for (auto r : e.roles) roles.push_back(config::to_string(r));
    catalog[a.hex()] = json{{"actor_id", e.actor_id}, {"roles", roles}, {"enabled", e.enabled}};
  }
  j["catalog"] = catalog;

  json producers = json::object();
  for (const auto& [a, p] : producers_)
    producers[a.hex()] = json{{"company", p.company_name}, {"owned", addresses_json(p.owned)}};
  j["producers"] = producers;

  json entities = json::object();
  for (const auto& [a, e] : entities_) {
    json records = json::array();
    for (const auto& r : e.records) {
      json rec{{"kind", to_string(r.kind)},
               {"event_kind_id", r.event_kind_id},
               {"registrant", r.registrant.hex()},
               {"tx", hex_tx(r.tx)},
               {"parameters_digest", r.parameters_digest.hex()}};
      if (r.stored_parameters) rec["parameters"] = to_hex(as_bytes(*r.stored_parameters));
      if (r.notarization)
        rec["notarization"] = json{{"digest", r.notarization->document_digest.hex()},
                                   {"locator", r.notarization->locator}};
      records.push_back(rec);
    }
    entities[a.hex()] = json{{"kind_id", e.kind_id},
                             {"class", config::to_string(e.kind_class)},
                             {"producer", e.producer},
                             {"creator", e.creator.hex()},
                             {"created", hex_tx(e.created)},
                             {"active", e.active()},
                             {"records", records},
                             {"produced", addresses_json(e.produced)},
                             {"origins", addresses_json(e.origins)},
                             {"description", e.description},
                             {"quantity", e.quantity},
                             {"unit", e.unit},
                             {"token_holder", e.token_holder.hex()}};
  }
  j["entities"] = entities;

  json assev = json::array();
  for (const auto& [key, list] : asseverations_) {
    json entries = json::array();
    for (const auto& a : list) entries.push_back(json{{"certifier", a.certifier.hex()}, {"tx", hex_tx(a.tx)}});
    assev.push_back(json{{"entity", key.first.hex()}, {"record", key.second}, {"entries", entries}});
  }
  j["asseverations"] = assev;

  json tokens = json::array();
  for (const auto& [key, amount] : tokens_)
    tokens.push_back(json{{"kind", key.first}, {"holder", key.second.hex()}, {"amount", amount}});
  j["tokens"] = tokens;

  json balances = json::object();
  for (const auto& [a, v] : balances_) balances[a.hex()] = v;
  j["balances"] = balances;

  json unlocks = json::array();
  for (const auto& u : unlocks_) {
    json approvals = json::array();
    for (const auto& a : u.approvals) approvals.push_back(a.hex());
    unlocks.push_back(json{{"id", u.id},
                           {"event_kind_id", u.event_kind_id},
                           {"target", u.target.hex()},
                           {"requester", u.requester.hex()},
                           {"required", u.required_actor_ids},
                           {"approved", u.approved_actor_ids},
                           {"approvals", approvals},
                           {"status", to_string(u.status)}});
  }
  j["unlocks"] = unlocks;
  return j.dump();
}

// ---------------------------------------------------------------------------
// Queries

const config::SupplyChainConfig& World::config() const {
  if (!config_) throw Error(ErrorCode::invalid_argument, "chain has no genesis yet");
  return *config_;
}

const CatalogEntry* World::catalog_entry(const Address& address) const {
  auto it = catalog_.find(address);
  return it == catalog_.end() ? nullptr : &it->second;
}

const ProducerContract* World::producer_by_name(std::string_view company) const {
  auto it = producers_.find(derive_producer_address(company));
  return it == producers_.end() ? nullptr : &it->second;
}

const Entity* World::entity(const Address& address) const {
  auto it = entities_.find(address);
  return it == entities_.end() ? nullptr : &it->second;
}

const std::vector<Asseveration>& World::asseverations(const Address& entity, std::uint32_t record) const {
  static const std::vector<Asseveration> none;
  auto it = asseverations_.find({entity, record});
  return it == asseverations_.end() ? none : it->second;
}

std::uint64_t World::token_balance(std::string_view kind_id, const Address& holder) const {
  auto it = tokens_.find({std::string(kind_id), holder});
  return it == tokens_.end() ? 0 : it->second;
}

std::uint64_t World::token_supply(std::string_view kind_id) const {
  std::uint64_t total = 0;
  for (const auto& [key, amount] : tokens_)
    if (key.first == kind_id) total += amount;
  return total;
}

std::uint64_t World::native_balance(const Address& address) const {
  auto it = balances_.find(address);
  return it == balances_.end() ? 0 : it->second;
}

// ---------------------------------------------------------------------------
// Shared checks

const CatalogEntry& World::require_enabled(const Address& caller) const {
  const CatalogEntry* e = catalog_entry(caller);
  if (!e) reject(ErrorCode::unauthorized, "address " + short_addr(caller) + " is not registered");
  if (!e->enabled) reject(ErrorCode::unauthorized, "address " + short_addr(caller) + " is disabled");
  return *e;
}

const config::ActorDef& World::actor_of(const Address& caller) const {
  const CatalogEntry& e = require_enabled(caller);
  return *config_->find_actor(e.actor_id);
}

Entity& World::require_entity(const Address& address) {
  auto it = entities_.find(address);
  if (it == entities_.end()) reject(ErrorCode::unknown_entity, "unknown entity " + short_addr(address));
  return it->second;
}

void World::require_kind_access(const CatalogEntry& who, const std::string& kind_id) const {
  const config::KindDef* kind = config_->find_kind(kind_id);
  if (!kind || !contains(kind->authorized_actor_ids, who.actor_id))
    reject(ErrorCode::unauthorized, "actor \"" + who.actor_id + "\" is not authorized for kind \"" + kind_id + "\"");
}

EventRecord World::make_record(const ExecContext& ctx, RecordKind kind, std::string event_kind_id,
                               const std::string& payload, const Address& emitter, std::string topic) {
  EventRecord r;
  r.kind = kind;
  r.event_kind_id = std::move(event_kind_id);
  r.registrant = ctx.sender;
  r.tx = TxRef{ctx.block_height, ctx.tx_index};
  r.parameters_digest = sha256(payload);
  if (ctx.gas) ctx.gas->charge_storage_new(kRecordBytes);
  if (payload_storage_ == ledger::StorageMode::persistent) {
    r.stored_parameters = payload;
    if (ctx.gas) ctx.gas->charge_storage_new(payload.size());
  } else {
    ctx.emit(emitter, std::move(topic), payload);
  }
  return r;
}

Entity& World::create_entity(const ExecContext& ctx, std::uint32_t index, const std::string& kind_id,
                             const std::string& producer) {
  TxRef tx{ctx.block_height, ctx.tx_index};
  Address addr = derive_entity_address(chain_id_, tx, index);
  if (entities_.contains(addr)) reject(ErrorCode::invalid_argument, "entity address collision");
  Entity e;
  e.address = addr;
  e.kind_id = kind_id;
  e.kind_class = config_->find_kind(kind_id)->kind_class;
  e.producer = producer;
  e.creator = ctx.sender;
  e.created = tx;
  auto& stored = entities_.emplace(addr, std::move(e)).first->second;
  if (auto* p = const_cast<ProducerContract*>(producer_by_name(producer))) p->owned.push_back(addr);
  if (ctx.gas) {
    ctx.gas->charge_storage_new(kEntityBytes);
    ctx.gas->charge_storage_new(32);  // producer mapping entry
  }
  ctx.emit(addr, "created", addr.hex());
  return stored;
}

std::string World::choose_producer(const OutputSpec& out, const CatalogEntry& caller,
                                   const Entity& first_input) const {
  if (!out.producer.empty()) return out.producer;
  for (const auto& c : config_->companies())
    if (contains(c.resource_ids, out.kind_id) && contains(c.authorized_actor_ids, caller.actor_id))
      return c.name;
  for (const auto& c : config_->companies())
    if (contains(c.resource_ids, out.kind_id)) return c.name;
  return first_input.producer;
}

void World::burn(const Entity& product) {
  if (product.quantity == 0) return;
  auto key = std::pair{product.kind_id, product.token_holder};
  auto it = tokens_.find(key);
  if (it == tokens_.end() || it->second < product.quantity)
    reject(ErrorCode::insufficient_funds, "token balance below product quantity");
  it->second -= product.quantity;
  if (it->second == 0) tokens_.erase(it);
}

void World::mint(const std::string& kind_id, const Address& holder, std::uint64_t amount) {
  if (amount == 0) return;
  tokens_[{kind_id, holder}] += amount;
}

// ---------------------------------------------------------------------------
// Operations

void World::do_genesis(const ExecContext& ctx, const Genesis& op) {
  if (initialized()) reject(ErrorCode::invalid_argument, "genesis already applied");
  if (!valid_chain_id(op.chain_id))
    reject(ErrorCode::invalid_argument, "chain id must be 1-64 characters of [A-Za-z0-9._-]");
  auto cfg = std::make_shared<const config::SupplyChainConfig>(config::validate_config(op.config));
  const config::ActorDef* admin = cfg->find_actor(op.admin_actor_id);
  if (!admin) reject(ErrorCode::unknown_actor, "unknown admin actor \"" + op.admin_actor_id + "\"");
  if (admin->role != Role::administrator)
    reject(ErrorCode::role_missing, "actor \"" + op.admin_actor_id + "\" is not an administrator");

  config_ = std::move(cfg);
  chain_id_ = op.chain_id;
  owner_ = ctx.sender;
  payload_storage_ = op.payload_storage;
  catalog_[ctx.sender] = CatalogEntry{admin->id, {Role::administrator}, true};
  for (const auto& c : config_->companies()) {
    Address a = derive_producer_address(c.name);
    producers_[a] = ProducerContract{a, c.name, {}};
  }
  for (const auto& [a, v] : op.allocations)
    if (v > 0) balances_[a] = v;
  if (ctx.gas) ctx.gas->charge_storage_new(64 * (1 + producers_.size() + balances_.size()));
}

void World::do_register(const ExecContext& ctx, const RegisterAddress& op) {
  if (ctx.sender != owner_) reject(ErrorCode::unauthorized, "only the catalog owner can register addresses");
  const config::ActorDef* actor = config_->find_actor(op.actor_id);
  if (!actor) reject(ErrorCode::unknown_actor, "unknown actor \"" + op.actor_id + "\"");
  if (op.address == owner_ && op.actor_id != catalog_.at(owner_).actor_id)
    reject(ErrorCode::invalid_argument, "the owner address cannot be rebound");
  std::set<Role> roles = op.roles.empty() ? std::set<Role>{actor->role} : op.roles;
  bool existed = catalog_.contains(op.address);
  catalog_[op.address] = CatalogEntry{actor->id, std::move(roles), true};
  if (ctx.gas) {
    if (existed)
      ctx.gas->charge_storage_update(2);
    else
      ctx.gas->charge_storage_new(64);
  }
  ctx.emit(op.address, "address_registered", actor->id);
}

void World::do_set_enabled(const ExecContext& ctx, const SetAddressEnabled& op) {
  if (ctx.sender != owner_) reject(ErrorCode::unauthorized, "only the catalog owner can change addresses");
  auto it = catalog_.find(op.address);
  if (it == catalog_.end()) reject(ErrorCode::unknown_actor, "address " + short_addr(op.address) + " is not registered");
  if (op.address == owner_ && !op.enabled) reject(ErrorCode::invalid_argument, "the owner cannot be disabled");
  it->second.enabled = op.enabled;
  if (ctx.gas) ctx.gas->charge_storage_update(1);
}

void World::do_create_resource(const ExecContext& ctx, const CreateResource& op) {
  const CatalogEntry& caller = require_enabled(ctx.sender);
  const config::KindDef* kind = config_->find_kind(op.kind_id);
  if (!kind) reject(ErrorCode::unknown_kind, "unknown kind \"" + op.kind_id + "\"");
  if (kind->kind_class != KindClass::resource)
    reject(ErrorCode::wrong_kind_class, "kind \"" + op.kind_id + "\" is not a productive resource kind");
  const config::CompanyDef* company = config_->find_company(op.producer);
  if (!company) reject(ErrorCode::invalid_argument, "unknown producer \"" + op.producer + "\"");
  if (!contains(company->resource_ids, op.kind_id))
    reject(ErrorCode::not_applicable, "producer \"" + op.producer + "\" does not manage kind \"" + op.kind_id + "\"");
  require_kind_access(caller, op.kind_id);
  std::string unit = op.unit.empty() ? kind->default_unit.value_or("") : op.unit;

  Entity& e = create_entity(ctx, 0, op.kind_id, op.producer);
  e.description = op.description;
  e.quantity = op.size;
  e.unit = unit;
  if (ctx.gas) ctx.gas->charge_storage_new(op.description.size());
}

void World::do_record_event(const ExecContext& ctx, const RecordEvent& op) {
  const CatalogEntry& caller = require_enabled(ctx.sender);
  const config::EventKindDef* ev = config_->find_event_kind(op.event_kind_id);
  if (!ev) reject(ErrorCode::unknown_event_kind, "unknown event kind \"" + op.event_kind_id + "\"");
  if (ev->event_class != config::EventClass::documentation)
    reject(ErrorCode::not_applicable, "event kind \"" + ev->id + "\" is a transformation; use transform");
  Entity& target = require_entity(op.entity);
  if (!target.active()) reject(ErrorCode::invalidated, "entity " + short_addr(op.entity) + " is invalidated");
  if (!contains(ev->applicable_kind_ids, target.kind_id))
    reject(ErrorCode::not_applicable, "event \"" + ev->id + "\" does not apply to kind \"" + target.kind_id + "\"");
  if (!contains(ev->authorized_actor_ids, caller.actor_id))
    reject(ErrorCode::unauthorized, "actor \"" + caller.actor_id + "\" may not record \"" + ev->id + "\"");
  require_kind_access(caller, target.kind_id);
  std::string payload = params::encode_parameters(params::bind_parameters(ev->param_specs, op.values));

  target.records.push_back(
      make_record(ctx, RecordKind::documentation, ev->id, payload, target.address, "event:" + ev->id));
}

void World::do_transform(const ExecContext& ctx, const Transform& op) {
  const CatalogEntry& caller = require_enabled(ctx.sender);
  const config::EventKindDef* ev = config_->find_event_kind(op.event_kind_id);
  if (!ev) reject(ErrorCode::unknown_event_kind, "unknown event kind \"" + op.event_kind_id + "\"");
  if (ev->event_class != config::EventClass::transformation)
    reject(ErrorCode::not_applicable, "event kind \"" + ev->id + "\" is not a transformation");
  if (!contains(ev->authorized_actor_ids, caller.actor_id))
    reject(ErrorCode::unauthorized, "actor \"" + caller.actor_id + "\" may not perform \"" + ev->id + "\"");
  if (op.inputs.empty()) reject(ErrorCode::invalid_argument, "transformation needs at least one input");
  if (op.outputs.empty()) reject(ErrorCode::invalid_argument, "transformation needs at least one output");

  std::set<Address> distinct(op.inputs.begin(), op.inputs.end());
  if (distinct.size() != op.inputs.size()) reject(ErrorCode::invalid_argument, "duplicate input");

  unsigned __int128 total_in = 0;
  for (const auto& addr : op.inputs) {
    const Entity& in = require_entity(addr);
    if (!in.active()) reject(ErrorCode::invalidated, "input " + short_addr(addr) + " is invalidated");
    if (!contains(ev->applicable_kind_ids, in.kind_id))
      reject(ErrorCode::not_applicable, "event \"" + ev->id + "\" does not apply to kind \"" + in.kind_id + "\"");
    require_kind_access(caller, in.kind_id);
    total_in += in.quantity;
  }

  unsigned __int128 total_out = 0;
  for (const auto& out : op.outputs) {
    if (!contains(ev->generated_kind_ids, out.kind_id))
      reject(ErrorCode::not_applicable, "event \"" + ev->id + "\" cannot generate kind \"" + out.kind_id + "\"");
    if (!out.producer.empty() && !config_->find_company(out.producer))
      reject(ErrorCode::invalid_argument, "unknown producer \"" + out.producer + "\"");
    total_out += out.quantity;
  }

  config::Rational yield = ev->yield();
  if (total_out * yield.den > total_in * yield.num)
    reject(ErrorCode::yield_exceeded, "outputs exceed max_yield " + yield.str() + " of inputs");

  UnlockRequest* unlock = nullptr;
  if (!ev->required_unlock_actor_ids.empty()) {
    for (auto& u : unlocks_) {
      if (u.event_kind_id == ev->id && u.status == UnlockStatus::unlocked && distinct.contains(u.target)) {
        unlock = &u;
        break;
      }
    }
    if (!unlock) reject(ErrorCode::locked, "event \"" + ev->id + "\" requires an unlocked request");
  }

  std::string payload = params::encode_parameters(params::bind_parameters(ev->param_specs, op.values));

  // All checks passed; mutate.
  const Entity first_input = entities_.at(op.inputs.front());
  for (const auto& addr : op.inputs) {
    Entity& in = entities_.at(addr);
    if (in.is_product()) {
      burn(in);
      in.status = EntityStatus::invalidated;
      if (ctx.gas) ctx.gas->charge_storage_update(2);
    }
  }
  std::vector<Address> created;
  for (std::uint32_t i = 0; i < op.outputs.size(); ++i) {
    const OutputSpec& spec = op.outputs[i];
    const config::KindDef* kind = config_->find_kind(spec.kind_id);
    Entity& out = create_entity(ctx, i, spec.kind_id, choose_producer(spec, caller, first_input));
    out.origins = op.inputs;
    out.quantity = spec.quantity;
    out.unit = spec.unit.empty() ? kind->default_unit.value_or("") : spec.unit;
    out.token_holder = ctx.sender;
    mint(spec.kind_id, ctx.sender, spec.quantity);
    if (ctx.gas) ctx.gas->charge_storage_new(32 * (op.inputs.size() + 1));
    created.push_back(out.address);
  }
  for (const auto& addr : op.inputs) {
    Entity& in = entities_.at(addr);
    in.produced.insert(in.produced.end(), created.begin(), created.end());
    if (ctx.gas) ctx.gas->charge_storage_new(32 * created.size());
  }
  // One log emission for the payload; each output carries the record.
  EventRecord rec = make_record(ctx, RecordKind::transformation, ev->id, payload, created.front(),
                                "event:" + ev->id);
  for (const auto& addr : created) entities_.at(addr).records.push_back(rec);
  if (unlock) {
    unlock->status = UnlockStatus::consumed;
    if (ctx.gas) ctx.gas->charge_storage_update(1);
  }
}

void World::do_split(const ExecContext& ctx, const SplitProduct& op) {
  const CatalogEntry& caller = require_enabled(ctx.sender);
  Entity& product = require_entity(op.product);
  if (!product.is_product()) reject(ErrorCode::wrong_kind_class, "only products can be split");
  if (!product.active()) reject(ErrorCode::invalidated, "product " + short_addr(op.product) + " is invalidated");
  require_kind_access(caller, product.kind_id);
  if (op.quantities.empty()) reject(ErrorCode::invalid_argument, "split needs at least one part");
  for (auto q : op.quantities)
    if (q == 0) reject(ErrorCode::zero_quantity, "split parts must be positive");
  if (checked_sum(op.quantities) != product.quantity)
    reject(ErrorCode::sum_mismatch, "split parts sum to " + std::to_string(checked_sum(op.quantities)) +
                                        ", product holds " + std::to_string(product.quantity));

  const Entity parent = product;
  burn(parent);
  entities_.at(op.product).status = EntityStatus::invalidated;
  std::vector<Address> created;
  for (std::uint32_t i = 0; i < op.quantities.size(); ++i) {
    Entity& child = create_entity(ctx, i, parent.kind_id, parent.producer);
    child.origins = {parent.address};
    child.quantity = op.quantities[i];
    child.unit = parent.unit;
    child.description = parent.description;
    child.token_holder = parent.token_holder;
    mint(parent.kind_id, parent.token_holder, op.quantities[i]);
    created.push_back(child.address);
  }
  Entity& p = entities_.at(op.product);
  p.produced.insert(p.produced.end(), created.begin(), created.end());
  if (ctx.gas) ctx.gas->charge_storage_new(32 * created.size());
  EventRecord rec = make_record(ctx, RecordKind::split, "", params::encode_parameters({}), created.front(), "split");
  for (const auto& addr : created) entities_.at(addr).records.push_back(rec);
}

void World::do_merge(const ExecContext& ctx, const MergeProducts& op) {
  const CatalogEntry& caller = require_enabled(ctx.sender);
  if (op.products.size() < 2) reject(ErrorCode::invalid_argument, "merge needs at least two products");
  std::set<Address> distinct(op.products.begin(), op.products.end());
  if (distinct.size() != op.products.size()) reject(ErrorCode::invalid_argument, "duplicate input");
  const Entity& first = require_entity(op.products.front());
  unsigned __int128 total_in = 0;
  for (const auto& addr : op.products) {
    const Entity& in = require_entity(addr);
    if (!in.is_product()) reject(ErrorCode::wrong_kind_class, "only products can be merged");
    if (!in.active()) reject(ErrorCode::invalidated, "product " + short_addr(addr) + " is invalidated");
    if (in.kind_id != first.kind_id) reject(ErrorCode::kind_mismatch, "cannot merge different kinds");
    if (in.unit != first.unit) reject(ErrorCode::unit_mismatch, "cannot merge different units");
    require_kind_access(caller, in.kind_id);
    total_in += in.quantity;
  }
  if (op.quantities.empty()) reject(ErrorCode::invalid_argument, "merge needs at least one output");
  for (auto q : op.quantities)
    if (q == 0) reject(ErrorCode::zero_quantity, "merge outputs must be positive");
  if (checked_sum(op.quantities) != total_in)
    reject(ErrorCode::sum_mismatch, "merge outputs do not sum to the inputs");

  const std::string kind_id = first.kind_id;
  const std::string unit = first.unit;
  const std::string producer = first.producer;
  for (const auto& addr : op.products) {
    Entity& in = entities_.at(addr);
    burn(in);
    in.status = EntityStatus::invalidated;
  }
  std::vector<Address> created;
  for (std::uint32_t i = 0; i < op.quantities.size(); ++i) {
    Entity& out = create_entity(ctx, i, kind_id, producer);
    out.origins = op.products;
    out.quantity = op.quantities[i];
    out.unit = unit;
    out.token_holder = ctx.sender;
    mint(kind_id, ctx.sender, op.quantities[i]);
    created.push_back(out.address);
  }
  for (const auto& addr : op.products) {
    Entity& in = entities_.at(addr);
    in.produced.insert(in.produced.end(), created.begin(), created.end());
  }
  if (ctx.gas) ctx.gas->charge_storage_new(32 * created.size() * (op.products.size() + 1));
  EventRecord rec = make_record(ctx, RecordKind::merge, "", params::encode_parameters({}), created.front(), "merge");
  for (const auto& addr : created) entities_.at(addr).records.push_back(rec);
}

void World::do_notarize(const ExecContext& ctx, const Notarize& op) {
  const CatalogEntry& caller = require_enabled(ctx.sender);
  Entity& target = require_entity(op.entity);
  if (!target.active()) reject(ErrorCode::invalidated, "entity " + short_addr(op.entity) + " is invalidated");
  require_kind_access(caller, target.kind_id);
  if (op.digest_hex.empty()) reject(ErrorCode::empty_document, "no document digest given");
  Digest digest;
  try {
    digest = Digest::from_hex(op.digest_hex);
  } catch (const Error&) {
    reject(ErrorCode::invalid_argument, "document digest must be 64 hex characters");
  }
  std::string payload = params::encode_parameters(op.metadata);

  EventRecord rec = make_record(ctx, RecordKind::notarization, "", payload, target.address, "notarization");
  rec.notarization = NotarizationRecord{digest, op.locator};
  if (ctx.gas) ctx.gas->charge_storage_new(32 + op.locator.size());
  target.records.push_back(std::move(rec));
}

void World::do_asseverate(const ExecContext& ctx, const Asseverate& op) {
  const CatalogEntry& caller = require_enabled(ctx.sender);
  bool may_certify = std::any_of(kCertifierRoles.begin(), kCertifierRoles.end(),
                                 [&](Role r) { return caller.roles.contains(r); });
  if (!may_certify)
    reject(ErrorCode::role_missing, "actor \"" + caller.actor_id + "\" holds no certifying role");
  const Entity* target = entity(op.entity);
  if (!target || op.record_index >= target->records.size())
    reject(ErrorCode::dangling_target, "no record " + std::to_string(op.record_index) + " on " + short_addr(op.entity));
  asseverations_[{op.entity, op.record_index}].push_back(
      Asseveration{ctx.sender, TxRef{ctx.block_height, ctx.tx_index}});
  if (ctx.gas) ctx.gas->charge_storage_new(64);
  ctx.emit(op.entity, "asseveration", std::to_string(op.record_index));
}

void World::do_request_unlock(const ExecContext& ctx, const RequestUnlock& op) {
  const CatalogEntry& caller = require_enabled(ctx.sender);
  const config::EventKindDef* ev = config_->find_event_kind(op.event_kind_id);
  if (!ev) reject(ErrorCode::unknown_event_kind, "unknown event kind \"" + op.event_kind_id + "\"");
  if (ev->required_unlock_actor_ids.empty())
    reject(ErrorCode::not_applicable, "event \"" + ev->id + "\" does not require unlocking");
  if (!contains(ev->authorized_actor_ids, caller.actor_id))
    reject(ErrorCode::unauthorized, "actor \"" + caller.actor_id + "\" may not perform \"" + ev->id + "\"");
  const Entity& target = require_entity(op.target);
  if (!target.active()) reject(ErrorCode::invalidated, "entity " + short_addr(op.target) + " is invalidated");
  if (!contains(ev->applicable_kind_ids, target.kind_id))
    reject(ErrorCode::not_applicable, "event \"" + ev->id + "\" does not apply to kind \"" + target.kind_id + "\"");

  UnlockRequest u;
  u.id = unlocks_.size() + 1;
  u.event_kind_id = ev->id;
  u.target = op.target;
  u.requester = ctx.sender;
  u.required_actor_ids = {ev->required_unlock_actor_ids.begin(), ev->required_unlock_actor_ids.end()};
  unlocks_.push_back(std::move(u));
  if (ctx.gas) ctx.gas->charge_storage_new(kRecordBytes);
  ctx.emit(op.target, "unlock_requested", std::to_string(unlocks_.back().id));
}

void World::do_approve_unlock(const ExecContext& ctx, const ApproveUnlock& op) {
  const CatalogEntry& caller = require_enabled(ctx.sender);
  if (op.request_id == 0 || op.request_id > unlocks_.size())
    reject(ErrorCode::dangling_target, "unknown unlock request " + std::to_string(op.request_id));
  UnlockRequest& u = unlocks_[op.request_id - 1];
  if (u.status == UnlockStatus::consumed)
    reject(ErrorCode::already_consumed, "unlock request " + std::to_string(u.id) + " was already consumed");
  if (!u.required_actor_ids.contains(caller.actor_id))
    reject(ErrorCode::not_required_approver, "actor \"" + caller.actor_id + "\" is not a required approver");
  u.approved_actor_ids.insert(caller.actor_id);
  u.approvals.push_back(ctx.sender);
  if (std::includes(u.approved_actor_ids.begin(), u.approved_actor_ids.end(), u.required_actor_ids.begin(),
                    u.required_actor_ids.end()))
    u.status = UnlockStatus::unlocked;
  if (ctx.gas) ctx.gas->charge_storage_update(2);
}

void World::do_pay(const ExecContext& ctx, const Pay& op) {
  if (op.amount == 0) reject(ErrorCode::invalid_amount, "payment amount must be positive");
  std::uint64_t have = native_balance(ctx.sender);
  if (have < op.amount)
    reject(ErrorCode::insufficient_funds, "balance " + std::to_string(have) + " below " + std::to_string(op.amount));
  balances_[ctx.sender] -= op.amount;
  balances_[op.recipient] += op.amount;
  if (balances_[ctx.sender] == 0) balances_.erase(ctx.sender);
  if (ctx.gas) ctx.gas->charge_storage_update(2);
  ctx.emit(op.recipient, "payment", std::to_string(op.amount));
}

// ---------------------------------------------------------------------------

ledger::StateFactory world_factory() {
  return [] { return std::make_unique<World>(); };
}

ledger::Transaction Client::sign(const KeyPair& key, const Operation& op) const {
  return ledger::Transaction::make(key, ledger_.next_nonce(key.address()), std::string(operation_name(op)),
                                   encode_args(op));
}

ledger::Receipt Client::submit(const KeyPair& key, const Operation& op) {
  ledger::Transaction tx;
  try {
    tx = sign(key, op);
  } catch (const Error& e) {
    ledger::Receipt r;
    r.error = e.code();
    r.message = e.what();
    return r;
  }
  return ledger_.submit(tx);
}

ledger::Receipt Client::send(const KeyPair& key, const Operation& op) {
  ledger::Receipt r = submit(key, op);
  if (r.ok) ledger_.seal_block();
  return r;
}

std::vector<Address> created_entities(const ledger::Receipt& receipt) {
  std::vector<Address> out;
  for (const auto& log : receipt.logs)
    if (log.topic == "created") out.push_back(log.emitter);
  return out;
}

std::shared_ptr<const World> sealed_world(const ledger::Ledger& ledger) {
  return std::dynamic_pointer_cast<const World>(ledger.sealed_state());
}

}  // namespace agritrace::contracts
