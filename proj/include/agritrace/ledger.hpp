#pragma once

// Single-sealer permissioned ledger simulator.
//
// Transactions are signed with Ed25519 and executed against a pluggable
// StateMachine. Accepted transactions wait in a pending block until
// seal_block() commits them. Persistent state is hashed into every block's
// state_root; event-log entries are kept next to the block and are checked
// by replay rather than by the block hash.
//
// Thread model: submit() and seal_block() serialize on one writer gate.
// Readers (sealed_state(), blocks(), queries) only ever see sealed blocks
// and can run concurrently with a write in flight.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "agritrace/crypto.hpp"
#include "agritrace/error.hpp"

namespace agritrace::ledger {

// Gas prices. Defaults follow the public Ethereum schedule.
struct GasSchedule {
  std::uint64_t base_tx_cost = 21000;
  std::uint64_t calldata_cost_per_byte = 16;
  std::uint64_t storage_new_slot_cost = 20000;
  std::uint64_t storage_update_cost = 5000;
  std::uint64_t log_base_cost = 375;
  std::uint64_t log_topic_cost = 375;
  std::uint64_t log_cost_per_byte = 8;

  // Throws Error{invalid_argument} unless storage_new_slot_cost exceeds
  // 32 * log_cost_per_byte.
  void check() const;

  std::string to_json() const;
  static GasSchedule from_json(std::string_view text);
  static GasSchedule load(const std::filesystem::path& path);

  bool operator==(const GasSchedule&) const = default;
};

enum class StorageMode { persistent, log };

std::string_view to_string(StorageMode mode);
// Throws Error{unknown_mode}.
StorageMode parse_storage_mode(std::string_view text);

struct GasQuery {
  std::size_t payload_bytes = 0;
  StorageMode mode = StorageMode::log;
  std::size_t topics = 1;
  std::size_t touched_existing_slots = 0;
};

// persistent: base + calldata + ceil(payload/32) * new_slot
//             (+ update cost per touched existing slot)
// log:        base + calldata + log_base + topics * log_topic + payload * log_byte
std::uint64_t estimate_gas(const GasSchedule& schedule, const GasQuery& query);
std::uint64_t estimate_gas(const GasSchedule& schedule, std::size_t payload_bytes,
                           std::string_view mode);

class GasMeter {
 public:
  explicit GasMeter(const GasSchedule& schedule) : schedule_(schedule) {}

  void charge_base(std::size_t calldata_bytes);
  void charge_storage_new(std::size_t bytes);
  void charge_storage_update(std::size_t slots);
  void charge_log(std::size_t topics, std::size_t payload_bytes);

  std::uint64_t used() const { return used_; }
  const GasSchedule& schedule() const { return schedule_; }

 private:
  const GasSchedule& schedule_;
  std::uint64_t used_ = 0;
};

inline std::size_t slots_for(std::size_t bytes) { return (bytes + 31) / 32; }

struct LogEntry {
  std::uint32_t tx_index = 0;
  Address emitter;
  std::string topic;
  std::string payload;

  bool operator==(const LogEntry&) const = default;
};

struct Account {
  Address address;
  PublicKey public_key{};
};

// Deterministic for a fixed label (test mode). Throws Error{invalid_key} for
// an empty label.
Account create_account(std::string_view seed_label);

struct Transaction {
  PublicKey sender_key{};
  Address sender;
  std::uint64_t nonce = 0;
  std::string operation;
  std::string args;  // canonical JSON text
  Signature signature{};
  std::uint64_t gas_used = 0;

  // Canonical bytes covered by the signature: (sender, nonce, operation, args).
  Bytes signing_bytes() const;
  // Digest of the full record, including signature and gas.
  Digest digest() const;
  bool signature_valid() const;

  static Transaction make(const KeyPair& key, std::uint64_t nonce, std::string operation,
                          std::string args);

  bool operator==(const Transaction&) const = default;
};

struct Block {
  std::uint64_t height = 0;
  Digest parent_hash;
  std::int64_t timestamp = 0;
  std::vector<Transaction> transactions;
  Digest state_root;
  std::vector<LogEntry> log_entries;
  Digest hash;

  // digest(height || parent_hash || tx digests || state_root || timestamp)
  Digest compute_hash() const;

  Bytes serialize() const;
  // Strict; throws Error{malformed_payload}.
  static Block deserialize(ByteView bytes);

  bool operator==(const Block&) const = default;
};

// Chain file: sequence of [u32 big-endian length][block record].
Bytes serialize_chain(const std::vector<Block>& blocks);
struct ChainParse {
  std::vector<Block> blocks;
  // Set when the byte stream stops parsing; names the block index that failed.
  std::optional<std::uint64_t> failed_at;
  std::string error;
};
ChainParse parse_chain(ByteView bytes);

struct ExecContext {
  Address sender;
  PublicKey sender_key{};
  std::uint64_t block_height = 0;
  std::uint32_t tx_index = 0;
  std::int64_t timestamp = 0;
  GasMeter* gas = nullptr;
  std::vector<LogEntry>* logs = nullptr;

  void emit(const Address& emitter, std::string topic, std::string payload) const;
};

// Contract layer plugged into the ledger. apply() either succeeds or throws
// Error and leaves *this untouched (the ledger also applies on a clone).
class StateMachine {
 public:
  virtual ~StateMachine() = default;
  virtual std::unique_ptr<StateMachine> clone() const = 0;
  virtual void apply(const ExecContext& ctx, std::string_view operation, std::string_view args) = 0;
  virtual std::string canonical_state() const = 0;
};

using StateFactory = std::function<std::unique_ptr<StateMachine>()>;
using Clock = std::function<std::int64_t()>;

// Milliseconds since the Unix epoch.
Clock system_clock();
// Starts at `start` and advances by `step` per call.
Clock logical_clock(std::int64_t start = 1'700'000'000'000, std::int64_t step = 1000);

struct Receipt {
  bool ok = false;
  std::optional<ErrorCode> error;
  std::string message;
  std::uint64_t gas_used = 0;
  std::uint64_t block_height = 0;
  std::uint32_t tx_index = 0;
  Digest tx_digest;
  std::vector<LogEntry> logs;
};

struct VerificationReport {
  bool ok = true;
  std::uint64_t blocks_checked = 0;
  std::optional<std::uint64_t> failed_block;
  std::optional<std::uint32_t> failed_tx;
  std::string reason;

  std::string str() const;
};

// Recomputes every block hash, every signature and every state root by
// replaying from genesis. Stops at the first divergence.
VerificationReport verify_chain(const std::vector<Block>& blocks, const StateFactory& factory,
                                const GasSchedule& schedule);
VerificationReport verify_chain_bytes(ByteView chain_file, const StateFactory& factory,
                                      const GasSchedule& schedule);

class Ledger {
 public:
  // Starts an empty chain; the first sealed block is height 0 and must carry
  // the genesis transaction(s).
  Ledger(StateFactory factory, GasSchedule schedule, Clock clock);

  // Replays blocks (e.g. read from a chain file). Throws Error{integrity_error}
  // if the blocks do not verify.
  static std::unique_ptr<Ledger> replay(const std::vector<Block>& blocks, StateFactory factory,
                                        GasSchedule schedule, Clock clock);
  static std::unique_ptr<Ledger> open(const std::filesystem::path& chain_file,
                                      StateFactory factory, GasSchedule schedule, Clock clock);

  // Appends every block sealed from now on to the file.
  void attach_file(const std::filesystem::path& chain_file);
  // Writes the full chain to a fresh file and attaches it.
  void save_as(const std::filesystem::path& chain_file);

  Receipt submit(const Transaction& tx);
  Block seal_block();

  // Convenience for single-sealer use: submit and, on success, seal.
  Receipt submit_and_seal(const Transaction& tx);

  // Includes transactions accepted into the pending block.
  std::uint64_t next_nonce(const Address& sender) const;
  std::uint64_t height() const;  // number of sealed blocks
  std::vector<Block> blocks() const;
  std::optional<Block> block(std::uint64_t height) const;
  std::size_t pending_count() const;

  std::shared_ptr<const StateMachine> sealed_state() const;
  Digest state_root() const;
  const GasSchedule& schedule() const { return schedule_; }

 private:
  struct Pending {
    bool open = false;
    std::int64_t timestamp = 0;
    std::vector<Transaction> transactions;
    std::vector<LogEntry> logs;
  };

  Digest compute_state_root(const StateMachine& state,
                            const std::map<Address, std::uint64_t>& nonces) const;

  StateFactory factory_;
  GasSchedule schedule_;
  Clock clock_;

  mutable std::mutex write_gate_;
  std::unique_ptr<StateMachine> working_;
  std::map<Address, std::uint64_t> working_nonces_;
  Pending pending_;

  mutable std::shared_mutex sealed_mutex_;
  std::vector<Block> blocks_;
  std::shared_ptr<const StateMachine> sealed_;
  std::map<Address, std::uint64_t> sealed_nonces_;

  std::optional<std::filesystem::path> file_;
};

}  // namespace agritrace::ledger
