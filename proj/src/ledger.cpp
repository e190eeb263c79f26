#include "agritrace/ledger.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "agritrace/codec.hpp"

namespace agritrace::ledger {

namespace {

constexpr std::uint8_t kBlockFormat = 1;

using json = nlohmann::json;

void write_record(std::ostream& out, const Block& block) {
  Bytes payload = block.serialize();
  codec::Writer prefix;
  prefix.u32(static_cast<std::uint32_t>(payload.size()));
  out.write(reinterpret_cast<const char*>(prefix.bytes().data()),
            static_cast<std::streamsize>(prefix.bytes().size()));
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
}

Bytes read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string nonces_canonical(const std::map<Address, std::uint64_t>& nonces) {
  std::string out;
  for (const auto& [addr, n] : nonces) {
    out += addr.hex();
    out.push_back('=');
    out += std::to_string(n);
    out.push_back(';');
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Gas

void GasSchedule::check() const {
  if (storage_new_slot_cost <= log_cost_per_byte * 32)
    throw Error(ErrorCode::invalid_argument,
                "gas schedule: storage_new_slot_cost must exceed 32 * log_cost_per_byte");
}

std::string GasSchedule::to_json() const {
  nlohmann::ordered_json o;
  o["base_tx_cost"] = base_tx_cost;
  o["calldata_cost_per_byte"] = calldata_cost_per_byte;
  o["storage_new_slot_cost"] = storage_new_slot_cost;
  o["storage_update_cost"] = storage_update_cost;
  o["log_base_cost"] = log_base_cost;
  o["log_topic_cost"] = log_topic_cost;
  o["log_cost_per_byte"] = log_cost_per_byte;
  return o.dump(2) + "\n";
}

GasSchedule GasSchedule::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse_error, std::string("gas schedule: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::parse_error, "gas schedule must be a JSON object");
  GasSchedule s;
  auto field = [&](const char* key, std::uint64_t& target) {
    auto it = doc.find(key);
    if (it == doc.end()) return;
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0))
      throw Error(ErrorCode::parse_error, std::string("gas schedule: ") + key +
                                              " must be a non-negative integer");
    target = it->get<std::uint64_t>();
  };
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    static const char* known[] = {"base_tx_cost",   "calldata_cost_per_byte", "storage_new_slot_cost",
                                  "storage_update_cost", "log_base_cost", "log_topic_cost",
                                  "log_cost_per_byte"};
    bool ok = false;
    for (auto* k : known) ok = ok || it.key() == k;
    if (!ok) throw Error(ErrorCode::parse_error, "gas schedule: unknown field " + it.key());
  }
  field("base_tx_cost", s.base_tx_cost);
  field("calldata_cost_per_byte", s.calldata_cost_per_byte);
  field("storage_new_slot_cost", s.storage_new_slot_cost);
  field("storage_update_cost", s.storage_update_cost);
  field("log_base_cost", s.log_base_cost);
  field("log_topic_cost", s.log_topic_cost);
  field("log_cost_per_byte", s.log_cost_per_byte);
  s.check();
  return s;
}

GasSchedule GasSchedule::load(const std::filesystem::path& path) {
  Bytes raw = read_all(path);
  return from_json(std::string_view(reinterpret_cast<const char*>(raw.data()), raw.size()));
}

std::string_view to_string(StorageMode mode) {
  return mode == StorageMode::persistent ? "persistent" : "log";
}

StorageMode parse_storage_mode(std::string_view text) {
  if (text == "persistent") return StorageMode::persistent;
  if (text == "log") return StorageMode::log;
  throw Error(ErrorCode::unknown_mode, "unknown storage mode \"" + std::string(text) + "\"");
}

std::uint64_t estimate_gas(const GasSchedule& s, const GasQuery& q) {
  std::uint64_t gas = s.base_tx_cost + s.calldata_cost_per_byte * q.payload_bytes;
  if (q.mode == StorageMode::persistent) {
    gas += slots_for(q.payload_bytes) * s.storage_new_slot_cost;
    gas += q.touched_existing_slots * s.storage_update_cost;
  } else {
    gas += s.log_base_cost + s.log_topic_cost * q.topics + s.log_cost_per_byte * q.payload_bytes;
  }
  return gas;
}

std::uint64_t estimate_gas(const GasSchedule& schedule, std::size_t payload_bytes,
                           std::string_view mode) {
  return estimate_gas(schedule, GasQuery{payload_bytes, parse_storage_mode(mode), 1, 0});
}

void GasMeter::charge_base(std::size_t calldata_bytes) {
  used_ += schedule_.base_tx_cost + schedule_.calldata_cost_per_byte * calldata_bytes;
}

void GasMeter::charge_storage_new(std::size_t bytes) {
  used_ += slots_for(bytes) * schedule_.storage_new_slot_cost;
}

void GasMeter::charge_storage_update(std::size_t slots) {
  used_ += slots * schedule_.storage_update_cost;
}

void GasMeter::charge_log(std::size_t topics, std::size_t payload_bytes) {
  used_ += schedule_.log_base_cost + topics * schedule_.log_topic_cost +
           payload_bytes * schedule_.log_cost_per_byte;
}

// ---------------------------------------------------------------------------
// Accounts and transactions

Account create_account(std::string_view seed_label) {
  KeyPair kp = KeyPair::from_label(seed_label);
  return Account{kp.address(), kp.public_key()};
}

Bytes Transaction::signing_bytes() const {
  codec::Writer w;
  w.str("agritrace-tx-v1");
  w.raw(sender.bytes);
  w.u64(nonce);
  w.str(operation);
  w.str(args);
  return w.take();
}

Digest Transaction::digest() const {
  Bytes body = signing_bytes();
  return Hasher().update(body).update(sender_key).update(signature).update_u64(gas_used).finish();
}

bool Transaction::signature_valid() const {
  if (address_of(sender_key) != sender) return false;
  return verify_signature(sender_key, signing_bytes(), signature);
}

Transaction Transaction::make(const KeyPair& key, std::uint64_t nonce, std::string operation,
                              std::string args) {
  Transaction tx;
  tx.sender_key = key.public_key();
  tx.sender = key.address();
  tx.nonce = nonce;
  tx.operation = std::move(operation);
  tx.args = std::move(args);
  tx.signature = key.sign(tx.signing_bytes());
  return tx;
}

// ---------------------------------------------------------------------------
// Blocks

Digest Block::compute_hash() const {
  Hasher h;
  h.update_u64(height);
  h.update(parent_hash.bytes);
  for (const auto& tx : transactions) h.update(tx.digest().bytes);
  h.update(state_root.bytes);
  h.update_u64(static_cast<std::uint64_t>(timestamp));
  return h.finish();
}

Bytes Block::serialize() const {
  codec::Writer w;
  w.u8(kBlockFormat);
  w.u64(height);
  w.raw(parent_hash.bytes);
  w.u64(static_cast<std::uint64_t>(timestamp));
  w.u32(static_cast<std::uint32_t>(transactions.size()));
  for (const auto& tx : transactions) {
    w.raw(tx.sender_key);
    w.raw(tx.sender.bytes);
    w.u64(tx.nonce);
    w.str(tx.operation);
    w.str(tx.args);
    w.raw(tx.signature);
    w.u64(tx.gas_used);
  }
  w.raw(state_root.bytes);
  w.u32(static_cast<std::uint32_t>(log_entries.size()));
  for (const auto& log : log_entries) {
    w.u32(log.tx_index);
    w.raw(log.emitter.bytes);
    w.str(log.topic);
    w.str(log.payload);
  }
  w.raw(hash.bytes);
  return w.take();
}

Block Block::deserialize(ByteView bytes) {
  codec::Reader r(bytes);
  if (r.u8() != kBlockFormat) throw Error(ErrorCode::malformed_payload, "unknown block format");
  Block b;
  b.height = r.u64();
  r.fixed(b.parent_hash.bytes);
  b.timestamp = static_cast<std::int64_t>(r.u64());
  std::uint32_t ntx = r.u32();
  // Each transaction needs at least 32+20+8+4+4+64+8 bytes.
  if (ntx > r.remaining() / 140) throw Error(ErrorCode::malformed_payload, "bad transaction count");
  for (std::uint32_t i = 0; i < ntx; ++i) {
    Transaction tx;
    r.fixed(tx.sender_key);
    r.fixed(tx.sender.bytes);
    tx.nonce = r.u64();
    tx.operation = r.str();
    tx.args = r.str();
    r.fixed(tx.signature);
    tx.gas_used = r.u64();
    b.transactions.push_back(std::move(tx));
  }
  r.fixed(b.state_root.bytes);
  std::uint32_t nlogs = r.u32();
  if (nlogs > r.remaining() / 32) throw Error(ErrorCode::malformed_payload, "bad log count");
  for (std::uint32_t i = 0; i < nlogs; ++i) {
    LogEntry log;
    log.tx_index = r.u32();
    r.fixed(log.emitter.bytes);
    log.topic = r.str();
    log.payload = r.str();
    b.log_entries.push_back(std::move(log));
  }
  r.fixed(b.hash.bytes);
  r.expect_end();
  return b;
}

Bytes serialize_chain(const std::vector<Block>& blocks) {
  codec::Writer w;
  for (const auto& b : blocks) {
    Bytes payload = b.serialize();
    w.u32(static_cast<std::uint32_t>(payload.size()));
    w.raw(payload);
  }
  return w.take();
}

ChainParse parse_chain(ByteView bytes) {
  ChainParse out;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    std::uint64_t index = out.blocks.size();
    try {
      if (bytes.size() - pos < 4) throw Error(ErrorCode::malformed_payload, "truncated length prefix");
      codec::Reader prefix(bytes.subspan(pos, 4));
      std::uint32_t len = prefix.u32();
      pos += 4;
      if (bytes.size() - pos < len) throw Error(ErrorCode::malformed_payload, "truncated block record");
      out.blocks.push_back(Block::deserialize(bytes.subspan(pos, len)));
      pos += len;
    } catch (const Error& e) {
      out.failed_at = index;
      out.error = e.what();
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Execution

void ExecContext::emit(const Address& emitter, std::string topic, std::string payload) const {
  if (gas) gas->charge_log(1, payload.size());
  if (logs) logs->push_back(LogEntry{tx_index, emitter, std::move(topic), std::move(payload)});
}

Clock system_clock() {
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
}

Clock logical_clock(std::int64_t start, std::int64_t step) {
  auto next = std::make_shared<std::int64_t>(start);
  return [next, step] {
    std::int64_t v = *next;
    *next += step;
    return v;
  };
}

std::string VerificationReport::str() const {
  if (ok) return "ok: " + std::to_string(blocks_checked) + " block(s) verified";
  std::string out = "FAILED at block " + (failed_block ? std::to_string(*failed_block) : "?");
  if (failed_tx) out += " tx " + std::to_string(*failed_tx);
  return out + ": " + reason;
}

namespace {

struct Replayer {
  const StateFactory& factory;
  const GasSchedule& schedule;
  std::unique_ptr<StateMachine> state;
  std::map<Address, std::uint64_t> nonces;
};

Digest state_root_of(const StateMachine& state, const std::map<Address, std::uint64_t>& nonces) {
  return Hasher().update(nonces_canonical(nonces)).update(std::string_view("\0", 1))
      .update(state.canonical_state())
      .finish();
}

}  // namespace

VerificationReport verify_chain(const std::vector<Block>& blocks, const StateFactory& factory,
                                const GasSchedule& schedule) {
  VerificationReport report;
  auto fail = [&](std::uint64_t block, std::optional<std::uint32_t> tx, std::string reason) {
    report.ok = false;
    report.failed_block = block;
    report.failed_tx = tx;
    report.reason = std::move(reason);
    return report;
  };
  if (blocks.empty()) return fail(0, std::nullopt, "empty chain");

  auto state = factory();
  std::map<Address, std::uint64_t> nonces;
  Digest prev_hash{};
  std::int64_t prev_ts = 0;

  for (std::uint64_t i = 0; i < blocks.size(); ++i) {
    const Block& b = blocks[i];
    if (b.height != i) return fail(i, std::nullopt, "height mismatch");
    if (b.parent_hash != prev_hash) return fail(i, std::nullopt, "parent hash mismatch");
    if (i > 0 && b.timestamp < prev_ts) return fail(i, std::nullopt, "timestamp regression");
    if (b.compute_hash() != b.hash) return fail(i, std::nullopt, "block hash mismatch");

    std::vector<LogEntry> logs;
    for (std::uint32_t t = 0; t < b.transactions.size(); ++t) {
      const Transaction& tx = b.transactions[t];
      if (!tx.signature_valid()) return fail(i, t, "signature verification failed");
      if (tx.nonce != nonces[tx.sender] + 1) return fail(i, t, "nonce out of sequence");
      GasMeter gas(schedule);
      gas.charge_base(tx.args.size());
      ExecContext ctx{tx.sender, tx.sender_key, i, t, b.timestamp, &gas, &logs};
      auto next = state->clone();
      try {
        next->apply(ctx, tx.operation, tx.args);
      } catch (const Error& e) {
        return fail(i, t, std::string("replay rejected transaction: ") + e.what());
      }
      if (gas.used() != tx.gas_used) return fail(i, t, "gas_used mismatch on replay");
      state = std::move(next);
      nonces[tx.sender] = tx.nonce;
    }
    if (logs != b.log_entries) return fail(i, std::nullopt, "event log mismatch on replay");
    if (state_root_of(*state, nonces) != b.state_root)
      return fail(i, std::nullopt, "state root mismatch on replay");
    prev_hash = b.hash;
    prev_ts = b.timestamp;
    report.blocks_checked = i + 1;
  }
  return report;
}

VerificationReport verify_chain_bytes(ByteView chain_file, const StateFactory& factory,
                                      const GasSchedule& schedule) {
  ChainParse parsed = parse_chain(chain_file);
  if (!parsed.blocks.empty()) {
    // Verify the parsed prefix first so an earlier divergence is reported first.
    VerificationReport prefix = verify_chain(parsed.blocks, factory, schedule);
    if (!prefix.ok) return prefix;
    if (!parsed.failed_at) return prefix;
  }
  VerificationReport report;
  report.ok = false;
  report.blocks_checked = parsed.blocks.size();
  report.failed_block = parsed.failed_at.value_or(0);
  report.reason = parsed.failed_at ? "unreadable block record: " + parsed.error : "empty chain";
  return report;
}

// ---------------------------------------------------------------------------
// Ledger

Ledger::Ledger(StateFactory factory, GasSchedule schedule, Clock clock)
    : factory_(std::move(factory)), schedule_(schedule), clock_(std::move(clock)) {
  schedule_.check();
  working_ = factory_();
  sealed_ = working_->clone();
}

Digest Ledger::compute_state_root(const StateMachine& state,
                                  const std::map<Address, std::uint64_t>& nonces) const {
  return state_root_of(state, nonces);
}

std::unique_ptr<Ledger> Ledger::replay(const std::vector<Block>& blocks, StateFactory factory,
                                       GasSchedule schedule, Clock clock) {
  VerificationReport report = verify_chain(blocks, factory, schedule);
  if (!report.ok) throw Error(ErrorCode::integrity_error, "chain does not verify: " + report.str());
  auto ledger = std::make_unique<Ledger>(factory, schedule, std::move(clock));
  for (const auto& b : blocks) {
    for (std::uint32_t t = 0; t < b.transactions.size(); ++t) {
      const Transaction& tx = b.transactions[t];
      GasMeter gas(ledger->schedule_);
      gas.charge_base(tx.args.size());
      std::vector<LogEntry> logs;
      ExecContext ctx{tx.sender, tx.sender_key, b.height, t, b.timestamp, &gas, &logs};
      ledger->working_->apply(ctx, tx.operation, tx.args);
      ledger->working_nonces_[tx.sender] = tx.nonce;
    }
    ledger->blocks_.push_back(b);
  }
  ledger->sealed_ = ledger->working_->clone();
  ledger->sealed_nonces_ = ledger->working_nonces_;
  return ledger;
}

std::unique_ptr<Ledger> Ledger::open(const std::filesystem::path& chain_file, StateFactory factory,
                                     GasSchedule schedule, Clock clock) {
  Bytes raw = read_all(chain_file);
  ChainParse parsed = parse_chain(raw);
  if (parsed.failed_at)
    throw Error(ErrorCode::integrity_error, "chain file unreadable at block " +
                                                std::to_string(*parsed.failed_at) + ": " + parsed.error);
  auto ledger = replay(parsed.blocks, std::move(factory), schedule, std::move(clock));
  ledger->file_ = chain_file;
  return ledger;
}

void Ledger::attach_file(const std::filesystem::path& chain_file) {
  std::lock_guard lock(write_gate_);
  file_ = chain_file;
}

void Ledger::save_as(const std::filesystem::path& chain_file) {
  std::lock_guard lock(write_gate_);
  auto tmp = chain_file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + tmp.string());
    std::shared_lock read(sealed_mutex_);
    for (const auto& b : blocks_) write_record(out, b);
    out.flush();
    if (!out) throw Error(ErrorCode::io_error, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, chain_file);
  file_ = chain_file;
}

Receipt Ledger::submit(const Transaction& tx) {
  std::lock_guard lock(write_gate_);
  Receipt receipt;
  receipt.tx_digest = tx.digest();
  receipt.block_height = height();

  auto reject = [&](ErrorCode code, std::string message) {
    receipt.ok = false;
    receipt.error = code;
    receipt.message = std::move(message);
    return receipt;
  };

  if (!tx.signature_valid()) return reject(ErrorCode::bad_signature, "signature does not match sender");
  std::uint64_t current = working_nonces_[tx.sender];
  if (tx.nonce <= current)
    return reject(ErrorCode::stale_nonce, "nonce " + std::to_string(tx.nonce) + " already used");
  if (tx.nonce != current + 1)
    return reject(ErrorCode::bad_nonce, "expected nonce " + std::to_string(current + 1));

  if (!pending_.open) {
    pending_.open = true;
    pending_.timestamp = clock_();
  }

  GasMeter gas(schedule_);
  gas.charge_base(tx.args.size());
  std::vector<LogEntry> logs;
  auto tx_index = static_cast<std::uint32_t>(pending_.transactions.size());
  ExecContext ctx{tx.sender, tx.sender_key, height(), tx_index, pending_.timestamp, &gas, &logs};
  auto next = working_->clone();
  try {
    next->apply(ctx, tx.operation, tx.args);
  } catch (const Error& e) {
    return reject(e.code(), e.what());
  }

  working_ = std::move(next);
  working_nonces_[tx.sender] = tx.nonce;
  Transaction stored = tx;
  stored.gas_used = gas.used();
  pending_.transactions.push_back(std::move(stored));
  pending_.logs.insert(pending_.logs.end(), logs.begin(), logs.end());

  receipt.ok = true;
  receipt.gas_used = gas.used();
  receipt.tx_index = tx_index;
  receipt.tx_digest = pending_.transactions.back().digest();
  receipt.logs = std::move(logs);
  return receipt;
}

Block Ledger::seal_block() {
  std::lock_guard lock(write_gate_);
  Block b;
  {
    std::shared_lock read(sealed_mutex_);
    b.height = blocks_.size();
    b.parent_hash = blocks_.empty() ? Digest{} : blocks_.back().hash;
    b.timestamp = pending_.open ? pending_.timestamp : clock_();
    if (!blocks_.empty()) b.timestamp = std::max(b.timestamp, blocks_.back().timestamp);
  }
  b.transactions = std::move(pending_.transactions);
  b.log_entries = std::move(pending_.logs);
  b.state_root = compute_state_root(*working_, working_nonces_);
  b.hash = b.compute_hash();
  pending_ = Pending{};

  if (file_) {
    std::ofstream out(*file_, std::ios::binary | std::ios::app);
    if (!out) throw Error(ErrorCode::io_error, "cannot append to " + file_->string());
    write_record(out, b);
    out.flush();
  }

  std::shared_ptr<const StateMachine> snapshot = working_->clone();
  {
    std::unique_lock write(sealed_mutex_);
    blocks_.push_back(b);
    sealed_ = std::move(snapshot);
    sealed_nonces_ = working_nonces_;
  }
  return b;
}

Receipt Ledger::submit_and_seal(const Transaction& tx) {
  Receipt r = submit(tx);
  if (r.ok) seal_block();
  return r;
}

std::uint64_t Ledger::next_nonce(const Address& sender) const {
  std::lock_guard lock(write_gate_);
  auto it = working_nonces_.find(sender);
  return (it == working_nonces_.end() ? 0 : it->second) + 1;
}

std::uint64_t Ledger::height() const {
  std::shared_lock read(sealed_mutex_);
  return blocks_.size();
}

std::vector<Block> Ledger::blocks() const {
  std::shared_lock read(sealed_mutex_);
  return blocks_;
}

std::optional<Block> Ledger::block(std::uint64_t h) const {
  std::shared_lock read(sealed_mutex_);
  if (h >= blocks_.size()) return std::nullopt;
  return blocks_[h];
}

std::size_t Ledger::pending_count() const {
  std::lock_guard lock(write_gate_);
  return pending_.transactions.size();
}

std::shared_ptr<const StateMachine> Ledger::sealed_state() const {
  std::shared_lock read(sealed_mutex_);
  return sealed_;
}

Digest Ledger::state_root() const {
  auto state = sealed_state();
  std::map<Address, std::uint64_t> nonces;
  {
    std::shared_lock read(sealed_mutex_);
    nonces = sealed_nonces_;
  }
  return state_root_of(*state, nonces);
}

}  // namespace agritrace::ledger
