#pragma once

// Backward and forward navigation of the entity DAG formed by origins and
// produced links, with event parameters recovered from the block logs.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "agritrace/contracts.hpp"
#include "agritrace/ledger.hpp"
#include "agritrace/params.hpp"

namespace agritrace::provenance {

struct EventSummary {
  std::uint32_t record_index = 0;
  contracts::RecordKind kind = contracts::RecordKind::documentation;
  std::string event_kind_id;
  Address registrant;
  std::string registrant_actor;
  std::uint64_t block_height = 0;
  std::uint32_t tx_index = 0;
  std::int64_t timestamp = 0;
  std::vector<params::Triple> parameters;
  // False when no payload matching the record's digest was found.
  bool parameters_verified = false;
  std::vector<Address> asseverators;
  std::optional<contracts::NotarizationRecord> notarization;
};

struct TraceNode {
  Address address;
  std::string kind_id;
  config::KindClass kind_class = config::KindClass::product;
  std::string producer;
  std::uint64_t quantity = 0;
  std::string unit;
  bool active = true;
  std::vector<EventSummary> events;  // newest first
  std::vector<TraceNode> children;   // one per origin, in origin order
  bool truncated = false;            // origins exist but max_depth stopped expansion
};

struct ForwardEntry {
  Address address;
  std::string kind_id;
  std::size_t depth = 0;         // shortest distance from the start
  std::vector<Address> parents;  // its origins
};

struct ForwardListing {
  Address root;
  std::vector<ForwardEntry> descendants;  // breadth-first, each entity once
};

class Navigator {
 public:
  Navigator(std::shared_ptr<const contracts::World> world, std::vector<ledger::Block> blocks);
  static Navigator from_ledger(const ledger::Ledger& ledger);

  // Throws Error{unknown_entity}.
  TraceNode trace_back(const Address& address, std::optional<std::size_t> max_depth = std::nullopt) const;
  ForwardListing trace_forward(const Address& address) const;
  std::vector<EventSummary> events_of(const contracts::Entity& entity) const;

  const contracts::World& world() const { return *world_; }

 private:
  TraceNode build(const contracts::Entity& entity, std::size_t depth, std::optional<std::size_t> max_depth) const;

  std::shared_ptr<const contracts::World> world_;
  std::vector<ledger::Block> blocks_;
  // (height, tx_index) -> log entries of that transaction
  std::map<std::pair<std::uint64_t, std::uint32_t>, std::vector<const ledger::LogEntry*>> logs_;
};

// Formats: "json" (machine report) and "text". Throws Error{unknown_format}.
std::string render_trace(const TraceNode& root, std::string_view format);
std::string render_forward(const ForwardListing& listing, std::string_view format);

// trace://<chain-id>/product/<address>
struct QrPayload {
  std::string chain_id;
  Address address;

  std::string str() const;
  // Throws Error{invalid_argument}.
  static QrPayload parse(std::string_view text);

  bool operator==(const QrPayload&) const = default;
};

}  // namespace agritrace::provenance
