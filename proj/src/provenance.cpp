#include "agritrace/provenance.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>

#include <json.hpp>

namespace agritrace::provenance {

using json = nlohmann::ordered_json;
using contracts::Entity;
using contracts::RecordKind;

namespace {

std::string record_topic(const contracts::EventRecord& r) {
  switch (r.kind) {
    case RecordKind::documentation:
    case RecordKind::transformation: return "event:" + r.event_kind_id;
    case RecordKind::split: return "split";
    case RecordKind::merge: return "merge";
    case RecordKind::notarization: return "notarization";
  }
  return {};
}

}  // namespace

Navigator::Navigator(std::shared_ptr<const contracts::World> world, std::vector<ledger::Block> blocks)
    : world_(std::move(world)), blocks_(std::move(blocks)) {
  if (!world_) throw Error(ErrorCode::invalid_argument, "no world state");
  for (const auto& b : blocks_)
    for (const auto& log : b.log_entries) logs_[{b.height, log.tx_index}].push_back(&log);
}

Navigator Navigator::from_ledger(const ledger::Ledger& ledger) {
  // Snapshot the state first: any block sealed in between only adds logs.
  auto world = contracts::sealed_world(ledger);
  return Navigator(world, ledger.blocks());
}

std::vector<EventSummary> Navigator::events_of(const Entity& entity) const {
  std::vector<EventSummary> out;
  for (std::uint32_t i = 0; i < entity.records.size(); ++i) {
    const auto& r = entity.records[i];
    EventSummary s;
    s.record_index = i;
    s.kind = r.kind;
    s.event_kind_id = r.event_kind_id;
    s.registrant = r.registrant;
    if (const auto* c = world_->catalog_entry(r.registrant)) s.registrant_actor = c->actor_id;
    s.block_height = r.tx.block_height;
    s.tx_index = r.tx.tx_index;
    if (r.tx.block_height < blocks_.size()) s.timestamp = blocks_[r.tx.block_height].timestamp;
    s.notarization = r.notarization;

    std::optional<std::string> payload = r.stored_parameters;
    if (!payload) {
      auto it = logs_.find({r.tx.block_height, r.tx.tx_index});
      if (it != logs_.end()) {
        std::string topic = record_topic(r);
        for (const auto* log : it->second) {
          if (log->topic == topic && sha256(log->payload) == r.parameters_digest) {
            payload = log->payload;
            break;
          }
        }
      }
    }
    if (payload && sha256(*payload) == r.parameters_digest) {
      try {
        s.parameters = params::decode_parameters(*payload);
        s.parameters_verified = true;
      } catch (const Error&) {
        s.parameters_verified = false;
      }
    }
    for (const auto& a : world_->asseverations(entity.address, i)) s.asseverators.push_back(a.certifier);
    out.push_back(std::move(s));
  }
  std::reverse(out.begin(), out.end());
  return out;
}

TraceNode Navigator::build(const Entity& e, std::size_t depth, std::optional<std::size_t> max_depth) const {
  TraceNode n;
  n.address = e.address;
  n.kind_id = e.kind_id;
  n.kind_class = e.kind_class;
  n.producer = e.producer;
  n.quantity = e.quantity;
  n.unit = e.unit;
  n.active = e.active();
  n.events = events_of(e);
  if (max_depth && depth >= *max_depth) {
    n.truncated = !e.origins.empty();
    return n;
  }
  for (const auto& origin : e.origins) {
    const Entity* parent = world_->entity(origin);
    if (!parent) throw Error(ErrorCode::integrity_error, "dangling origin " + origin.hex());
    n.children.push_back(build(*parent, depth + 1, max_depth));
  }
  return n;
}

TraceNode Navigator::trace_back(const Address& address, std::optional<std::size_t> max_depth) const {
  const Entity* e = world_->entity(address);
  if (!e) throw Error(ErrorCode::unknown_entity, "unknown entity " + address.hex());
  return build(*e, 0, max_depth);
}

ForwardListing Navigator::trace_forward(const Address& address) const {
  const Entity* start = world_->entity(address);
  if (!start) throw Error(ErrorCode::unknown_entity, "unknown entity " + address.hex());
  ForwardListing out;
  out.root = address;
  std::set<Address> seen{address};
  std::deque<std::pair<const Entity*, std::size_t>> queue{{start, 0}};
  while (!queue.empty()) {
    auto [e, depth] = queue.front();
    queue.pop_front();
    for (const auto& child_addr : e->produced) {
      if (!seen.insert(child_addr).second) continue;
      const Entity* child = world_->entity(child_addr);
      if (!child) throw Error(ErrorCode::integrity_error, "dangling produced link " + child_addr.hex());
      out.descendants.push_back(ForwardEntry{child->address, child->kind_id, depth + 1, child->origins});
      queue.emplace_back(child, depth + 1);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

json event_json(const EventSummary& s) {
  json params = json::array();
  for (const auto& t : s.parameters)
    params.push_back(json{{"name", t.name}, {"type", config::to_string(t.type)}, {"value", t.value}});
  json certifiers = json::array();
  for (const auto& a : s.asseverators) certifiers.push_back(a.hex());
  json j{{"record_index", s.record_index},
         {"kind", contracts::to_string(s.kind)},
         {"event_kind_id", s.event_kind_id},
         {"registrant", s.registrant.hex()},
         {"registrant_actor", s.registrant_actor},
         {"block_height", s.block_height},
         {"tx_index", s.tx_index},
         {"timestamp", s.timestamp},
         {"parameters", params},
         {"parameters_verified", s.parameters_verified},
         {"asseveration_count", s.asseverators.size()},
         {"asseverators", certifiers}};
  if (s.notarization)
    j["notarization"] = json{{"document_digest", s.notarization->document_digest.hex()},
                             {"locator", s.notarization->locator}};
  return j;
}

json node_json(const TraceNode& n) {
  json events = json::array();
  for (const auto& e : n.events) events.push_back(event_json(e));
  json children = json::array();
  for (const auto& c : n.children) children.push_back(node_json(c));
  return json{{"address", n.address.hex()},
              {"kind_id", n.kind_id},
              {"class", config::to_string(n.kind_class)},
              {"producer", n.producer},
              {"quantity", n.quantity},
              {"unit", n.unit},
              {"active", n.active},
              {"events", events},
              {"children", children},
              {"truncated", n.truncated}};
}

std::string display_value(const params::Triple& t) {
  if (t.type == config::ParamType::hashlink) {
    if (auto parts = params::split_hashlink(t.value)) return parts->first + " #" + parts->second.hex();
  }
  std::string v;
  for (char c : t.value) v += (c == '\n') ? ' ' : c;
  return v;
}

void node_text(const TraceNode& n, std::size_t indent, std::ostringstream& out) {
  std::string pad(indent * 2, ' ');
  out << pad << n.kind_id << " " << n.address.hex() << " [" << config::to_string(n.kind_class) << "] "
      << n.quantity;
  if (!n.unit.empty()) out << " " << n.unit;
  out << ", producer " << n.producer;
  if (!n.active) out << ", invalidated";
  out << "\n";
  for (const auto& e : n.events) {
    out << pad << "  * " << contracts::to_string(e.kind);
    if (!e.event_kind_id.empty()) out << " " << e.event_kind_id;
    out << " by " << (e.registrant_actor.empty() ? e.registrant.hex() : e.registrant_actor) << " at block "
        << e.block_height;
    if (!e.parameters.empty()) {
      out << ":";
      for (const auto& t : e.parameters) out << " " << t.name << "=" << display_value(t);
    }
    if (e.notarization) out << " document " << e.notarization->document_digest.hex();
    if (!e.asseverators.empty()) out << " (asseverated x" << e.asseverators.size() << ")";
    if (!e.parameters_verified && e.kind != RecordKind::split && e.kind != RecordKind::merge)
      out << " [parameters unavailable]";
    out << "\n";
  }
  if (n.truncated) out << pad << "  ... origins not expanded\n";
  for (const auto& c : n.children) {
    out << pad << "  <- from\n";
    node_text(c, indent + 2, out);
  }
}

}  // namespace

std::string render_trace(const TraceNode& root, std::string_view format) {
  if (format == "json") return node_json(root).dump(2) + "\n";
  if (format == "text") {
    std::ostringstream out;
    node_text(root, 0, out);
    return out.str();
  }
  throw Error(ErrorCode::unknown_format, "unknown format \"" + std::string(format) + "\"");
}

std::string render_forward(const ForwardListing& listing, std::string_view format) {
  if (format == "json") {
    json entries = json::array();
    for (const auto& d : listing.descendants) {
      json parents = json::array();
      for (const auto& p : d.parents) parents.push_back(p.hex());
      entries.push_back(json{{"address", d.address.hex()}, {"kind_id", d.kind_id}, {"depth", d.depth},
                             {"parents", parents}});
    }
    return json{{"root", listing.root.hex()}, {"descendants", entries}}.dump(2) + "\n";
  }
  if (format == "text") {
    std::ostringstream out;
    out << listing.root.hex() << "\n";
    for (const auto& d : listing.descendants)
      out << std::string(d.depth * 2, ' ') << "-> " << d.kind_id << " " << d.address.hex() << "\n";
    return out.str();
  }
  throw Error(ErrorCode::unknown_format, "unknown format \"" + std::string(format) + "\"");
}

std::string QrPayload::str() const { return "trace://" + chain_id + "/product/" + address.hex(); }

QrPayload QrPayload::parse(std::string_view text) {
  constexpr std::string_view scheme = "trace://";
  constexpr std::string_view middle = "/product/";
  if (!text.starts_with(scheme)) throw Error(ErrorCode::invalid_argument, "QR payload must start with trace://");
  text.remove_prefix(scheme.size());
  auto pos = text.find(middle);
  if (pos == std::string_view::npos) throw Error(ErrorCode::invalid_argument, "QR payload lacks /product/");
  QrPayload q;
  q.chain_id = std::string(text.substr(0, pos));
  if (!contracts::valid_chain_id(q.chain_id)) throw Error(ErrorCode::invalid_argument, "bad chain id in QR payload");
  std::string_view addr = text.substr(pos + middle.size());
  if (addr.size() != 42 || !addr.starts_with("0x"))
    throw Error(ErrorCode::invalid_argument, "QR payload address must be 0x + 40 hex digits");
  q.address = Address::from_hex(addr);
  std::string canonical = q.str();
  if (canonical.substr(scheme.size()) != text)
    throw Error(ErrorCode::invalid_argument, "QR payload address must be lowercase hex");
  return q;
}

}  // namespace agritrace::provenance
