// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "agritrace/contracts.hpp"
#include "agritrace/docstore.hpp"
#include "agritrace/generator.hpp"
#include "agritrace/ledger.hpp"
#include "agritrace/params.hpp"
#include "agritrace/provenance.hpp"
#include "support/form_validator.hpp"
#include "support/scenario.hpp"

#ifndef AGRITRACE_GOLDEN_DIR
#error "AGRITRACE_GOLDEN_DIR must point at tests/golden"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace agritrace;
using namespace agritrace::contracts;
using agritrace::testing::WorldRig;
using u128 = unsigned __int128;

namespace {

// Pinned limits.
constexpr std::size_t kGasSizes[] = {160, 200, 256, 512, 1024};
constexpr std::uint64_t kGasLog200 = 26550;
constexpr std::uint64_t kGasPersistent200 = 164200;
constexpr int kConservationSequences = 1000;
constexpr int kConservationMaxLength = 50;
constexpr int kYieldCases = 500;
constexpr std::uint64_t kChainBlocks = 20;
constexpr int kMutations = 200;
constexpr int kEncodingCases = 10000;
constexpr int kValueSetsPerEvent = 1000;
constexpr double kBudgetGas = 1.0;
constexpr double kBudgetConservation = 30.0;
constexpr double kBudgetIntegrity = 10.0;
constexpr double kBudgetEndToEnd = 5.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Failures {
  std::size_t count = 0;
  std::string first;

  void add(const std::string& message) {
    if (count++ == 0) first = message;
  }
  bool any() const { return count > 0; }
  std::string str() const { return std::to_string(count) + " failure(s), first: " + first; }
};

std::string u128_str(u128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v > 0) {
    s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return s;
}

std::uint64_t uniform(std::mt19937_64& rng, std::uint64_t lo, std::uint64_t hi) {
  return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
}

// ---------------------------------------------------------------------------
// Config read straight from the fixture JSON, for oracles.

json read_json(const fs::path& path) {
  std::ifstream in(path);
  return json::parse(in);
}

struct RawConfig {
  std::vector<std::string> actors;
  std::map<std::string, std::string> role;
  std::vector<std::string> kinds;
  std::map<std::string, std::string> kind_class;
  std::map<std::string, std::vector<std::string>> kind_auth;
  std::vector<std::string> companies;
  std::map<std::string, std::vector<std::string>> company_kinds;
  std::vector<json> events;

  bool kind_allows(const std::string& kind, const std::string& actor) const {
    const auto& v = kind_auth.at(kind);
    return std::find(v.begin(), v.end(), actor) != v.end();
  }
  std::string admin() const {
    for (const auto& a : actors)
      if (role.at(a) == "administrator") return a;
    return {};
  }
  std::string company_for(const std::string& kind) const {
    for (const auto& c : companies) {
      const auto& v = company_kinds.at(c);
      if (std::find(v.begin(), v.end(), kind) != v.end()) return c;
    }
    return {};
  }
};

bool json_has(const json& arr, const std::string& value) {
  for (const auto& v : arr)
    if (v.get<std::string>() == value) return true;
  return false;
}

RawConfig load_raw() {
  fs::path dir = testing::fixture_dir();
  RawConfig raw;
  const json actors = read_json(dir / "actors.json");
  const json kinds = read_json(dir / "kinds.json");
  const json companies = read_json(dir / "companies.json");
  const json events = read_json(dir / "events.json");
  for (const auto& a : actors["items"]) {
    raw.actors.push_back(a["id"]);
    raw.role[a["id"]] = a["role"];
  }
  for (const auto& k : kinds["items"]) {
    raw.kinds.push_back(k["id"]);
    raw.kind_class[k["id"]] = k["kind_class"];
    raw.kind_auth[k["id"]] = k["authorized_actor_ids"].get<std::vector<std::string>>();
  }
  for (const auto& c : companies["items"]) {
    raw.companies.push_back(c["name"]);
    raw.company_kinds[c["name"]] = c["resource_ids"].get<std::vector<std::string>>();
  }
  for (const auto& e : events["items"]) raw.events.push_back(e);
  return raw;
}

struct Ratio {
  u128 num = 1;
  u128 den = 1;
};

// Not reduced; the yield inequality is invariant under scaling.
Ratio raw_yield(const json& ev) {
  if (!ev.contains("max_yield")) return {};
  const json& y = ev["max_yield"];
  if (y.is_number_integer()) return {y.get<std::uint64_t>(), 1};
  std::string s = y.is_string() ? y.get<std::string>() : y.dump();
  if (auto slash = s.find('/'); slash != std::string::npos)
    return {std::stoull(s.substr(0, slash)), std::stoull(s.substr(slash + 1))};
  auto dot = s.find('.');
  if (dot == std::string::npos) return {std::stoull(s), 1};
  std::string frac = s.substr(dot + 1);
  u128 den = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
  return {std::stoull(s.substr(0, dot) + frac), den};
}

const json* raw_event(const RawConfig& raw, const std::string& id) {
  for (const auto& e : raw.events)
    if (e["id"] == id) return &e;
  return nullptr;
}

// First actor allowed by both the event and the kind.
std::string event_actor(const RawConfig& raw, const json& ev, const std::string& kind) {
  for (const auto& a : ev["authorized_actor_ids"])
    if (raw.kind_allows(kind, a)) return a;
  return {};
}

std::string valid_value(const json& param) {
  std::string type = param["type"];
  if (type == "int") return "42";
  if (type == "float") return "1.5";
  if (type == "string") return "value";
  if (type == "text") return "line one\nline two";
  if (type == "enum") return param["enum_options"][0];
  if (type == "link") return "https://example.org/doc";
  if (type == "hashlink") return "https://example.org/report.pdf\x1f" + sha256(std::string_view("report")).hex();
  return sha256(std::string_view("upload")).hex();
}

std::vector<params::NamedValue> valid_values(const json& ev) {
  std::vector<params::NamedValue> out;
  for (const auto& p : ev["params"]) out.push_back({p["name"], valid_value(p)});
  return out;
}

// ---------------------------------------------------------------------------
// 1. Gas

Outcome gas_claim() {
  auto log_oracle = [](std::uint64_t n) { return 21000 + 16 * n + 375 + 375 + 8 * n; };
  auto persistent_oracle = [](std::uint64_t n) { return 21000 + 16 * n + 20000 * ((n + 31) / 32); };

  ledger::GasSchedule schedule;
  Failures f;
  std::ostringstream detail;
  double ratio_sum = 0;
  if (ledger::estimate_gas(schedule, 200, "log") != kGasLog200) f.add("log(200) is not 26550");
  if (ledger::estimate_gas(schedule, 200, "persistent") != kGasPersistent200) f.add("persistent(200) is not 164200");
  for (std::size_t n : kGasSizes) {
    std::uint64_t log = ledger::estimate_gas(schedule, n, "log");
    std::uint64_t persistent = ledger::estimate_gas(schedule, n, "persistent");
    if (log != log_oracle(n)) f.add("log(" + std::to_string(n) + ") = " + std::to_string(log));
    if (persistent != persistent_oracle(n)) f.add("persistent(" + std::to_string(n) + ") = " + std::to_string(persistent));
    if (4 * log > persistent) f.add("ratio above 1/4 at " + std::to_string(n));
    double ratio = static_cast<double>(log) / static_cast<double>(persistent);
    ratio_sum += ratio;
    detail << n << "B:" << std::fixed << std::setprecision(3) << ratio << " ";
  }
  detail << "mean " << std::setprecision(3) << ratio_sum / std::size(kGasSizes);
  return {!f.any(), f.any() ? f.str() : detail.str()};
}

// ---------------------------------------------------------------------------
// 2. Token conservation

struct Lot {
  std::string kind;
  std::uint64_t qty = 0;
};

std::vector<std::uint64_t> partition(std::mt19937_64& rng, std::uint64_t total, std::size_t parts, bool positive) {
  std::vector<std::uint64_t> out;
  std::uint64_t rest = total;
  for (std::size_t i = 0; i + 1 < parts; ++i) {
    std::uint64_t reserve = positive ? parts - 1 - i : 0;
    std::uint64_t lo = positive ? 1 : 0;
    std::uint64_t x = uniform(rng, lo, rest - reserve);
    out.push_back(x);
    rest -= x;
  }
  out.push_back(rest);
  return out;
}

Outcome token_conservation() {
  RawConfig raw = load_raw();
  WorldRig base = testing::make_rig(testing::fixture_descriptors());
  base.apply("farmer1", CreateResource{"olive_grove", raw.company_for("olive_grove"), "fuzz grove", 1'000'000'000'000, ""});
  Address grove = base.last_created().at(0);

  const json& harvest = *raw_event(raw, "harvest");
  struct Step {
    std::string from, event, to;
  };
  const std::vector<Step> transforms = {{"olives", "milling", "oil"}, {"oil", "bottling", "bottled_oil"}};
  const std::vector<std::string> kinds = {"olives", "oil", "bottled_oil"};

  std::mt19937_64 rng(0xC0DE0002);
  Failures f;
  std::size_t steps = 0, rejected = 0;
  for (int seq = 0; seq < kConservationSequences && !f.any(); ++seq) {
    WorldRig rig = base;
    std::map<Address, Lot> live;
    std::map<std::string, std::uint64_t> supply;
    auto lots_of = [&](const std::string& kind) {
      std::vector<Address> v;
      for (const auto& [a, l] : live)
        if (l.kind == kind) v.push_back(a);
      return v;
    };
    auto handler = [&](const std::string& kind) {
      const auto& v = raw.kind_auth.at(kind);
      return v[rng() % v.size()];
    };
    auto take = [&](const std::vector<Address>& inputs) {
      for (const auto& a : inputs) {
        supply[live.at(a).kind] -= live.at(a).qty;
        live.erase(a);
      }
    };
    auto add = [&](const std::vector<Address>& outputs, const std::string& kind,
                   const std::vector<std::uint64_t>& qty) {
      for (std::size_t i = 0; i < outputs.size(); ++i) {
        live[outputs[i]] = Lot{kind, qty[i]};
        supply[kind] += qty[i];
      }
    };

    int length = static_cast<int>(uniform(rng, 1, kConservationMaxLength));
    for (int step = 0; step < length && !f.any(); ++step, ++steps) {
      std::uint64_t pick = uniform(rng, 0, 99);
      std::string actor, label;
      Operation op;
      bool expect_ok = true;
      std::function<void(const std::vector<Address>&)> commit;

      std::vector<std::string> splittable, mergeable, transformable;
      for (const auto& k : kinds) {
        auto v = lots_of(k);
        if (!v.empty()) splittable.push_back(k);
        if (v.size() >= 2) mergeable.push_back(k);
      }
      for (const auto& t : transforms)
        if (!lots_of(t.from).empty()) transformable.push_back(t.from);

      if (pick < 25 || live.empty()) {
        label = "create";
        std::size_t n = uniform(rng, 1, 2);
        std::vector<std::uint64_t> qty;
        std::vector<OutputSpec> outs;
        for (std::size_t i = 0; i < n; ++i) {
          qty.push_back(uniform(rng, 0, 3000));
          outs.push_back(OutputSpec{"olives", qty.back(), "", ""});
        }
        actor = event_actor(raw, harvest, "olive_grove");
        op = Transform{{grove}, "harvest", outs, valid_values(harvest)};
        commit = [&, qty](const std::vector<Address>& c) { add(c, "olives", qty); };
      } else if (pick < 40 && !transformable.empty()) {
        label = "transform";
        std::string from = transformable[rng() % transformable.size()];
        const Step& t = *std::find_if(transforms.begin(), transforms.end(), [&](const Step& s) { return s.from == from; });
        const json& ev = *raw_event(raw, t.event);
        auto pool = lots_of(from);
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(std::min<std::size_t>(pool.size(), uniform(rng, 1, 2)));
        u128 total_in = 0;
        for (const auto& a : pool) total_in += live.at(a).qty;
        Ratio y = raw_yield(ev);
        std::uint64_t bound = static_cast<std::uint64_t>(total_in * y.num / y.den);
        std::uint64_t total_out = uniform(rng, 0, bound);
        if (uniform(rng, 0, 99) < 15) {
          total_out = bound + 1;
          expect_ok = false;
        }
        auto qty = partition(rng, total_out, uniform(rng, 1, 2), false);
        std::vector<OutputSpec> outs;
        for (auto q : qty) outs.push_back(OutputSpec{t.to, q, "", ""});
        actor = event_actor(raw, ev, from);
        op = Transform{pool, t.event, outs, valid_values(ev)};
        commit = [&, pool, qty, to = t.to](const std::vector<Address>& c) {
          take(pool);
          add(c, to, qty);
        };
      } else if (pick < 70 && !splittable.empty()) {
        label = "split";
        std::string kind = splittable[rng() % splittable.size()];
        auto pool = lots_of(kind);
        Address target = pool[rng() % pool.size()];
        std::uint64_t q = live.at(target).qty;
        std::vector<std::uint64_t> parts;
        if (q == 0) {
          parts = {0};
          expect_ok = false;
        } else {
          parts = partition(rng, q, uniform(rng, 1, std::min<std::uint64_t>(4, q)), true);
          std::uint64_t mode = uniform(rng, 0, 99);
          if (mode < 8) {
            parts.back() += 1;
            expect_ok = false;
          } else if (mode < 15) {
            parts.push_back(0);
            expect_ok = false;
          }
        }
        actor = handler(kind);
        op = SplitProduct{target, parts};
        commit = [&, target, parts, kind](const std::vector<Address>& c) {
          take({target});
          add(c, kind, parts);
        };
      } else if (!mergeable.empty()) {
        label = "merge";
        std::string kind = mergeable[rng() % mergeable.size()];
        auto pool = lots_of(kind);
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(std::min<std::size_t>(pool.size(), uniform(rng, 2, 3)));
        std::uint64_t total = 0;
        for (const auto& a : pool) total += live.at(a).qty;
        std::vector<std::uint64_t> parts;
        std::uint64_t mode = uniform(rng, 0, 99);
        if (total == 0 || mode < 10) {
          parts = {total + 1};
          expect_ok = false;
        } else {
          parts = partition(rng, total, uniform(rng, 1, std::min<std::uint64_t>(3, total)), true);
        }
        if (expect_ok && mode < 20) {
          for (const auto& k : kinds) {
            auto other = lots_of(k);
            if (k != kind && !other.empty()) {
              pool.push_back(other.front());
              expect_ok = false;
              break;
            }
          }
        }
        actor = handler(kind);
        op = MergeProducts{pool, parts};
        commit = [&, pool, parts, kind](const std::vector<Address>& c) {
          take(pool);
          add(c, kind, parts);
        };
      } else {
        continue;
      }

      auto err = rig.try_apply(actor, op);
      if (err.has_value() == expect_ok) {
        f.add("sequence " + std::to_string(seq) + " step " + std::to_string(step) + ": " + label +
              (expect_ok ? " rejected (" + std::string(to_string(*err)) + ")" : " accepted"));
        break;
      }
      if (err) {
        ++rejected;
      } else {
        commit(rig.last_created());
      }

      for (const auto& k : kinds) {
        std::uint64_t world_supply = rig.world.token_supply(k);
        std::uint64_t live_sum = 0;
        for (const auto& [a, e] : rig.world.entities())
          if (e.is_product() && e.active() && e.kind_id == k) live_sum += e.quantity;
        if (world_supply != supply[k] || live_sum != supply[k])
          f.add("sequence " + std::to_string(seq) + " step " + std::to_string(step) + " kind " + k + ": model " +
                std::to_string(supply[k]) + ", tokens " + std::to_string(world_supply) + ", live " +
                std::to_string(live_sum));
      }
      for (const auto& [a, l] : live) {
        const Entity* e = rig.world.entity(a);
        if (!e || !e->active() || e->quantity != l.qty) f.add("lot " + a.hex() + " diverged from the model");
      }
    }
  }
  return {!f.any(), f.any() ? f.str()
                            : std::to_string(kConservationSequences) + " sequences, " + std::to_string(steps) +
                                  " steps, " + std::to_string(rejected) + " rejected as expected"};
}

// ---------------------------------------------------------------------------
// 3. Transformation bound

struct LotMaker {
  const RawConfig& raw;
  WorldRig& rig;

  // Event generating `kind`, if any.
  const json* producer_event(const std::string& kind) const {
    for (const auto& e : raw.events)
      if (e["event_class"] == "T" && json_has(e["generated_kind_ids"], kind)) return &e;
    return nullptr;
  }

  void unlock(const json& ev, const Address& target) {
    std::string requester = ev["authorized_actor_ids"][0];
    rig.apply(requester, RequestUnlock{ev["id"], target});
    std::uint64_t id = rig.world.unlock_requests().back().id;
    for (const auto& a : ev["required_unlock_actor_ids"]) rig.apply(a, ApproveUnlock{id});
  }

  // A live entity of `kind` holding exactly `qty`.
  Address make(const std::string& kind, std::uint64_t qty) {
    if (raw.kind_class.at(kind) == "R") {
      std::string actor = raw.kind_auth.at(kind).front();
      rig.apply(actor, CreateResource{kind, raw.company_for(kind), "lot", qty, ""});
      return rig.last_created().at(0);
    }
    const json& ev = *producer_event(kind);
    std::string from = ev["applicable_kind_ids"][0];
    Ratio y = raw_yield(ev);
    u128 need = (static_cast<u128>(qty) * y.den + y.num - 1) / y.num;
    Address input = make(from, static_cast<std::uint64_t>(need));
    if (ev.contains("required_unlock_actor_ids")) unlock(ev, input);
    rig.apply(event_actor(raw, ev, from), Transform{{input}, ev["id"], {OutputSpec{kind, qty, "", ""}}, valid_values(ev)});
    return rig.last_created().at(0);
  }
};

Outcome transformation_bound() {
  RawConfig raw = load_raw();
  WorldRig base = testing::make_rig(testing::fixture_descriptors());
  std::vector<const json*> t_events;
  for (const auto& e : raw.events)
    if (e["event_class"] == "T") t_events.push_back(&e);

  std::mt19937_64 rng(0xC0DE0003);
  Failures f;
  std::size_t accepted = 0, rejected = 0;
  for (int i = 0; i < kYieldCases; ++i) {
    const json& ev = *t_events[static_cast<std::size_t>(i) % t_events.size()];
    std::string kind = ev["applicable_kind_ids"][0];
    bool resource = raw.kind_class.at(kind) == "R";
    WorldRig rig = base;
    LotMaker maker{raw, rig};

    auto random_qty = [&]() -> std::uint64_t {
      switch (uniform(rng, 0, 3)) {
        case 0: return uniform(rng, 0, 10);
        case 1: return uniform(rng, 0, 10'000);
        case 2: return uniform(rng, 0, 1ull << 40);
        default: return resource ? uniform(rng, 0, (1ull << 63) - 1) : uniform(rng, 0, 1ull << 48);
      }
    };
    std::vector<Address> inputs;
    u128 total_in = 0;
    try {
      std::size_t n = uniform(rng, 1, 2);
      for (std::size_t k = 0; k < n; ++k) {
        std::uint64_t q = random_qty();
        inputs.push_back(maker.make(kind, q));
        total_in += q;
      }
      if (ev.contains("required_unlock_actor_ids")) maker.unlock(ev, inputs.front());
    } catch (const Error& e) {
      f.add("case " + std::to_string(i) + " setup failed: " + e.what());
      continue;
    }

    Ratio y = raw_yield(ev);
    u128 bound = total_in * y.num / y.den;
    u128 total_out = 0;
    switch (uniform(rng, 0, 3)) {
      case 0: total_out = bound; break;
      case 1: total_out = bound + 1; break;
      case 2: total_out = bound > 0 ? bound - 1 : 0; break;
      default: total_out = uniform(rng, 0, static_cast<std::uint64_t>(std::min<u128>(bound * 2 + 2, UINT64_MAX))); break;
    }
    std::vector<OutputSpec> outs;
    std::string to = ev["generated_kind_ids"][0];
    if (total_out > UINT64_MAX || uniform(rng, 0, 1) == 0) {
      std::uint64_t hi = static_cast<std::uint64_t>(total_out / 2);
      outs.push_back({to, hi, "", ""});
      outs.push_back({to, static_cast<std::uint64_t>(total_out - hi), "", ""});
    } else {
      outs.push_back({to, static_cast<std::uint64_t>(total_out), "", ""});
    }

    bool oracle = total_out * y.den <= y.num * total_in;
    auto err = rig.try_apply(event_actor(raw, ev, kind), Transform{inputs, ev["id"], outs, valid_values(ev)});
    if (oracle != !err.has_value() || (err && *err != ErrorCode::yield_exceeded)) {
      f.add("case " + std::to_string(i) + " " + ev["id"].get<std::string>() + ": in " + u128_str(total_in) +
            " out " + u128_str(total_out) + " oracle " + (oracle ? "accept" : "reject") + ", engine " +
            (err ? std::string(to_string(*err)) : "accept"));
    }
    (err ? rejected : accepted)++;
  }
  return {!f.any(), f.any() ? f.str()
                            : std::to_string(kYieldCases) + " cases, " + std::to_string(accepted) + " accepted, " +
                                  std::to_string(rejected) + " rejected; all agree with the oracle"};
}

// ---------------------------------------------------------------------------
// 4. Chain integrity

void require_ok(const ledger::Receipt& r, const std::string& what) {
  if (!r.ok) throw Error(r.error.value_or(ErrorCode::invalid_argument), what + ": " + r.message);
}

Outcome chain_integrity() {
  testing::ChainOptions opt;
  opt.allocations = {{"retailer", 1000}};
  auto c = testing::make_chain(testing::fixture_descriptors(), opt);
  auto run = testing::run_olive_oil(*c);
  std::string waybill = sha256(std::string_view("waybill scan")).hex();
  require_ok(c->send("farmer1", RecordEvent{run.og1, "treatment", {{"product", "copper"}, {"dose", "1.5"}, {"method", "spray"}}}), "treatment");
  require_ok(c->send("farmer1", RecordEvent{run.og2, "pruning", {{"notes", "north rows\nthinned"}}}), "pruning");
  require_ok(c->send("sensor1", RecordEvent{run.og1, "soil_reading", {{"moisture", "0.31"}, {"ph", "6.8"}}}), "soil");
  require_ok(c->send("wholesaler", RecordEvent{run.bottles1, "shipment", {{"destination", "Cagliari"}, {"carrier", "Tirrenia"}, {"waybill", waybill}, {"notes", ""}}}), "shipment");
  require_ok(c->send("retailer", RecordEvent{run.bottles1, "sale", {{"store", "https://market.example/cagliari"}, {"price", "9.90"}}}), "sale");
  require_ok(c->send("bottler", Notarize{run.bottles2, sha256(std::string_view("lab report")).hex(), "urn:doc:1", {}}), "notarize");
  require_ok(c->send("lab", Asseverate{run.bottles2, 0}), "asseverate");
  require_ok(c->send("retailer", Pay{c->key("bottler").address(), 250}), "pay");
  c->ledger->seal_block();
  require_ok(c->submit("farmer1", RecordEvent{run.og2, "treatment", {{"product", "sulfur"}, {"dose", "2"}, {"method", "manual"}}}), "treatment 2");
  require_ok(c->submit("sensor1", RecordEvent{run.og2, "soil_reading", {{"moisture", "0.28"}, {"ph", "7.1"}}}), "soil 2");
  c->ledger->seal_block();

  auto blocks = c->ledger->blocks();
  if (blocks.size() != kChainBlocks) return {false, "fixture history has " + std::to_string(blocks.size()) + " blocks"};
  Bytes bytes = ledger::serialize_chain(blocks);
  const ledger::GasSchedule schedule;

  // Block spans from the length prefixes.
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::size_t off = 0;
  while (off + 4 <= bytes.size()) {
    std::size_t len = (std::size_t{bytes[off]} << 24) | (std::size_t{bytes[off + 1]} << 16) |
                      (std::size_t{bytes[off + 2]} << 8) | bytes[off + 3];
    spans.emplace_back(off, off + 4 + len);
    off += 4 + len;
  }
  if (off != bytes.size() || spans.size() != kChainBlocks) return {false, "chain file does not frame into 20 records"};

  auto clean = ledger::verify_chain_bytes(bytes, world_factory(), schedule);
  if (!clean.ok) return {false, "unmutated chain fails: " + clean.str()};

  std::mt19937_64 rng(0xC0DE0004);
  Failures f;
  std::size_t exact = 0, earlier = 0;
  for (int i = 0; i < kMutations; ++i) {
    std::size_t pos = uniform(rng, 0, bytes.size() - 1);
    auto flip = static_cast<std::uint8_t>(uniform(rng, 1, 255));
    std::uint64_t block = 0;
    while (spans[block].second <= pos) ++block;
    Bytes mutated = bytes;
    mutated[pos] ^= flip;
    auto report = ledger::verify_chain_bytes(mutated, world_factory(), schedule);
    if (report.ok) {
      f.add("mutation at byte " + std::to_string(pos) + " (block " + std::to_string(block) + ") undetected");
    } else if (!report.failed_block || *report.failed_block > block) {
      f.add("mutation in block " + std::to_string(block) + " reported at " +
            (report.failed_block ? std::to_string(*report.failed_block) : "none"));
    } else {
      (*report.failed_block == block ? exact : earlier)++;
    }
  }
  return {!f.any(), f.any() ? f.str()
                            : std::to_string(kMutations) + " mutations over " + std::to_string(bytes.size()) +
                                  " bytes detected (" + std::to_string(exact) + " at the block, " +
                                  std::to_string(earlier) + " earlier)"};
}

// ---------------------------------------------------------------------------
// 5. Authorization matrix

struct Populated {
  WorldRig rig;
  std::map<std::string, std::vector<Address>> by_kind;
  std::uint64_t pending_request = 0;
};

Populated populate(const RawConfig& raw) {
  Populated p{testing::make_rig(testing::fixture_descriptors(), 1000), {}, 0};
  WorldRig& r = p.rig;
  auto values = [&](const std::string& ev) { return valid_values(*raw_event(raw, ev)); };
  auto outputs = [](const std::string& kind, std::uint64_t qty, std::size_t n) {
    return std::vector<OutputSpec>(n, OutputSpec{kind, qty, "", ""});
  };
  auto approve_all = [&](const std::string& ev) {
    std::uint64_t id = r.world.unlock_requests().back().id;
    for (const auto& a : (*raw_event(raw, ev))["required_unlock_actor_ids"]) r.apply(a, ApproveUnlock{id});
  };

  r.apply("farmer1", CreateResource{"olive_grove", "Oliveto Rossi", "G1", 6000, ""});
  p.by_kind["olive_grove"] = r.last_created();
  r.apply("miller", CreateResource{"mill_line", "Frantoio Sardo", "L1", 1, ""});
  p.by_kind["mill_line"] = r.last_created();
  r.apply("farmer1", Transform{p.by_kind["olive_grove"], "harvest", outputs("olives", 1000, 3), values("harvest")});
  auto olives = r.last_created();
  r.apply("miller", Transform{{olives[2]}, "milling", outputs("oil", 60, 3), values("milling")});
  auto oil = r.last_created();
  r.apply("bottler", Transform{{oil[2]}, "bottling", outputs("bottled_oil", 20, 4), values("bottling")});
  auto bottled = r.last_created();
  r.apply("bottler", RequestUnlock{"pdo_labeling", bottled[3]});
  approve_all("pdo_labeling");
  r.apply("bottler", Transform{{bottled[3]}, "pdo_labeling", outputs("pdo_bottled_oil", 10, 2), values("pdo_labeling")});
  p.by_kind["pdo_bottled_oil"] = r.last_created();
  r.apply("bottler", RequestUnlock{"pdo_labeling", bottled[0]});
  approve_all("pdo_labeling");
  r.apply("bottler", RequestUnlock{"pdo_labeling", bottled[1]});
  p.pending_request = r.world.unlock_requests().back().id;

  p.by_kind["olives"] = {olives[0], olives[1]};
  p.by_kind["oil"] = {oil[0], oil[1]};
  p.by_kind["bottled_oil"] = {bottled[0], bottled[1], bottled[2]};
  return p;
}

struct MatrixCase {
  std::string label;
  Operation op;
  std::function<bool(const std::string&)> allowed;
};

bool is_authorization_code(ErrorCode code) {
  return code == ErrorCode::unauthorized || code == ErrorCode::role_missing ||
         code == ErrorCode::not_required_approver;
}

Outcome authorization_matrix() {
  RawConfig raw = load_raw();
  Populated p = populate(raw);
  const std::string admin = raw.admin();
  const std::set<std::string> certifier_roles = {"certification_authority", "professional", "analysis_lab"};

  std::vector<MatrixCase> cases;
  auto kind_gate = [&](const std::string& kind) {
    return [&raw, kind](const std::string& a) { return raw.kind_allows(kind, a); };
  };
  cases.push_back({"register_address",
                   RegisterAddress{KeyPair::from_label("fresh").address(), "retailer", {}},
                   [&](const std::string& a) { return a == admin; }});
  cases.push_back({"set_address_enabled", SetAddressEnabled{testing::actor_key("farmer1").address(), false},
                   [&](const std::string& a) { return a == admin; }});
  for (const auto& k : raw.kinds) {
    if (raw.kind_class.at(k) == "R")
      cases.push_back({"create_resource " + k, CreateResource{k, raw.company_for(k), "m", 10, ""}, kind_gate(k)});
  }
  for (const auto& ev : raw.events) {
    std::string id = ev["id"];
    for (const auto& k : ev["applicable_kind_ids"]) {
      const auto& targets = p.by_kind[k.get<std::string>()];
      if (targets.empty()) continue;
      auto gate = [&raw, ev, kind = k.get<std::string>()](const std::string& a) {
        return json_has(ev["authorized_actor_ids"], a) && raw.kind_allows(kind, a);
      };
      if (ev["event_class"] == "D") {
        cases.push_back({"record_event " + id + " on " + k.get<std::string>(),
                         RecordEvent{targets.front(), id, valid_values(ev)}, gate});
      } else {
        cases.push_back({"transform " + id + " on " + k.get<std::string>(),
                         Transform{{targets.front()}, id, {OutputSpec{ev["generated_kind_ids"][0], 0, "", ""}}, valid_values(ev)},
                         gate});
      }
    }
    if (ev.contains("required_unlock_actor_ids")) {
      const auto& targets = p.by_kind[ev["applicable_kind_ids"][0].get<std::string>()];
      cases.push_back({"request_unlock " + id, RequestUnlock{id, targets.back()},
                       [ev](const std::string& a) { return json_has(ev["authorized_actor_ids"], a); }});
      cases.push_back({"approve_unlock " + id, ApproveUnlock{p.pending_request},
                       [ev](const std::string& a) { return json_has(ev["required_unlock_actor_ids"], a); }});
    }
  }
  for (const auto& k : raw.kinds) {
    const auto& targets = p.by_kind[k];
    if (targets.empty()) continue;
    cases.push_back({"notarize " + k, Notarize{targets.front(), sha256(std::string_view("doc")).hex(), "urn:doc", {}}, kind_gate(k)});
    if (raw.kind_class.at(k) != "P") continue;
    std::uint64_t q = p.rig.world.entity(targets.front())->quantity;
    cases.push_back({"split " + k, SplitProduct{targets.front(), {q - 1, 1}}, kind_gate(k)});
    if (targets.size() >= 2) {
      std::uint64_t q2 = p.rig.world.entity(targets[1])->quantity;
      cases.push_back({"merge " + k, MergeProducts{{targets[0], targets[1]}, {q + q2}}, kind_gate(k)});
    }
  }
  cases.push_back({"asseverate", Asseverate{p.by_kind["olives"].front(), 0},
                   [&](const std::string& a) { return certifier_roles.contains(raw.role.at(a)); }});
  cases.push_back({"pay", Pay{testing::actor_key("retailer").address(), 1}, [](const std::string&) { return true; }});

  Failures f;
  std::size_t cells = 0, allowed = 0;
  for (const auto& c : cases) {
    for (const auto& actor : raw.actors) {
      WorldRig rig = p.rig;
      auto err = rig.try_apply(actor, c.op);
      bool expect = c.allowed(actor);
      ++cells;
      if (expect) ++allowed;
      if (expect && err) {
        f.add(actor + " x " + c.label + ": rejected with " + std::string(to_string(*err)));
      } else if (!expect && !err) {
        f.add(actor + " x " + c.label + ": accepted");
      } else if (!expect && !is_authorization_code(*err)) {
        f.add(actor + " x " + c.label + ": rejected with non-authorization code " + std::string(to_string(*err)));
      }
    }
  }
  return {!f.any(), f.any() ? f.str()
                            : std::to_string(raw.actors.size()) + " actors x " + std::to_string(cases.size()) +
                                  " operations = " + std::to_string(cells) + " cells, " + std::to_string(allowed) +
                                  " allowed, all match the config tables"};
}

// ---------------------------------------------------------------------------
// 6. Olive-oil end to end

void collect(const provenance::TraceNode& n, std::set<Address>& leaves, std::map<Address, int>& harvests,
             bool& truncated) {
  truncated = truncated || n.truncated;
  for (const auto& e : n.events)
    if (e.event_kind_id == "harvest") harvests[n.address]++;
  if (n.children.empty()) leaves.insert(n.address);
  for (const auto& c : n.children) collect(c, leaves, harvests, truncated);
}

Outcome olive_oil_end_to_end() {
  auto c = testing::make_chain(testing::fixture_descriptors());
  auto run = testing::run_olive_oil(*c);
  auto nav = provenance::Navigator::from_ledger(*c->ledger);
  Failures f;
  for (const auto& bottle : {run.bottles1, run.bottles2}) {
    auto tree = nav.trace_back(bottle);
    std::set<Address> leaves;
    std::map<Address, int> harvests;
    bool truncated = false;
    collect(tree, leaves, harvests, truncated);
    if (leaves != std::set<Address>{run.og1, run.og2}) f.add("leaves of " + bottle.hex() + " are not {OG1, OG2}");
    if (harvests.size() != 1 || harvests.begin()->first != run.olives || harvests.begin()->second != 1)
      f.add("Harvest is not listed exactly once at the Olives node");
    if (truncated) f.add("trace truncated");
  }
  auto forward = nav.trace_forward(run.og1);
  std::set<Address> reached;
  for (const auto& d : forward.descendants) reached.insert(d.address);
  if (!reached.contains(run.bottles1) || !reached.contains(run.bottles2)) f.add("trace_forward(OG1) misses a bottle");
  auto verify = ledger::verify_chain(c->ledger->blocks(), world_factory(), c->ledger->schedule());
  if (!verify.ok) f.add("chain does not verify: " + verify.str());
  return {!f.any(), f.any() ? f.str()
                            : "leaves {OG1, OG2}, Harvest once at Olives, forward(OG1) reaches " +
                                  std::to_string(reached.size()) + " entities incl. both bottles"};
}

// ---------------------------------------------------------------------------
// 7. Parameter encoding

Outcome parameter_encoding() {
  std::mt19937_64 rng(0xC0DE0007);
  const std::string specials = {'\x1e', '\x1f', '\\'};
  auto random_text = [&](std::size_t max_len) {
    std::string s;
    std::size_t len = uniform(rng, 0, 4) == 0 ? 0 : uniform(rng, 0, max_len);
    for (std::size_t i = 0; i < len; ++i) {
      if (uniform(rng, 0, 3) == 0)
        s.push_back(specials[uniform(rng, 0, specials.size() - 1)]);
      else
        s.push_back(static_cast<char>(uniform(rng, 0, 255)));
    }
    return s;
  };
  Failures f;
  std::size_t with_separators = 0;
  for (int i = 0; i < kEncodingCases; ++i) {
    std::vector<params::Triple> triples;
    std::set<std::string> names;
    std::size_t n = uniform(rng, 0, 6);
    while (triples.size() < n) {
      std::string name = random_text(8);
      if (!names.insert(name).second) continue;
      auto type = config::kAllParamTypes[uniform(rng, 0, std::size(config::kAllParamTypes) - 1)];
      triples.push_back({name, type, random_text(40)});
    }
    try {
      std::string bytes = params::encode_parameters(triples);
      if (bytes.find_first_of(specials) != std::string::npos) ++with_separators;
      auto decoded = params::decode_parameters(bytes);
      if (decoded != triples) f.add("case " + std::to_string(i) + ": round trip differs");
      if (params::encode_parameters(decoded) != bytes) f.add("case " + std::to_string(i) + ": re-encode differs");
      if (params::encode_parameters(triples) != bytes) f.add("case " + std::to_string(i) + ": encoding not stable");
    } catch (const Error& e) {
      f.add("case " + std::to_string(i) + ": " + e.what());
    }
  }
  return {!f.any(), f.any() ? f.str()
                            : std::to_string(kEncodingCases) + " lists round-trip, " + std::to_string(with_separators) +
                                  " contain separator or escape bytes"};
}

// ---------------------------------------------------------------------------
// 8. Generator determinism and coverage

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome generator_determinism() {
  RawConfig raw = load_raw();
  auto produce = [] {
    auto cfg = config::load_config_dir(testing::fixture_dir());
    auto ir = generator::generate_contract_ir(cfg);
    return std::pair{generator::ir_to_json(ir), generator::form_schemas_to_json(generator::generate_form_schemas(cfg))};
  };
  auto first = produce();
  auto second = produce();
  Failures f;
  if (first.first != second.first) f.add("IR differs between runs");
  if (first.second != second.second) f.add("form schemas differ between runs");

  std::multiset<std::string> configured;
  for (const auto& e : raw.events) configured.insert(e["id"].get<std::string>());

  json ir = json::parse(first.first);
  std::multiset<std::string> logged;
  std::set<std::string> signatures;
  for (const auto& le : ir["log_events"]) {
    logged.insert(le["event_kind_id"].get<std::string>());
    std::string sig = le["name"].get<std::string>() + "(";
    for (const auto& field : le["fields"]) sig += field["type"].get<std::string>() + ",";
    signatures.insert(sig + ")");
  }
  if (logged != configured) f.add("log events do not map one-to-one onto event kinds");
  if (signatures.size() != configured.size()) f.add("log event signatures are not distinct");

  std::multiset<std::string> formed;
  for (const auto& s : json::parse(first.second)) formed.insert(s["event_kind_id"].get<std::string>());
  if (formed != configured) f.add("form schemas do not map one-to-one onto event kinds");

  fs::path golden = AGRITRACE_GOLDEN_DIR;
  const std::pair<std::string, const std::string*> files[] = {{"contracts.ir.json", &first.first},
                                                              {"forms.json", &first.second}};
  bool update = std::getenv("AGRITRACE_UPDATE_GOLDEN") != nullptr;
  for (const auto& [name, content] : files) {
    if (update) {
      fs::create_directories(golden);
      std::ofstream(golden / name, std::ios::binary) << *content;
    } else if (!fs::exists(golden / name)) {
      f.add("missing golden " + name);
    } else if (read_file(golden / name) != *content) {
      f.add(name + " differs from the golden snapshot");
    }
  }
  return {!f.any(), f.any() ? f.str()
                            : std::to_string(configured.size()) + " event kinds: " + std::to_string(signatures.size()) +
                                  " log signatures, " + std::to_string(formed.size()) +
                                  " form schemas; byte-identical runs and goldens"};
}

// ---------------------------------------------------------------------------
// 9. Schema/engine agreement

std::string random_hex(std::mt19937_64& rng, std::size_t n) {
  static const char digits[] = "0123456789abcdefABCDEF";
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(digits[uniform(rng, 0, 21)]);
  return s;
}

std::string random_from(std::mt19937_64& rng, const std::vector<std::string>& pool) {
  return pool[uniform(rng, 0, pool.size() - 1)];
}

std::string random_line(std::mt19937_64& rng, bool allow_breaks) {
  static const std::vector<std::string> pieces = {"a", "Z", "0", " ", "\t", "é", "·", "-", "\x1e", "\\", "\x7f", "\x01"};
  std::string s;
  std::size_t n = uniform(rng, 0, 12);
  for (std::size_t i = 0; i < n; ++i) {
    if (allow_breaks && uniform(rng, 0, 9) == 0)
      s += uniform(rng, 0, 1) ? "\n" : "\r";
    else
      s += random_from(rng, pieces);
  }
  return s;
}

std::string random_uri(std::mt19937_64& rng) {
  static const std::vector<std::string> schemes = {"https", "urn", "ipfs", "s3+x", "a.b-c", "", "1http", "ht tp", "é"};
  static const std::vector<std::string> rests = {"//example.org/doc", "isbn:123", "x", "", "a b", "tab\there",
                                                 "del\x7f", "ünï", "q?a=1&b=2", "\x1f"};
  std::string s = random_from(rng, schemes);
  if (uniform(rng, 0, 9) != 0) s += ":";
  return s + random_from(rng, rests);
}

std::string random_value(std::mt19937_64& rng, const json& param) {
  std::string type = param["type"];
  bool junk = uniform(rng, 0, 9) == 0;
  if (junk) return random_line(rng, true);
  if (type == "int") {
    static const std::vector<std::string> edges = {"9223372036854775807", "9223372036854775808", "-9223372036854775808",
                                                   "-9223372036854775809", "00000000000000000000000042", "+0", "-0",
                                                   "", "+", "1.0", "1e3", " 7", "0x10", "٣", "99999999999999999999"};
    if (uniform(rng, 0, 2) == 0) return random_from(rng, edges);
    std::string sign = random_from(rng, {"", "", "-", "+"});
    return sign + std::to_string(uniform(rng, 0, UINT64_MAX) >> uniform(rng, 0, 63));
  }
  if (type == "float") {
    static const std::vector<std::string> edges = {"1e308", "1.7976931348623157e308", "1.8e308", "1e309", "-1e400",
                                                   "1e-400", ".5", "5.", ".", "e5", "1e", "1e+", "inf", "nan", "-0.0",
                                                   "0x1p3", "1,5", " 1", "+.5e+2", "1.2.3", "00.100", ""};
    if (uniform(rng, 0, 2) == 0) return random_from(rng, edges);
    std::ostringstream s;
    s << random_from(rng, {"", "-", "+"}) << uniform(rng, 0, 100000);
    if (uniform(rng, 0, 1)) s << "." << uniform(rng, 0, 9999);
    if (uniform(rng, 0, 3) == 0) s << random_from(rng, {"e", "E"}) << random_from(rng, {"", "-", "+"}) << uniform(rng, 0, 400);
    return s.str();
  }
  if (type == "string") return random_line(rng, uniform(rng, 0, 1) == 0);
  if (type == "text") return random_line(rng, true);
  if (type == "enum") {
    auto options = param["enum_options"].get<std::vector<std::string>>();
    std::string o = random_from(rng, options);
    switch (uniform(rng, 0, 4)) {
      case 0: return o + " ";
      case 1: o[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(o[0]))); return o;
      case 2: return "";
      default: return o;
    }
  }
  if (type == "link") return random_uri(rng);
  if (type == "hashlink") {
    std::string uri = uniform(rng, 0, 1) ? "https://example.org/r" : random_uri(rng);
    std::string sep = uniform(rng, 0, 9) == 0 ? "" : "\x1f";
    return uri + sep + random_hex(rng, uniform(rng, 0, 4) == 0 ? uniform(rng, 62, 66) : 64);
  }
  // upload, hashupload
  std::string h = random_hex(rng, uniform(rng, 0, 3) == 0 ? uniform(rng, 0, 66) : 64);
  if (!h.empty() && uniform(rng, 0, 9) == 0) h[uniform(rng, 0, h.size() - 1)] = 'g';
  return h;
}

Outcome schema_engine_agreement() {
  RawConfig raw = load_raw();
  Populated p = populate(raw);
  auto schemas = json::parse(generator::form_schemas_to_json(
      generator::generate_form_schemas(config::validate_config(testing::fixture_descriptors()))));

  std::mt19937_64 rng(0xC0DE0009);
  Failures f;
  std::size_t accepted = 0, rejected = 0, never_accepted = 0;
  for (const auto& ev : raw.events) {
    std::string id = ev["id"];
    const json* schema = nullptr;
    for (const auto& s : schemas)
      if (s["event_kind_id"] == id) schema = &s;
    if (!schema) {
      f.add("no form schema for " + id);
      continue;
    }
    testing::FormValidator form(*schema);
    std::string kind = ev["applicable_kind_ids"][0];
    std::string actor = event_actor(raw, ev, kind);
    Address target = p.by_kind[kind].front();
    std::size_t ok_here = 0;

    for (int i = 0; i < kValueSetsPerEvent; ++i) {
      std::map<std::string, std::string> values;
      std::vector<params::NamedValue> named;
      for (const auto& param : ev["params"]) {
        std::string v = uniform(rng, 0, 2) == 0 ? valid_value(param) : random_value(rng, param);
        values[param["name"]] = v;
        named.push_back({param["name"], v});
      }
      bool form_ok = form.accepts(values);
      Operation op;
      if (ev["event_class"] == "D")
        op = RecordEvent{target, id, named};
      else
        op = Transform{{target}, id, {OutputSpec{ev["generated_kind_ids"][0], 0, "", ""}}, named};
      WorldRig rig = p.rig;
      auto err = rig.try_apply(actor, op);
      bool engine_ok = !err.has_value();
      if (form_ok != engine_ok || (err && *err != ErrorCode::type_mismatch)) {
        std::string shown;
        for (const auto& [k, v] : values) shown += k + "=" + json(v).dump() + " ";
        f.add(id + ": form " + (form_ok ? "accepts" : "rejects") + ", engine " +
              (err ? std::string(to_string(*err)) : "accepts") + " for " + shown);
      }
      if (engine_ok) ++accepted, ++ok_here;
      else ++rejected;
    }
    if (ok_here == 0) ++never_accepted;
  }
  if (never_accepted > 0) f.add(std::to_string(never_accepted) + " event kind(s) never accepted a value set");
  if (accepted == 0 || rejected == 0) f.add("value sets never exercised both outcomes");
  return {!f.any(), f.any() ? f.str()
                            : std::to_string(raw.events.size()) + " event kinds x " +
                                  std::to_string(kValueSetsPerEvent) + " value sets: " + std::to_string(accepted) +
                                  " accepted, " + std::to_string(rejected) + " rejected, form and engine agree"};
}

// ---------------------------------------------------------------------------
// 10. Docstore

Outcome docstore_integrity() {
  fs::path root = fs::temp_directory_path() / ("agritrace-accept-docs-" + std::to_string(::getpid()));
  fs::remove_all(root);
  Failures f;
  std::mt19937_64 rng(0xC0DE0010);
  {
    docstore::DocStore store(root);
    // sha256("hello"), computed outside this code base.
    auto hello = store.put(as_bytes("hello"), "text/plain");
    if (hello.hex() != "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824")
      f.add("content id of \"hello\" is " + hello.hex());

    std::size_t stored = 0, detected = 0;
    for (int i = 0; i < 40; ++i) {
      Bytes content(uniform(rng, 1, 1 << 16));
      for (auto& b : content) b = static_cast<std::uint8_t>(rng());
      Digest id = store.put(content, "application/octet-stream");
      if (id != sha256(content)) f.add("content id is not the content hash");
      if (store.get(id) != content) f.add("round trip differs");
      ++stored;

      fs::path object = store.object_path(id);
      std::fstream file(object, std::ios::in | std::ios::out | std::ios::binary);
      auto pos = static_cast<std::streamoff>(uniform(rng, 0, content.size() - 1));
      file.seekg(pos);
      char byte = 0;
      file.read(&byte, 1);
      byte = static_cast<char>(byte ^ static_cast<char>(uniform(rng, 1, 255)));
      file.seekp(pos);
      file.write(&byte, 1);
      file.close();
      try {
        store.get(id);
        f.add("flipped byte not detected");
      } catch (const Error& e) {
        if (e.code() == ErrorCode::integrity_error) ++detected;
        else f.add(std::string("unexpected error ") + e.what());
      }
    }
    try {
      store.get(sha256(std::string_view("never stored")));
      f.add("unknown id returned content");
    } catch (const Error& e) {
      if (e.code() != ErrorCode::not_found) f.add("unknown id gives " + std::string(to_string(e.code())));
    }
    fs::remove_all(root);
    if (!f.any())
      return {true, std::to_string(stored) + " objects round-trip; " + std::to_string(detected) +
                        " single-byte flips raise integrity_error"};
  }
  return {false, f.str()};
}

// Not a criterion: gas measured on the ledger for the same D-event payload
// under both storage modes.
std::string measured_gas_note() {
  std::uint64_t used[2] = {0, 0};
  const ledger::StorageMode modes[2] = {ledger::StorageMode::log, ledger::StorageMode::persistent};
  std::size_t payload = 0;
  for (int m = 0; m < 2; ++m) {
    testing::ChainOptions opt;
    opt.payload_storage = modes[m];
    auto c = testing::make_chain(testing::fixture_descriptors(), opt);
    Address grove = testing::single_created(c->send("farmer1", CreateResource{"olive_grove", "Oliveto Rossi", "G", 10, ""}));
    std::vector<params::NamedValue> values = {{"notes", std::string(200, 'n')}};
    auto r = c->send("farmer1", RecordEvent{grove, "pruning", values});
    used[m] = r.gas_used;
    for (const auto& l : r.logs) payload = std::max(payload, l.payload.size());
  }
  std::ostringstream s;
  s << "record_event with a " << payload << "-byte payload: log " << used[0] << " gas, persistent " << used[1]
    << " gas, ratio " << std::fixed << std::setprecision(3) << static_cast<double>(used[0]) / used[1];
  return s.str();
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    double budget_s;
  };
  const Criterion criteria[] = {
      {1, "gas log/persistent ratio", gas_claim, kBudgetGas},
      {2, "token conservation", token_conservation, kBudgetConservation},
      {3, "transformation bound", transformation_bound, 0},
      {4, "chain integrity", chain_integrity, kBudgetIntegrity},
      {5, "authorization matrix", authorization_matrix, 0},
      {6, "olive-oil end to end", olive_oil_end_to_end, kBudgetEndToEnd},
      {7, "parameter encoding", parameter_encoding, 0},
      {8, "generator determinism", generator_determinism, 0},
      {9, "schema/engine agreement", schema_engine_agreement, 0},
      {10, "docstore integrity", docstore_integrity, 0},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += " (over the " + std::to_string(static_cast<int>(c.budget_s)) + " s budget)";
    }
    if (!o.pass) ++failed;
    std::printf("criterion %2d %s  %-26s %7.2fs  %s\n", c.id, o.pass ? "PASS" : "FAIL", c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  try {
    std::printf("info          measured gas: %s\n", measured_gas_note().c_str());
  } catch (const std::exception& e) {
    std::printf("info          measured gas unavailable: %s\n", e.what());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
