#pragma once

// Supply-chain descriptor model. A chain is described by five JSON files
// (actors, companies, kinds, events, activities), each wrapped in the same
// envelope:
//
//   {"kind": "<descriptor kind>", "version": <int>, "items": [ ... ]}
//
// parse_descriptor() turns one file into a typed Descriptor and rejects
// shape errors. validate_config() cross-checks the five descriptors and
// reports every violation at once.

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "agritrace/error.hpp"

namespace agritrace::config {

enum class Role {
  administrator,
  producer,
  supplier,
  transformer,
  wholesaler,
  retailer,
  certification_authority,
  professional,
  analysis_lab,
  warehouse,
  device,
};

enum class KindClass { resource, product };
enum class EventClass { documentation, transformation };

enum class ParamType { int_, float_, string, text, enum_, link, hashlink, upload, hashupload };

std::string_view to_string(Role role);
std::string_view to_string(KindClass c);  // "R" / "P"
std::string_view to_string(EventClass c);  // "D" / "T"
std::string_view to_string(ParamType t);
std::optional<Role> parse_role(std::string_view text);
std::optional<ParamType> parse_param_type(std::string_view text);

inline constexpr ParamType kAllParamTypes[] = {
    ParamType::int_,     ParamType::float_, ParamType::string,
    ParamType::text,     ParamType::enum_,  ParamType::link,
    ParamType::hashlink, ParamType::upload, ParamType::hashupload,
};

// Non-negative rational kept in lowest terms. Yield bounds are compared with
// exact integer arithmetic.
struct Rational {
  std::uint64_t num = 1;
  std::uint64_t den = 1;

  static Rational make(std::uint64_t num, std::uint64_t den);
  // Accepts "3", "0.2", "1/5".
  static std::optional<Rational> parse(std::string_view text);
  std::string str() const;

  bool operator==(const Rational&) const = default;
};

struct ActorDef {
  std::string id;
  std::string name;
  Role role = Role::producer;

  bool operator==(const ActorDef&) const = default;
};

struct CompanyDef {
  std::string name;
  std::vector<std::string> resource_ids;
  std::vector<std::string> authorized_actor_ids;

  bool operator==(const CompanyDef&) const = default;
};

struct KindDef {
  std::string id;
  KindClass kind_class = KindClass::product;
  std::string name;
  std::vector<std::string> authorized_actor_ids;
  std::optional<std::string> description;
  std::optional<std::string> default_unit;

  bool operator==(const KindDef&) const = default;
};

struct ParamSpec {
  std::string name;
  ParamType type = ParamType::string;
  std::vector<std::string> enum_options;

  bool operator==(const ParamSpec&) const = default;
};

struct EventKindDef {
  std::string id;
  std::string name;
  std::vector<std::string> applicable_kind_ids;
  std::vector<std::string> authorized_actor_ids;
  EventClass event_class = EventClass::documentation;
  std::vector<std::string> generated_kind_ids;
  std::vector<ParamSpec> param_specs;
  // Output base units per input base unit. Absent means 1.
  std::optional<Rational> max_yield;
  std::vector<std::string> required_unlock_actor_ids;

  Rational yield() const { return max_yield.value_or(Rational{}); }
  bool operator==(const EventKindDef&) const = default;
};

struct ActivityDef {
  std::optional<std::string> company_name;
  std::optional<std::string> actor_id;
  std::vector<std::string> visible_event_kind_ids;

  bool operator==(const ActivityDef&) const = default;
};

enum class DescriptorKind { actors, companies, kinds, events, activities };

std::string_view to_string(DescriptorKind kind);
std::optional<DescriptorKind> parse_descriptor_kind(std::string_view text);

inline constexpr DescriptorKind kAllDescriptorKinds[] = {
    DescriptorKind::actors, DescriptorKind::companies, DescriptorKind::kinds,
    DescriptorKind::events, DescriptorKind::activities,
};

using DescriptorItems = std::variant<std::vector<ActorDef>, std::vector<CompanyDef>,
                                     std::vector<KindDef>, std::vector<EventKindDef>,
                                     std::vector<ActivityDef>>;

struct Descriptor {
  DescriptorKind kind = DescriptorKind::actors;
  std::int64_t version = 1;
  DescriptorItems items;

  std::size_t size() const;
  bool operator==(const Descriptor&) const = default;
};

// Throws Error{parse_error} (message carries line and column for syntax
// errors, item path for shape errors) or Error{unsupported_descriptor}.
Descriptor parse_descriptor(std::string_view content);

// Canonical form: fixed field order, optional fields omitted when empty,
// two-space indent, trailing newline.
std::string serialize_descriptor(const Descriptor& descriptor);

struct DescriptorSet {
  std::vector<ActorDef> actors;
  std::vector<CompanyDef> companies;
  std::vector<KindDef> kinds;
  std::vector<EventKindDef> event_kinds;
  std::vector<ActivityDef> activities;
  std::int64_t version = 1;

  bool operator==(const DescriptorSet&) const = default;
};

struct Violation {
  DescriptorKind file = DescriptorKind::actors;
  std::size_t item_index = 0;
  std::string item_id;
  std::string message;

  std::string str() const;
  bool operator==(const Violation&) const = default;
};

class ConfigValidationError : public Error {
 public:
  explicit ConfigValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

class SupplyChainConfig {
 public:
  SupplyChainConfig() = default;

  const std::vector<ActorDef>& actors() const { return set_.actors; }
  const std::vector<CompanyDef>& companies() const { return set_.companies; }
  const std::vector<KindDef>& kinds() const { return set_.kinds; }
  const std::vector<EventKindDef>& event_kinds() const { return set_.event_kinds; }
  const std::vector<ActivityDef>& activities() const { return set_.activities; }
  std::int64_t version() const { return set_.version; }
  const DescriptorSet& descriptors() const { return set_; }

  const ActorDef* find_actor(std::string_view id) const;
  const CompanyDef* find_company(std::string_view name) const;
  const KindDef* find_kind(std::string_view id) const;
  const EventKindDef* find_event_kind(std::string_view id) const;

  bool operator==(const SupplyChainConfig& other) const { return set_ == other.set_; }

 private:
  friend SupplyChainConfig validate_config(DescriptorSet set);

  DescriptorSet set_;
  std::map<std::string, std::size_t, std::less<>> actor_index_;
  std::map<std::string, std::size_t, std::less<>> company_index_;
  std::map<std::string, std::size_t, std::less<>> kind_index_;
  std::map<std::string, std::size_t, std::less<>> event_index_;
};

// Ordered by (file, item index). Empty means valid.
std::vector<Violation> check_config(const DescriptorSet& set);

// Throws ConfigValidationError listing every violation.
SupplyChainConfig validate_config(DescriptorSet set);

// Assembles a DescriptorSet from five parsed descriptors in any order.
// Throws Error{validation_failed} when a kind is missing or repeated.
DescriptorSet assemble(std::vector<Descriptor> descriptors);

// Reads actors.json, companies.json, kinds.json, events.json and
// activities.json from a directory.
DescriptorSet read_descriptor_dir(const std::filesystem::path& dir);
SupplyChainConfig load_config_dir(const std::filesystem::path& dir);
void write_descriptor_dir(const DescriptorSet& set, const std::filesystem::path& dir);

std::string descriptor_file_name(DescriptorKind kind);

// The whole config as one canonical JSON document (embedded in the genesis
// block and served at /api/v1/config).
std::string serialize_config(const DescriptorSet& set);
DescriptorSet parse_config_document(std::string_view content);

}  // namespace agritrace::config
