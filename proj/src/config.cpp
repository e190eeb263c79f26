#include "agritrace/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

namespace agritrace::config {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

constexpr std::pair<Role, std::string_view> kRoleNames[] = {
    {Role::administrator, "administrator"},
    {Role::producer, "producer"},
    {Role::supplier, "supplier"},
    {Role::transformer, "transformer"},
    {Role::wholesaler, "wholesaler"},
    {Role::retailer, "retailer"},
    {Role::certification_authority, "certification_authority"},
    {Role::professional, "professional"},
    {Role::analysis_lab, "analysis_lab"},
    {Role::warehouse, "warehouse"},
    {Role::device, "device"},
};

constexpr std::pair<ParamType, std::string_view> kParamTypeNames[] = {
    {ParamType::int_, "int"},         {ParamType::float_, "float"},
    {ParamType::string, "string"},    {ParamType::text, "text"},
    {ParamType::enum_, "enum"},       {ParamType::link, "link"},
    {ParamType::hashlink, "hashlink"}, {ParamType::upload, "upload"},
    {ParamType::hashupload, "hashupload"},
};

constexpr std::pair<DescriptorKind, std::string_view> kDescriptorNames[] = {
    {DescriptorKind::actors, "actors"},     {DescriptorKind::companies, "companies"},
    {DescriptorKind::kinds, "kinds"},       {DescriptorKind::events, "events"},
    {DescriptorKind::activities, "activities"},
};

[[noreturn]] void shape_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::parse_error, path + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) shape_error(path, std::string("missing field \"") + key + "\"");
  return *it;
}

std::string get_string(const json& obj, const char* key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_string()) shape_error(path + "." + key, "expected string");
  return v.get<std::string>();
}

std::optional<std::string> get_optional_string(const json& obj, const char* key,
                                               const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) shape_error(path + "." + key, "expected string");
  return it->get<std::string>();
}

std::vector<std::string> get_string_list(const json& obj, const char* key, const std::string& path,
                                         bool required) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) shape_error(path, std::string("missing field \"") + key + "\"");
    return {};
  }
  if (!it->is_array()) shape_error(path + "." + key, "expected array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < it->size(); ++i) {
    const json& e = (*it)[i];
    if (!e.is_string())
      shape_error(path + "." + key + "[" + std::to_string(i) + "]", "expected string");
    out.push_back(e.get<std::string>());
  }
  return out;
}

void require_object(const json& v, const std::string& path) {
  if (!v.is_object()) shape_error(path, "expected object");
}

ActorDef parse_actor(const json& v, const std::string& path) {
  require_object(v, path);
  ActorDef a;
  a.id = get_string(v, "id", path);
  a.name = get_string(v, "name", path);
  std::string role = get_string(v, "role", path);
  auto r = parse_role(role);
  if (!r) shape_error(path + ".role", "unknown role \"" + role + "\"");
  a.role = *r;
  return a;
}

CompanyDef parse_company(const json& v, const std::string& path) {
  require_object(v, path);
  CompanyDef c;
  c.name = get_string(v, "name", path);
  c.resource_ids = get_string_list(v, "resource_ids", path, true);
  c.authorized_actor_ids = get_string_list(v, "authorized_actor_ids", path, true);
  return c;
}

KindDef parse_kind(const json& v, const std::string& path) {
  require_object(v, path);
  KindDef k;
  k.id = get_string(v, "id", path);
  std::string cls = get_string(v, "kind_class", path);
  if (cls == "R")
    k.kind_class = KindClass::resource;
  else if (cls == "P")
    k.kind_class = KindClass::product;
  else
    shape_error(path + ".kind_class", "expected \"R\" or \"P\", got \"" + cls + "\"");
  k.name = get_string(v, "name", path);
  k.authorized_actor_ids = get_string_list(v, "authorized_actor_ids", path, true);
  k.description = get_optional_string(v, "description", path);
  k.default_unit = get_optional_string(v, "default_unit", path);
  return k;
}

ParamSpec parse_param(const json& v, const std::string& path) {
  require_object(v, path);
  ParamSpec p;
  p.name = get_string(v, "name", path);
  std::string type = get_string(v, "type", path);
  auto t = parse_param_type(type);
  if (!t) shape_error(path + ".type", "unknown parameter type \"" + type + "\"");
  p.type = *t;
  p.enum_options = get_string_list(v, "enum_options", path, false);
  return p;
}

Rational parse_yield(const json& v, const std::string& path) {
  std::optional<Rational> r;
  if (v.is_number_unsigned() || v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) shape_error(path, "max_yield must be non-negative");
    r = Rational::make(v.get<std::uint64_t>(), 1);
  } else if (v.is_number_float()) {
    // Shortest round-trip text of the double, then exact decimal parse.
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v.get<double>());
    r = Rational::parse(std::string_view(buf.data(), static_cast<std::size_t>(res.ptr - buf.data())));
  } else if (v.is_string()) {
    r = Rational::parse(v.get<std::string>());
  }
  if (!r) shape_error(path, "max_yield must be a non-negative number or \"n/d\"");
  return *r;
}

EventKindDef parse_event(const json& v, const std::string& path) {
  require_object(v, path);
  EventKindDef e;
  e.id = get_string(v, "id", path);
  e.name = get_string(v, "name", path);
  e.applicable_kind_ids = get_string_list(v, "applicable_kind_ids", path, true);
  e.authorized_actor_ids = get_string_list(v, "authorized_actor_ids", path, true);
  std::string cls = get_string(v, "event_class", path);
  if (cls == "D")
    e.event_class = EventClass::documentation;
  else if (cls == "T")
    e.event_class = EventClass::transformation;
  else
    shape_error(path + ".event_class", "expected \"D\" or \"T\", got \"" + cls + "\"");
  e.generated_kind_ids = get_string_list(v, "generated_kind_ids", path, false);
  if (auto it = v.find("params"); it != v.end()) {
    if (!it->is_array()) shape_error(path + ".params", "expected array");
    for (std::size_t i = 0; i < it->size(); ++i)
      e.param_specs.push_back(parse_param((*it)[i], path + ".params[" + std::to_string(i) + "]"));
  }
  if (auto it = v.find("max_yield"); it != v.end() && !it->is_null())
    e.max_yield = parse_yield(*it, path + ".max_yield");
  e.required_unlock_actor_ids = get_string_list(v, "required_unlock_actor_ids", path, false);
  return e;
}

ActivityDef parse_activity(const json& v, const std::string& path) {
  require_object(v, path);
  ActivityDef a;
  a.company_name = get_optional_string(v, "company_name", path);
  a.actor_id = get_optional_string(v, "actor_id", path);
  a.visible_event_kind_ids = get_string_list(v, "visible_event_kind_ids", path, true);
  return a;
}

ojson string_list(const std::vector<std::string>& v) {
  ojson arr = ojson::array();
  for (const auto& s : v) arr.push_back(s);
  return arr;
}

ojson to_json(const ActorDef& a) {
  ojson o;
  o["id"] = a.id;
  o["name"] = a.name;
  o["role"] = to_string(a.role);
  return o;
}

ojson to_json(const CompanyDef& c) {
  ojson o;
  o["name"] = c.name;
  o["resource_ids"] = string_list(c.resource_ids);
  o["authorized_actor_ids"] = string_list(c.authorized_actor_ids);
  return o;
}

ojson to_json(const KindDef& k) {
  ojson o;
  o["id"] = k.id;
  o["kind_class"] = to_string(k.kind_class);
  o["name"] = k.name;
  o["authorized_actor_ids"] = string_list(k.authorized_actor_ids);
  if (k.description) o["description"] = *k.description;
  if (k.default_unit) o["default_unit"] = *k.default_unit;
  return o;
}

ojson to_json(const ParamSpec& p) {
  ojson o;
  o["name"] = p.name;
  o["type"] = to_string(p.type);
  if (!p.enum_options.empty()) o["enum_options"] = string_list(p.enum_options);
  return o;
}

ojson to_json(const EventKindDef& e) {
  ojson o;
  o["id"] = e.id;
  o["name"] = e.name;
  o["applicable_kind_ids"] = string_list(e.applicable_kind_ids);
  o["authorized_actor_ids"] = string_list(e.authorized_actor_ids);
  o["event_class"] = to_string(e.event_class);
  if (!e.generated_kind_ids.empty()) o["generated_kind_ids"] = string_list(e.generated_kind_ids);
  ojson params = ojson::array();
  for (const auto& p : e.param_specs) params.push_back(to_json(p));
  o["params"] = std::move(params);
  if (e.max_yield) {
    if (e.max_yield->den == 1)
      o["max_yield"] = e.max_yield->num;
    else
      o["max_yield"] = e.max_yield->str();
  }
  if (!e.required_unlock_actor_ids.empty())
    o["required_unlock_actor_ids"] = string_list(e.required_unlock_actor_ids);
  return o;
}

ojson to_json(const ActivityDef& a) {
  ojson o;
  if (a.company_name) o["company_name"] = *a.company_name;
  if (a.actor_id) o["actor_id"] = *a.actor_id;
  o["visible_event_kind_ids"] = string_list(a.visible_event_kind_ids);
  return o;
}

template <typename T>
ojson items_json(const std::vector<T>& items) {
  ojson arr = ojson::array();
  for (const auto& i : items) arr.push_back(to_json(i));
  return arr;
}

template <typename T, typename F>
std::vector<T> parse_items(const json& items, std::string_view kind, F&& parse_one) {
  std::vector<T> out;
  for (std::size_t i = 0; i < items.size(); ++i)
    out.push_back(parse_one(items[i], std::string(kind) + ".items[" + std::to_string(i) + "]"));
  return out;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view content, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < content.size() && i + 1 < byte; ++i) {
    if (content[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

json parse_json_text(std::string_view content) {
  try {
    return json::parse(content.begin(), content.end());
  } catch (const json::parse_error& e) {
    auto [line, col] = line_column(content, e.byte);
    throw Error(ErrorCode::parse_error, "line " + std::to_string(line) + ", column " +
                                            std::to_string(col) + ": malformed JSON");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string_view to_string(Role role) {
  for (auto [r, name] : kRoleNames)
    if (r == role) return name;
  return "?";
}

std::string_view to_string(KindClass c) { return c == KindClass::resource ? "R" : "P"; }
std::string_view to_string(EventClass c) { return c == EventClass::documentation ? "D" : "T"; }

std::string_view to_string(ParamType t) {
  for (auto [p, name] : kParamTypeNames)
    if (p == t) return name;
  return "?";
}

std::optional<Role> parse_role(std::string_view text) {
  for (auto [r, name] : kRoleNames)
    if (name == text) return r;
  return std::nullopt;
}

std::optional<ParamType> parse_param_type(std::string_view text) {
  for (auto [p, name] : kParamTypeNames)
    if (name == text) return p;
  return std::nullopt;
}

std::string_view to_string(DescriptorKind kind) {
  for (auto [k, name] : kDescriptorNames)
    if (k == kind) return name;
  return "?";
}

std::optional<DescriptorKind> parse_descriptor_kind(std::string_view text) {
  for (auto [k, name] : kDescriptorNames)
    if (name == text) return k;
  return std::nullopt;
}

Rational Rational::make(std::uint64_t num, std::uint64_t den) {
  if (den == 0) throw Error(ErrorCode::invalid_argument, "zero denominator");
  std::uint64_t g = std::gcd(num, den);
  if (g == 0) g = 1;
  return Rational{num / g, den / g};
}

std::optional<Rational> Rational::parse(std::string_view text) {
  auto parse_u64 = [](std::string_view s) -> std::optional<std::uint64_t> {
    if (s.empty()) return std::nullopt;
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
  };
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    auto n = parse_u64(text.substr(0, slash));
    auto d = parse_u64(text.substr(slash + 1));
    if (!n || !d || *d == 0) return std::nullopt;
    return make(*n, *d);
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = text.substr(dot + 1);
    if (frac.empty() || frac.size() > 18) return std::nullopt;
    auto w = whole.empty() ? std::optional<std::uint64_t>(0) : parse_u64(whole);
    auto f = parse_u64(frac);
    if (!w || !f) return std::nullopt;
    std::uint64_t scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    if (*w > (UINT64_MAX - *f) / scale) return std::nullopt;
    return make(*w * scale + *f, scale);
  }
  auto n = parse_u64(text);
  if (!n) return std::nullopt;
  return make(*n, 1);
}

std::string Rational::str() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

std::size_t Descriptor::size() const {
  return std::visit([](const auto& v) { return v.size(); }, items);
}

Descriptor parse_descriptor(std::string_view content) {
  json doc = parse_json_text(content);
  if (!doc.is_object()) shape_error("$", "descriptor must be a JSON object");
  std::string kind_text = get_string(doc, "kind", "$");
  auto kind = parse_descriptor_kind(kind_text);
  if (!kind)
    throw Error(ErrorCode::unsupported_descriptor,
                "unsupported descriptor kind \"" + kind_text + "\"");
  const json& version = require(doc, "version", "$");
  if (!version.is_number_integer()) shape_error("$.version", "expected integer");
  const json& items = require(doc, "items", "$");
  if (!items.is_array()) shape_error("$.items", "expected array");

  Descriptor d;
  d.kind = *kind;
  d.version = version.get<std::int64_t>();
  switch (*kind) {
    case DescriptorKind::actors:
      d.items = parse_items<ActorDef>(items, kind_text, parse_actor);
      break;
    case DescriptorKind::companies:
      d.items = parse_items<CompanyDef>(items, kind_text, parse_company);
      break;
    case DescriptorKind::kinds:
      d.items = parse_items<KindDef>(items, kind_text, parse_kind);
      break;
    case DescriptorKind::events:
      d.items = parse_items<EventKindDef>(items, kind_text, parse_event);
      break;
    case DescriptorKind::activities:
      d.items = parse_items<ActivityDef>(items, kind_text, parse_activity);
      break;
  }
  return d;
}

std::string serialize_descriptor(const Descriptor& descriptor) {
  ojson doc;
  doc["kind"] = to_string(descriptor.kind);
  doc["version"] = descriptor.version;
  doc["items"] = std::visit([](const auto& v) { return items_json(v); }, descriptor.items);
  return doc.dump(2) + "\n";
}

std::string Violation::str() const {
  std::string out = std::string(to_string(file)) + "[" + std::to_string(item_index) + "]";
  if (!item_id.empty()) out += " (" + item_id + ")";
  return out + ": " + message;
}

namespace {

std::string join_messages(const std::vector<Violation>& violations) {
  std::string msg = std::to_string(violations.size()) + " configuration violation(s)";
  for (const auto& v : violations) msg += "\n  " + v.str();
  return msg;
}

class Checker {
 public:
  explicit Checker(const DescriptorSet& set) : set_(set) {
    for (const auto& a : set.actors) actors_.insert(a.id);
    for (const auto& k : set.kinds) kinds_.insert(k.id);
    for (const auto& e : set.event_kinds) events_.insert(e.id);
    for (const auto& c : set.companies) companies_.insert(c.name);
  }

  std::vector<Violation> run() {
    check_actors();
    check_companies();
    check_kinds();
    check_events();
    check_activities();
    return std::move(out_);
  }

 private:
  void add(DescriptorKind file, std::size_t index, const std::string& id, std::string message) {
    out_.push_back(Violation{file, index, id, std::move(message)});
  }

  void check_refs(DescriptorKind file, std::size_t index, const std::string& id,
                  const std::vector<std::string>& refs, const std::set<std::string>& known,
                  std::string_view what) {
    for (const auto& r : refs)
      if (!known.contains(r))
        add(file, index, id, "unknown " + std::string(what) + " \"" + r + "\"");
  }

  void check_actors() {
    std::set<std::string> seen;
    bool has_admin = false;
    for (std::size_t i = 0; i < set_.actors.size(); ++i) {
      const auto& a = set_.actors[i];
      if (a.id.empty()) add(DescriptorKind::actors, i, a.id, "empty actor id");
      if (!seen.insert(a.id).second)
        add(DescriptorKind::actors, i, a.id, "duplicate actor id \"" + a.id + "\"");
      if (a.role == Role::administrator) has_admin = true;
    }
    if (!has_admin) add(DescriptorKind::actors, 0, "", "no actor with role administrator");
  }

  void check_companies() {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < set_.companies.size(); ++i) {
      const auto& c = set_.companies[i];
      if (!seen.insert(c.name).second)
        add(DescriptorKind::companies, i, c.name, "duplicate company name \"" + c.name + "\"");
      if (c.resource_ids.empty()) add(DescriptorKind::companies, i, c.name, "empty resource_ids");
      if (c.authorized_actor_ids.empty())
        add(DescriptorKind::companies, i, c.name, "empty authorized_actor_ids");
      check_refs(DescriptorKind::companies, i, c.name, c.resource_ids, kinds_, "kind");
      check_refs(DescriptorKind::companies, i, c.name, c.authorized_actor_ids, actors_, "actor");
    }
  }

  void check_kinds() {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < set_.kinds.size(); ++i) {
      const auto& k = set_.kinds[i];
      if (k.id.empty()) add(DescriptorKind::kinds, i, k.id, "empty kind id");
      if (!seen.insert(k.id).second)
        add(DescriptorKind::kinds, i, k.id, "duplicate kind id \"" + k.id + "\"");
      check_refs(DescriptorKind::kinds, i, k.id, k.authorized_actor_ids, actors_, "actor");
    }
  }

  const KindDef* kind(std::string_view id) const {
    for (const auto& k : set_.kinds)
      if (k.id == id) return &k;
    return nullptr;
  }

  void check_events() {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < set_.event_kinds.size(); ++i) {
      const auto& e = set_.event_kinds[i];
      const auto file = DescriptorKind::events;
      if (e.id.empty()) add(file, i, e.id, "empty event id");
      if (!seen.insert(e.id).second) add(file, i, e.id, "duplicate event id \"" + e.id + "\"");
      if (e.applicable_kind_ids.empty()) add(file, i, e.id, "empty applicable_kind_ids");
      check_refs(file, i, e.id, e.applicable_kind_ids, kinds_, "kind");
      check_refs(file, i, e.id, e.authorized_actor_ids, actors_, "actor");
      check_refs(file, i, e.id, e.generated_kind_ids, kinds_, "kind");
      check_refs(file, i, e.id, e.required_unlock_actor_ids, actors_, "actor");
      if (e.event_class == EventClass::documentation) {
        if (!e.generated_kind_ids.empty())
          add(file, i, e.id, "class mismatch: documentation event declares generated kinds");
        if (e.max_yield) add(file, i, e.id, "class mismatch: documentation event declares max_yield");
        if (!e.required_unlock_actor_ids.empty())
          add(file, i, e.id, "class mismatch: documentation event declares unlock approvers");
      }
      for (const auto& g : e.generated_kind_ids) {
        const KindDef* k = kind(g);
        if (k && k->kind_class != KindClass::product)
          add(file, i, e.id, "generated kind \"" + g + "\" is not a product kind");
      }
      std::set<std::string> names;
      for (const auto& p : e.param_specs) {
        if (p.name.empty()) add(file, i, e.id, "parameter with empty name");
        if (!names.insert(p.name).second)
          add(file, i, e.id, "duplicate parameter name \"" + p.name + "\"");
        if (p.type == ParamType::enum_ && p.enum_options.empty())
          add(file, i, e.id, "enum parameter \"" + p.name + "\" has no options");
        if (p.type != ParamType::enum_ && !p.enum_options.empty())
          add(file, i, e.id, "non-enum parameter \"" + p.name + "\" declares options");
        std::set<std::string> opts;
        for (const auto& o : p.enum_options)
          if (!opts.insert(o).second)
            add(file, i, e.id, "duplicate enum option \"" + o + "\" in \"" + p.name + "\"");
      }
    }
  }

  void check_activities() {
    for (std::size_t i = 0; i < set_.activities.size(); ++i) {
      const auto& a = set_.activities[i];
      const auto file = DescriptorKind::activities;
      std::string id = a.company_name.value_or("") + "/" + a.actor_id.value_or("");
      if (a.company_name && !companies_.contains(*a.company_name))
        add(file, i, id, "unknown company \"" + *a.company_name + "\"");
      if (a.actor_id && !actors_.contains(*a.actor_id))
        add(file, i, id, "unknown actor \"" + *a.actor_id + "\"");
      check_refs(file, i, id, a.visible_event_kind_ids, events_, "event");
    }
  }

  const DescriptorSet& set_;
  std::set<std::string> actors_, kinds_, events_, companies_;
  std::vector<Violation> out_;
};

}  // namespace

ConfigValidationError::ConfigValidationError(std::vector<Violation> violations)
    : Error(ErrorCode::validation_failed, join_messages(violations)),
      violations_(std::move(violations)) {}

std::vector<Violation> check_config(const DescriptorSet& set) {
  auto out = Checker(set).run();
  std::stable_sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
    return std::pair(a.file, a.item_index) < std::pair(b.file, b.item_index);
  });
  return out;
}

SupplyChainConfig validate_config(DescriptorSet set) {
  auto violations = check_config(set);
  if (!violations.empty()) throw ConfigValidationError(std::move(violations));
  SupplyChainConfig cfg;
  cfg.set_ = std::move(set);
  for (std::size_t i = 0; i < cfg.set_.actors.size(); ++i) cfg.actor_index_[cfg.set_.actors[i].id] = i;
  for (std::size_t i = 0; i < cfg.set_.companies.size(); ++i)
    cfg.company_index_[cfg.set_.companies[i].name] = i;
  for (std::size_t i = 0; i < cfg.set_.kinds.size(); ++i) cfg.kind_index_[cfg.set_.kinds[i].id] = i;
  for (std::size_t i = 0; i < cfg.set_.event_kinds.size(); ++i)
    cfg.event_index_[cfg.set_.event_kinds[i].id] = i;
  return cfg;
}

const ActorDef* SupplyChainConfig::find_actor(std::string_view id) const {
  auto it = actor_index_.find(id);
  return it == actor_index_.end() ? nullptr : &set_.actors[it->second];
}

const CompanyDef* SupplyChainConfig::find_company(std::string_view name) const {
  auto it = company_index_.find(name);
  return it == company_index_.end() ? nullptr : &set_.companies[it->second];
}

const KindDef* SupplyChainConfig::find_kind(std::string_view id) const {
  auto it = kind_index_.find(id);
  return it == kind_index_.end() ? nullptr : &set_.kinds[it->second];
}

const EventKindDef* SupplyChainConfig::find_event_kind(std::string_view id) const {
  auto it = event_index_.find(id);
  return it == event_index_.end() ? nullptr : &set_.event_kinds[it->second];
}

DescriptorSet assemble(std::vector<Descriptor> descriptors) {
  DescriptorSet set;
  std::set<DescriptorKind> seen;
  std::optional<std::int64_t> version;
  for (auto& d : descriptors) {
    if (!seen.insert(d.kind).second)
      throw Error(ErrorCode::validation_failed,
                  "descriptor \"" + std::string(to_string(d.kind)) + "\" given twice");
    if (version && *version != d.version)
      throw Error(ErrorCode::validation_failed, "descriptor versions differ");
    version = d.version;
    std::visit(
        [&](auto& items) {
          using T = std::decay_t<decltype(items)>;
          if constexpr (std::is_same_v<T, std::vector<ActorDef>>) set.actors = std::move(items);
          if constexpr (std::is_same_v<T, std::vector<CompanyDef>>) set.companies = std::move(items);
          if constexpr (std::is_same_v<T, std::vector<KindDef>>) set.kinds = std::move(items);
          if constexpr (std::is_same_v<T, std::vector<EventKindDef>>) set.event_kinds = std::move(items);
          if constexpr (std::is_same_v<T, std::vector<ActivityDef>>) set.activities = std::move(items);
        },
        d.items);
  }
  for (auto k : kAllDescriptorKinds)
    if (!seen.contains(k))
      throw Error(ErrorCode::validation_failed,
                  "missing descriptor \"" + std::string(to_string(k)) + "\"");
  set.version = version.value_or(1);
  return set;
}

std::string descriptor_file_name(DescriptorKind kind) {
  return std::string(to_string(kind)) + ".json";
}

DescriptorSet read_descriptor_dir(const std::filesystem::path& dir) {
  std::vector<Descriptor> descriptors;
  for (auto k : kAllDescriptorKinds) {
    auto path = dir / descriptor_file_name(k);
    Descriptor d;
    try {
      d = parse_descriptor(read_file(path));
    } catch (const Error& e) {
      throw Error(e.code(), path.filename().string() + ": " + e.what());
    }
    if (d.kind != k)
      throw Error(ErrorCode::unsupported_descriptor,
                  path.filename().string() + ": envelope kind \"" + std::string(to_string(d.kind)) +
                      "\" does not match file name");
    descriptors.push_back(std::move(d));
  }
  return assemble(std::move(descriptors));
}

SupplyChainConfig load_config_dir(const std::filesystem::path& dir) {
  return validate_config(read_descriptor_dir(dir));
}

void write_descriptor_dir(const DescriptorSet& set, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](DescriptorKind kind, DescriptorItems items) {
    Descriptor d{kind, set.version, std::move(items)};
    std::ofstream out(dir / descriptor_file_name(kind), std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + (dir / descriptor_file_name(kind)).string());
    out << serialize_descriptor(d);
  };
  write(DescriptorKind::actors, set.actors);
  write(DescriptorKind::companies, set.companies);
  write(DescriptorKind::kinds, set.kinds);
  write(DescriptorKind::events, set.event_kinds);
  write(DescriptorKind::activities, set.activities);
}

std::string serialize_config(const DescriptorSet& set) {
  ojson doc;
  doc["version"] = set.version;
  doc["actors"] = items_json(set.actors);
  doc["companies"] = items_json(set.companies);
  doc["kinds"] = items_json(set.kinds);
  doc["events"] = items_json(set.event_kinds);
  doc["activities"] = items_json(set.activities);
  return doc.dump();
}

DescriptorSet parse_config_document(std::string_view content) {
  json doc = parse_json_text(content);
  if (!doc.is_object()) shape_error("$", "config document must be an object");
  const json& version = require(doc, "version", "$");
  if (!version.is_number_integer()) shape_error("$.version", "expected integer");
  std::vector<Descriptor> descriptors;
  for (auto k : kAllDescriptorKinds) {
    json envelope;
    envelope["kind"] = to_string(k);
    envelope["version"] = version;
    envelope["items"] = require(doc, std::string(to_string(k)).c_str(), "$");
    descriptors.push_back(parse_descriptor(envelope.dump()));
  }
  return assemble(std::move(descriptors));
}

}  // namespace agritrace::config
