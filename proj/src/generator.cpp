#include "agritrace/generator.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "agritrace/error.hpp"

namespace agritrace::generator {

using json = nlohmann::ordered_json;
using config::EventClass;
using config::KindClass;
using config::ParamType;

namespace {

std::vector<std::string> sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::vector<std::string> intersect(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::string> out;
  for (const auto& x : a)
    if (std::find(b.begin(), b.end(), x) != b.end()) out.push_back(x);
  return sorted(out);
}

FieldDef field(std::string name, std::string type, std::string storage = "state", bool indexed = false) {
  return FieldDef{std::move(name), std::move(type), std::move(storage), indexed};
}

// Log fields carrying one parameter. hashlink values expand into a uri and a digest.
std::vector<FieldDef> param_fields(const config::ParamSpec& p) {
  switch (p.type) {
    case ParamType::int_: return {field(p.name, "int", "log")};
    case ParamType::float_: return {field(p.name, "decimal", "log")};
    case ParamType::string:
    case ParamType::text:
    case ParamType::enum_:
    case ParamType::link: return {field(p.name, "string", "log")};
    case ParamType::hashlink: return {field(p.name + "_uri", "string", "log"), field(p.name + "_digest", "digest", "log")};
    case ParamType::upload:
    case ParamType::hashupload: return {field(p.name, "digest", "log")};
  }
  return {};
}

std::vector<FieldDef> all_param_fields(const config::EventKindDef& ev) {
  std::vector<FieldDef> out;
  for (const auto& p : ev.param_specs) {
    auto f = param_fields(p);
    for (auto& x : f) x.storage = "param";
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

}  // namespace

std::string camel_case(std::string_view id) {
  std::string out;
  bool upper = true;
  for (char c : id) {
    if (c == '_' || c == '-' || c == ' ' || c == '.') {
      upper = true;
      continue;
    }
    if (!std::isalnum(static_cast<unsigned char>(c))) continue;
    out.push_back(upper ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c);
    upper = false;
  }
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0]))) out.insert(out.begin(), 'K');
  return out;
}

// ---------------------------------------------------------------------------
// IR

ContractIR generate_contract_ir(const config::SupplyChainConfig& cfg) {
  ContractIR ir;

  std::vector<std::string> resource_creators, certifiers;
  for (const auto& k : cfg.kinds())
    if (k.kind_class == KindClass::resource)
      resource_creators.insert(resource_creators.end(), k.authorized_actor_ids.begin(), k.authorized_actor_ids.end());
  for (const auto& a : cfg.actors()) {
    if (a.role == config::Role::certification_authority || a.role == config::Role::professional ||
        a.role == config::Role::analysis_lab)
      certifiers.push_back(a.id);
  }
  std::vector<std::string> kind_actors, product_actors;
  for (const auto& k : cfg.kinds()) {
    kind_actors.insert(kind_actors.end(), k.authorized_actor_ids.begin(), k.authorized_actor_ids.end());
    if (k.kind_class == KindClass::product)
      product_actors.insert(product_actors.end(), k.authorized_actor_ids.begin(), k.authorized_actor_ids.end());
  }

  ir.records.push_back(RecordDef{"AgriEvent",
                                 {field("kind", "string"), field("event_kind_id", "string"),
                                  field("registrant", "address"), field("block_height", "uint"),
                                  field("tx_index", "uint"), field("parameters_digest", "digest")}});

  ContractDef producer{"Producer", "", false, "", {field("name", "string"), field("owned", "address[]")}, {}};
  producer.methods.push_back(MethodDef{"createResource",
                                       {field("kind_id", "string", "param"), field("description", "string", "param"),
                                        field("size", "uint", "param"), field("unit", "string", "param")},
                                       sorted(resource_creators),
                                       {"Created"},
                                       "factory for productive resources of a managed kind"});
  ir.contracts.push_back(producer);

  ContractDef abstract_resource{"AbstractResource", "", true, "",
                                {field("kind_id", "string"), field("producer", "address"), field("creator", "address"),
                                 field("status", "string"), field("records", "AgriEvent[]"),
                                 field("produced", "address[]")},
                                {}};
  abstract_resource.methods.push_back(MethodDef{"notarize",
                                                {field("document_digest", "digest", "param"),
                                                 field("locator", "string", "param"),
                                                 field("metadata", "bytes", "param")},
                                                sorted(kind_actors),
                                                {"Notarization"},
                                                "attach a document digest; metadata goes to the log"});
  abstract_resource.methods.push_back(MethodDef{"asseverate",
                                                {field("record_index", "uint", "param")},
                                                sorted(certifiers),
                                                {"Asseveration"},
                                                "certify an existing record"});
  ir.contracts.push_back(abstract_resource);

  ir.contracts.push_back(ContractDef{"ProductiveResource", "AbstractResource", true, "",
                                     {field("description", "string"), field("size", "uint"), field("unit", "string")},
                                     {}});

  ContractDef product{"AgriProduct", "AbstractResource", true, "",
                      {field("origins", "address[]"), field("quantity", "uint"), field("unit", "string"),
                       field("token_holder", "address")},
                      {}};
  product.methods.push_back(MethodDef{"split",
                                      {field("quantities", "uint[]", "param")},
                                      sorted(product_actors),
                                      {"Split", "Created"},
                                      "burn this product and mint parts summing to its quantity"});
  product.methods.push_back(MethodDef{"merge",
                                      {field("others", "address[]", "param"), field("quantities", "uint[]", "param")},
                                      sorted(product_actors),
                                      {"Merge", "Created"},
                                      "burn same-kind products and mint outputs with the same total"});
  ir.contracts.push_back(product);

  for (const auto& k : cfg.kinds()) {
    bool is_resource = k.kind_class == KindClass::resource;
    ContractDef c;
    c.name = camel_case(k.id) + (is_resource ? "Resource" : "Product");
    c.base = is_resource ? "ProductiveResource" : "AgriProduct";
    c.kind_id = k.id;
    for (const auto& ev : cfg.event_kinds()) {
      if (std::find(ev.applicable_kind_ids.begin(), ev.applicable_kind_ids.end(), k.id) ==
          ev.applicable_kind_ids.end())
        continue;
      MethodDef m;
      bool transform = ev.event_class == EventClass::transformation;
      m.name = (transform ? "transform" : "record") + camel_case(ev.id);
      if (transform) {
        m.params.push_back(field("other_inputs", "address[]", "param"));
        m.params.push_back(field("output_kinds", "string[]", "param"));
        m.params.push_back(field("output_quantities", "uint[]", "param"));
      }
      auto params = all_param_fields(ev);
      m.params.insert(m.params.end(), params.begin(), params.end());
      m.authorized_actor_ids = intersect(ev.authorized_actor_ids, k.authorized_actor_ids);
      m.emits = {camel_case(ev.id)};
      if (transform) m.emits.push_back("Created");
      if (transform) {
        std::ostringstream note;
        note << "generates ";
        for (std::size_t i = 0; i < ev.generated_kind_ids.size(); ++i)
          note << (i ? ", " : "") << ev.generated_kind_ids[i];
        note << "; max_yield " << ev.yield().str();
        if (!ev.required_unlock_actor_ids.empty()) {
          note << "; requires unlock by";
          for (const auto& a : ev.required_unlock_actor_ids) note << " " << a;
        }
        m.note = note.str();
      } else {
        m.note = "documentation event; parameters are logged, not stored";
      }
      c.methods.push_back(std::move(m));
    }
    ir.contracts.push_back(std::move(c));
  }

  for (const auto& ev : cfg.event_kinds()) {
    LogEventDef e;
    e.name = camel_case(ev.id);
    e.event_kind_id = ev.id;
    e.event_class = std::string(config::to_string(ev.event_class));
    e.fields = {field("entity", "address", "log", true), field("registrant", "address", "log", true)};
    for (const auto& p : ev.param_specs) {
      auto f = param_fields(p);
      e.fields.insert(e.fields.end(), f.begin(), f.end());
    }
    ir.log_events.push_back(std::move(e));
  }

  auto lifecycle = [&](std::string name, std::vector<FieldDef> fields) {
    ir.lifecycle_events.push_back(LogEventDef{std::move(name), "", "", std::move(fields)});
  };
  lifecycle("Created", {field("entity", "address", "log", true)});
  lifecycle("Split", {field("entity", "address", "log", true)});
  lifecycle("Merge", {field("entity", "address", "log", true)});
  lifecycle("Notarization", {field("entity", "address", "log", true), field("metadata", "bytes", "log")});
  lifecycle("Asseveration", {field("entity", "address", "log", true), field("record_index", "uint", "log")});

  return ir;
}

namespace {

json field_json(const FieldDef& f) {
  json j{{"name", f.name}, {"type", f.type}, {"storage", f.storage}};
  if (f.indexed) j["indexed"] = true;
  return j;
}

json fields_json(const std::vector<FieldDef>& fields) {
  json arr = json::array();
  for (const auto& f : fields) arr.push_back(field_json(f));
  return arr;
}

json log_json(const LogEventDef& e) {
  json j{{"name", e.name}};
  if (!e.event_kind_id.empty()) {
    j["event_kind_id"] = e.event_kind_id;
    j["class"] = e.event_class;
  }
  j["fields"] = fields_json(e.fields);
  return j;
}

}  // namespace

std::string ir_to_json(const ContractIR& ir) {
  json contracts = json::array();
  for (const auto& c : ir.contracts) {
    json methods = json::array();
    for (const auto& m : c.methods)
      methods.push_back(json{{"name", m.name},
                             {"params", fields_json(m.params)},
                             {"authorized_actor_ids", m.authorized_actor_ids},
                             {"emits", m.emits},
                             {"note", m.note}});
    json j{{"name", c.name}, {"base", c.base}, {"abstract", c.is_abstract}};
    if (!c.kind_id.empty()) j["kind_id"] = c.kind_id;
    j["fields"] = fields_json(c.fields);
    j["methods"] = methods;
    contracts.push_back(j);
  }
  json records = json::array();
  for (const auto& r : ir.records) records.push_back(json{{"name", r.name}, {"fields", fields_json(r.fields)}});
  json logs = json::array();
  for (const auto& e : ir.log_events) logs.push_back(log_json(e));
  json lifecycle = json::array();
  for (const auto& e : ir.lifecycle_events) lifecycle.push_back(log_json(e));
  json doc{{"payload_storage", ir.payload_storage},
           {"contracts", contracts},
           {"records", records},
           {"log_events", logs},
           {"lifecycle_events", lifecycle}};
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

// Replaces {{key}} placeholders. Unknown keys are a programming error.
std::string fill(std::string_view tpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  std::size_t i = 0;
  while (i < tpl.size()) {
    auto open = tpl.find("{{", i);
    if (open == std::string_view::npos) {
      out.append(tpl.substr(i));
      break;
    }
    out.append(tpl.substr(i, open - i));
    auto close = tpl.find("}}", open);
    std::string key(tpl.substr(open + 2, close - open - 2));
    auto it = vars.find(key);
    if (it == vars.end()) throw Error(ErrorCode::invalid_argument, "template variable " + key + " not bound");
    out += it->second;
    i = close + 2;
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string sol_type(const std::string& t) {
  static const std::map<std::string, std::string> kTypes = {
      {"address", "address"},    {"address[]", "address[]"}, {"string", "string"},
      {"string[]", "string[]"},  {"uint", "uint256"},        {"uint[]", "uint256[]"},
      {"int", "int256"},         {"decimal", "string"},      {"digest", "bytes32"},
      {"bool", "bool"},          {"bytes", "bytes"},         {"AgriEvent[]", "AgriEvent[]"},
  };
  auto it = kTypes.find(t);
  return it == kTypes.end() ? "bytes" : it->second;
}

bool sol_reference(const std::string& t) {
  std::string s = sol_type(t);
  return s == "string" || s == "bytes" || s.ends_with("[]");
}

constexpr std::string_view kSolFile = R"(pragma solidity ^0.8.19;

// Generated from the supply-chain configuration. Do not edit.
// Event parameters are emitted to the event log; contract storage keeps only
// their digest in the AgriEvent record.
{{imports}}
{{kind}} {{name}}{{inherits}} {
{{body}}}
)";

constexpr std::string_view kSolMethod = R"(    /// @notice {{note}}
    /// @custom:authorized {{actors}}
    function {{name}}({{params}}) external {
{{body}}    }
)";

std::string sol_params(const std::vector<FieldDef>& params) {
  std::vector<std::string> out;
  for (const auto& p : params)
    out.push_back(sol_type(p.type) + (sol_reference(p.type) ? " calldata " : " ") + p.name);
  return join(out, ", ");
}

std::string sol_event(const LogEventDef& e) {
  std::vector<std::string> fields;
  for (const auto& f : e.fields) fields.push_back(sol_type(f.type) + (f.indexed ? " indexed " : " ") + f.name);
  return "    event " + e.name + "(" + join(fields, ", ") + ");\n";
}

std::string sol_method(const MethodDef& m, const ContractIR& ir) {
  std::string body;
  for (const auto& name : m.emits) {
    auto it = std::find_if(ir.log_events.begin(), ir.log_events.end(),
                           [&](const LogEventDef& e) { return e.name == name; });
    if (it == ir.log_events.end()) continue;
    std::vector<std::string> args = {"address(this)", "msg.sender"};
    for (std::size_t i = 2; i < it->fields.size(); ++i) args.push_back(it->fields[i].name);
    body += "        emit " + name + "(" + join(args, ", ") + ");\n";
  }
  if (body.empty()) body = "        // executed by the ledger runtime; emits " + join(m.emits, ", ") + "\n";
  return fill(kSolMethod, {{"note", m.note},
                           {"actors", m.authorized_actor_ids.empty() ? "(none)" : join(m.authorized_actor_ids, ", ")},
                           {"name", m.name},
                           {"params", sol_params(m.params)},
                           {"body", body}});
}

std::vector<GeneratedFile> render_solidity(const ContractIR& ir) {
  std::vector<GeneratedFile> files;

  std::string events_body;
  for (const auto& r : ir.records) {
    events_body += "    struct " + r.name + " {\n";
    for (const auto& f : r.fields) events_body += "        " + sol_type(f.type) + " " + f.name + ";\n";
    events_body += "    }\n\n";
  }
  for (const auto& e : ir.lifecycle_events) events_body += sol_event(e);
  if (!ir.log_events.empty()) events_body += "\n";
  for (const auto& e : ir.log_events) events_body += sol_event(e);
  files.push_back({"AgriEventLog.sol", fill(kSolFile, {{"imports", ""},
                                                        {"kind", "abstract contract"},
                                                        {"name", "AgriEventLog"},
                                                        {"inherits", ""},
                                                        {"body", events_body}})});

  for (const auto& c : ir.contracts) {
    std::string body;
    for (const auto& f : c.fields) body += "    " + sol_type(f.type) + " public " + f.name + ";\n";
    if (!c.kind_id.empty()) body += "    string public constant KIND = \"" + c.kind_id + "\";\n";
    for (const auto& m : c.methods) body += "\n" + sol_method(m, ir);
    std::string base = c.base.empty() ? "AgriEventLog" : c.base;
    files.push_back({c.name + ".sol", fill(kSolFile, {{"imports", "\nimport \"./" + base + ".sol\";\n"},
                                                        {"kind", c.is_abstract ? "abstract contract" : "contract"},
                                                        {"name", c.name},
                                                        {"inherits", " is " + base},
                                                        {"body", body}})});
  }
  return files;
}

constexpr std::string_view kMdContract = R"(## {{name}}

{{summary}}

| Field | Type | Storage |
|---|---|---|
{{fields}}
{{methods}})";

std::string md_fields(const std::vector<FieldDef>& fields) {
  std::string out;
  for (const auto& f : fields)
    out += "| " + f.name + " | " + f.type + " | " + f.storage + (f.indexed ? ", indexed" : "") + " |\n";
  if (out.empty()) out = "| (none) | | |\n";
  return out;
}

std::vector<GeneratedFile> render_markdown(const ContractIR& ir) {
  std::string doc = "# Contract data dictionary\n\nEvent parameter payloads are stored in the **" +
                    ir.payload_storage + "**; persistent state keeps only their digest.\n\n";
  for (const auto& c : ir.contracts) {
    std::string summary = c.is_abstract ? "Abstract contract" : "Contract";
    if (!c.base.empty()) summary += ", extends `" + c.base + "`";
    if (!c.kind_id.empty()) summary += ", kind `" + c.kind_id + "`";
    summary += ".";
    std::string methods;
    if (!c.methods.empty()) {
      methods = "\n| Method | Authorized actors | Emits | Notes |\n|---|---|---|---|\n";
      for (const auto& m : c.methods) {
        std::vector<std::string> ps;
        for (const auto& p : m.params) ps.push_back(p.name + ": " + p.type);
        methods += "| `" + m.name + "(" + join(ps, ", ") + ")` | " +
                   (m.authorized_actor_ids.empty() ? "(none)" : join(m.authorized_actor_ids, ", ")) + " | " +
                   join(m.emits, ", ") + " | " + m.note + " |\n";
      }
    }
    doc += fill(kMdContract, {{"name", c.name}, {"summary", summary}, {"fields", md_fields(c.fields)},
                              {"methods", methods}});
    doc += "\n";
  }
  for (const auto& r : ir.records) {
    doc += "## Record " + r.name + "\n\n| Field | Type | Storage |\n|---|---|---|\n" + md_fields(r.fields) + "\n";
  }
  doc += "## Log events\n\n";
  for (const auto& e : ir.log_events) {
    doc += "### " + e.name + " (" + e.event_kind_id + ", class " + e.event_class + ")\n\n";
    doc += "| Field | Type | Storage |\n|---|---|---|\n" + md_fields(e.fields) + "\n";
  }
  doc += "## Lifecycle log events\n\n";
  for (const auto& e : ir.lifecycle_events) {
    std::vector<std::string> fs;
    for (const auto& f : e.fields) fs.push_back(f.name + ": " + f.type);
    doc += "- `" + e.name + "(" + join(fs, ", ") + ")`\n";
  }
  return {{"contracts.md", doc}};
}

}  // namespace

std::vector<GeneratedFile> render_contracts(const ContractIR& ir, std::string_view target) {
  if (target == "solidity") return render_solidity(ir);
  if (target == "markdown") return render_markdown(ir);
  throw Error(ErrorCode::unknown_target, "unknown render target \"" + std::string(target) + "\"");
}

// ---------------------------------------------------------------------------
// Forms

std::string_view to_string(Widget widget) {
  switch (widget) {
    case Widget::integer: return "integer";
    case Widget::decimal: return "decimal";
    case Widget::single_line: return "single_line";
    case Widget::multi_line: return "multi_line";
    case Widget::choice: return "choice";
    case Widget::uri: return "uri";
    case Widget::uri_digest: return "uri_digest";
    case Widget::file: return "file";
    case Widget::file_digest: return "file_digest";
  }
  return "?";
}

Widget widget_for(ParamType type) {
  switch (type) {
    case ParamType::int_: return Widget::integer;
    case ParamType::float_: return Widget::decimal;
    case ParamType::string: return Widget::single_line;
    case ParamType::text: return Widget::multi_line;
    case ParamType::enum_: return Widget::choice;
    case ParamType::link: return Widget::uri;
    case ParamType::hashlink: return Widget::uri_digest;
    case ParamType::upload: return Widget::file;
    case ParamType::hashupload: return Widget::file_digest;
  }
  return Widget::single_line;
}

namespace {

constexpr std::string_view kUriPattern = R"([A-Za-z][A-Za-z0-9+.\-]*:[^\x00-\x20\x7f]+)";
constexpr std::string_view kDigestPattern = "[0-9a-fA-F]{64}";

FormField form_field(const config::ParamSpec& p) {
  FormField f;
  f.name = p.name;
  f.type = p.type;
  f.widget = widget_for(p.type);
  switch (p.type) {
    case ParamType::int_:
      f.pattern = "[+-]?[0-9]+";
      f.min = "-9223372036854775808";
      f.max = "9223372036854775807";
      break;
    case ParamType::float_:
      f.pattern = R"([+-]?([0-9]+\.?[0-9]*|\.[0-9]+)([eE][+-]?[0-9]+)?)";
      f.finite = true;
      break;
    case ParamType::string: f.pattern = R"([^\r\n]*)"; break;
    case ParamType::text: f.pattern = R"([\s\S]*)"; break;
    case ParamType::enum_: f.options = p.enum_options; break;
    case ParamType::link: f.pattern = std::string(kUriPattern); break;
    case ParamType::hashlink:
      f.pattern = std::string(kUriPattern) + R"(\x1f)" + std::string(kDigestPattern);
      f.hash = true;
      break;
    case ParamType::upload:
      f.pattern = std::string(kDigestPattern);
      f.upload = true;
      break;
    case ParamType::hashupload:
      f.pattern = std::string(kDigestPattern);
      f.upload = true;
      f.hash = true;
      break;
  }
  return f;
}

}  // namespace

FormSchema generate_form_schema(const config::SupplyChainConfig& cfg, std::string_view event_kind_id) {
  const config::EventKindDef* ev = cfg.find_event_kind(event_kind_id);
  if (!ev) throw Error(ErrorCode::unknown_event_kind, "unknown event kind \"" + std::string(event_kind_id) + "\"");
  FormSchema s;
  s.event_kind_id = ev->id;
  s.title = ev->name;
  s.event_class = std::string(config::to_string(ev->event_class));
  s.target_kind_ids = ev->applicable_kind_ids;
  s.multiple_targets = ev->event_class == EventClass::transformation;
  s.generated_kind_ids = ev->generated_kind_ids;
  s.authorized_actor_ids = ev->authorized_actor_ids;
  if (ev->event_class == EventClass::transformation) s.max_yield = ev->yield().str();
  s.unlock_approver_ids = ev->required_unlock_actor_ids;
  for (const auto& p : ev->param_specs) s.fields.push_back(form_field(p));
  return s;
}

std::vector<FormSchema> generate_form_schemas(const config::SupplyChainConfig& cfg) {
  std::vector<FormSchema> out;
  for (const auto& ev : cfg.event_kinds()) out.push_back(generate_form_schema(cfg, ev.id));
  return out;
}

namespace {

json schema_json(const FormSchema& s) {
  json fields = json::array();
  for (const auto& f : s.fields) {
    json j{{"name", f.name},
           {"type", config::to_string(f.type)},
           {"widget", to_string(f.widget)},
           {"required", f.required}};
    json rule = json::object();
    if (!f.pattern.empty()) rule["pattern"] = f.pattern;
    if (f.min) rule["min"] = *f.min;
    if (f.max) rule["max"] = *f.max;
    if (f.finite) rule["finite"] = true;
    if (!f.options.empty()) rule["one_of"] = f.options;
    j["validation"] = rule;
    if (!f.options.empty()) j["options"] = f.options;
    j["upload"] = f.upload;
    j["hash"] = f.hash;
    fields.push_back(j);
  }
  json j{{"event_kind_id", s.event_kind_id},
         {"title", s.title},
         {"class", s.event_class},
         {"target", json{{"widget", "entity_selector"}, {"kind_ids", s.target_kind_ids}, {"multiple", s.multiple_targets}}},
         {"generated_kind_ids", s.generated_kind_ids},
         {"authorized_actor_ids", s.authorized_actor_ids}};
  if (s.max_yield) j["max_yield"] = *s.max_yield;
  if (!s.unlock_approver_ids.empty()) j["unlock_approver_ids"] = s.unlock_approver_ids;
  j["fields"] = fields;
  return j;
}

}  // namespace

std::string form_schema_to_json(const FormSchema& schema) { return schema_json(schema).dump(2) + "\n"; }

std::string form_schemas_to_json(const std::vector<FormSchema>& schemas) {
  json arr = json::array();
  for (const auto& s : schemas) arr.push_back(schema_json(s));
  return arr.dump(2) + "\n";
}

}  // namespace agritrace::generator
