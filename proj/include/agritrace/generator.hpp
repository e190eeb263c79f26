#pragma once

// Code generation from a validated supply-chain configuration:
//   - a contract IR mirroring the Producer / AbstractResource /
//     ProductiveResource / AgriProduct model, specialized per kind,
//   - source renderings of that IR (Solidity-style and Markdown),
//   - per-event form schemas that drive data entry.
//
// Every function here is pure and deterministic.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "agritrace/config.hpp"

namespace agritrace::generator {

// "log" fields are emitted to the event log, "state" fields are persistent.
struct FieldDef {
  std::string name;
  std::string type;  // semantic type: address, address[], string, uint, int, decimal, digest, bool, ...
  std::string storage = "state";
  bool indexed = false;
};

struct MethodDef {
  std::string name;
  std::vector<FieldDef> params;
  std::vector<std::string> authorized_actor_ids;  // sorted
  std::vector<std::string> emits;
  std::string note;
};

struct ContractDef {
  std::string name;
  std::string base;  // empty for a root contract
  bool is_abstract = false;
  std::string kind_id;  // set for per-kind specializations
  std::vector<FieldDef> fields;
  std::vector<MethodDef> methods;
};

struct RecordDef {
  std::string name;
  std::vector<FieldDef> fields;
};

struct LogEventDef {
  std::string name;
  std::string event_kind_id;  // empty for lifecycle logs
  std::string event_class;    // "D" / "T" / "" for lifecycle logs
  std::vector<FieldDef> fields;
};

struct ContractIR {
  std::string payload_storage = "log";
  std::vector<ContractDef> contracts;
  std::vector<RecordDef> records;
  std::vector<LogEventDef> log_events;        // exactly one per event kind
  std::vector<LogEventDef> lifecycle_events;  // created, split, merge, notarization, ...
};

ContractIR generate_contract_ir(const config::SupplyChainConfig& config);
std::string ir_to_json(const ContractIR& ir);

struct GeneratedFile {
  std::string path;
  std::string content;
};

// Targets: "solidity" and "markdown". Throws Error{unknown_target}.
std::vector<GeneratedFile> render_contracts(const ContractIR& ir, std::string_view target);

// ---------------------------------------------------------------------------
// Forms

enum class Widget { integer, decimal, single_line, multi_line, choice, uri, uri_digest, file, file_digest };
std::string_view to_string(Widget widget);
Widget widget_for(config::ParamType type);

struct FormField {
  std::string name;
  config::ParamType type = config::ParamType::string;
  Widget widget = Widget::single_line;
  bool required = true;
  std::string pattern;  // ECMAScript regex the value must match in full
  std::optional<std::string> min;  // integer bounds, decimal text
  std::optional<std::string> max;
  bool finite = false;             // decimal fields reject overflow to infinity
  std::vector<std::string> options;
  bool upload = false;  // value comes from a stored file
  bool hash = false;    // value carries a content digest
};

struct FormSchema {
  std::string event_kind_id;
  std::string title;
  std::string event_class;
  std::vector<std::string> target_kind_ids;
  bool multiple_targets = false;
  std::vector<std::string> generated_kind_ids;
  std::vector<std::string> authorized_actor_ids;
  std::optional<std::string> max_yield;
  std::vector<std::string> unlock_approver_ids;
  std::vector<FormField> fields;
};

// Throws Error{unknown_event_kind}.
FormSchema generate_form_schema(const config::SupplyChainConfig& config, std::string_view event_kind_id);
std::vector<FormSchema> generate_form_schemas(const config::SupplyChainConfig& config);
std::string form_schema_to_json(const FormSchema& schema);
std::string form_schemas_to_json(const std::vector<FormSchema>& schemas);

// Turns "olive_grove" into "OliveGrove".
std::string camel_case(std::string_view id);

}  // namespace agritrace::generator
