#include <doctest.h>

#include <algorithm>
#include <set>

#include <json.hpp>

#include "agritrace/generator.hpp"
#include "support/form_validator.hpp"
#include "support/scenario.hpp"

using namespace agritrace;
using namespace agritrace::generator;
using config::ParamType;

namespace {

config::SupplyChainConfig fixture() { return config::validate_config(testing::fixture_descriptors()); }

config::SupplyChainConfig no_events() {
  config::DescriptorSet s;
  s.actors = {{"admin", "Admin", config::Role::administrator}};
  return config::validate_config(s);
}

std::vector<std::string> names(const std::vector<ContractDef>& v) {
  std::vector<std::string> out;
  for (const auto& c : v) out.push_back(c.name);
  return out;
}

}  // namespace

TEST_SUITE("generator") {
  TEST_CASE("fixture IR has the base model and one log event per event kind") {
    auto cfg = fixture();
    auto ir = generate_contract_ir(cfg);
    auto n = names(ir.contracts);
    for (const char* base : {"Producer", "AbstractResource", "ProductiveResource", "AgriProduct"})
      CHECK(std::find(n.begin(), n.end(), base) != n.end());
    CHECK(std::find(n.begin(), n.end(), "OliveGroveResource") != n.end());
    CHECK(std::find(n.begin(), n.end(), "BottledOilProduct") != n.end());
    REQUIRE(ir.log_events.size() == cfg.event_kinds().size());
    for (std::size_t i = 0; i < ir.log_events.size(); ++i) CHECK(ir.log_events[i].event_kind_id == cfg.event_kinds()[i].id);
    bool has_record = std::any_of(ir.records.begin(), ir.records.end(), [](auto& r) { return r.name == "AgriEvent"; });
    CHECK(has_record);
    for (const auto& e : ir.log_events)
      for (const auto& f : e.fields) CHECK(f.storage == "log");
    CHECK(ir_to_json(ir) == ir_to_json(generate_contract_ir(fixture())));
  }

  TEST_CASE("method authorizations reference configured actors") {
    auto cfg = fixture();
    for (const auto& c : generate_contract_ir(cfg).contracts)
      for (const auto& m : c.methods)
        for (const auto& a : m.authorized_actor_ids) CHECK_MESSAGE(cfg.find_actor(a), c.name << "." << m.name);
  }

  TEST_CASE("zero event kinds gives the base contracts only") {
    auto ir = generate_contract_ir(no_events());
    CHECK(ir.log_events.empty());
    CHECK(names(ir.contracts) ==
          std::vector<std::string>{"Producer", "AbstractResource", "ProductiveResource", "AgriProduct"});
    CHECK(generate_form_schemas(no_events()).empty());
  }

  TEST_CASE("adding one documentation event adds exactly one log event") {
    auto set = testing::fixture_descriptors();
    auto before = generate_contract_ir(config::validate_config(set));
    set.event_kinds.push_back({"tasting", "Tasting", {"oil"}, {"lab"}, config::EventClass::documentation, {},
                               {{"score", ParamType::int_, {}}}, std::nullopt, {}});
    auto after = generate_contract_ir(config::validate_config(set));
    REQUIRE(after.log_events.size() == before.log_events.size() + 1);
    for (std::size_t i = 0; i < before.log_events.size(); ++i)
      CHECK(nlohmann::json::parse(ir_to_json(before))["log_events"][i] ==
            nlohmann::json::parse(ir_to_json(after))["log_events"][i]);
    CHECK(after.log_events.back().name == "Tasting");
    CHECK(after.log_events.back().event_class == "D");
    auto jb = nlohmann::json::parse(ir_to_json(before));
    auto ja = nlohmann::json::parse(ir_to_json(after));
    CHECK(jb["lifecycle_events"] == ja["lifecycle_events"]);
    CHECK(jb["records"] == ja["records"]);
  }

  TEST_CASE("rendering targets") {
    auto ir = generate_contract_ir(fixture());
    auto sol = render_contracts(ir, "solidity");
    CHECK(sol.size() >= ir.contracts.size());
    bool emits = false;
    for (const auto& f : sol) {
      CHECK(f.path.ends_with(".sol"));
      if (f.path.find("OliveGroveResource") != std::string::npos)
        emits = f.content.find("emit Harvest(") != std::string::npos;
    }
    CHECK(emits);
    auto again = render_contracts(ir, "solidity");
    for (std::size_t i = 0; i < sol.size(); ++i) CHECK(sol[i].content == again[i].content);

    auto md = render_contracts(ir, "markdown");
    REQUIRE(md.size() == 1);
    CHECK(md[0].content.find("| Field | Type | Storage |") != std::string::npos);
    try {
      render_contracts(ir, "vyper");
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::unknown_target);
    }
  }

  TEST_CASE("one widget per parameter type") {
    std::set<Widget> seen;
    for (auto t : config::kAllParamTypes) seen.insert(widget_for(t));
    CHECK(seen.size() == std::size(config::kAllParamTypes));
    CHECK(widget_for(ParamType::int_) == Widget::integer);
    CHECK(widget_for(ParamType::float_) == Widget::decimal);
    CHECK(widget_for(ParamType::string) == Widget::single_line);
    CHECK(widget_for(ParamType::text) == Widget::multi_line);
    CHECK(widget_for(ParamType::enum_) == Widget::choice);
    CHECK(widget_for(ParamType::link) == Widget::uri);
    CHECK(widget_for(ParamType::hashlink) == Widget::uri_digest);
    CHECK(widget_for(ParamType::upload) == Widget::file);
    CHECK(widget_for(ParamType::hashupload) == Widget::file_digest);
  }

  TEST_CASE("harvest form") {
    auto f = generate_form_schema(fixture(), "harvest");
    REQUIRE(f.fields.size() == 3);
    CHECK(f.fields[0].name == "kg");
    CHECK(f.fields[0].widget == Widget::integer);
    CHECK(f.fields[2].widget == Widget::file_digest);
    CHECK(f.fields[2].upload);
    CHECK(f.fields[2].hash);
    CHECK(f.event_class == "T");
    CHECK(f.generated_kind_ids == std::vector<std::string>{"olives"});
    CHECK(f.max_yield == "1/2");
    CHECK(f.multiple_targets);

    testing::FormValidator v(nlohmann::json::parse(form_schema_to_json(f)));
    auto photo = sha256(std::string_view("p")).hex();
    CHECK(v.accepts({{"kg", "5200"}, {"variety", "Bosana"}, {"photo", photo}}));
    CHECK_FALSE(v.accepts({{"kg", "52.5"}, {"variety", "Bosana"}, {"photo", photo}}));
    CHECK_FALSE(v.accepts({{"kg", "5200"}, {"variety", "Bosana"}}));
  }

  TEST_CASE("zero parameters leaves only the target selector") {
    auto set = testing::fixture_descriptors();
    set.event_kinds.push_back({"inspect", "Inspect", {"oil"}, {"lab"}, config::EventClass::documentation, {}, {}, std::nullopt, {}});
    auto f = generate_form_schema(config::validate_config(set), "inspect");
    CHECK(f.fields.empty());
    auto j = nlohmann::json::parse(form_schema_to_json(f));
    CHECK(j["target"]["kind_ids"] == nlohmann::json::array({"oil"}));
    CHECK(j["fields"].empty());
  }

  TEST_CASE("enum options are a closed set") {
    auto set = testing::fixture_descriptors();
    set.event_kinds.push_back({"grade", "Grade", {"oil"}, {"lab"}, config::EventClass::documentation, {},
                               {{"grade", ParamType::enum_, {"A", "B"}}}, std::nullopt, {}});
    auto f = generate_form_schema(config::validate_config(set), "grade");
    REQUIRE(f.fields.size() == 1);
    CHECK(f.fields[0].options == std::vector<std::string>{"A", "B"});
    testing::FormValidator v(nlohmann::json::parse(form_schema_to_json(f)));
    CHECK(v.accepts({{"grade", "A"}}));
    CHECK_FALSE(v.accepts({{"grade", "C"}}));
  }

  TEST_CASE("unknown event kind") {
    try {
      generate_form_schema(fixture(), "nope");
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::unknown_event_kind);
    }
  }

  TEST_CASE("every event kind gets one schema") {
    auto cfg = fixture();
    auto all = generate_form_schemas(cfg);
    REQUIRE(all.size() == cfg.event_kinds().size());
    auto doc = nlohmann::json::parse(form_schemas_to_json(all));
    CHECK(doc.size() == all.size());
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i].fields.size() == cfg.event_kinds()[i].param_specs.size());
  }

  TEST_CASE("camel case") {
    CHECK(camel_case("olive_grove") == "OliveGrove");
    CHECK(camel_case("pdo_bottled_oil") == "PdoBottledOil");
    CHECK(camel_case("oil") == "Oil");
    CHECK(camel_case("line-maintenance") == "LineMaintenance");
  }
}
