#include "agritrace/cli.hpp"

#include <cstdlib>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "agritrace/config.hpp"
#include "agritrace/contracts.hpp"
#include "agritrace/docstore.hpp"
#include "agritrace/generator.hpp"
#include "agritrace/keystore.hpp"
#include "agritrace/ledger.hpp"
#include "agritrace/provenance.hpp"
#include "agritrace/service.hpp"

namespace agritrace::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

struct Common {
  std::string chain = env_or("AGRITRACE_CHAIN", "chain.bin");
  std::string keystore = env_or("AGRITRACE_KEYSTORE", "keystore.json");
  std::string docs = env_or("AGRITRACE_DOCSTORE", "docstore");
  std::string schedule_file = env_or("AGRITRACE_GAS_SCHEDULE", "");
  std::string as_actor;
  std::string passphrase = env_or("AGRITRACE_PASSPHRASE", "");
  bool json_out = false;
};

fs::path schedule_sidecar(const fs::path& chain) {
  fs::path p = chain;
  p += ".gas.json";
  return p;
}

ledger::GasSchedule load_schedule(const Common& c) {
  if (!c.schedule_file.empty()) return ledger::GasSchedule::load(c.schedule_file);
  if (fs::exists(schedule_sidecar(c.chain))) return ledger::GasSchedule::load(schedule_sidecar(c.chain));
  return {};
}

std::unique_ptr<ledger::Ledger> open_chain(const Common& c) {
  if (!fs::exists(c.chain)) throw Error(ErrorCode::not_found, "no chain file at " + c.chain + " (run `trace chain init`)");
  return ledger::Ledger::open(c.chain, contracts::world_factory(), load_schedule(c), ledger::system_clock());
}

std::shared_ptr<const contracts::World> world_of(const ledger::Ledger& l) {
  auto w = contracts::sealed_world(l);
  if (!w || !w->initialized()) throw Error(ErrorCode::not_found, "chain has no genesis");
  return w;
}

std::string default_signer(const Common& c, const contracts::World& w) {
  if (!c.as_actor.empty()) return c.as_actor;
  const auto* owner = w.catalog_entry(w.owner());
  return owner ? owner->actor_id : "";
}

KeyPair unlock(const Common& c, const std::string& actor) {
  if (c.passphrase.empty())
    throw Error(ErrorCode::invalid_argument, "no passphrase (use --passphrase or AGRITRACE_PASSPHRASE)");
  return keystore::Keystore::load(c.keystore).unlock(actor, c.passphrase);
}

Address parse_target(const std::string& text) {
  if (text.rfind("trace://", 0) == 0) return provenance::QrPayload::parse(text).address;
  return Address::from_hex(text);
}

std::vector<params::NamedValue> parse_params(const std::vector<std::string>& raw) {
  std::vector<params::NamedValue> out;
  for (const auto& p : raw) {
    auto eq = p.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::invalid_argument, "parameter \"" + p + "\" must be name=value");
    out.push_back({p.substr(0, eq), p.substr(eq + 1)});
  }
  return out;
}

std::vector<std::uint64_t> parse_parts(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      if (item.empty() || item[0] == '-') throw std::invalid_argument("negative");
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorCode::invalid_argument, "bad quantity \"" + item + "\"");
    }
  }
  return out;
}

// Sends one operation and prints the receipt. Returns the exit status.
int run_op(const Common& c, const contracts::Operation& op, std::ostream& out, std::ostream& err) {
  auto ledger = open_chain(c);
  auto w = world_of(*ledger);
  std::string signer = default_signer(c, *w);
  KeyPair key = unlock(c, signer);
  contracts::Client client(*ledger);
  auto r = client.send(key, op);
  if (!r.ok) {
    std::string code(to_string(r.error.value_or(ErrorCode::invalid_argument)));
    if (c.json_out)
      out << json{{"ok", false}, {"error", json{{"code", code}, {"message", r.message}}}}.dump(2) << "\n";
    else
      err << "rejected: " << code << ": " << r.message << "\n";
    return 3;
  }
  auto created = contracts::created_entities(r);
  if (c.json_out) {
    json addrs = json::array();
    for (const auto& a : created) addrs.push_back(a.hex());
    out << json{{"ok", true},
                {"operation", contracts::operation_name(op)},
                {"tx", r.tx_digest.hex()},
                {"block_height", r.block_height},
                {"gas_used", r.gas_used},
                {"created", addrs}}
               .dump(2)
        << "\n";
  } else {
    out << contracts::operation_name(op) << " accepted in block " << r.block_height << " (gas " << r.gas_used << ")\n";
    for (const auto& a : created) out << "created " << a.hex() << "\n";
  }
  return 0;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << content;
  if (!f) throw Error(ErrorCode::io_error, "cannot write " + path.string());
}

// Creates a chain file with the genesis block (and, optionally, every actor
// registered). Keys go to the keystore under one passphrase.
void init_chain(const Common& c, const std::string& config_dir, const std::string& chain_id,
                const std::string& storage, bool register_all, bool fast_kdf, std::ostream& out) {
  if (fs::exists(c.chain)) throw Error(ErrorCode::invalid_argument, "chain file " + c.chain + " already exists");
  if (c.passphrase.empty())
    throw Error(ErrorCode::invalid_argument, "no passphrase (use --passphrase or AGRITRACE_PASSPHRASE)");
  auto cfg = config::load_config_dir(config_dir);
  auto schedule = load_schedule(c);
  auto kdf = fast_kdf ? keystore::KdfParams::fast() : keystore::KdfParams::interactive();
  auto ks = keystore::Keystore::load(c.keystore);

  std::string admin;
  for (const auto& a : cfg.actors())
    if (a.role == config::Role::administrator) admin = a.id;
  auto key_for = [&](const std::string& actor) {
    if (ks.contains(actor)) return ks.unlock(actor, c.passphrase);
    KeyPair k = KeyPair::generate();
    ks.add(actor, k, c.passphrase, kdf);
    return k;
  };

  ledger::Ledger ledger(contracts::world_factory(), schedule, ledger::system_clock());
  contracts::Client client(ledger);
  contracts::Genesis g;
  g.chain_id = chain_id;
  g.admin_actor_id = admin;
  g.config = cfg.descriptors();
  g.payload_storage = ledger::parse_storage_mode(storage);
  KeyPair admin_key = key_for(admin);
  auto r = client.send(admin_key, g);
  if (!r.ok) throw Error(r.error.value_or(ErrorCode::invalid_argument), "genesis rejected: " + r.message);
  if (register_all) {
    for (const auto& a : cfg.actors()) {
      if (a.id == admin) continue;
      KeyPair k = key_for(a.id);
      auto rr = client.submit(admin_key, contracts::RegisterAddress{k.address(), a.id, {}});
      if (!rr.ok) throw Error(rr.error.value_or(ErrorCode::invalid_argument), "register rejected: " + rr.message);
    }
    ledger.seal_block();
  }
  ks.save(c.keystore);
  ledger.save_as(c.chain);
  if (!(schedule == ledger::GasSchedule{})) write_file(schedule_sidecar(c.chain), schedule.to_json());
  out << "initialized chain " << chain_id << " at " << c.chain << " (" << ledger.height() << " blocks)\n";
}

std::atomic<service::Service*> g_running{nullptr};

extern "C" void on_signal(int) {
  if (auto* s = g_running.load()) s->stop();
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Configuration-driven agri-food traceability ledger", "trace"};
  app.require_subcommand(1);
  Common c;
  app.add_option("--chain", c.chain, "Chain file")->envname("AGRITRACE_CHAIN");
  app.add_option("--keystore", c.keystore, "Encrypted keystore file");
  app.add_option("--docs", c.docs, "Document store directory");
  app.add_option("--gas-schedule", c.schedule_file, "Gas schedule JSON");
  app.add_option("--as", c.as_actor, "Actor whose key signs (default: the chain owner)");
  app.add_option("--passphrase", c.passphrase, "Keystore passphrase");
  app.add_flag("--json", c.json_out, "Machine-readable output");

  std::function<int()> action;

  // config
  auto* config_cmd = app.add_subcommand("config", "Configuration descriptors")->require_subcommand(1);
  std::string config_dir, out_dir;
  auto* validate = config_cmd->add_subcommand("validate", "Validate a descriptor directory");
  validate->add_option("dir", config_dir)->required();
  validate->callback([&] {
    action = [&] {
      try {
        auto cfg = config::load_config_dir(config_dir);
        if (c.json_out)
          out << json{{"ok", true}, {"actors", cfg.actors().size()}, {"kinds", cfg.kinds().size()},
                      {"events", cfg.event_kinds().size()}}.dump(2) << "\n";
        else
          out << "ok: " << cfg.actors().size() << " actors, " << cfg.companies().size() << " companies, "
              << cfg.kinds().size() << " kinds, " << cfg.event_kinds().size() << " event kinds\n";
        return 0;
      } catch (const config::ConfigValidationError& e) {
        if (c.json_out) {
          json v = json::array();
          for (const auto& x : e.violations())
            v.push_back(json{{"file", x.file}, {"item_index", x.item_index}, {"item_id", x.item_id},
                             {"message", x.message}});
          out << json{{"ok", false}, {"violations", v}}.dump(2) << "\n";
        } else {
          for (const auto& x : e.violations()) out << x.str() << "\n";
        }
        return 1;
      }
    };
  });
  auto* format = config_cmd->add_subcommand("format", "Rewrite descriptors in canonical form");
  format->add_option("dir", config_dir)->required();
  format->add_option("-o,--out", out_dir, "Output directory (default: in place)");
  format->callback([&] {
    action = [&] {
      auto set = config::read_descriptor_dir(config_dir);
      config::validate_config(set);
      config::write_descriptor_dir(set, out_dir.empty() ? config_dir : out_dir);
      return 0;
    };
  });

  // chain
  auto* chain_cmd = app.add_subcommand("chain", "Ledger maintenance")->require_subcommand(1);
  std::string chain_id = "agritrace-local", storage = "log";
  bool register_all = false, fast_kdf = false;
  auto* init = chain_cmd->add_subcommand("init", "Create a chain with a genesis block");
  init->add_option("config_dir", config_dir)->required();
  init->add_option("--chain-id", chain_id);
  init->add_option("--storage", storage, "Event payload storage: log or persistent");
  init->add_flag("--register-all", register_all, "Create keys for and register every configured actor");
  init->add_flag("--fast-kdf", fast_kdf, "Cheap key derivation (test chains only)");
  init->callback([&] {
    action = [&] {
      init_chain(c, config_dir, chain_id, storage, register_all, fast_kdf, out);
      return 0;
    };
  });
  auto* verify = chain_cmd->add_subcommand("verify", "Replay and verify the chain file");
  verify->callback([&] {
    action = [&] {
      std::ifstream f(c.chain, std::ios::binary);
      if (!f) throw Error(ErrorCode::not_found, "no chain file at " + c.chain);
      Bytes raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
      auto report = ledger::verify_chain_bytes(raw, contracts::world_factory(), load_schedule(c));
      if (c.json_out) {
        json j{{"ok", report.ok}, {"blocks_checked", report.blocks_checked}, {"reason", report.reason}};
        if (report.failed_block) j["failed_block"] = *report.failed_block;
        out << j.dump(2) << "\n";
      } else {
        out << report.str() << "\n";
      }
      return report.ok ? 0 : 1;
    };
  });
  std::size_t payload = 0, topics = 1;
  std::string mode = "log";
  auto* gas = chain_cmd->add_subcommand("gas", "Estimate gas for an event payload");
  gas->add_option("--payload", payload, "Payload bytes")->required();
  gas->add_option("--mode", mode, "log or persistent");
  gas->add_option("--topics", topics, "Log topics");
  gas->callback([&] {
    action = [&] {
      auto schedule = c.schedule_file.empty() ? ledger::GasSchedule{} : ledger::GasSchedule::load(c.schedule_file);
      ledger::GasQuery q{payload, ledger::parse_storage_mode(mode), topics, 0};
      std::uint64_t g = ledger::estimate_gas(schedule, q);
      if (c.json_out)
        out << json{{"payload_bytes", payload}, {"mode", mode}, {"gas", g}}.dump(2) << "\n";
      else
        out << g << "\n";
      return 0;
    };
  });
  auto* info = chain_cmd->add_subcommand("info", "Show chain summary");
  info->callback([&] {
    action = [&] {
      auto l = open_chain(c);
      auto w = world_of(*l);
      json j{{"chain_id", w->chain_id()}, {"height", l->height()}, {"state_root", l->state_root().hex()},
             {"entities", w->entities().size()}, {"payload_storage", ledger::to_string(w->payload_storage())}};
      out << (c.json_out ? j.dump(2) : j.dump()) << "\n";
      return 0;
    };
  });

  // actor
  auto* actor_cmd = app.add_subcommand("actor", "Address catalog")->require_subcommand(1);
  std::string actor_id, address_text;
  std::vector<std::string> roles;
  auto* reg = actor_cmd->add_subcommand("register", "Bind an address to a configured actor");
  reg->add_option("actor_id", actor_id)->required();
  reg->add_option("--address", address_text, "Existing address (default: new key in the keystore)");
  reg->add_option("--role", roles, "Override roles");
  reg->callback([&] {
    action = [&] {
      Address addr;
      if (!address_text.empty()) {
        addr = Address::from_hex(address_text);
      } else {
        if (c.passphrase.empty()) throw Error(ErrorCode::invalid_argument, "no passphrase for the new key");
        auto ks = keystore::Keystore::load(c.keystore);
        KeyPair k = ks.contains(actor_id) ? ks.unlock(actor_id, c.passphrase) : KeyPair::generate();
        if (!ks.contains(actor_id)) {
          ks.add(actor_id, k, c.passphrase);
          ks.save(c.keystore);
        }
        addr = k.address();
      }
      contracts::RegisterAddress op{addr, actor_id, {}};
      for (const auto& r : roles) {
        auto role = config::parse_role(r);
        if (!role) throw Error(ErrorCode::invalid_argument, "unknown role " + r);
        op.roles.insert(*role);
      }
      return run_op(c, op, out, err);
    };
  });

  // resource
  auto* resource_cmd = app.add_subcommand("resource", "Productive resources")->require_subcommand(1);
  contracts::CreateResource create;
  auto* rcreate = resource_cmd->add_subcommand("create", "Create a productive resource");
  rcreate->add_option("--kind", create.kind_id)->required();
  rcreate->add_option("--producer", create.producer, "Company name")->required();
  rcreate->add_option("--size", create.size)->required();
  rcreate->add_option("--description", create.description);
  rcreate->add_option("--unit", create.unit);
  rcreate->callback([&] { action = [&] { return run_op(c, create, out, err); }; });

  // event
  auto* event_cmd = app.add_subcommand("event", "Documentation events")->require_subcommand(1);
  std::string target, event_kind;
  std::vector<std::string> param_args;
  auto* record = event_cmd->add_subcommand("record", "Record a documentation event");
  record->add_option("entity", target)->required();
  record->add_option("event_kind", event_kind)->required();
  record->add_option("-p,--param", param_args, "name=value");
  record->callback([&] {
    action = [&] {
      return run_op(c, contracts::RecordEvent{parse_target(target), event_kind, parse_params(param_args)}, out, err);
    };
  });

  // product
  auto* product_cmd = app.add_subcommand("product", "Products and transformations")->require_subcommand(1);
  std::string parts;
  std::vector<std::string> inputs, outputs;
  auto* split = product_cmd->add_subcommand("split", "Split a product into parts");
  split->add_option("product", target)->required();
  split->add_option("--parts", parts, "Comma-separated quantities")->required();
  split->callback([&] {
    action = [&] { return run_op(c, contracts::SplitProduct{parse_target(target), parse_parts(parts)}, out, err); };
  });
  auto* merge = product_cmd->add_subcommand("merge", "Merge products of one kind");
  merge->add_option("products", inputs)->required();
  merge->add_option("--parts", parts, "Comma-separated output quantities")->required();
  merge->callback([&] {
    action = [&] {
      std::vector<Address> ps;
      for (const auto& p : inputs) ps.push_back(parse_target(p));
      return run_op(c, contracts::MergeProducts{ps, parse_parts(parts)}, out, err);
    };
  });
  auto* transform = product_cmd->add_subcommand("transform", "Run a transformation event");
  transform->add_option("--event", event_kind)->required();
  transform->add_option("--input", inputs, "Input entity")->required();
  transform->add_option("--output", outputs, "kind:quantity[:unit[:producer]]")->required();
  transform->add_option("-p,--param", param_args, "name=value");
  transform->callback([&] {
    action = [&] {
      contracts::Transform t;
      t.event_kind_id = event_kind;
      for (const auto& i : inputs) t.inputs.push_back(parse_target(i));
      for (const auto& o : outputs) {
        std::vector<std::string> f;
        std::stringstream ss(o);
        std::string item;
        while (std::getline(ss, item, ':')) f.push_back(item);
        if (f.size() < 2 || f.size() > 4) throw Error(ErrorCode::invalid_argument, "bad output \"" + o + "\"");
        auto q = parse_parts(f[1]);
        if (q.size() != 1) throw Error(ErrorCode::invalid_argument, "bad output quantity \"" + f[1] + "\"");
        t.outputs.push_back(contracts::OutputSpec{f[0], q[0], f.size() > 2 ? f[2] : "", f.size() > 3 ? f[3] : ""});
      }
      t.values = parse_params(param_args);
      return run_op(c, t, out, err);
    };
  });

  // token
  auto* token_cmd = app.add_subcommand("token", "Token balances")->require_subcommand(1);
  auto* balances = token_cmd->add_subcommand("balances", "List token balances");
  balances->callback([&] {
    action = [&] {
      auto l = open_chain(c);
      auto w = world_of(*l);
      json arr = json::array();
      for (const auto& [key, amount] : w->token_balances()) {
        std::string actor;
        if (const auto* e = w->catalog_entry(key.second)) actor = e->actor_id;
        if (c.json_out)
          arr.push_back(json{{"kind_id", key.first}, {"holder", key.second.hex()}, {"actor", actor}, {"amount", amount}});
        else
          out << key.first << " " << key.second.hex() << " (" << actor << ") " << amount << "\n";
      }
      if (c.json_out) out << arr.dump(2) << "\n";
      return 0;
    };
  });

  // doc
  auto* doc_cmd = app.add_subcommand("doc", "Document store")->require_subcommand(1);
  std::string file, id_text, locator;
  auto* put = doc_cmd->add_subcommand("put", "Store a file");
  put->add_option("file", file)->required()->check(CLI::ExistingFile);
  put->callback([&] {
    action = [&] {
      docstore::DocStore store(c.docs);
      Digest id = store.put_file(file);
      out << (c.json_out ? json{{"content_id", id.hex()}}.dump(2) : id.hex()) << "\n";
      return 0;
    };
  });
  auto* get = doc_cmd->add_subcommand("get", "Retrieve a verified file");
  get->add_option("id", id_text)->required();
  get->add_option("-o,--out", file, "Output file")->required();
  get->callback([&] {
    action = [&] {
      docstore::DocStore store(c.docs);
      Bytes data = store.get(Digest::from_hex(id_text));
      write_file(file, std::string(data.begin(), data.end()));
      return 0;
    };
  });
  auto* notarize = doc_cmd->add_subcommand("notarize", "Store a file and notarize it on an entity");
  notarize->add_option("entity", target)->required();
  notarize->add_option("file", file)->required()->check(CLI::ExistingFile);
  notarize->add_option("--locator", locator);
  notarize->callback([&] {
    action = [&] {
      docstore::DocStore store(c.docs);
      Digest id = store.put_file(file);
      return run_op(c, contracts::Notarize{parse_target(target), id.hex(),
                                           locator.empty() ? "docstore:" + id.hex() : locator, {}},
                    out, err);
    };
  });

  // trace
  auto* trace_cmd = app.add_subcommand("trace", "Provenance navigation")->require_subcommand(1);
  std::optional<std::size_t> max_depth;
  auto* back = trace_cmd->add_subcommand("back", "Trace origins of an entity");
  back->add_option("entity", target, "Address or trace:// payload")->required();
  back->add_option("--max-depth", max_depth);
  back->callback([&] {
    action = [&] {
      auto l = open_chain(c);
      auto nav = provenance::Navigator::from_ledger(*l);
      out << provenance::render_trace(nav.trace_back(parse_target(target), max_depth), c.json_out ? "json" : "text");
      return 0;
    };
  });
  auto* forward = trace_cmd->add_subcommand("forward", "List descendants of an entity");
  forward->add_option("entity", target)->required();
  forward->callback([&] {
    action = [&] {
      auto l = open_chain(c);
      auto nav = provenance::Navigator::from_ledger(*l);
      out << provenance::render_forward(nav.trace_forward(parse_target(target)), c.json_out ? "json" : "text");
      return 0;
    };
  });
  auto* qr = trace_cmd->add_subcommand("qr", "Print the QR payload of an entity");
  qr->add_option("entity", target)->required();
  qr->callback([&] {
    action = [&] {
      auto l = open_chain(c);
      auto w = world_of(*l);
      Address a = parse_target(target);
      if (!w->entity(a)) throw Error(ErrorCode::unknown_entity, "unknown entity " + a.hex());
      out << provenance::QrPayload{w->chain_id(), a}.str() << "\n";
      return 0;
    };
  });

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "Code generation")->require_subcommand(1);
  std::string target_lang = "all";
  auto* gcontracts = gen_cmd->add_subcommand("contracts", "Generate contract IR and sources");
  gcontracts->add_option("config_dir", config_dir)->required();
  gcontracts->add_option("-o,--out", out_dir)->required();
  gcontracts->add_option("--target", target_lang, "solidity, markdown, ir or all");
  gcontracts->callback([&] {
    action = [&] {
      auto cfg = config::load_config_dir(config_dir);
      auto ir = generator::generate_contract_ir(cfg);
      std::size_t n = 0;
      if (target_lang == "ir" || target_lang == "all") {
        write_file(fs::path(out_dir) / "contracts.ir.json", generator::ir_to_json(ir));
        ++n;
      }
      for (std::string t : {"solidity", "markdown"}) {
        if (target_lang != t && target_lang != "all") continue;
        for (const auto& f : generator::render_contracts(ir, t)) {
          write_file(fs::path(out_dir) / t / f.path, f.content);
          ++n;
        }
      }
      if (n == 0) throw Error(ErrorCode::unknown_target, "unknown target \"" + target_lang + "\"");
      out << "wrote " << n << " file(s) to " << out_dir << "\n";
      return 0;
    };
  });
  auto* gforms = gen_cmd->add_subcommand("forms", "Generate per-event form schemas");
  gforms->add_option("config_dir", config_dir)->required();
  gforms->add_option("-o,--out", out_dir)->required();
  gforms->callback([&] {
    action = [&] {
      auto cfg = config::load_config_dir(config_dir);
      auto schemas = generator::generate_form_schemas(cfg);
      for (const auto& s : schemas)
        write_file(fs::path(out_dir) / (s.event_kind_id + ".form.json"), generator::form_schema_to_json(s));
      write_file(fs::path(out_dir) / "forms.json", generator::form_schemas_to_json(schemas));
      out << "wrote " << schemas.size() << " form schema(s) to " << out_dir << "\n";
      return 0;
    };
  });

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  std::string listen;
  serve->add_option("--config-dir", config_dir, "Descriptors for a fresh genesis when the chain file is missing");
  serve->add_option("--listen", listen, "host:port (default from AGRITRACE_HOST/AGRITRACE_PORT or 127.0.0.1:8080)");
  serve->add_option("--chain-id", chain_id);
  serve->callback([&] {
    action = [&] {
      if (!fs::exists(c.chain)) {
        if (config_dir.empty()) throw Error(ErrorCode::not_found, "no chain file and no --config-dir for genesis");
        init_chain(c, config_dir, chain_id, storage, true, false, out);
      } else if (!config_dir.empty()) {
        config::load_config_dir(config_dir);  // still reject an invalid config
      }
      service::ServiceOptions opt;
      opt.apply_env();
      if (!listen.empty()) {
        auto colon = listen.rfind(':');
        if (colon == std::string::npos) throw Error(ErrorCode::invalid_argument, "--listen must be host:port");
        opt.host = listen.substr(0, colon);
        opt.port = std::stoi(listen.substr(colon + 1));
      }
      auto l = open_chain(c);
      service::Service svc(std::move(l), keystore::Keystore::load(c.keystore),
                           std::make_unique<docstore::DocStore>(c.docs), opt);
      int port = svc.bind();
      out << "listening on " << opt.host << ":" << port << "\n" << std::flush;
      g_running = &svc;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      svc.run();
      g_running = nullptr;
      return 0;
    };
  });

  std::vector<std::string> argv_store{"trace"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << "\n" << app.help();
    return 2;
  }
  if (!action) {
    err << app.help();
    return 2;
  }
  try {
    return action();
  } catch (const Error& e) {
    if (c.json_out)
      out << json{{"ok", false}, {"error", json{{"code", to_string(e.code())}, {"message", e.what()}}}}.dump(2) << "\n";
    else
      err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  }
}

}  // namespace agritrace::cli
