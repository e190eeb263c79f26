#include "agritrace/service.hpp"

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>
#include <sodium.h>

#include "agritrace/contracts.hpp"
#include "agritrace/generator.hpp"
#include "agritrace/provenance.hpp"

namespace agritrace::service {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
using contracts::World;

namespace {

constexpr const char* kJson = "application/json";

struct HttpError {
  int status;
  std::string code;
  std::string message;
};

[[noreturn]] void fail(int status, std::string code, std::string message) {
  throw HttpError{status, std::move(code), std::move(message)};
}

void send_json(httplib::Response& res, int status, const ojson& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", kJson);
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, status, ojson{{"error", ojson{{"code", code}, {"message", message}}}});
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) fail(400, "invalid_argument", "request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    fail(400, "parse_error", std::string("request body is not JSON: ") + e.what());
  }
}

Address parse_address(const std::string& text) {
  try {
    return Address::from_hex(text);
  } catch (const Error&) {
    fail(400, "invalid_argument", "malformed address \"" + text + "\"");
  }
}

std::shared_ptr<const World> world_of(const ledger::Ledger& ledger) {
  auto w = contracts::sealed_world(ledger);
  if (!w || !w->initialized()) fail(503, "not_found", "chain has no genesis");
  return w;
}

// Accepts {"name": value, ...} or [{"name":..,"value":..}, ...].
json normalize_params(const json& body) {
  json out = json::array();
  if (!body.contains("params")) return out;
  const json& p = body["params"];
  auto text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  if (p.is_object()) {
    for (auto it = p.begin(); it != p.end(); ++it) out.push_back(json{{"name", it.key()}, {"value", text(it.value())}});
  } else if (p.is_array()) {
    for (const auto& e : p) {
      if (!e.is_object() || !e.contains("name") || !e.contains("value"))
        fail(400, "invalid_argument", "params entries need name and value");
      out.push_back(json{{"name", e["name"]}, {"value", text(e["value"])}});
    }
  } else {
    fail(400, "invalid_argument", "params must be an object or an array");
  }
  return out;
}

ojson entity_json(const contracts::Entity& e, const World& world, const provenance::Navigator& nav) {
  ojson origins = ojson::array(), produced = ojson::array();
  for (const auto& a : e.origins) origins.push_back(a.hex());
  for (const auto& a : e.produced) produced.push_back(a.hex());
  provenance::TraceNode node = nav.trace_back(e.address, 0);
  ojson events = json::parse(provenance::render_trace(node, "json"))["events"];
  ojson j{{"address", e.address.hex()},
          {"kind_id", e.kind_id},
          {"class", config::to_string(e.kind_class)},
          {"producer", e.producer},
          {"creator", e.creator.hex()},
          {"created_block", e.created.block_height},
          {"active", e.active()},
          {"description", e.description},
          {"quantity", e.quantity},
          {"unit", e.unit},
          {"origins", origins},
          {"produced", produced},
          {"events", events}};
  if (e.is_product()) j["token_holder"] = e.token_holder.hex();
  j["qr"] = provenance::QrPayload{world.chain_id(), e.address}.str();
  return j;
}

std::string random_token() {
  std::array<std::uint8_t, 32> buf{};
  randombytes_buf(buf.data(), buf.size());
  return to_hex(buf);
}

std::string bearer(const httplib::Request& req) {
  std::string h = req.get_header_value("Authorization");
  constexpr std::string_view prefix = "Bearer ";
  if (h.rfind(prefix, 0) == 0) return h.substr(prefix.size());
  return req.get_header_value("X-Session-Token");
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::unauthorized:
    case ErrorCode::role_missing:
    case ErrorCode::not_required_approver: return 403;
    case ErrorCode::not_found: return 404;
    case ErrorCode::integrity_error: return 409;
    case ErrorCode::parse_error: return 400;
    default: return 422;
  }
}

void ServiceOptions::apply_env() {
  if (const char* v = std::getenv("AGRITRACE_HOST")) host = v;
  if (const char* v = std::getenv("AGRITRACE_PORT")) port = std::atoi(v);
  if (const char* v = std::getenv("AGRITRACE_STATIC_DIR")) static_dir = v;
}

Service::Service(std::unique_ptr<ledger::Ledger> ledger, keystore::Keystore keys,
                 std::unique_ptr<docstore::DocStore> docs, ServiceOptions options)
    : ledger_(std::move(ledger)),
      keys_(std::move(keys)),
      docs_(std::move(docs)),
      options_(std::move(options)),
      server_(std::make_unique<httplib::Server>()) {
  if (sodium_init() < 0) throw Error(ErrorCode::io_error, "libsodium failed to initialize");
  routes();
}

Service::~Service() { stop(); }

int Service::bind() {
  if (options_.port == 0) {
    port_ = server_->bind_to_any_port(options_.host);
    if (port_ < 0) throw Error(ErrorCode::io_error, "cannot bind " + options_.host);
  } else {
    if (!server_->bind_to_port(options_.host, options_.port))
      throw Error(ErrorCode::io_error, "cannot bind " + options_.host + ":" + std::to_string(options_.port) +
                                           " (port busy?)");
    port_ = options_.port;
  }
  return port_;
}

void Service::run() { server_->listen_after_bind(); }

void Service::stop() {
  if (server_) server_->stop();
}

std::optional<Service::Session> Service::session_for(const std::string& token) const {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(token);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

void Service::routes() {
  auto& srv = *server_;
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  // Wraps a handler with uniform error mapping.
  auto guard = [](Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const HttpError& e) {
        send_error(res, e.status, e.code, e.message);
      } catch (const Error& e) {
        send_error(res, http_status(e.code()), std::string(to_string(e.code())), e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    };
  };

  // Runs one contract operation for the session's key, with idempotency.
  auto mutate = [this](const httplib::Request& req, httplib::Response& res,
                       const std::function<contracts::Operation(const Session&)>& build) {
    std::string token = bearer(req);
    auto session = session_for(token);
    if (!session) fail(401, "unauthorized", "missing or unknown session token");

    std::string idem = req.get_header_value("Idempotency-Key");
    std::string idem_key = idem.empty() ? "" : session->actor_id + "\n" + req.method + " " + req.path + "\n" + idem;

    std::lock_guard lock(write_mutex_);
    if (!idem_key.empty()) {
      if (auto it = idempotent_.find(idem_key); it != idempotent_.end()) {
        res.status = it->second.status;
        res.set_content(it->second.body, kJson);
        res.set_header("Idempotent-Replay", "true");
        return;
      }
    }
    contracts::Operation op;
    ledger::Receipt receipt;
    try {
      op = build(*session);
      receipt = contracts::Client(*ledger_).send(session->key, op);
    } catch (const HttpError&) {
      throw;
    } catch (const Error& e) {
      receipt.ok = false;
      receipt.error = e.code();
      receipt.message = e.what();
    }
    ojson body;
    int status;
    if (receipt.ok) {
      ojson created = ojson::array();
      for (const auto& a : contracts::created_entities(receipt)) created.push_back(a.hex());
      body = ojson{{"ok", true},
                   {"operation", contracts::operation_name(op)},
                   {"tx", receipt.tx_digest.hex()},
                   {"block_height", receipt.block_height},
                   {"tx_index", receipt.tx_index},
                   {"gas_used", receipt.gas_used},
                   {"created", created}};
      status = 200;
    } else {
      ErrorCode code = receipt.error.value_or(ErrorCode::invalid_argument);
      body = ojson{{"error", ojson{{"code", to_string(code)}, {"message", receipt.message}}}};
      status = http_status(code);
      if (code == ErrorCode::not_found) status = 422;
    }
    std::string text = body.dump(2) + "\n";
    if (!idem_key.empty()) idempotent_[idem_key] = StoredResponse{status, text};
    res.status = status;
    res.set_content(text, kJson);
  };

  // --- read side ------------------------------------------------------------

  srv.Get("/api/v1/health", guard([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, ojson{{"ok", true}, {"height", ledger_->height()}});
          }));

  srv.Get("/api/v1/config", guard([this](const httplib::Request&, httplib::Response& res) {
            auto w = world_of(*ledger_);
            res.set_content(config::serialize_config(w->config().descriptors()), kJson);
          }));

  srv.Get("/api/v1/schemas", guard([this](const httplib::Request&, httplib::Response& res) {
            auto w = world_of(*ledger_);
            res.set_content(generator::form_schemas_to_json(generator::generate_form_schemas(w->config())), kJson);
          }));

  srv.Get(R"(/api/v1/schemas/([^/]+))", guard([this](const httplib::Request& req, httplib::Response& res) {
            auto w = world_of(*ledger_);
            const config::EventKindDef* ev = w->config().find_event_kind(req.matches[1].str());
            if (!ev) fail(404, "unknown_event_kind", "unknown event kind \"" + req.matches[1].str() + "\"");
            res.set_content(generator::form_schema_to_json(generator::generate_form_schema(w->config(), ev->id)), kJson);
          }));

  srv.Get("/api/v1/contracts", guard([this](const httplib::Request&, httplib::Response& res) {
            auto w = world_of(*ledger_);
            res.set_content(generator::ir_to_json(generator::generate_contract_ir(w->config())), kJson);
          }));

  srv.Get("/api/v1/chain", guard([this](const httplib::Request&, httplib::Response& res) {
            auto w = world_of(*ledger_);
            send_json(res, 200, ojson{{"chain_id", w->chain_id()},
                                      {"height", ledger_->height()},
                                      {"state_root", ledger_->state_root().hex()},
                                      {"payload_storage", ledger::to_string(w->payload_storage())}});
          }));

  srv.Get("/api/v1/chain/verify", guard([this](const httplib::Request&, httplib::Response& res) {
            auto report = ledger::verify_chain(ledger_->blocks(), contracts::world_factory(), ledger_->schedule());
            ojson j{{"ok", report.ok}, {"blocks_checked", report.blocks_checked}, {"reason", report.reason}};
            if (report.failed_block) j["failed_block"] = *report.failed_block;
            send_json(res, report.ok ? 200 : 409, j);
          }));

  srv.Get("/api/v1/entities", guard([this](const httplib::Request& req, httplib::Response& res) {
            auto w = world_of(*ledger_);
            std::string kind = req.get_param_value("kind");
            ojson out = ojson::array();
            for (const auto& [addr, e] : w->entities()) {
              if (!kind.empty() && e.kind_id != kind) continue;
              out.push_back(ojson{{"address", addr.hex()},
                                  {"kind_id", e.kind_id},
                                  {"class", config::to_string(e.kind_class)},
                                  {"producer", e.producer},
                                  {"quantity", e.quantity},
                                  {"unit", e.unit},
                                  {"active", e.active()}});
            }
            send_json(res, 200, out);
          }));

  srv.Get(R"(/api/v1/entities/([^/]+))", guard([this](const httplib::Request& req, httplib::Response& res) {
            Address addr = parse_address(req.matches[1].str());
            auto nav = provenance::Navigator::from_ledger(*ledger_);
            const contracts::Entity* e = nav.world().entity(addr);
            if (!e) fail(404, "unknown_entity", "unknown entity " + addr.hex());
            send_json(res, 200, entity_json(*e, nav.world(), nav));
          }));

  srv.Get(R"(/api/v1/entities/([^/]+)/trace)", guard([this](const httplib::Request& req, httplib::Response& res) {
            Address addr = parse_address(req.matches[1].str());
            std::string dir = req.has_param("dir") ? req.get_param_value("dir") : "back";
            std::string format = req.has_param("format") ? req.get_param_value("format") : "json";
            if (format != "json" && format != "text") fail(400, "unknown_format", "unknown format \"" + format + "\"");
            auto nav = provenance::Navigator::from_ledger(*ledger_);
            if (!nav.world().entity(addr)) fail(404, "unknown_entity", "unknown entity " + addr.hex());
            std::string body;
            if (dir == "back") {
              std::optional<std::size_t> depth;
              if (req.has_param("max_depth")) depth = std::stoul(req.get_param_value("max_depth"));
              body = provenance::render_trace(nav.trace_back(addr, depth), format);
            } else if (dir == "forward") {
              body = provenance::render_forward(nav.trace_forward(addr), format);
            } else {
              fail(400, "invalid_argument", "dir must be back or forward");
            }
            res.set_content(body, format == "json" ? kJson : "text/plain; charset=utf-8");
          }));

  srv.Get(R"(/api/v1/qr/([^/]+))", guard([this](const httplib::Request& req, httplib::Response& res) {
            Address addr = parse_address(req.matches[1].str());
            auto w = world_of(*ledger_);
            if (!w->entity(addr)) fail(404, "unknown_entity", "unknown entity " + addr.hex());
            res.set_content(provenance::QrPayload{w->chain_id(), addr}.str(), "text/plain; charset=utf-8");
          }));

  srv.Get("/api/v1/resolve", guard([this](const httplib::Request& req, httplib::Response& res) {
            auto q = provenance::QrPayload::parse(req.get_param_value("qr"));
            auto w = world_of(*ledger_);
            if (q.chain_id != w->chain_id()) fail(404, "not_found", "payload names another chain");
            if (!w->entity(q.address)) fail(404, "unknown_entity", "unknown entity " + q.address.hex());
            send_json(res, 200, ojson{{"chain_id", q.chain_id}, {"address", q.address.hex()}});
          }));

  srv.Get("/api/v1/tokens", guard([this](const httplib::Request&, httplib::Response& res) {
            auto w = world_of(*ledger_);
            ojson tokens = ojson::array();
            for (const auto& [key, amount] : w->token_balances())
              tokens.push_back(ojson{{"kind_id", key.first}, {"holder", key.second.hex()}, {"amount", amount}});
            ojson native = ojson::object();
            for (const auto& [a, v] : w->native_balances()) native[a.hex()] = v;
            send_json(res, 200, ojson{{"tokens", tokens}, {"native", native}});
          }));

  srv.Get(R"(/api/v1/documents/([0-9a-fA-F]{64}))", guard([this](const httplib::Request& req, httplib::Response& res) {
            Digest id = Digest::from_hex(req.matches[1].str());
            Bytes data = docs_->get(id);
            auto st = docs_->stat(id);
            std::string type = st && !st->media_type.empty() ? st->media_type : "application/octet-stream";
            res.set_header("X-Content-Digest", id.hex());
            res.set_content(std::string(data.begin(), data.end()), type);
          }));

  // --- sessions -----------------------------------------------------------

  srv.Post("/api/v1/sessions", guard([this](const httplib::Request& req, httplib::Response& res) {
             json body = parse_body(req);
             if (!body.contains("actor_id") || !body["actor_id"].is_string() || !body.contains("passphrase") ||
                 !body["passphrase"].is_string())
               fail(400, "invalid_argument", "actor_id and passphrase are required");
             std::string actor = body["actor_id"];
             KeyPair key = [&] {
               try {
                 return keys_.unlock(actor, body["passphrase"].get<std::string>());
               } catch (const Error&) {
                 fail(401, "unauthorized", "unknown actor or wrong passphrase");
               }
             }();
             std::string token = random_token();
             {
               std::lock_guard lock(sessions_mutex_);
               sessions_.emplace(token, Session{actor, key});
             }
             ojson roles = ojson::array();
             bool registered = false;
             if (auto w = contracts::sealed_world(*ledger_)) {
               if (const auto* c = w->catalog_entry(key.address())) {
                 registered = c->enabled;
                 for (auto r : c->roles) roles.push_back(config::to_string(r));
               }
             }
             send_json(res, 201, ojson{{"token", token},
                                       {"actor_id", actor},
                                       {"address", key.address().hex()},
                                       {"registered", registered},
                                       {"roles", roles}});
           }));

  srv.Delete("/api/v1/sessions", guard([this](const httplib::Request& req, httplib::Response& res) {
               std::lock_guard lock(sessions_mutex_);
               sessions_.erase(bearer(req));
               res.status = 204;
             }));

  // --- mutations ----------------------------------------------------------

  auto post_op = [&](const std::string& pattern, std::string_view op_name,
                     std::function<json(const httplib::Request&, const json&)> shape) {
    srv.Post(pattern, guard([this, mutate, op_name, shape](const httplib::Request& req, httplib::Response& res) {
               json body = parse_body(req);
               json args = shape(req, body);
               mutate(req, res, [&](const Session&) { return contracts::decode_operation(op_name, args.dump()); });
             }));
  };

  post_op("/api/v1/actors", contracts::RegisterAddress::name,
          [](const httplib::Request&, const json& b) { return b; });
  post_op(R"(/api/v1/actors/([^/]+)/enabled)", contracts::SetAddressEnabled::name,
          [](const httplib::Request& req, const json& b) {
            json a = b;
            a["address"] = req.matches[1].str();
            return a;
          });
  post_op("/api/v1/resources", contracts::CreateResource::name,
          [](const httplib::Request&, const json& b) { return b; });
  post_op("/api/v1/events", contracts::RecordEvent::name, [](const httplib::Request&, const json& b) {
    json a = b;
    a["params"] = normalize_params(b);
    return a;
  });
  post_op("/api/v1/transform", contracts::Transform::name, [](const httplib::Request&, const json& b) {
    json a = b;
    a["params"] = normalize_params(b);
    return a;
  });
  post_op(R"(/api/v1/products/([^/]+)/split)", contracts::SplitProduct::name,
          [](const httplib::Request& req, const json& b) {
            json a = b;
            a["product"] = req.matches[1].str();
            return a;
          });
  post_op(R"(/api/v1/products/([^/]+)/merge)", contracts::MergeProducts::name,
          [](const httplib::Request& req, const json& b) {
            json products = json::array({req.matches[1].str()});
            if (b.contains("with")) {
              if (!b["with"].is_array()) fail(400, "invalid_argument", "with must be an array of addresses");
              for (const auto& v : b["with"]) products.push_back(v);
            }
            json a = b;
            a.erase("with");
            a["products"] = products;
            return a;
          });
  post_op("/api/v1/asseverate", contracts::Asseverate::name,
          [](const httplib::Request&, const json& b) { return b; });
  post_op("/api/v1/unlock", contracts::RequestUnlock::name, [](const httplib::Request&, const json& b) { return b; });
  post_op(R"(/api/v1/unlock/(\d+)/approve)", contracts::ApproveUnlock::name,
          [](const httplib::Request& req, const json&) {
            return json{{"request_id", std::stoull(req.matches[1].str())}};
          });
  post_op("/api/v1/pay", contracts::Pay::name, [](const httplib::Request&, const json& b) { return b; });

  // Notarization: multipart upload (file + entity [+ locator, metadata]) or
  // JSON with a digest of an already stored document.
  srv.Post("/api/v1/notarize", guard([this, mutate](const httplib::Request& req, httplib::Response& res) {
             json args;
             if (req.is_multipart_form_data()) {
               if (!req.has_file("file")) fail(400, "empty_document", "multipart request without a file part");
               if (!req.has_file("entity")) fail(400, "invalid_argument", "multipart request without an entity part");
               auto file = req.get_file_value("file");
               if (file.content.empty()) fail(422, "empty_document", "uploaded file is empty");
               Digest id = docs_->put(as_bytes(file.content), file.content_type);
               args["entity"] = req.get_file_value("entity").content;
               args["digest"] = id.hex();
               args["locator"] = req.has_file("locator") ? req.get_file_value("locator").content
                                                          : "docstore:" + id.hex();
               if (req.has_file("metadata")) {
                 try {
                   args["metadata"] = json::parse(req.get_file_value("metadata").content);
                 } catch (const json::parse_error&) {
                   fail(400, "parse_error", "metadata part is not JSON");
                 }
               }
             } else {
               args = parse_body(req);
               if (args.contains("digest") && args["digest"].is_string() && !args.contains("locator"))
                 args["locator"] = "docstore:" + args["digest"].get<std::string>();
             }
             if (!args.contains("digest")) args["digest"] = "";
             mutate(req, res, [&](const Session&) { return contracts::decode_operation(contracts::Notarize::name, args.dump()); });
           }));

  srv.Post("/api/v1/documents", guard([this](const httplib::Request& req, httplib::Response& res) {
             if (!session_for(bearer(req))) fail(401, "unauthorized", "missing or unknown session token");
             std::string content, type;
             if (req.is_multipart_form_data()) {
               if (!req.has_file("file")) fail(400, "empty_document", "multipart request without a file part");
               auto f = req.get_file_value("file");
               content = f.content;
               type = f.content_type;
             } else {
               content = req.body;
               type = req.get_header_value("Content-Type");
             }
             Digest id = docs_->put(as_bytes(content), type);
             send_json(res, 201, ojson{{"content_id", id.hex()}, {"size", content.size()}});
           }));

  if (options_.static_dir) srv.set_mount_point("/", options_.static_dir->string());
}

}  // namespace agritrace::service
