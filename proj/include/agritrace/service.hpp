#pragma once

// HTTP+JSON API over a ledger running the contract world. All endpoints live
// under /api/v1. Mutating endpoints need a session (POST /api/v1/sessions)
// and map one-to-one onto a signed ledger transaction.
//
// Status codes: 400 malformed request, 401 no or stale session, 403 contract
// authorization failure, 404 unknown resource, 409 document integrity
// failure, 422 any other contract rejection. Error bodies carry the contract
// error code verbatim: {"error":{"code":"...","message":"..."}}.

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "agritrace/docstore.hpp"
#include "agritrace/keystore.hpp"
#include "agritrace/ledger.hpp"

namespace httplib {
class Server;
}

namespace agritrace::service {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> static_dir;

  // Overrides fields from AGRITRACE_HOST, AGRITRACE_PORT and AGRITRACE_STATIC_DIR.
  void apply_env();
};

// HTTP status for a contract error code.
int http_status(ErrorCode code);

class Service {
 public:
  Service(std::unique_ptr<ledger::Ledger> ledger, keystore::Keystore keys, std::unique_ptr<docstore::DocStore> docs,
          ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds the listening socket and returns the bound port. Throws
  // Error{io_error} when the port is busy.
  int bind();
  // Serves until stop(); blocking.
  void run();
  void stop();

  ledger::Ledger& ledger() { return *ledger_; }
  docstore::DocStore& docs() { return *docs_; }
  int port() const { return port_; }

 private:
  struct Session {
    std::string actor_id;
    KeyPair key;
  };
  struct StoredResponse {
    int status = 0;
    std::string body;
  };

  void routes();
  std::optional<Session> session_for(const std::string& token) const;

  std::unique_ptr<ledger::Ledger> ledger_;
  keystore::Keystore keys_;
  std::unique_ptr<docstore::DocStore> docs_;
  ServiceOptions options_;
  std::unique_ptr<httplib::Server> server_;
  int port_ = 0;

  mutable std::mutex sessions_mutex_;
  std::map<std::string, Session> sessions_;

  std::mutex write_mutex_;  // submit+seal pairs and idempotency bookkeeping
  std::map<std::string, StoredResponse> idempotent_;
};

}  // namespace agritrace::service
