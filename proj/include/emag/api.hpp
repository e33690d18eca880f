#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emag/engine.hpp"
#include "emag/error.hpp"
#include "emag/time.hpp"

namespace httplib {
class Server;
}

namespace emag::api {

struct ApiSession {
  std::string token;
  std::string user_id;
  Timestamp expires_at;
};

/// In-memory token table. Tokens are 256 random bits, hex encoded.
class SessionStore {
 public:
  explicit SessionStore(std::chrono::hours ttl) : ttl_(ttl) {}

  ApiSession issue(const std::string& user_id, Timestamp now);
  /// Unknown and expired tokens both yield nullopt.
  std::optional<ApiSession> resolve(const std::string& token, Timestamp now) const;

 private:
  std::chrono::hours ttl_;
  mutable std::mutex mutex_;
  std::map<std::string, ApiSession> sessions_;
};

int status_for(ErrorKind kind);
std::string_view error_code(ErrorKind kind);

struct Request {
  std::string method;
  std::string path;  // percent-decoded, without the query string
  std::map<std::string, std::string> query;
  std::string bearer;  // token from the Authorization header, if any
  std::string body;
};

struct Response {
  int status = 200;
  nlohmann::json body;
};

class Service {
 public:
  explicit Service(Engine& engine);

  /// Transport-independent entry point; never throws.
  Response handle(const Request& request);

  /// Routes every request on the server through handle().
  void mount(httplib::Server& server);

  /// Every (method, path pattern) pair served, e.g. "GET /users/{id}/magazine".
  static const std::vector<std::string>& route_table();

  SessionStore& sessions() { return sessions_; }

 private:
  Response dispatch(const Request& request);
  std::string authenticate(const Request& request) const;
  void require_self(const Request& request, const std::string& user_id) const;

  Engine& engine_;
  SessionStore sessions_;
};

}  // namespace emag::api
