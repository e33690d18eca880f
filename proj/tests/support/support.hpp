#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "emag/interest.hpp"
#include "emag/matrix.hpp"
#include "emag/time.hpp"

namespace httplib {
class Server;
}

namespace testing_support {

std::filesystem::path fixture_dir();
std::filesystem::path schema_path();
std::string read_file(const std::filesystem::path& p);

class TempDir {
 public:
  TempDir();
  ~TempDir();
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

emag::Timestamp at(const char* iso8601);

/// Settable clock shared by reference with an Engine.
class ManualClock {
 public:
  explicit ManualClock(emag::Timestamp t) : now_(t.time_since_epoch().count()) {}
  emag::Clock fn() {
    return [this] { return emag::Timestamp(std::chrono::seconds(now_.load())); };
  }
  void set(emag::Timestamp t) { now_ = t.time_since_epoch().count(); }
  void advance(std::chrono::seconds d) { now_ += d.count(); }
  emag::Timestamp now() const { return emag::Timestamp(std::chrono::seconds(now_.load())); }

 private:
  std::atomic<long long> now_;
};

// --- numerical oracle ---------------------------------------------------------

struct EigenResult {
  std::vector<double> values;  // descending
  emag::Matrix vectors;        // column i belongs to values[i]
};

/// Classical two-sided Jacobi eigenvalue iteration on a symmetric matrix.
EigenResult symmetric_eigen(const emag::Matrix& a);

/// Singular values of a from the eigenvalues of A^T A, descending, length
/// min(m, n).
std::vector<double> oracle_singular_values(const emag::Matrix& a);

emag::Matrix random_matrix(std::mt19937_64& rng, std::size_t m, std::size_t n);

// --- schema -------------------------------------------------------------------

/// Validates a JSON value against the subset of JSON Schema used by
/// schemas/api.schema.json: type (string or list), properties, required,
/// additionalProperties (bool), items, anyOf, enum, minimum, maximum, minLength,
/// $ref into #/definitions. Returns one message per violation.
std::vector<std::string> validate(const nlohmann::json& schema, const nlohmann::json& value,
                                  const nlohmann::json& root);

/// The most specific "METHOD /pattern/{param}" entry of routes matching
/// method and path, or "" when none does.
std::string match_route(const std::vector<std::string>& routes, const std::string& method,
                        const std::string& path);

// --- HTTP fixture server ------------------------------------------------------

struct FixtureResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/rss+xml";
};

/// Serves canned responses on 127.0.0.1 with an ephemeral port.
class FixtureServer {
 public:
  FixtureServer();
  ~FixtureServer();
  void set(const std::string& path, FixtureResponse response);
  std::string url(const std::string& path) const;
  int hits(const std::string& path) const;

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mutex_;
  std::map<std::string, FixtureResponse> routes_;
  std::map<std::string, int> hits_;
};

/// A port on 127.0.0.1 with nothing listening.
int closed_port();

// --- builders -----------------------------------------------------------------

emag::UserProfile make_user(const std::string& id,
                            const std::vector<std::pair<std::string, double>>& weights,
                            emag::Timestamp touched = emag::Timestamp{});

}  // namespace testing_support

namespace testing_support {

/// Every .xml and .html fixture under fixtures/scrape, sorted by name.
std::vector<std::filesystem::path> scrape_fixtures();

/// Runs parse_feed / description_details (or the html extractors) on one
/// fixture and compares with its .expected.json. Also checks strip_text
/// idempotence and the absence of tag patterns in its output. Returns one
/// message per mismatch.
std::vector<std::string> check_scrape_fixture(const std::filesystem::path& fixture);

}  // namespace testing_support
