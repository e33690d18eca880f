#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <httplib.h>

namespace testing_support {

using nlohmann::json;

std::filesystem::path fixture_dir() { return EMAG_TEST_FIXTURES; }
std::filesystem::path schema_path() { return EMAG_TEST_SCHEMA; }

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("emag-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" +
           std::to_string(rd()));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

emag::Timestamp at(const char* iso8601) {
  auto t = emag::parse_iso8601(iso8601);
  if (!t) throw std::invalid_argument(std::string("bad timestamp in test: ") + iso8601);
  return *t;
}

EigenResult symmetric_eigen(const emag::Matrix& input) {
  const std::size_t n = input.rows();
  emag::Matrix a = input;
  emag::Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  for (int sweep = 0; sweep < 200; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return a(x, x) > a(y, y); });
  EigenResult r;
  r.vectors = emag::Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    r.values.push_back(a(order[j], order[j]));
    for (std::size_t i = 0; i < n; ++i) r.vectors(i, j) = v(i, order[j]);
  }
  return r;
}

std::vector<double> oracle_singular_values(const emag::Matrix& a) {
  emag::Matrix ata = a.transposed() * a;
  auto eig = symmetric_eigen(ata);
  std::size_t k = std::min(a.rows(), a.cols());
  std::vector<double> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(std::sqrt(std::max(0.0, eig.values[i])));
  return out;
}

emag::Matrix random_matrix(std::mt19937_64& rng, std::size_t m, std::size_t n) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  emag::Matrix a(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = d(rng);
  return a;
}

// --- schema -------------------------------------------------------------------

namespace {

bool type_matches(const std::string& type, const json& v) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "integer") return v.is_number_integer();
  if (type == "number") return v.is_number();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  return false;
}

void check(const json& schema, const json& v, const json& root, const std::string& where,
           std::vector<std::string>& errors) {
  if (schema.is_boolean()) {
    if (!schema.get<bool>()) errors.push_back(where + ": no value allowed");
    return;
  }
  if (auto any = schema.find("anyOf"); any != schema.end()) {
    for (const auto& alt : *any) {
      std::vector<std::string> sub;
      check(alt, v, root, where, sub);
      if (sub.empty()) return;
    }
    errors.push_back(where + ": matches no alternative of anyOf");
    return;
  }
  if (auto ref = schema.find("$ref"); ref != schema.end()) {
    const std::string r = ref->get<std::string>();
    const std::string prefix = "#/definitions/";
    if (r.rfind(prefix, 0) != 0) {
      errors.push_back(where + ": unsupported $ref " + r);
      return;
    }
    auto name = r.substr(prefix.size());
    if (!root.at("definitions").contains(name)) {
      errors.push_back(where + ": unknown definition " + name);
      return;
    }
    check(root.at("definitions").at(name), v, root, where, errors);
    return;
  }
  if (auto t = schema.find("type"); t != schema.end()) {
    bool ok = false;
    if (t->is_string()) ok = type_matches(t->get<std::string>(), v);
    else
      for (const auto& alt : *t) ok = ok || type_matches(alt.get<std::string>(), v);
    if (!ok) {
      errors.push_back(where + ": expected type " + t->dump() + ", got " + v.dump());
      return;
    }
  }
  if (auto e = schema.find("enum"); e != schema.end()) {
    if (std::find(e->begin(), e->end(), v) == e->end())
      errors.push_back(where + ": " + v.dump() + " not in " + e->dump());
  }
  if (v.is_number()) {
    if (auto mn = schema.find("minimum"); mn != schema.end() && v.get<double>() < mn->get<double>())
      errors.push_back(where + ": below minimum");
    if (auto mx = schema.find("maximum"); mx != schema.end() && v.get<double>() > mx->get<double>())
      errors.push_back(where + ": above maximum");
  }
  if (v.is_string()) {
    if (auto ml = schema.find("minLength");
        ml != schema.end() && v.get<std::string>().size() < ml->get<std::size_t>())
      errors.push_back(where + ": shorter than minLength");
  }
  if (v.is_object()) {
    if (auto req = schema.find("required"); req != schema.end())
      for (const auto& name : *req)
        if (!v.contains(name.get<std::string>()))
          errors.push_back(where + ": missing required property " + name.get<std::string>());
    const json props = schema.value("properties", json::object());
    for (const auto& [k, sub] : v.items()) {
      if (props.contains(k)) {
        check(props.at(k), sub, root, where + "." + k, errors);
      } else if (auto ap = schema.find("additionalProperties"); ap != schema.end()) {
        if (ap->is_boolean() && !ap->get<bool>())
          errors.push_back(where + ": unexpected property " + k);
        else if (ap->is_object())
          check(*ap, sub, root, where + "." + k, errors);
      }
    }
  }
  if (v.is_array()) {
    if (auto items = schema.find("items"); items != schema.end())
      for (std::size_t i = 0; i < v.size(); ++i)
        check(*items, v[i], root, where + "[" + std::to_string(i) + "]", errors);
  }
}

}  // namespace

std::vector<std::string> validate(const json& schema, const json& value, const json& root) {
  std::vector<std::string> errors;
  check(schema, value, root, "$", errors);
  return errors;
}

namespace {

std::vector<std::string> path_segments(const std::string& path) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < path.size()) {
    auto j = path.find('/', i);
    if (j == std::string::npos) j = path.size();
    if (j > i) out.push_back(path.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

}  // namespace

std::string match_route(const std::vector<std::string>& routes, const std::string& method,
                        const std::string& path) {
  auto segs = path_segments(path);
  std::string best;
  int best_literals = -1;
  for (const auto& route : routes) {
    auto space = route.find(' ');
    if (route.substr(0, space) != method) continue;
    auto pat = path_segments(route.substr(space + 1));
    if (pat.size() != segs.size()) continue;
    int literals = 0;
    bool ok = true;
    for (std::size_t i = 0; i < pat.size() && ok; ++i) {
      if (pat[i].front() == '{') continue;
      ok = pat[i] == segs[i];
      ++literals;
    }
    if (ok && literals > best_literals) {
      best = route;
      best_literals = literals;
    }
  }
  return best;
}

// --- HTTP fixture server ------------------------------------------------------

FixtureServer::FixtureServer() : server_(std::make_unique<httplib::Server>()) {
  server_->Get(R"(/.*)", [this](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(mutex_);
    ++hits_[req.path];
    auto it = routes_.find(req.path);
    if (it == routes_.end()) {
      res.status = 404;
      res.set_content("not found", "text/plain");
      return;
    }
    res.status = it->second.status;
    res.set_content(it->second.body, it->second.content_type);
  });
  port_ = server_->bind_to_any_port("127.0.0.1");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

FixtureServer::~FixtureServer() {
  server_->stop();
  thread_.join();
}

void FixtureServer::set(const std::string& path, FixtureResponse response) {
  std::lock_guard lock(mutex_);
  routes_[path] = std::move(response);
}

std::string FixtureServer::url(const std::string& path) const {
  return "http://127.0.0.1:" + std::to_string(port_) + path;
}

int FixtureServer::hits(const std::string& path) const {
  std::lock_guard lock(mutex_);
  auto it = hits_.find(path);
  return it == hits_.end() ? 0 : it->second;
}

int closed_port() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

emag::UserProfile make_user(const std::string& id,
                            const std::vector<std::pair<std::string, double>>& weights,
                            emag::Timestamp touched) {
  emag::UserProfile u;
  u.user_id = id;
  u.email = id + "@example.test";
  for (const auto& [kw, w] : weights) {
    emag::InterestEntry e;
    e.keyword = kw;
    e.weight = w;
    e.last_touched = touched;
    u.interests.emplace(kw, e);
  }
  return u;
}

}  // namespace testing_support
