#include "emag/api.hpp"

#include <openssl/rand.h>

#include <charconv>
#include <cstdio>

#include <httplib.h>

namespace emag::api {

using nlohmann::json;

// --- sessions ---------------------------------------------------------------

ApiSession SessionStore::issue(const std::string& user_id, Timestamp now) {
  unsigned char bytes[32];
  if (RAND_bytes(bytes, sizeof bytes) != 1) fail(ErrorKind::internal, "token generation failed");
  std::string token;
  token.reserve(64);
  for (unsigned char b : bytes) {
    char hex[3];
    std::snprintf(hex, sizeof hex, "%02x", b);
    token += hex;
  }
  ApiSession s{token, user_id, now + ttl_};
  std::lock_guard lock(mutex_);
  sessions_[token] = s;
  return s;
}

std::optional<ApiSession> SessionStore::resolve(const std::string& token, Timestamp now) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(token);
  if (it == sessions_.end() || now >= it->second.expires_at) return std::nullopt;
  return it->second;
}

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return 400;
    case ErrorKind::unauthorized: return 401;
    case ErrorKind::not_found: return 404;
    case ErrorKind::conflict: return 409;
    case ErrorKind::contract: return 422;
    case ErrorKind::io: return 502;
    case ErrorKind::internal: return 500;
  }
  return 500;
}

std::string_view error_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "bad_request";
    case ErrorKind::unauthorized: return "unauthorized";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::contract: return "contract_violation";
    case ErrorKind::io: return "upstream_error";
    case ErrorKind::internal: return "internal";
  }
  return "internal";
}

namespace {

Response error_response(int status, std::string_view code, const std::string& message) {
  return {status, {{"error", code}, {"message", message}}};
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < path.size()) {
    if (path[i] == '/') {
      ++i;
      continue;
    }
    auto j = path.find('/', i);
    if (j == std::string::npos) j = path.size();
    out.push_back(path.substr(i, j - i));
    i = j;
  }
  return out;
}

json parse_body(const Request& r) {
  if (r.body.empty()) fail(ErrorKind::invalid_argument, "request body required");
  json j = json::parse(r.body, nullptr, false);
  if (j.is_discarded()) fail(ErrorKind::invalid_argument, "request body is not valid JSON");
  if (!j.is_object()) fail(ErrorKind::invalid_argument, "request body must be a JSON object");
  return j;
}

template <class T>
T field(const json& body, const char* name) {
  auto it = body.find(name);
  if (it == body.end()) fail(ErrorKind::invalid_argument, std::string("missing field '") + name + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::invalid_argument, std::string("field '") + name + "' has the wrong type");
  }
}

std::optional<std::string> query_param(const Request& r, const std::string& name) {
  auto it = r.query.find(name);
  if (it == r.query.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

std::size_t size_param(const Request& r, const std::string& name, std::size_t fallback,
                       std::size_t lo, std::size_t hi) {
  auto v = query_param(r, name);
  if (!v) return fallback;
  std::size_t n = 0;
  auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), n);
  if (ec != std::errc() || p != v->data() + v->size() || n < lo || n > hi)
    fail(ErrorKind::invalid_argument, "query parameter '" + name + "' must be an integer in [" +
                                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return n;
}

SearchFilters filters_from_query(const Request& r) {
  SearchFilters f;
  if (auto m = query_param(r, "media")) {
    f.media = media_kind_from_string(*m);
    if (!f.media) fail(ErrorKind::invalid_argument, "unknown media kind '" + *m + "'");
  }
  for (auto [name, slot] : {std::pair{"from", &f.from}, std::pair{"to", &f.to}}) {
    if (auto v = query_param(r, name)) {
      *slot = parse_iso8601(*v);
      if (!*slot) fail(ErrorKind::invalid_argument, std::string("invalid date in '") + name + "'");
    }
  }
  f.source_id = query_param(r, "source");
  if (f.from && f.to && *f.from > *f.to) fail(ErrorKind::invalid_argument, "from is after to");
  return f;
}

json user_json(const UserProfile& u, const InterestConfig& cfg) {
  return {{"user_id", u.user_id},
          {"email", u.email},
          {"list_visibility", to_string(u.list_visibility)},
          {"event_count", u.event_count},
          {"progress", progress_percent(u.event_count, cfg)},
          {"created_at", format_iso8601(u.created_at)},
          {"interest_count", u.interests.size()}};
}

json interests_json(const UserProfile& u, const InterestConfig& cfg) {
  json list = json::array();
  for (const auto& kw : ranked_keywords(u)) list.push_back(entry_to_json(u.interests.at(kw), cfg));
  return list;
}

json changes_json(const std::vector<WeightChange>& changes) {
  json out = json::array();
  for (const auto& c : changes)
    out.push_back({{"keyword", c.keyword}, {"old_weight", c.old_weight}, {"new_weight", c.new_weight}});
  return out;
}

json saved_json(const SavedView& v) {
  json j = saved_to_json(v.saved);
  j["item"] = v.item;
  return j;
}

json session_json(const ApiSession& s) {
  return {{"user_id", s.user_id}, {"token", s.token}, {"expires_at", format_iso8601(s.expires_at)}};
}

}  // namespace

// --- service ----------------------------------------------------------------

Service::Service(Engine& engine)
    : engine_(engine), sessions_(std::chrono::hours(engine.config().session_ttl_hours)) {}

const std::vector<std::string>& Service::route_table() {
  static const std::vector<std::string> routes = {
      "GET /healthz",
      "POST /users",
      "POST /sessions",
      "GET /users/{id}",
      "POST /users/{id}/profile-import",
      "GET /users/{id}/magazine",
      "GET /search",
      "POST /events",
      "GET /users/{id}/interests",
      "PUT /users/{id}/interests",
      "GET /users/{id}/interests/{keyword}",
      "PUT /users/{id}/interests/{keyword}",
      "DELETE /users/{id}/interests/{keyword}",
      "PUT /users/{id}/visibility",
      "GET /users/{id}/interests/visible",
      "POST /users/{id}/follow",
      "GET /users/{id}/recommendations",
      "POST /users/{id}/saved",
      "GET /users/{id}/saved",
      "GET /users/{id}/saved/{content_id}",
      "DELETE /users/{id}/saved/{content_id}",
      "POST /contents/{id}/rating",
      "POST /contents/{id}/share",
      "GET /users/{id}/progress",
  };
  return routes;
}

std::string Service::authenticate(const Request& r) const {
  if (r.bearer.empty()) fail(ErrorKind::unauthorized, "missing bearer token");
  auto s = sessions_.resolve(r.bearer, engine_.now());
  if (!s) fail(ErrorKind::unauthorized, "invalid or expired token");
  return s->user_id;
}

void Service::require_self(const Request& r, const std::string& user_id) const {
  if (authenticate(r) != user_id)
    fail(ErrorKind::unauthorized, "token does not belong to user '" + user_id + "'");
}

Response Service::handle(const Request& request) {
  try {
    return dispatch(request);
  } catch (const Error& e) {
    return error_response(status_for(e.kind()), error_code(e.kind()), e.what());
  } catch (const json::exception& e) {
    return error_response(400, "bad_request", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

Response Service::dispatch(const Request& r) {
  const auto seg = split_path(r.path);
  const std::string& m = r.method;
  const auto& icfg = engine_.config().interest;
  auto not_allowed = [&] {
    return error_response(405, "method_not_allowed", m + " is not supported on " + r.path);
  };

  if (seg.size() == 1 && seg[0] == "healthz") {
    if (m != "GET") return not_allowed();
    return {200, {{"status", "ok"}}};
  }

  if (seg.size() == 1 && seg[0] == "users") {
    if (m != "POST") return not_allowed();
    json body = parse_body(r);
    UserProfile u = engine_.register_user(field<std::string>(body, "email"));
    json out = user_json(u, icfg);
    out["session"] = session_json(sessions_.issue(u.user_id, engine_.now()));
    return {201, out};
  }

  if (seg.size() == 1 && seg[0] == "sessions") {
    if (m != "POST") return not_allowed();
    json body = parse_body(r);
    auto id = engine_.user_id_for_email(field<std::string>(body, "email"));
    if (!id) fail(ErrorKind::not_found, "no user with that email");
    return {201, session_json(sessions_.issue(*id, engine_.now()))};
  }

  if (seg.size() == 1 && seg[0] == "search") {
    if (m != "GET") return not_allowed();
    std::string viewer = authenticate(r);
    SearchQuery q;
    q.keyword = query_param(r, "keyword").value_or("");
    q.filters = filters_from_query(r);
    auto outcome = engine_.search(viewer, q);
    json items = json::array();
    for (const auto& c : outcome.results) items.push_back(c);
    json out = {{"keyword", q.keyword}, {"results", items}, {"count", outcome.results.size()}};
    out["on_demand_fetch"] = outcome.on_demand ? json(*outcome.on_demand) : json(nullptr);
    return {200, out};
  }

  if (seg.size() == 1 && seg[0] == "events") {
    if (m != "POST") return not_allowed();
    std::string viewer = authenticate(r);
    json body = parse_body(r);
    if (!body.contains("user_id")) body["user_id"] = viewer;
    if (!body.contains("at")) body["at"] = format_iso8601(engine_.now());
    BehaviorEvent e = event_from_json(body);
    if (e.user_id != viewer)
      fail(ErrorKind::unauthorized, "token does not belong to user '" + e.user_id + "'");
    auto result = engine_.record_event(e);
    return {201, {{"seq", result.seq}, {"event", event_to_json(e)}, {"changes", changes_json(result.changes)}}};
  }

  if (seg.size() == 3 && seg[0] == "contents" && (seg[2] == "rating" || seg[2] == "share")) {
    if (m != "POST") return not_allowed();
    std::string viewer = authenticate(r);
    json body = parse_body(r);
    const std::string& content_id = seg[1];
    if (seg[2] == "rating") {
      auto it = body.find("value");
      if (it == body.end() || !it->is_number_integer())
        fail(ErrorKind::invalid_argument, "field 'value' must be an integer");
      int value = engine_.rate_item(viewer, content_id, it->get<int>());
      return {200, {{"user_id", viewer}, {"content_id", content_id}, {"value", value}}};
    }
    auto name = field<std::string>(body, "channel");
    auto channel = share_channel_from_string(name);
    if (!channel) fail(ErrorKind::invalid_argument, "unknown share channel '" + name + "'");
    auto p = engine_.share(viewer, content_id, *channel);
    return {200, {{"channel", to_string(p.channel)},
                  {"title", p.title},
                  {"link", p.link},
                  {"text_snippet", p.text_snippet}}};
  }

  if (seg.size() < 2 || seg[0] != "users")
    return error_response(404, "not_found", "no route for " + r.path);

  const std::string& uid = seg[1];

  if (seg.size() == 2) {
    if (m != "GET") return not_allowed();
    require_self(r, uid);
    return {200, user_json(engine_.user(uid), icfg)};
  }

  const std::string& leaf = seg[2];

  if (seg.size() == 3 && leaf == "profile-import") {
    if (m != "POST") return not_allowed();
    require_self(r, uid);
    json body = parse_body(r);
    if (!body.contains("user_id")) body["user_id"] = uid;
    ProfileDocument doc = profile_document_from_json(body);
    if (doc.user_id != uid) fail(ErrorKind::invalid_argument, "user_id does not match the path");
    auto entries = engine_.import_profile(doc);
    json list = json::array();
    for (const auto& e : entries) list.push_back(entry_to_json(e, icfg));
    return {200, {{"user_id", uid}, {"imported", list}}};
  }

  if (seg.size() == 3 && leaf == "magazine") {
    if (m != "GET") return not_allowed();
    require_self(r, uid);
    std::size_t page_size =
        size_param(r, "page_size", engine_.config().magazine.default_page_size, 1, 100);
    std::size_t page = size_param(r, "page", 1, 1, 1000000);
    Magazine mag = engine_.magazine(uid, page_size);
    json items = json::array();
    std::optional<Timestamp> generated;
    if (page <= mag.pages.size()) {
      const auto& p = mag.pages[page - 1];
      generated = p.generated_at;
      for (const auto& slot : p.slots) {
        auto item = engine_.find_content(slot.content_id);
        if (!item) continue;
        items.push_back({{"score", slot.score}, {"matched_keywords", slot.matched_keywords}, {"item", *item}});
      }
    }
    return {200, {{"user_id", uid},
                  {"page", page},
                  {"page_size", page_size},
                  {"total_pages", mag.pages.size()},
                  {"total_items", mag.total_items},
                  {"cold_start", mag.cold_start != ColdStart::none},
                  {"cold_start_reason", mag.cold_start == ColdStart::none
                                            ? json(nullptr)
                                            : json(to_string(mag.cold_start))},
                  {"generated_at", format_iso8601(generated.value_or(engine_.now()))},
                  {"items", items}}};
  }

  if (seg.size() == 3 && leaf == "progress") {
    if (m != "GET") return not_allowed();
    require_self(r, uid);
    UserProfile u = engine_.user(uid);
    return {200, {{"user_id", uid},
                  {"event_count", u.event_count},
                  {"progress", progress_percent(u.event_count, icfg)}}};
  }

  if (seg.size() == 3 && leaf == "visibility") {
    if (m != "PUT") return not_allowed();
    require_self(r, uid);
    json body = parse_body(r);
    auto name = body.contains("list_visibility") ? field<std::string>(body, "list_visibility")
                                                 : field<std::string>(body, "visibility");
    auto v = list_visibility_from_string(name);
    if (!v) fail(ErrorKind::invalid_argument, "unknown visibility '" + name + "'");
    engine_.set_list_visibility(uid, *v);
    return {200, {{"user_id", uid}, {"list_visibility", to_string(*v)}}};
  }

  if (seg.size() == 3 && leaf == "follow") {
    if (m != "POST") return not_allowed();
    require_self(r, uid);
    json body = parse_body(r);
    auto owner = field<std::string>(body, "owner");
    std::optional<std::vector<std::string>> keywords;
    auto it = body.find("keywords");
    if (it == body.end() || (it->is_string() && it->get<std::string>() == "ALL")) {
      keywords = std::nullopt;
    } else if (it->is_array()) {
      keywords = field<std::vector<std::string>>(body, "keywords");
    } else {
      fail(ErrorKind::invalid_argument, "keywords must be an array or \"ALL\"");
    }
    auto adopted = engine_.follow(uid, owner, keywords);
    json list = json::array();
    for (const auto& e : adopted) list.push_back(entry_to_json(e, icfg));
    return {200, {{"user_id", uid}, {"owner", owner}, {"adopted", list}}};
  }

  if (seg.size() == 3 && leaf == "recommendations") {
    if (m != "GET") return not_allowed();
    require_self(r, uid);
    engine_.user(uid);
    if (!engine_.latent_space()) {
      try {
        engine_.rebuild_recommender();
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::contract) throw;  // nobody holds any keyword yet
      }
    }
    auto space = engine_.latent_space();
    json recs = json::array();
    for (const auto& rec : engine_.recommendations(uid)) recs.push_back(rec);
    return {200, {{"user_id", uid},
                  {"version", space ? json(space->version) : json(nullptr)},
                  {"recommendations", recs}}};
  }

  if (leaf == "interests") {
    if (seg.size() == 4 && seg[3] == "visible") {
      if (m != "GET") return not_allowed();
      std::string viewer = authenticate(r);
      if (auto v = query_param(r, "viewer"); v && *v != viewer)
        fail(ErrorKind::unauthorized, "viewer does not match the token");
      json list = json::array();
      for (const auto& [kw, w] : engine_.visible_interests(uid, viewer))
        list.push_back({{"keyword", kw}, {"weight", w}});
      return {200, {{"owner", uid}, {"viewer", viewer}, {"interests", list}}};
    }
    if (seg.size() > 4) return error_response(404, "not_found", "no route for " + r.path);
    require_self(r, uid);
    if (seg.size() == 3 && m == "GET") {
      UserProfile u = engine_.user(uid);
      return {200, {{"user_id", uid}, {"interests", interests_json(u, icfg)}}};
    }
    std::optional<std::string> keyword;
    if (seg.size() == 4) keyword = normalize_keyword(seg[3]);
    if (m == "GET" && keyword) {
      UserProfile u = engine_.user(uid);
      auto it = u.interests.find(*keyword);
      if (it == u.interests.end()) fail(ErrorKind::not_found, "no interest '" + *keyword + "'");
      return {200, entry_to_json(it->second, icfg)};
    }
    if (m == "PUT") {
      json body = parse_body(r);
      if (!keyword) keyword = field<std::string>(body, "keyword");
      auto w = body.find("weight");
      if (w == body.end() || !w->is_number())
        fail(ErrorKind::invalid_argument, "field 'weight' must be a number");
      std::optional<Visibility> vis;
      if (body.contains("visibility")) {
        auto name = field<std::string>(body, "visibility");
        vis = visibility_from_string(name);
        if (!vis) fail(ErrorKind::invalid_argument, "unknown visibility '" + name + "'");
      }
      double weight = w->get<double>();
      if (!(weight >= 0.0 && weight <= 1.0))
        fail(ErrorKind::contract, "weight must lie in [0, 1]");
      return {200, entry_to_json(engine_.set_interest(uid, *keyword, weight, vis), icfg)};
    }
    if (m == "DELETE" && keyword) {
      bool existed = engine_.delete_interest(uid, *keyword);
      return {200, {{"user_id", uid}, {"keyword", *keyword}, {"deleted", existed}}};
    }
    return not_allowed();
  }

  if (leaf == "saved") {
    if (seg.size() > 4) return error_response(404, "not_found", "no route for " + r.path);
    require_self(r, uid);
    if (seg.size() == 3) {
      if (m == "POST") {
        json body = parse_body(r);
        auto content_id = field<std::string>(body, "content_id");
        bool existed = false;
        for (const auto& v : engine_.list_saved(uid, SavedSort::saved_at, {}))
          existed = existed || v.saved.content_id == content_id;
        SavedItem s = engine_.save_item(uid, content_id);
        return {existed ? 200 : 201, saved_to_json(s)};
      }
      if (m == "GET") {
        auto sort_name = query_param(r, "sort").value_or("saved_at");
        auto sort = saved_sort_from_string(sort_name);
        if (!sort) fail(ErrorKind::invalid_argument, "unknown sort '" + sort_name + "'");
        json list = json::array();
        for (const auto& v : engine_.list_saved(uid, *sort, filters_from_query(r)))
          list.push_back(saved_json(v));
        return {200, {{"user_id", uid}, {"saved", list}}};
      }
      return not_allowed();
    }
    const std::string& content_id = seg[3];
    if (m == "GET") {
      for (const auto& v : engine_.list_saved(uid, SavedSort::saved_at, {}))
        if (v.saved.content_id == content_id) return {200, saved_json(v)};
      fail(ErrorKind::not_found, "item '" + content_id + "' is not saved");
    }
    if (m == "DELETE") {
      bool removed = engine_.unsave_item(uid, content_id);
      return {200, {{"user_id", uid}, {"content_id", content_id}, {"removed", removed}}};
    }
    return not_allowed();
  }

  return error_response(404, "not_found", "no route for " + r.path);
}

void Service::mount(httplib::Server& server) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    Request r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    auto auth = req.get_header_value("Authorization");
    if (auth.rfind("Bearer ", 0) == 0) r.bearer = auth.substr(7);
    r.body = req.body;
    Response out = handle(r);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  const std::string all = R"(/.*)";
  server.Get(all, handler);
  server.Post(all, handler);
  server.Put(all, handler);
  server.Delete(all, handler);
  server.Patch(all, handler);
}

}  // namespace emag::api
