#include "emag/engine.hpp"

#include <algorithm>
#include <cstdio>

#include "emag/error.hpp"

namespace emag {

using nlohmann::json;
namespace ns = store;

namespace {

std::string lower_email(const std::string& email) { return to_lower(email); }

void validate_email(const std::string& email) {
  auto at = email.find('@');
  if (email.empty() || at == std::string::npos || at == 0 || at + 1 == email.size() ||
      email.find_first_of(" \t\r\n|") != std::string::npos)
    fail(ErrorKind::invalid_argument, "invalid email address '" + email + "'");
}

}  // namespace

Engine::Engine(store::Store& store, EngineConfig config, Clock clock, Fetcher fetcher)
    : store_(store),
      config_(std::move(config)),
      clock_(clock ? std::move(clock) : system_clock()),
      fetcher_(std::move(fetcher)),
      recommender_(config_.recommender) {
  if (auto blob = store_.get(ns::kDecompositions, "current")) {
    recommender_.publish(std::make_shared<const LatentSpace>(space_from_json(*blob)));
  }
}

Fetcher Engine::fetcher() const {
  return fetcher_ ? fetcher_ : http_fetcher(config_.ingest.timeout_secs);
}

std::mutex& Engine::user_mutex(const std::string& user_id) {
  std::lock_guard lock(users_mutex_);
  auto& slot = user_mutexes_[user_id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

// --- sources ----------------------------------------------------------------

void Engine::add_source(FeedSource source) {
  validate_source(source, config_.taxonomy);
  std::lock_guard lock(registry_mutex_);
  if (store_.get(ns::kSources, source.id))
    fail(ErrorKind::conflict, "source '" + source.id + "' already exists");
  store_.put(ns::kSources, source.id, json(source));
}

std::vector<FeedSource> Engine::sources() const {
  std::vector<FeedSource> out;
  for (const auto& [key, value] : store_.snapshot().scan(ns::kSources))
    out.push_back(value->get<FeedSource>());
  return out;
}

FeedSource Engine::source(const std::string& id) const {
  auto v = store_.get(ns::kSources, id);
  if (!v) fail(ErrorKind::not_found, "unknown source '" + id + "'");
  return v->get<FeedSource>();
}

void Engine::set_source_enabled(const std::string& id, bool enabled) {
  std::lock_guard lock(registry_mutex_);
  FeedSource s = source(id);
  s.enabled = enabled;
  store_.put(ns::kSources, id, json(s));
}

IngestReport Engine::ingest(const std::string& source_id) {
  return ingest_source(store_, source(source_id), now(), fetcher(), config_.taxonomy,
                       config_.ingest);
}

std::vector<IngestReport> Engine::ingest_all() {
  return ingest_sources(store_, sources(), now(), fetcher(), config_.taxonomy, config_.ingest);
}

// --- content ----------------------------------------------------------------

std::optional<ContentItem> Engine::find_content(const std::string& id) const {
  auto v = store_.get(ns::kContents, id);
  if (!v) return std::nullopt;
  return v->get<ContentItem>();
}

std::vector<ContentItem> Engine::contents() const {
  std::vector<ContentItem> out;
  auto snap = store_.snapshot();
  auto records = snap.scan(ns::kContents);
  out.reserve(records.size());
  for (const auto& [key, value] : records) out.push_back(value->get<ContentItem>());
  return out;
}

// --- users ------------------------------------------------------------------

UserProfile Engine::load_user(const store::Snapshot& snap, const std::string& user_id) const {
  const json* record = snap.find(ns::kUsers, user_id);
  if (!record) fail(ErrorKind::not_found, "unknown user '" + user_id + "'");
  UserProfile u = user_from_json(*record);
  for (const auto& [key, value] : snap.scan(ns::kInterests, ns::compose_key(user_id, ""))) {
    InterestEntry e = entry_from_json(*value);
    u.interests.emplace(e.keyword, std::move(e));
  }
  return u;
}

void Engine::stage_user(store::WriteBatch& batch, const UserProfile& before,
                        const UserProfile& after) const {
  batch.put(ns::kUsers, after.user_id, user_record_to_json(after));
  for (const auto& [kw, e] : after.interests) {
    auto old = before.interests.find(kw);
    json now_json = entry_to_json(e, config_.interest);
    if (old == before.interests.end() || entry_to_json(old->second, config_.interest) != now_json)
      batch.put(ns::kInterests, ns::compose_key(after.user_id, kw), std::move(now_json));
  }
  for (const auto& [kw, e] : before.interests)
    if (!after.interests.count(kw)) batch.erase(ns::kInterests, ns::compose_key(after.user_id, kw));
}

UserProfile Engine::register_user(const std::string& email) {
  validate_email(email);
  std::lock_guard lock(registry_mutex_);
  if (user_id_for_email(email))
    fail(ErrorKind::conflict, "email '" + email + "' is already registered");
  auto snap = store_.snapshot();
  std::size_t n = snap.size(ns::kUsers) + 1;
  std::string id;
  for (;; ++n) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "u%06zu", n);
    id = buf;
    if (!snap.find(ns::kUsers, id)) break;
  }
  UserProfile u;
  u.user_id = id;
  u.email = email;
  u.created_at = now();
  store_.put(ns::kUsers, id, user_record_to_json(u));
  return u;
}

std::optional<UserProfile> Engine::find_user(const std::string& user_id) const {
  auto snap = store_.snapshot();
  if (!snap.find(ns::kUsers, user_id)) return std::nullopt;
  return load_user(snap, user_id);
}

UserProfile Engine::user(const std::string& user_id) const {
  return load_user(store_.snapshot(), user_id);
}

std::optional<std::string> Engine::user_id_for_email(const std::string& email) const {
  auto wanted = lower_email(email);
  for (const auto& [key, value] : store_.snapshot().scan(ns::kUsers))
    if (lower_email(value->value("email", "")) == wanted) return key;
  return std::nullopt;
}

std::vector<UserProfile> Engine::users() const {
  auto snap = store_.snapshot();
  std::vector<UserProfile> out;
  for (const auto& [key, value] : snap.scan(ns::kUsers)) out.push_back(load_user(snap, key));
  return out;
}

std::vector<InterestEntry> Engine::import_profile(const ProfileDocument& doc) {
  std::lock_guard lock(user_mutex(doc.user_id));
  UserProfile before = user(doc.user_id);
  UserProfile after = before;
  auto entries = emag::import_profile(after, doc, config_.taxonomy, config_.interest, now());
  store::WriteBatch batch;
  stage_user(batch, before, after);
  store_.commit(batch);
  return entries;
}

std::optional<std::set<std::string>> Engine::content_keywords(const store::Snapshot& snap,
                                                              const std::string& content_id) const {
  const json* v = snap.find(ns::kContents, content_id);
  if (!v) return std::nullopt;
  return v->at("keywords").get<std::set<std::string>>();
}

EventResult Engine::apply_locked(const BehaviorEvent& event, store::WriteBatch batch) {
  auto snap = store_.snapshot();
  UserProfile before = load_user(snap, event.user_id);
  UserProfile after = before;
  std::optional<std::set<std::string>> keywords;
  if (targets_content(event.kind)) keywords = content_keywords(snap, event.target);
  EventResult result;
  result.changes = apply_event(after, event, keywords, config_.interest);

  json logged = event_to_json(event);
  if (keywords) logged["keywords"] = *keywords;
  stage_user(batch, before, after);
  batch.append_event(event.user_id, std::move(logged));
  result.seq = store_.commit(batch).event_seqs.at(0);
  return result;
}

EventResult Engine::record_event(const BehaviorEvent& event) {
  validate_event(event);
  std::lock_guard lock(user_mutex(event.user_id));
  return apply_locked(event, {});
}

BehaviorEvent Engine::internal_event(const UserProfile& user, EventKind kind, std::string target,
                                     double value) const {
  BehaviorEvent e;
  e.user_id = user.user_id;
  e.kind = kind;
  e.target = std::move(target);
  e.value = value;
  e.at = now();
  if (user.last_event_at && e.at < *user.last_event_at) e.at = *user.last_event_at;
  return e;
}

InterestEntry Engine::set_interest(const std::string& user_id, const std::string& keyword,
                                   double weight, std::optional<Visibility> visibility) {
  std::lock_guard lock(user_mutex(user_id));
  UserProfile before = user(user_id);
  UserProfile after = before;
  auto entry = emag::set_interest(after, keyword, weight, visibility, now());
  store::WriteBatch batch;
  stage_user(batch, before, after);
  store_.commit(batch);
  return entry;
}

bool Engine::delete_interest(const std::string& user_id, const std::string& keyword) {
  std::lock_guard lock(user_mutex(user_id));
  UserProfile before = user(user_id);
  UserProfile after = before;
  if (!emag::delete_interest(after, keyword)) return false;
  store::WriteBatch batch;
  stage_user(batch, before, after);
  store_.commit(batch);
  return true;
}

ListVisibility Engine::set_list_visibility(const std::string& user_id, ListVisibility visibility) {
  std::lock_guard lock(user_mutex(user_id));
  UserProfile u = user(user_id);
  u.list_visibility = visibility;
  store_.put(ns::kUsers, user_id, user_record_to_json(u));
  return visibility;
}

std::vector<std::pair<std::string, double>> Engine::visible_interests(
    const std::string& owner_id, const std::string& viewer_id) const {
  return emag::visible_interests(user(owner_id), viewer_id);
}

std::vector<InterestEntry> Engine::follow(const std::string& viewer_id, const std::string& owner_id,
                                          const std::optional<std::vector<std::string>>& keywords) {
  std::lock_guard lock(user_mutex(viewer_id));
  auto snap = store_.snapshot();
  UserProfile owner = load_user(snap, owner_id);
  UserProfile before = load_user(snap, viewer_id);
  UserProfile after = before;
  auto adopted = follow_keywords(after, owner, keywords, config_.interest, now());
  store::WriteBatch batch;
  stage_user(batch, before, after);
  store_.commit(batch);
  return adopted;
}

FlushReport Engine::decay_and_flush(const std::string& user_id) {
  std::lock_guard lock(user_mutex(user_id));
  UserProfile before = user(user_id);
  UserProfile after = before;
  auto report = emag::decay_and_flush(after, now(), config_.interest);
  store::WriteBatch batch;
  stage_user(batch, before, after);
  store_.commit(batch);
  return report;
}

std::map<std::string, FlushReport> Engine::decay_and_flush_all() {
  std::map<std::string, FlushReport> out;
  for (const auto& [key, value] : store_.snapshot().scan(ns::kUsers))
    out.emplace(key, decay_and_flush(key));
  return out;
}

int Engine::progress(const std::string& user_id) const {
  return progress_percent(user(user_id).event_count, config_.interest);
}

std::vector<json> Engine::events(const std::string& user_id) const {
  std::vector<json> out;
  for (const auto& [key, value] : store_.snapshot().scan(ns::kEvents, ns::compose_key(user_id, "")))
    out.push_back(*value);
  return out;
}

UserProfile Engine::replay_events(const std::string& user_id) const {
  auto snap = store_.snapshot();
  UserProfile base = load_user(snap, user_id);
  base.interests.clear();
  base.event_count = 0;
  base.last_event_at.reset();
  for (const auto& [key, value] : snap.scan(ns::kEvents, ns::compose_key(user_id, ""))) {
    BehaviorEvent e = event_from_json(*value);
    std::optional<std::set<std::string>> keywords;
    if (auto k = value->find("keywords"); k != value->end())
      keywords = k->get<std::set<std::string>>();
    apply_event(base, e, keywords, config_.interest);
  }
  return base;
}

// --- magazine ---------------------------------------------------------------

Magazine Engine::magazine(const std::string& user_id, std::size_t page_size) const {
  UserProfile u = user(user_id);
  auto items = contents();
  return build_magazine(u, items, now(), page_size, config_.interest, config_.magazine);
}

SearchOutcome Engine::search(const std::optional<std::string>& user_id, const SearchQuery& query) {
  validate_query(query);
  if (user_id) user(*user_id);  // must exist before anything runs

  SearchOutcome out;
  auto run = [&] {
    auto items = contents();
    out.results.clear();
    for (const ContentItem* c : emag::search(items, query)) out.results.push_back(*c);
  };
  run();
  if (out.results.empty() && config_.magazine.fetch_on_empty_search) {
    out.on_demand = fetch_on_demand(query.keyword);
    if (out.on_demand) run();
  }
  if (user_id) {
    std::lock_guard lock(user_mutex(*user_id));
    UserProfile u = user(*user_id);
    apply_locked(internal_event(u, EventKind::search, query.keyword), {});
  }
  return out;
}

std::optional<IngestReport> Engine::fetch_on_demand(const std::string& keyword) {
  auto kw = normalize_keyword(keyword);
  const Timestamp t = now();
  if (auto cached = store_.get(ns::kKeywordCategoryCache, kw)) {
    if (!cached->at("category").is_null()) return std::nullopt;
    auto until = parse_iso8601(cached->value("negative_until", ""));
    if (until && t < *until) return std::nullopt;
  }

  IngestReport combined;
  combined.source_id = "*";
  for (const auto& r : ingest_all()) combined += r;

  std::map<std::string, int> categories;
  for (const auto& item : contents())
    if (matches_keyword(item, kw)) ++categories[item.category];
  json entry = {{"keyword", kw}, {"stored_at", format_iso8601(t)}};
  if (categories.empty()) {
    entry["category"] = nullptr;
    entry["negative_until"] =
        format_iso8601(t + std::chrono::hours(24 * config_.magazine.negative_cache_days));
  } else {
    auto best = std::max_element(categories.begin(), categories.end(),
                                 [](const auto& a, const auto& b) { return a.second < b.second; });
    entry["category"] = best->first;
    entry["negative_until"] = nullptr;
  }
  store_.put(ns::kKeywordCategoryCache, kw, std::move(entry));
  return combined;
}

SavedItem Engine::save_item(const std::string& user_id, const std::string& content_id) {
  std::lock_guard lock(user_mutex(user_id));
  auto snap = store_.snapshot();
  UserProfile u = load_user(snap, user_id);
  if (!snap.find(ns::kContents, content_id))
    fail(ErrorKind::not_found, "unknown content '" + content_id + "'");
  auto key = ns::compose_key(user_id, content_id);
  if (const json* existing = snap.find(ns::kSaved, key)) return saved_from_json(*existing);

  BehaviorEvent e = internal_event(u, EventKind::save, content_id);
  SavedItem saved{user_id, content_id, e.at, std::nullopt};
  if (const json* r = snap.find(ns::kRatings, key)) saved.rating = r->at("value").get<int>();
  store::WriteBatch batch;
  batch.put(ns::kSaved, key, saved_to_json(saved));
  apply_locked(e, std::move(batch));
  return saved;
}

bool Engine::unsave_item(const std::string& user_id, const std::string& content_id) {
  std::lock_guard lock(user_mutex(user_id));
  auto snap = store_.snapshot();
  UserProfile u = load_user(snap, user_id);
  auto key = ns::compose_key(user_id, content_id);
  if (!snap.find(ns::kSaved, key)) return false;
  store::WriteBatch batch;
  batch.erase(ns::kSaved, key);
  apply_locked(internal_event(u, EventKind::unsave, content_id), std::move(batch));
  return true;
}

std::vector<SavedView> Engine::list_saved(const std::string& user_id, SavedSort sort,
                                          const SearchFilters& filters) const {
  auto snap = store_.snapshot();
  load_user(snap, user_id);
  std::vector<ContentItem> items;
  std::vector<SavedItem> saved;
  for (const auto& [key, value] : snap.scan(ns::kSaved, ns::compose_key(user_id, ""))) {
    SavedItem s = saved_from_json(*value);
    if (const json* c = snap.find(ns::kContents, s.content_id)) {
      items.push_back(c->get<ContentItem>());
      saved.push_back(std::move(s));
    }
  }
  std::vector<SavedEntry> entries;
  for (std::size_t i = 0; i < saved.size(); ++i) entries.push_back({saved[i], &items[i]});
  std::vector<SavedView> out;
  for (auto& e : emag::list_saved(std::move(entries), sort, filters))
    out.push_back({std::move(e.saved), *e.item});
  return out;
}

int Engine::rate_item(const std::string& user_id, const std::string& content_id, int value) {
  if (value < 1 || value > 5) fail(ErrorKind::contract, "rating must be an integer from 1 to 5");
  std::lock_guard lock(user_mutex(user_id));
  auto snap = store_.snapshot();
  UserProfile u = load_user(snap, user_id);
  if (!snap.find(ns::kContents, content_id))
    fail(ErrorKind::not_found, "unknown content '" + content_id + "'");
  BehaviorEvent e = internal_event(u, EventKind::rate, content_id, value);
  auto key = ns::compose_key(user_id, content_id);
  store::WriteBatch batch;
  batch.put(ns::kRatings, key,
            {{"user_id", user_id},
             {"content_id", content_id},
             {"value", value},
             {"rated_at", format_iso8601(e.at)}});
  if (const json* s = snap.find(ns::kSaved, key)) {
    SavedItem saved = saved_from_json(*s);
    saved.rating = value;
    batch.put(ns::kSaved, key, saved_to_json(saved));
  }
  apply_locked(e, std::move(batch));
  return value;
}

SharePayload Engine::share(const std::string& user_id, const std::string& content_id,
                           ShareChannel channel) {
  std::lock_guard lock(user_mutex(user_id));
  auto snap = store_.snapshot();
  UserProfile u = load_user(snap, user_id);
  const json* c = snap.find(ns::kContents, content_id);
  if (!c) fail(ErrorKind::not_found, "unknown content '" + content_id + "'");
  auto kind = channel == ShareChannel::mail ? EventKind::mail : EventKind::share;
  apply_locked(internal_event(u, kind, content_id), {});
  return share_payload(c->get<ContentItem>(), channel);
}

// --- recommender ------------------------------------------------------------

std::uint64_t Engine::rebuild_recommender(std::size_t k) {
  auto space = recommender_.rebuild(users(), k);
  store_.put(ns::kDecompositions, "current", space_to_json(*space));
  return space->version;
}

std::vector<Recommendation> Engine::recommendations(const std::string& user_id) const {
  auto profiles = users();
  auto it = std::find_if(profiles.begin(), profiles.end(),
                         [&](const UserProfile& p) { return p.user_id == user_id; });
  if (it == profiles.end()) fail(ErrorKind::not_found, "unknown user '" + user_id + "'");
  auto space = recommender_.current();
  static const LatentSpace kEmpty;
  return recommend_keywords(*it, profiles, space ? *space : kEmpty,
                            RecommendParams::from(config_.recommender), config_.interest);
}

}  // namespace emag
