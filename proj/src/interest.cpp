#include "emag/interest.hpp"

#include <algorithm>
#include <cmath>

#include "emag/error.hpp"

namespace emag {

namespace {

using nlohmann::json;

constexpr std::int64_t kSecondsPerDay = 86400;

// Weights live on a 1e-12 grid so that sums of decimal deltas land on the
// same double as the decimal result (0.35 - 0.2 gives 0.15, not 0.1499...).
double clamp01(double w) { return std::round(std::clamp(w, 0.0, 1.0) * 1e12) / 1e12; }

double delta_for(const BehaviorEvent& e, const EventDeltas& d) {
  switch (e.kind) {
    case EventKind::click: return d.click;
    case EventKind::save: return d.save;
    case EventKind::unsave: return d.unsave;
    case EventKind::mail: return d.mail;
    case EventKind::share: return d.share;
    case EventKind::search: return d.search;
    case EventKind::rate: return (e.value - 3.0) * d.rate_step;
    case EventKind::slider_set: return e.value;
  }
  return 0.0;
}

Timestamp required_time(const json& j, const char* key) {
  auto t = parse_iso8601(j.at(key).get<std::string>());
  if (!t) fail(ErrorKind::invalid_argument, std::string("bad timestamp in '") + key + "'");
  return *t;
}

Origin origin_from_string(std::string_view s) {
  if (s == "profile") return Origin::profile;
  if (s == "manual") return Origin::manual;
  if (s == "followed") return Origin::followed;
  return Origin::behavior;
}

}  // namespace

std::string_view to_string(Tier t) {
  switch (t) {
    case Tier::high: return "High";
    case Tier::mid: return "Mid";
    case Tier::low: return "Low";
  }
  return "Low";
}

std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::profile: return "profile";
    case Origin::behavior: return "behavior";
    case Origin::manual: return "manual";
    case Origin::followed: return "followed";
  }
  return "behavior";
}

std::string_view to_string(Visibility v) {
  return v == Visibility::everyone ? "public" : "private";
}

std::string_view to_string(ListVisibility v) {
  switch (v) {
    case ListVisibility::everyone: return "public";
    case ListVisibility::partial: return "partial";
    case ListVisibility::owner_only: return "private";
  }
  return "public";
}

std::optional<Visibility> visibility_from_string(std::string_view s) {
  if (s == "public") return Visibility::everyone;
  if (s == "private") return Visibility::owner_only;
  return std::nullopt;
}

std::optional<ListVisibility> list_visibility_from_string(std::string_view s) {
  if (s == "public") return ListVisibility::everyone;
  if (s == "partial") return ListVisibility::partial;
  if (s == "private") return ListVisibility::owner_only;
  return std::nullopt;
}

Tier tier_of(double weight, const InterestConfig& config) {
  if (!(weight >= 0.0 && weight <= 1.0))
    fail(ErrorKind::contract, "weight " + std::to_string(weight) + " outside [0, 1]");
  if (weight >= config.tier_high) return Tier::high;
  if (weight >= config.tier_mid) return Tier::mid;
  return Tier::low;
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::click: return "click";
    case EventKind::save: return "save";
    case EventKind::unsave: return "unsave";
    case EventKind::rate: return "rate";
    case EventKind::share: return "share";
    case EventKind::mail: return "mail";
    case EventKind::search: return "search";
    case EventKind::slider_set: return "slider_set";
  }
  return "click";
}

std::optional<EventKind> event_kind_from_string(std::string_view s) {
  for (auto k : {EventKind::click, EventKind::save, EventKind::unsave, EventKind::rate,
                 EventKind::share, EventKind::mail, EventKind::search, EventKind::slider_set})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

bool targets_content(EventKind k) {
  return k != EventKind::search && k != EventKind::slider_set;
}

void validate_event(const BehaviorEvent& e) {
  if (e.target.empty()) fail(ErrorKind::contract, "event target is empty");
  if (e.kind == EventKind::rate &&
      (e.value < 1 || e.value > 5 || e.value != std::floor(e.value)))
    fail(ErrorKind::contract, "rating must be an integer from 1 to 5");
  if (e.kind == EventKind::slider_set && !(e.value >= 0.0 && e.value <= 1.0))
    fail(ErrorKind::contract, "slider value must be in [0, 1]");
}

std::string normalize_keyword(std::string_view keyword) {
  auto first = keyword.find_first_not_of(" \t\r\n");
  auto last = keyword.find_last_not_of(" \t\r\n");
  std::string k = first == std::string_view::npos
                      ? std::string{}
                      : to_lower(keyword.substr(first, last - first + 1));
  if (k.empty()) fail(ErrorKind::invalid_argument, "empty keyword");
  if (k.find('|') != std::string::npos)
    fail(ErrorKind::invalid_argument, "keyword contains '|'");
  return k;
}

std::vector<InterestEntry> import_profile(UserProfile& user, const ProfileDocument& doc,
                                          const Taxonomy& taxonomy,
                                          const InterestConfig& config, Timestamp now) {
  std::set<std::string> terms;
  for (const auto& c : taxonomy.categories()) {
    terms.insert(to_lower(c.name()));
    terms.insert(c.triggers.begin(), c.triggers.end());
  }

  std::map<std::string, int> occurrences;
  auto scan = [&](const std::vector<std::string>& strings) {
    for (const auto& s : strings)
      for (const auto& term : terms)
        if (contains_word(s, term)) ++occurrences[term];
  };
  scan(doc.likes);
  scan(doc.professional);

  std::vector<InterestEntry> out;
  for (const auto& [term, count] : occurrences) {
    double weight = clamp01(std::min(config.import_cap,
                                     config.import_base + config.import_step * (count - 1)));
    auto it = user.interests.find(term);
    if (it == user.interests.end()) {
      InterestEntry e;
      e.keyword = term;
      e.weight = weight;
      e.last_touched = now;
      e.origin = Origin::profile;
      it = user.interests.emplace(term, e).first;
    } else if (weight > it->second.weight) {
      it->second.weight = weight;
      it->second.last_touched = now;
      it->second.decay_days_applied = 0;
    }
    out.push_back(it->second);
  }
  return out;
}

std::vector<WeightChange> apply_event(UserProfile& user, const BehaviorEvent& event,
                                      const std::optional<std::set<std::string>>& item_keywords,
                                      const InterestConfig& config) {
  validate_event(event);
  if (user.last_event_at && event.at < *user.last_event_at)
    fail(ErrorKind::contract, "event at " + format_iso8601(event.at) +
                                  " precedes the last processed event");

  std::set<std::string> keywords;
  if (targets_content(event.kind)) {
    if (!item_keywords) fail(ErrorKind::not_found, "unknown content '" + event.target + "'");
    keywords = *item_keywords;
  } else {
    keywords.insert(normalize_keyword(event.target));
  }

  const double delta = delta_for(event, config.deltas);
  std::vector<WeightChange> changes;
  for (const auto& kw : keywords) {
    auto it = user.interests.find(kw);
    if (it == user.interests.end()) {
      InterestEntry e;
      e.keyword = kw;
      e.origin = event.kind == EventKind::slider_set ? Origin::manual : Origin::behavior;
      e.weight = clamp01(std::max(0.0, delta));
      e.last_touched = event.at;
      changes.push_back({kw, 0.0, e.weight});
      user.interests.emplace(kw, std::move(e));
      continue;
    }
    auto& e = it->second;
    double old = e.weight;
    e.weight = event.kind == EventKind::slider_set ? clamp01(delta) : clamp01(old + delta);
    e.last_touched = event.at;
    e.decay_days_applied = 0;
    changes.push_back({kw, old, e.weight});
  }
  ++user.event_count;
  user.last_event_at = event.at;
  return changes;
}

FlushReport decay_and_flush(UserProfile& user, Timestamp now, const InterestConfig& config) {
  FlushReport report;
  for (auto it = user.interests.begin(); it != user.interests.end();) {
    auto& e = it->second;
    auto elapsed = (now - e.last_touched).count();
    long long days = elapsed >= 0 ? elapsed / kSecondsPerDay : 0;
    if (days >= 1 && days > e.decay_days_applied) {
      e.weight = clamp01(e.weight * std::pow(config.decay_per_day,
                                             static_cast<double>(days - e.decay_days_applied)));
      e.decay_days_applied = static_cast<int>(days);
      report.decayed.push_back(e.keyword);
    }
    if (e.origin != Origin::manual && days >= config.flush_days &&
        tier_of(e.weight, config) == Tier::low) {
      report.flushed.push_back(e.keyword);
      it = user.interests.erase(it);
    } else {
      ++it;
    }
  }
  return report;
}

InterestEntry set_interest(UserProfile& user, std::string_view keyword, double weight,
                           std::optional<Visibility> visibility, Timestamp now) {
  if (!(weight >= 0.0 && weight <= 1.0))
    fail(ErrorKind::contract, "weight " + std::to_string(weight) + " outside [0, 1]");
  auto kw = normalize_keyword(keyword);
  auto& e = user.interests[kw];
  e.keyword = kw;
  e.weight = clamp01(weight);
  e.origin = Origin::manual;
  e.last_touched = now;
  e.decay_days_applied = 0;
  if (visibility) e.visibility = *visibility;
  return e;
}

bool delete_interest(UserProfile& user, std::string_view keyword) {
  std::string kw;
  try {
    kw = normalize_keyword(keyword);
  } catch (const Error&) {
    return false;
  }
  return user.interests.erase(kw) > 0;
}

int progress_percent(long long event_count, const InterestConfig& config) {
  double p = 100.0 * (1.0 - std::exp(-static_cast<double>(event_count) / config.progress_k));
  return static_cast<int>(std::clamp(std::round(p), 0.0, 100.0));
}

std::vector<std::pair<std::string, double>> visible_interests(const UserProfile& owner,
                                                              std::string_view viewer_id) {
  std::vector<std::pair<std::string, double>> out;
  bool self = owner.user_id == viewer_id;
  for (const auto& [kw, e] : owner.interests) {
    bool show = self || owner.list_visibility == ListVisibility::everyone ||
                (owner.list_visibility == ListVisibility::partial &&
                 e.visibility == Visibility::everyone);
    if (show) out.emplace_back(kw, e.weight);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

std::vector<InterestEntry> follow_keywords(UserProfile& viewer, const UserProfile& owner,
                                           const std::optional<std::vector<std::string>>& keywords,
                                           const InterestConfig& config, Timestamp now) {
  if (owner.user_id != viewer.user_id && owner.list_visibility == ListVisibility::owner_only)
    fail(ErrorKind::contract, "interest list of " + owner.user_id + " is private");
  auto visible = visible_interests(owner, viewer.user_id);
  std::set<std::string> visible_set;
  for (const auto& [kw, w] : visible) visible_set.insert(kw);

  std::vector<std::string> wanted;
  if (keywords) {
    for (const auto& k : *keywords) {
      auto kw = normalize_keyword(k);
      if (!visible_set.count(kw))
        fail(ErrorKind::contract, "keyword '" + kw + "' is not visible to " + viewer.user_id);
      wanted.push_back(kw);
    }
  } else {
    wanted.assign(visible_set.begin(), visible_set.end());
  }

  std::vector<InterestEntry> adopted;
  for (const auto& kw : wanted) {
    auto it = viewer.interests.find(kw);
    if (it == viewer.interests.end()) {
      InterestEntry e;
      e.keyword = kw;
      e.weight = config.follow_weight;
      e.origin = Origin::followed;
      e.last_touched = now;
      it = viewer.interests.emplace(kw, e).first;
    } else if (config.follow_weight > it->second.weight) {
      it->second.weight = config.follow_weight;
      it->second.last_touched = now;
      it->second.decay_days_applied = 0;
    }
    adopted.push_back(it->second);
  }
  return adopted;
}

std::vector<std::string> ranked_keywords(const UserProfile& user) {
  std::vector<const InterestEntry*> entries;
  for (const auto& [kw, e] : user.interests) entries.push_back(&e);
  std::sort(entries.begin(), entries.end(), [](const InterestEntry* a, const InterestEntry* b) {
    if (a->weight != b->weight) return a->weight > b->weight;
    return a->keyword < b->keyword;
  });
  std::vector<std::string> out;
  for (const auto* e : entries) out.push_back(e->keyword);
  return out;
}

json entry_to_json(const InterestEntry& e, const InterestConfig& config) {
  return {{"keyword", e.keyword},
          {"weight", e.weight},
          {"tier", to_string(tier_of(e.weight, config))},
          {"last_touched", format_iso8601(e.last_touched)},
          {"origin", to_string(e.origin)},
          {"visibility", to_string(e.visibility)},
          {"decay_days_applied", e.decay_days_applied}};
}

InterestEntry entry_from_json(const json& j) {
  InterestEntry e;
  e.keyword = j.at("keyword").get<std::string>();
  e.weight = j.at("weight").get<double>();
  e.last_touched = required_time(j, "last_touched");
  e.origin = origin_from_string(j.value("origin", "behavior"));
  e.visibility = visibility_from_string(j.value("visibility", "public")).value_or(Visibility::everyone);
  e.decay_days_applied = j.value("decay_days_applied", 0);
  return e;
}

json user_record_to_json(const UserProfile& u) {
  return {{"user_id", u.user_id},
          {"email", u.email},
          {"list_visibility", to_string(u.list_visibility)},
          {"event_count", u.event_count},
          {"created_at", format_iso8601(u.created_at)},
          {"last_event_at", u.last_event_at ? json(format_iso8601(*u.last_event_at)) : json(nullptr)}};
}

UserProfile user_from_json(const json& j) {
  UserProfile u;
  u.user_id = j.at("user_id").get<std::string>();
  u.email = j.value("email", "");
  u.list_visibility = list_visibility_from_string(j.value("list_visibility", "public"))
                          .value_or(ListVisibility::everyone);
  u.event_count = j.value("event_count", 0LL);
  u.created_at = required_time(j, "created_at");
  if (auto it = j.find("last_event_at"); it != j.end() && it->is_string())
    u.last_event_at = parse_iso8601(it->get<std::string>());
  return u;
}

json event_to_json(const BehaviorEvent& e) {
  json j = {{"user_id", e.user_id},
            {"kind", to_string(e.kind)},
            {"target", e.target},
            {"at", format_iso8601(e.at)}};
  if (e.kind == EventKind::rate || e.kind == EventKind::slider_set) j["value"] = e.value;
  return j;
}

BehaviorEvent event_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::invalid_argument, "event must be an object");
  BehaviorEvent e;
  try {
    e.user_id = j.at("user_id").get<std::string>();
    auto kind = event_kind_from_string(j.at("kind").get<std::string>());
    if (!kind) fail(ErrorKind::invalid_argument, "unknown event kind");
    e.kind = *kind;
    e.target = j.at("target").get<std::string>();
    if (auto v = j.find("value"); v != j.end()) e.value = v->get<double>();
    e.at = required_time(j, "at");
  } catch (const json::exception& ex) {
    fail(ErrorKind::invalid_argument, std::string("malformed event: ") + ex.what());
  }
  return e;
}

ProfileDocument profile_document_from_json(const json& j) {
  ProfileDocument d;
  try {
    d.user_id = j.at("user_id").get<std::string>();
    d.likes = j.value("likes", std::vector<std::string>{});
    d.posts = j.value("posts", std::vector<std::string>{});
    d.professional = j.value("professional", std::vector<std::string>{});
    d.demographics = j.value("demographics", std::map<std::string, std::string>{});
  } catch (const json::exception& ex) {
    fail(ErrorKind::invalid_argument, std::string("malformed profile document: ") + ex.what());
  }
  if (d.user_id.empty()) fail(ErrorKind::invalid_argument, "profile document without user_id");
  return d;
}

}  // namespace emag
