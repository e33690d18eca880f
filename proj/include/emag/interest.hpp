#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "emag/config.hpp"
#include "emag/taxonomy.hpp"
#include "emag/time.hpp"

namespace emag {

enum class Tier { low = 0, mid = 1, high = 2 };
enum class Origin { profile, behavior, manual, followed };
enum class Visibility { everyone, owner_only };               // "public" / "private"
enum class ListVisibility { everyone, partial, owner_only };  // "public" / "partial" / "private"

std::string_view to_string(Tier t);
std::string_view to_string(Origin o);
std::string_view to_string(Visibility v);
std::string_view to_string(ListVisibility v);
std::optional<Visibility> visibility_from_string(std::string_view s);
std::optional<ListVisibility> list_visibility_from_string(std::string_view s);

/// High at or above tier_high, Mid at or above tier_mid, Low below.
/// Weights outside [0, 1] are a contract violation.
Tier tier_of(double weight, const InterestConfig& config);

struct InterestEntry {
  std::string keyword;
  double weight = 0.0;
  Timestamp last_touched;
  Origin origin = Origin::behavior;
  Visibility visibility = Visibility::everyone;
  int decay_days_applied = 0;  // full days of decay already folded into weight
};

struct UserProfile {
  std::string user_id;
  std::string email;
  std::map<std::string, InterestEntry> interests;
  ListVisibility list_visibility = ListVisibility::everyone;
  long long event_count = 0;
  Timestamp created_at;
  std::optional<Timestamp> last_event_at;
};

enum class EventKind { click, save, unsave, rate, share, mail, search, slider_set };

std::string_view to_string(EventKind k);
std::optional<EventKind> event_kind_from_string(std::string_view s);

/// True for kinds whose target is a content id rather than a keyword.
bool targets_content(EventKind k);

struct BehaviorEvent {
  std::string user_id;
  EventKind kind = EventKind::click;
  std::string target;
  double value = 0.0;  // rating 1..5 or slider position in [0, 1]
  Timestamp at;
};

/// Throws Error(contract) for ratings outside 1..5, slider values outside
/// [0, 1] or an empty target.
void validate_event(const BehaviorEvent& e);

struct ProfileDocument {
  std::string user_id;
  std::vector<std::string> likes;
  std::vector<std::string> posts;
  std::vector<std::string> professional;
  std::map<std::string, std::string> demographics;
};

struct WeightChange {
  std::string keyword;
  double old_weight = 0.0;
  double new_weight = 0.0;
};

struct FlushReport {
  std::vector<std::string> decayed;
  std::vector<std::string> flushed;
};

/// Lowercases and trims; rejects empty keywords and ones containing '|'.
std::string normalize_keyword(std::string_view keyword);

std::vector<InterestEntry> import_profile(UserProfile& user, const ProfileDocument& doc,
                                          const Taxonomy& taxonomy,
                                          const InterestConfig& config, Timestamp now);

/// item_keywords carries the target item's keywords for content events and
/// is ignored for search/slider_set. nullopt for a content event means the
/// target id is unknown: the event is rejected and nothing changes.
std::vector<WeightChange> apply_event(UserProfile& user, const BehaviorEvent& event,
                                      const std::optional<std::set<std::string>>& item_keywords,
                                      const InterestConfig& config);

FlushReport decay_and_flush(UserProfile& user, Timestamp now, const InterestConfig& config);

InterestEntry set_interest(UserProfile& user, std::string_view keyword, double weight,
                           std::optional<Visibility> visibility, Timestamp now);

/// Always succeeds; returns whether the keyword existed.
bool delete_interest(UserProfile& user, std::string_view keyword);

int progress_percent(long long event_count, const InterestConfig& config);

std::vector<std::pair<std::string, double>> visible_interests(const UserProfile& owner,
                                                              std::string_view viewer_id);

/// keywords == nullopt follows everything visible. Invisible keywords (or
/// a list the viewer cannot see at all) are rejected with Error(contract).
std::vector<InterestEntry> follow_keywords(UserProfile& viewer, const UserProfile& owner,
                                           const std::optional<std::vector<std::string>>& keywords,
                                           const InterestConfig& config, Timestamp now);

/// Keywords by weight descending, ties by keyword.
std::vector<std::string> ranked_keywords(const UserProfile& user);

nlohmann::json entry_to_json(const InterestEntry& e, const InterestConfig& config);
InterestEntry entry_from_json(const nlohmann::json& j);
nlohmann::json user_record_to_json(const UserProfile& u);
UserProfile user_from_json(const nlohmann::json& j);
nlohmann::json event_to_json(const BehaviorEvent& e);
BehaviorEvent event_from_json(const nlohmann::json& j);
ProfileDocument profile_document_from_json(const nlohmann::json& j);

}  // namespace emag
