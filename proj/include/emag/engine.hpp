#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "emag/config.hpp"
#include "emag/ingest.hpp"
#include "emag/interest.hpp"
#include "emag/magazine.hpp"
#include "emag/recommender.hpp"
#include "emag/store.hpp"
#include "emag/time.hpp"

namespace emag {

struct EventResult {
  std::uint64_t seq = 0;
  std::vector<WeightChange> changes;
};

struct SearchOutcome {
  std::vector<ContentItem> results;
  std::optional<IngestReport> on_demand;  // set when an on-demand fetch ran
};

struct SavedView {
  SavedItem saved;
  ContentItem item;
};

/// Application service over the store. Every mutation of a user's state
/// (interest changes plus the event that caused them) is one store commit,
/// serialized per user.
class Engine {
 public:
  Engine(store::Store& store, EngineConfig config, Clock clock = system_clock(),
         Fetcher fetcher = {});

  const EngineConfig& config() const { return config_; }
  store::Store& store() { return store_; }
  Timestamp now() const { return clock_(); }

  // sources and ingestion
  void add_source(FeedSource source);
  std::vector<FeedSource> sources() const;
  FeedSource source(const std::string& id) const;
  void set_source_enabled(const std::string& id, bool enabled);
  IngestReport ingest(const std::string& source_id);
  std::vector<IngestReport> ingest_all();

  // content
  std::optional<ContentItem> find_content(const std::string& id) const;
  std::vector<ContentItem> contents() const;

  // users and interests
  UserProfile register_user(const std::string& email);
  std::optional<UserProfile> find_user(const std::string& user_id) const;
  UserProfile user(const std::string& user_id) const;  // throws not_found
  std::optional<std::string> user_id_for_email(const std::string& email) const;
  std::vector<UserProfile> users() const;

  std::vector<InterestEntry> import_profile(const ProfileDocument& doc);
  EventResult record_event(const BehaviorEvent& event);
  InterestEntry set_interest(const std::string& user_id, const std::string& keyword,
                             double weight, std::optional<Visibility> visibility);
  bool delete_interest(const std::string& user_id, const std::string& keyword);
  ListVisibility set_list_visibility(const std::string& user_id, ListVisibility visibility);
  std::vector<std::pair<std::string, double>> visible_interests(const std::string& owner_id,
                                                                const std::string& viewer_id) const;
  std::vector<InterestEntry> follow(const std::string& viewer_id, const std::string& owner_id,
                                    const std::optional<std::vector<std::string>>& keywords);
  FlushReport decay_and_flush(const std::string& user_id);
  std::map<std::string, FlushReport> decay_and_flush_all();
  int progress(const std::string& user_id) const;

  /// Rebuilds the user's interest map from an empty state by replaying the
  /// stored event log.
  UserProfile replay_events(const std::string& user_id) const;
  std::vector<nlohmann::json> events(const std::string& user_id) const;

  // magazine
  Magazine magazine(const std::string& user_id, std::size_t page_size) const;
  /// Emits a search event for user_id when given. An empty result triggers
  /// fetch_on_demand unless the keyword is already cached.
  SearchOutcome search(const std::optional<std::string>& user_id, const SearchQuery& query);
  /// Re-ingests every enabled source and records the keyword->category
  /// association (negative when nothing matches). Returns nullopt when the
  /// cache says the fetch is not needed.
  std::optional<IngestReport> fetch_on_demand(const std::string& keyword);

  SavedItem save_item(const std::string& user_id, const std::string& content_id);
  bool unsave_item(const std::string& user_id, const std::string& content_id);
  std::vector<SavedView> list_saved(const std::string& user_id, SavedSort sort,
                                    const SearchFilters& filters) const;
  int rate_item(const std::string& user_id, const std::string& content_id, int value);
  SharePayload share(const std::string& user_id, const std::string& content_id,
                     ShareChannel channel);

  // recommender
  std::uint64_t rebuild_recommender(std::size_t k = 0);
  std::shared_ptr<const LatentSpace> latent_space() const { return recommender_.current(); }
  std::vector<Recommendation> recommendations(const std::string& user_id) const;

 private:
  std::mutex& user_mutex(const std::string& user_id);
  UserProfile load_user(const store::Snapshot& snap, const std::string& user_id) const;
  void stage_user(store::WriteBatch& batch, const UserProfile& before, const UserProfile& after) const;
  std::optional<std::set<std::string>> content_keywords(const store::Snapshot& snap,
                                                        const std::string& content_id) const;
  EventResult apply_locked(const BehaviorEvent& event, store::WriteBatch batch);
  BehaviorEvent internal_event(const UserProfile& user, EventKind kind, std::string target,
                               double value = 0.0) const;
  Fetcher fetcher() const;

  store::Store& store_;
  EngineConfig config_;
  Clock clock_;
  Fetcher fetcher_;
  Recommender recommender_;
  std::mutex registry_mutex_;
  std::mutex users_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> user_mutexes_;
};

}  // namespace emag
