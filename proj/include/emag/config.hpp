#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emag/taxonomy.hpp"

namespace emag {

struct EventDeltas {
  double click = 0.05;
  double save = 0.15;
  double unsave = -0.10;
  double mail = 0.10;
  double share = 0.20;
  double search = 0.10;
  double rate_step = 0.10;  // rate(r) moves weights by (r - 3) * rate_step
};

struct InterestConfig {
  EventDeltas deltas;
  double tier_high = 0.6;
  double tier_mid = 0.3;
  double decay_per_day = 0.99;
  int flush_days = 30;
  double progress_k = 25.0;
  double import_base = 0.3;
  double import_step = 0.1;
  double import_cap = 0.9;
  double follow_weight = 0.3;
};

struct RecommenderConfig {
  int max_rank = 8;
  double sim_threshold = 0.7;
  int max_results = 20;
};

struct MagazineConfig {
  double freshness_hours = 72.0;
  int default_page_size = 10;
  int negative_cache_days = 1;
  bool fetch_on_empty_search = true;
};

struct IngestConfig {
  std::vector<std::string> video_hosts = {"youtube.com", "vimeo.com"};
  int timeout_secs = 10;
};

struct EngineConfig {
  InterestConfig interest;
  RecommenderConfig recommender;
  MagazineConfig magazine;
  IngestConfig ingest;
  int session_ttl_hours = 24 * 7;
  Taxonomy taxonomy = Taxonomy::builtin();

  static EngineConfig load(const std::filesystem::path& path);
};

// Interest constants sit at the top level of the JSON record:
// {deltas{...}, tier_high, tier_mid, decay_per_day, flush_days, progress_k, ...}
// with "recommender", "magazine", "ingest" and "taxonomy" sections beside them.
void to_json(nlohmann::json& j, const EngineConfig& c);
void from_json(const nlohmann::json& j, EngineConfig& c);

}  // namespace emag
