#include "emag/config.hpp"

#include <fstream>

#include "emag/error.hpp"

namespace emag {

namespace {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace

void to_json(nlohmann::json& j, const EngineConfig& c) {
  const auto& i = c.interest;
  j = {
      {"deltas",
       {{"click", i.deltas.click},
        {"save", i.deltas.save},
        {"unsave", i.deltas.unsave},
        {"mail", i.deltas.mail},
        {"share", i.deltas.share},
        {"search", i.deltas.search},
        {"rate_step", i.deltas.rate_step}}},
      {"tier_high", i.tier_high},
      {"tier_mid", i.tier_mid},
      {"decay_per_day", i.decay_per_day},
      {"flush_days", i.flush_days},
      {"progress_k", i.progress_k},
      {"import_base", i.import_base},
      {"import_step", i.import_step},
      {"import_cap", i.import_cap},
      {"follow_weight", i.follow_weight},
      {"recommender",
       {{"max_rank", c.recommender.max_rank},
        {"sim_threshold", c.recommender.sim_threshold},
        {"max_results", c.recommender.max_results}}},
      {"magazine",
       {{"freshness_hours", c.magazine.freshness_hours},
        {"default_page_size", c.magazine.default_page_size},
        {"negative_cache_days", c.magazine.negative_cache_days},
        {"fetch_on_empty_search", c.magazine.fetch_on_empty_search}}},
      {"ingest",
       {{"video_hosts", c.ingest.video_hosts}, {"timeout_secs", c.ingest.timeout_secs}}},
      {"session_ttl_hours", c.session_ttl_hours},
      {"taxonomy", c.taxonomy},
  };
}

void from_json(const nlohmann::json& j, EngineConfig& c) {
  auto& i = c.interest;
  if (auto d = j.find("deltas"); d != j.end()) {
    read(*d, "click", i.deltas.click);
    read(*d, "save", i.deltas.save);
    read(*d, "unsave", i.deltas.unsave);
    read(*d, "mail", i.deltas.mail);
    read(*d, "share", i.deltas.share);
    read(*d, "search", i.deltas.search);
    read(*d, "rate_step", i.deltas.rate_step);
  }
  read(j, "tier_high", i.tier_high);
  read(j, "tier_mid", i.tier_mid);
  read(j, "decay_per_day", i.decay_per_day);
  read(j, "flush_days", i.flush_days);
  read(j, "progress_k", i.progress_k);
  read(j, "import_base", i.import_base);
  read(j, "import_step", i.import_step);
  read(j, "import_cap", i.import_cap);
  read(j, "follow_weight", i.follow_weight);
  if (auto r = j.find("recommender"); r != j.end()) {
    read(*r, "max_rank", c.recommender.max_rank);
    read(*r, "sim_threshold", c.recommender.sim_threshold);
    read(*r, "max_results", c.recommender.max_results);
  }
  if (auto m = j.find("magazine"); m != j.end()) {
    read(*m, "freshness_hours", c.magazine.freshness_hours);
    read(*m, "default_page_size", c.magazine.default_page_size);
    read(*m, "negative_cache_days", c.magazine.negative_cache_days);
    read(*m, "fetch_on_empty_search", c.magazine.fetch_on_empty_search);
  }
  if (auto g = j.find("ingest"); g != j.end()) {
    read(*g, "video_hosts", c.ingest.video_hosts);
    read(*g, "timeout_secs", c.ingest.timeout_secs);
  }
  read(j, "session_ttl_hours", c.session_ttl_hours);
  read(j, "taxonomy", c.taxonomy);

  if (!(i.tier_mid > 0 && i.tier_mid < i.tier_high && i.tier_high <= 1))
    fail(ErrorKind::invalid_argument, "config: need 0 < tier_mid < tier_high <= 1");
  if (!(i.decay_per_day > 0 && i.decay_per_day <= 1))
    fail(ErrorKind::invalid_argument, "config: decay_per_day must be in (0, 1]");
  if (i.progress_k <= 0) fail(ErrorKind::invalid_argument, "config: progress_k must be > 0");
  if (c.recommender.max_rank < 1) fail(ErrorKind::invalid_argument, "config: max_rank < 1");
}

EngineConfig EngineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot read config " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) fail(ErrorKind::invalid_argument, "config " + path.string() + " is not JSON");
  return j.get<EngineConfig>();
}

}  // namespace emag
