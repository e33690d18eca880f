#include "emag/recommender.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "emag/error.hpp"

namespace emag {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  if (!j.is_array() || j.size() != rows) fail(ErrorKind::invalid_argument, "bad matrix shape");
  for (std::size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols) fail(ErrorKind::invalid_argument, "bad matrix shape");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

}  // namespace

InterestMatrix build_matrix(const std::vector<UserProfile>& profiles) {
  std::vector<const UserProfile*> users;
  std::set<std::string> keywords;
  for (const auto& p : profiles) {
    users.push_back(&p);
    for (const auto& [kw, e] : p.interests) keywords.insert(kw);
  }
  if (keywords.empty()) fail(ErrorKind::contract, "empty interest matrix: no user holds a keyword");
  std::sort(users.begin(), users.end(),
            [](const UserProfile* a, const UserProfile* b) { return a->user_id < b->user_id; });

  InterestMatrix out;
  out.keywords.assign(keywords.begin(), keywords.end());
  out.values = Matrix(users.size(), out.keywords.size());
  for (std::size_t r = 0; r < users.size(); ++r) {
    out.users.push_back(users[r]->user_id);
    for (std::size_t c = 0; c < out.keywords.size(); ++c) {
      auto it = users[r]->interests.find(out.keywords[c]);
      if (it != users[r]->interests.end()) out.values(r, c) = it->second.weight;
    }
  }
  return out;
}

std::optional<std::size_t> LatentSpace::row_of(std::string_view user_id) const {
  auto it = std::lower_bound(matrix.users.begin(), matrix.users.end(), user_id);
  if (it == matrix.users.end() || *it != user_id) return std::nullopt;
  return static_cast<std::size_t>(it - matrix.users.begin());
}

LatentSpace build_latent_space(const std::vector<UserProfile>& profiles, std::size_t k,
                               const RecommenderConfig& config, std::uint64_t version) {
  LatentSpace space;
  space.version = version;
  space.matrix = build_matrix(profiles);
  std::size_t p = std::min(space.matrix.values.rows(), space.matrix.values.cols());
  if (k == 0) k = std::min(p, static_cast<std::size_t>(config.max_rank));
  space.decomposition = svd_truncate(space.matrix.values, k);
  return space;
}

LatentIndex user_index(const LatentSpace& space, std::string_view user_id) {
  auto row = space.row_of(user_id);
  if (!row) fail(ErrorKind::not_found, "user '" + std::string(user_id) + "' is not in the decomposition");
  const auto& d = space.decomposition;
  LatentIndex idx{std::string(user_id), std::vector<double>(d.rank()), space.version};
  for (std::size_t j = 0; j < d.rank(); ++j) idx.vector[j] = d.u(*row, j) * d.s[j];
  return idx;
}

double similarity(const LatentIndex& a, const LatentIndex& b) {
  if (a.version != b.version)
    fail(ErrorKind::conflict, "latent indexes come from different decompositions (" +
                                  std::to_string(a.version) + " vs " + std::to_string(b.version) + ")");
  if (a.vector.size() != b.vector.size())
    fail(ErrorKind::contract, "latent index length mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.vector.size(); ++i) {
    ab += a.vector[i] * b.vector[i];
    aa += a.vector[i] * a.vector[i];
    bb += b.vector[i] * b.vector[i];
  }
  if (aa == 0.0 || bb == 0.0) fail(ErrorKind::contract, "similarity undefined for a zero vector");
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

std::string_view to_string(RecommendationReason r) {
  return r == RecommendationReason::own_mid_tier ? "own_mid_tier" : "similar_user";
}

void to_json(json& j, const Recommendation& r) {
  j = {{"keyword", r.keyword},
       {"score", r.score},
       {"reason", to_string(r.reason)},
       {"contributing_user", r.contributing_user ? json(*r.contributing_user) : json(nullptr)}};
}

RecommendParams RecommendParams::from(const RecommenderConfig& config) {
  return {0, config.sim_threshold, static_cast<std::size_t>(std::max(0, config.max_results))};
}

std::vector<Recommendation> recommend_keywords(const UserProfile& target,
                                               const std::vector<UserProfile>& profiles,
                                               const LatentSpace& space,
                                               const RecommendParams& params,
                                               const InterestConfig& interest_config) {
  std::map<std::string, Recommendation> best;
  auto offer = [&best](Recommendation r) {
    auto it = best.find(r.keyword);
    if (it == best.end()) {
      best.emplace(r.keyword, std::move(r));
    } else if (r.score > it->second.score ||
               (r.score == it->second.score && r.contributing_user < it->second.contributing_user)) {
      it->second = std::move(r);
    }
  };

  for (const auto& [kw, e] : target.interests)
    if (tier_of(e.weight, interest_config) == Tier::mid)
      offer({kw, e.weight, RecommendationReason::own_mid_tier, std::nullopt});

  std::optional<LatentIndex> mine;
  if (space.row_of(target.user_id)) mine = user_index(space, target.user_id);
  bool usable = mine && std::any_of(mine->vector.begin(), mine->vector.end(),
                                    [](double x) { return x != 0.0; });
  if (usable) {
    for (const auto& other : profiles) {
      if (other.user_id == target.user_id || !space.row_of(other.user_id)) continue;
      LatentIndex theirs = user_index(space, other.user_id);
      if (std::all_of(theirs.vector.begin(), theirs.vector.end(), [](double x) { return x == 0.0; }))
        continue;
      double sim = similarity(*mine, theirs);
      if (sim < params.sim_threshold) continue;
      for (const auto& [kw, e] : other.interests) {
        if (target.interests.count(kw)) continue;
        if (tier_of(e.weight, interest_config) == Tier::low) continue;
        offer({kw, sim * e.weight, RecommendationReason::similar_user, other.user_id});
      }
    }
  }

  std::vector<Recommendation> out;
  for (auto& [kw, r] : best) out.push_back(std::move(r));
  std::sort(out.begin(), out.end(), [](const Recommendation& a, const Recommendation& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.keyword < b.keyword;
  });
  if (out.size() > params.max_results) out.resize(params.max_results);
  return out;
}

std::vector<Recommendation> recommend_keywords(const UserProfile& target,
                                               const std::vector<UserProfile>& profiles,
                                               const RecommendParams& params,
                                               const RecommenderConfig& config,
                                               const InterestConfig& interest_config) {
  LatentSpace space = build_latent_space(profiles, params.k, config, 1);
  return recommend_keywords(target, profiles, space, params, interest_config);
}

json space_to_json(const LatentSpace& space) {
  const auto& d = space.decomposition;
  return {{"version", space.version},
          {"users", space.matrix.users},
          {"keywords", space.matrix.keywords},
          {"values", matrix_to_json(space.matrix.values)},
          {"k", d.rank()},
          {"U_k", matrix_to_json(d.u)},
          {"S_k", d.s},
          {"V_k", matrix_to_json(d.v)}};
}

LatentSpace space_from_json(const json& j) {
  LatentSpace s;
  try {
    s.version = j.at("version").get<std::uint64_t>();
    s.matrix.users = j.at("users").get<std::vector<std::string>>();
    s.matrix.keywords = j.at("keywords").get<std::vector<std::string>>();
    auto m = s.matrix.users.size(), n = s.matrix.keywords.size();
    auto k = j.at("k").get<std::size_t>();
    s.matrix.values = matrix_from_json(j.at("values"), m, n);
    s.decomposition.u = matrix_from_json(j.at("U_k"), m, k);
    s.decomposition.s = j.at("S_k").get<std::vector<double>>();
    s.decomposition.v = matrix_from_json(j.at("V_k"), n, k);
    if (s.decomposition.s.size() != k) fail(ErrorKind::invalid_argument, "S_k length != k");
  } catch (const json::exception& e) {
    fail(ErrorKind::invalid_argument, std::string("malformed decomposition blob: ") + e.what());
  }
  return s;
}

std::shared_ptr<const LatentSpace> Recommender::current() const {
  std::lock_guard lock(mutex_);
  return current_;
}

std::shared_ptr<const LatentSpace> Recommender::rebuild(const std::vector<UserProfile>& profiles,
                                                        std::size_t k) {
  std::lock_guard exclusive(rebuild_mutex_);
  auto prev = current();
  std::uint64_t version = prev ? prev->version + 1 : 1;
  auto next = std::make_shared<const LatentSpace>(build_latent_space(profiles, k, config_, version));
  publish(next);
  return next;
}

void Recommender::publish(std::shared_ptr<const LatentSpace> space) {
  std::lock_guard lock(mutex_);
  current_ = std::move(space);
}

}  // namespace emag
