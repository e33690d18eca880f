#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emag/config.hpp"
#include "emag/interest.hpp"
#include "emag/matrix.hpp"
#include "emag/svd.hpp"

namespace emag {

/// Users (sorted by id) x keywords (sorted lexicographically), raw weights,
/// zero where a user lacks the keyword.
struct InterestMatrix {
  std::vector<std::string> users;
  std::vector<std::string> keywords;
  Matrix values;
};

/// Throws Error(contract) when no user holds any keyword.
InterestMatrix build_matrix(const std::vector<UserProfile>& profiles);

struct LatentIndex {
  std::string user_id;
  std::vector<double> vector;
  std::uint64_t version = 0;
};

/// One published rebuild: the matrix, its rank-k decomposition and the
/// latent index of every row.
struct LatentSpace {
  std::uint64_t version = 0;
  InterestMatrix matrix;
  Decomposition decomposition;

  std::optional<std::size_t> row_of(std::string_view user_id) const;
};

/// k == 0 selects min(m, n, max_rank).
LatentSpace build_latent_space(const std::vector<UserProfile>& profiles, std::size_t k,
                               const RecommenderConfig& config, std::uint64_t version);

/// Row of u scaled elementwise by the singular values. Throws
/// Error(not_found) for users outside the decomposition.
LatentIndex user_index(const LatentSpace& space, std::string_view user_id);

/// Cosine of the two vectors. Throws Error(conflict) when the versions differ
/// and Error(contract) when either vector is zero.
double similarity(const LatentIndex& a, const LatentIndex& b);

enum class RecommendationReason { own_mid_tier, similar_user };

std::string_view to_string(RecommendationReason r);

struct Recommendation {
  std::string keyword;
  double score = 0.0;
  RecommendationReason reason = RecommendationReason::own_mid_tier;
  std::optional<std::string> contributing_user;
};

void to_json(nlohmann::json& j, const Recommendation& r);

struct RecommendParams {
  std::size_t k = 0;  // 0: min(m, n, max_rank)
  double sim_threshold = 0.7;
  std::size_t max_results = 20;

  static RecommendParams from(const RecommenderConfig& config);
};

/// Own Mid-tier keywords plus the Mid/High keywords of users whose latent
/// similarity reaches the threshold and that the target lacks entirely.
/// `profiles` supplies current interest maps; `space` supplies similarity.
std::vector<Recommendation> recommend_keywords(const UserProfile& target,
                                               const std::vector<UserProfile>& profiles,
                                               const LatentSpace& space,
                                               const RecommendParams& params,
                                               const InterestConfig& interest_config);

/// Builds a fresh latent space from `profiles` first.
std::vector<Recommendation> recommend_keywords(const UserProfile& target,
                                               const std::vector<UserProfile>& profiles,
                                               const RecommendParams& params,
                                               const RecommenderConfig& config,
                                               const InterestConfig& interest_config);

/// {version, users[], keywords[], k, U_k, S_k, V_k}; matrices as row arrays.
nlohmann::json space_to_json(const LatentSpace& space);
LatentSpace space_from_json(const nlohmann::json& j);

/// Holds the published latent space. Readers get an immutable shared
/// snapshot; rebuild swaps in a complete new version.
class Recommender {
 public:
  explicit Recommender(RecommenderConfig config) : config_(config) {}

  std::shared_ptr<const LatentSpace> current() const;

  /// Rebuilds from profiles and publishes version current+1.
  std::shared_ptr<const LatentSpace> rebuild(const std::vector<UserProfile>& profiles,
                                             std::size_t k = 0);

  void publish(std::shared_ptr<const LatentSpace> space);

 private:
  RecommenderConfig config_;
  mutable std::mutex mutex_;
  std::mutex rebuild_mutex_;
  std::shared_ptr<const LatentSpace> current_;
};

}  // namespace emag
