#include "emag/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace emag::kernels {

double score_one(const ContentItem& item,
                 const std::map<std::string, double, std::less<>>& high_weights, Timestamp now,
                 double freshness_hours) {
  double relevance = 0.0;
  for (const auto& kw : item.keywords) {
    if (auto it = high_weights.find(kw); it != high_weights.end()) relevance += it->second;
  }
  if (relevance == 0.0) return 0.0;
  double age = std::max(0.0, hours_between(item.publish_date, now));
  return relevance * std::exp(-age / freshness_hours);
}

std::vector<double> score_items_serial(std::span<const ContentItem* const> items,
                                       const std::map<std::string, double, std::less<>>& high_weights,
                                       Timestamp now, double freshness_hours) {
  std::vector<double> scores(items.size());
  for (std::size_t i = 0; i < items.size(); ++i)
    scores[i] = score_one(*items[i], high_weights, now, freshness_hours);
  return scores;
}

std::vector<double> score_items_parallel(std::span<const ContentItem* const> items,
                                         const std::map<std::string, double, std::less<>>& high_weights,
                                         Timestamp now, double freshness_hours) {
  std::vector<double> scores(items.size());
  const auto n = static_cast<long>(items.size());
#pragma omp parallel for schedule(static) if (n > 256)
  for (long i = 0; i < n; ++i)
    scores[static_cast<std::size_t>(i)] =
        score_one(*items[static_cast<std::size_t>(i)], high_weights, now, freshness_hours);
  return scores;
}

std::vector<html::Details> details_batch_serial(std::span<const Fragment> fragments) {
  std::vector<html::Details> out(fragments.size());
  for (std::size_t i = 0; i < fragments.size(); ++i)
    out[i] = html::description_details(fragments[i].html, fragments[i].base);
  return out;
}

std::vector<html::Details> details_batch_parallel(std::span<const Fragment> fragments) {
  std::vector<html::Details> out(fragments.size());
  const auto n = static_cast<long>(fragments.size());
#pragma omp parallel for schedule(dynamic, 4) if (n > 16)
  for (long i = 0; i < n; ++i)
  {
    const auto& f = fragments[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = html::description_details(f.html, f.base);
  }
  return out;
}

}  // namespace emag::kernels
