#pragma once

// Data-parallel inner loops. Every OpenMP kernel has a serial reference
// with the same signature; tests hold the two to identical results and
// bench/ compares their throughput. The Jacobi SVD sweep orderings in svd.hpp
// follow the same split.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "emag/html.hpp"
#include "emag/ingest.hpp"
#include "emag/time.hpp"

namespace emag::kernels {

/// Sum of high_weights over the item's keywords, times exp(-age_hours / freshness_hours).
double score_one(const ContentItem& item, const std::map<std::string, double, std::less<>>& high_weights,
                 Timestamp now, double freshness_hours);

std::vector<double> score_items_serial(std::span<const ContentItem* const> items,
                                       const std::map<std::string, double, std::less<>>& high_weights,
                                       Timestamp now, double freshness_hours);
std::vector<double> score_items_parallel(std::span<const ContentItem* const> items,
                                         const std::map<std::string, double, std::less<>>& high_weights,
                                         Timestamp now, double freshness_hours);

struct Fragment {
  std::string_view html;
  std::string_view base;  // relative links resolve against this
};

std::vector<html::Details> details_batch_serial(std::span<const Fragment> fragments);
std::vector<html::Details> details_batch_parallel(std::span<const Fragment> fragments);

}  // namespace emag::kernels
