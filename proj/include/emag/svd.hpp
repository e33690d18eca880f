#pragma once

#include <cstddef>
#include <vector>

#include "emag/matrix.hpp"

namespace emag {

struct Decomposition {
  Matrix u;               // m x k, orthonormal columns
  std::vector<double> s;  // k singular values, non-increasing
  Matrix v;               // n x k, orthonormal columns

  std::size_t rank() const { return s.size(); }
  Matrix reconstruct() const;  // u * diag(s) * v^T
};

enum class JacobiOrdering {
  cyclic,       // row-cyclic pair order, one rotation at a time
  round_robin,  // tournament rounds of disjoint pairs, rotated in parallel
};

struct SvdOptions {
  JacobiOrdering ordering = JacobiOrdering::round_robin;
  std::size_t max_sweeps = 0;  // 0: 10 * min(m, n)^2
};

/// Best rank-k factorization by one-sided (Hestenes) Jacobi rotations.
/// Each left singular vector is oriented so its largest-magnitude component
/// is positive. Columns of u belonging to zero singular values are completed
/// to an orthonormal set. Throws Error(invalid_argument) for k outside
/// [1, min(m, n)] and Error(internal) when the sweep cap is reached.
Decomposition svd_truncate(const Matrix& a, std::size_t k, const SvdOptions& options = {});

}  // namespace emag
