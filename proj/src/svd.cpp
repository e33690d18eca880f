#include "emag/svd.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>

#include "emag/error.hpp"

namespace emag {

namespace {

// Column-major working copy: `cols` columns of length `len`.
struct Columns {
  std::size_t len = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double* col(std::size_t j) { return data.data() + j * len; }
  const double* col(std::size_t j) const { return data.data() + j * len; }
};

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// Orthogonalizes columns i and j of w, accumulating the rotation into v.
// Returns false when the pair is already orthogonal to tolerance.
bool rotate(Columns& w, Columns& v, std::size_t i, std::size_t j, double tol) {
  double* wi = w.col(i);
  double* wj = w.col(j);
  double alpha = dot(wi, wi, w.len);
  double beta = dot(wj, wj, w.len);
  double gamma = dot(wi, wj, w.len);
  if (alpha == 0.0 || beta == 0.0) return false;
  if (std::abs(gamma) <= tol * std::sqrt(alpha) * std::sqrt(beta)) return false;

  double zeta = (beta - alpha) / (2.0 * gamma);
  double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
  double c = 1.0 / std::hypot(1.0, t);
  double s = c * t;
  for (std::size_t r = 0; r < w.len; ++r) {
    double a = wi[r], b = wj[r];
    wi[r] = c * a - s * b;
    wj[r] = s * a + c * b;
  }
  double* vi = v.col(i);
  double* vj = v.col(j);
  for (std::size_t r = 0; r < v.len; ++r) {
    double a = vi[r], b = vj[r];
    vi[r] = c * a - s * b;
    vj[r] = s * a + c * b;
  }
  return true;
}

bool sweep_cyclic(Columns& w, Columns& v, double tol) {
  bool rotated = false;
  for (std::size_t i = 0; i + 1 < w.cols; ++i)
    for (std::size_t j = i + 1; j < w.cols; ++j) rotated = rotate(w, v, i, j, tol) || rotated;
  return rotated;
}

// Circle-method tournament: every round pairs each column exactly once, so
// the rotations inside a round touch disjoint columns.
bool sweep_round_robin(Columns& w, Columns& v, double tol) {
  const std::size_t p = w.cols;
  const std::size_t players = p + (p % 2);
  std::vector<std::size_t> ring(players);
  std::iota(ring.begin(), ring.end(), 0);
  bool rotated = false;
  std::vector<std::pair<std::size_t, std::size_t>> pairs(players / 2);
  for (std::size_t round = 0; round + 1 < players; ++round) {
    for (std::size_t k = 0; k < players / 2; ++k) {
      auto a = ring[k], b = ring[players - 1 - k];
      pairs[k] = {std::min(a, b), std::max(a, b)};
    }
    const auto n_pairs = static_cast<long>(pairs.size());
    bool any = false;
#pragma omp parallel for schedule(dynamic) reduction(|| : any) if (w.len * n_pairs > 4096)
    for (long k = 0; k < n_pairs; ++k) {
      auto [a, b] = pairs[static_cast<std::size_t>(k)];
      if (b >= p) continue;  // bye
      any = rotate(w, v, a, b, tol) || any;
    }
    rotated = rotated || any;
    std::rotate(ring.begin() + 1, ring.end() - 1, ring.end());
  }
  return rotated;
}

// Replaces the flagged columns of q (length n) by unit vectors orthogonal to
// every other column, drawn greedily from the standard basis.
void complete_orthonormal(Columns& q, const std::vector<bool>& missing) {
  for (std::size_t j = 0; j < q.cols; ++j) {
    if (!missing[j]) continue;
    std::vector<double> best;
    double best_norm = -1.0;
    for (std::size_t e = 0; e < q.len; ++e) {
      std::vector<double> cand(q.len, 0.0);
      cand[e] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t o = 0; o < q.cols; ++o) {
          if (o == j || (missing[o] && o > j)) continue;
          double proj = dot(cand.data(), q.col(o), q.len);
          for (std::size_t r = 0; r < q.len; ++r) cand[r] -= proj * q.col(o)[r];
        }
      }
      double norm = std::sqrt(dot(cand.data(), cand.data(), q.len));
      if (norm > best_norm + 1e-12) {
        best_norm = norm;
        best = std::move(cand);
      }
    }
    for (std::size_t r = 0; r < q.len; ++r) q.col(j)[r] = best[r] / best_norm;
  }
}

}  // namespace

Matrix Decomposition::reconstruct() const {
  Matrix out(u.rows(), v.rows());
  for (std::size_t i = 0; i < u.rows(); ++i)
    for (std::size_t j = 0; j < v.rows(); ++j) {
      double sum = 0.0;
      for (std::size_t l = 0; l < s.size(); ++l) sum += u(i, l) * s[l] * v(j, l);
      out(i, j) = sum;
    }
  return out;
}

Decomposition svd_truncate(const Matrix& a, std::size_t k, const SvdOptions& options) {
  const std::size_t m = a.rows(), n = a.cols();
  const std::size_t p = std::min(m, n);
  if (p == 0) fail(ErrorKind::invalid_argument, "cannot decompose an empty matrix");
  if (k < 1 || k > p)
    fail(ErrorKind::invalid_argument, "rank " + std::to_string(k) + " outside [1, " +
                                          std::to_string(p) + "]");

  // Orthogonalize the p columns of whichever of a / a^T is tall.
  const bool transposed = m < n;
  const std::size_t len = std::max(m, n);
  Columns w{len, p, std::vector<double>(len * p)};
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t r = 0; r < len; ++r) w.col(j)[r] = transposed ? a(j, r) : a(r, j);
  Columns v{p, p, std::vector<double>(p * p, 0.0)};
  for (std::size_t j = 0; j < p; ++j) v.col(j)[j] = 1.0;

  const double tol = static_cast<double>(len) * DBL_EPSILON;
  const std::size_t cap = options.max_sweeps ? options.max_sweeps : 10 * p * p;
  bool converged = false;
  for (std::size_t sweep = 0; sweep < cap; ++sweep) {
    bool rotated = options.ordering == JacobiOrdering::cyclic ? sweep_cyclic(w, v, tol)
                                                              : sweep_round_robin(w, v, tol);
    if (!rotated) {
      converged = true;
      break;
    }
  }
  if (!converged)
    fail(ErrorKind::internal,
         "SVD did not converge within the iteration cap of " + std::to_string(cap) + " sweeps");

  std::vector<double> sigma(p);
  for (std::size_t j = 0; j < p; ++j) sigma[j] = std::sqrt(dot(w.col(j), w.col(j), len));
  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  // Normalized columns in sorted order; near-zero ones get completed.
  const double sigma_max = sigma[order[0]];
  const double zero_below = sigma_max * static_cast<double>(len) * DBL_EPSILON;
  Columns left{len, p, std::vector<double>(len * p)};
  Columns right{p, p, std::vector<double>(p * p)};
  std::vector<double> s_sorted(p);
  std::vector<bool> missing(p, false);
  for (std::size_t j = 0; j < p; ++j) {
    std::size_t src = order[j];
    s_sorted[j] = sigma[src];
    std::copy_n(v.col(src), p, right.col(j));
    if (sigma[src] <= zero_below || sigma[src] == 0.0) {
      missing[j] = true;
    } else {
      for (std::size_t r = 0; r < len; ++r) left.col(j)[r] = w.col(src)[r] / sigma[src];
    }
  }
  if (std::find(missing.begin(), missing.end(), true) != missing.end())
    complete_orthonormal(left, missing);

  // Map back: a = left * S * right^T, or a^T = left * S * right^T.
  const Columns& u_cols = transposed ? right : left;
  Columns& v_cols = transposed ? left : right;
  Columns u_fixed = u_cols;
  for (std::size_t j = 0; j < p; ++j) {
    const double* uc = u_fixed.col(j);
    std::size_t arg = 0;
    for (std::size_t r = 1; r < u_fixed.len; ++r)
      if (std::abs(uc[r]) > std::abs(uc[arg])) arg = r;
    if (uc[arg] < 0) {
      for (std::size_t r = 0; r < u_fixed.len; ++r) u_fixed.col(j)[r] = -u_fixed.col(j)[r];
      for (std::size_t r = 0; r < v_cols.len; ++r) v_cols.col(j)[r] = -v_cols.col(j)[r];
    }
  }

  Decomposition d;
  d.u = Matrix(m, k);
  d.v = Matrix(n, k);
  d.s.assign(s_sorted.begin(), s_sorted.begin() + static_cast<long>(k));
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t r = 0; r < m; ++r) d.u(r, j) = u_fixed.col(j)[r];
    for (std::size_t r = 0; r < n; ++r) d.v(r, j) = v_cols.col(j)[r];
  }
  return d;
}

}  // namespace emag
