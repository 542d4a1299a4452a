#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "hsi/types.hpp"

namespace hsi {

/// Square matrix of pairwise probabilities; entry (i, j) estimates
/// P(class i | class i or j). The diagonal is ignored.
struct PairwiseMatrix {
  std::size_t num_classes = 0;
  std::vector<double> r;

  explicit PairwiseMatrix(std::size_t c = 0) : num_classes(c), r(c * c, 0.0) {}

  double operator()(std::size_t i, std::size_t j) const { return r[i * num_classes + j]; }
  double& operator()(std::size_t i, std::size_t j) { return r[i * num_classes + j]; }

  /// Sets (i, j) to p and (j, i) to 1 - p.
  void set_pair(std::size_t i, std::size_t j, double p) {
    (*this)(i, j) = p;
    (*this)(j, i) = 1.0 - p;
  }
};

struct CouplingResult {
  std::vector<double> p;
  bool used_ridge = false;
  bool singular = false;  // uniform vector returned
};

namespace detail {

/// Gaussian elimination with partial pivoting on a dense n x n system stored
/// row-major. Returns false if a pivot falls below `min_pivot`.
inline bool solve_dense(std::vector<double> a, std::vector<double>& rhs, std::size_t n,
                        double min_pivot) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    }
    if (!(std::abs(a[piv * n + col]) >= min_pivot)) return false;
    if (piv != col) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[col * n + k], a[piv * n + k]);
      std::swap(rhs[col], rhs[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a[r * n + col] / a[col * n + col];
      if (factor == 0.0) continue;
      for (std::size_t k = col; k < n; ++k) a[r * n + k] -= factor * a[col * n + k];
      rhs[r] -= factor * rhs[col];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i * n + k] * rhs[k];
    rhs[i] = s / a[i * n + i];
  }
  return true;
}

}  // namespace detail

/// Class probabilities from pairwise probabilities: minimizes
///   1/2 sum_i sum_{j != i} (r_ji p_i - r_ij p_j)^2  s.t. sum p = 1, p >= 0
/// through the bordered system [Q e; e' 0][p; b] = [0; 1].
inline CouplingResult couple(const PairwiseMatrix& r) {
  const std::size_t c = r.num_classes;
  if (c < 2) throw DataError("couple needs at least two classes");
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      if (i != j && !(r(i, j) > 0.0 && r(i, j) < 1.0)) {
        throw DataError("pairwise probabilities must lie in (0, 1)");
      }
    }
  }

  const std::size_t n = c + 1;
  std::vector<double> system(n * n, 0.0);
  for (std::size_t i = 0; i < c; ++i) {
    double diag = 0.0;
    for (std::size_t s = 0; s < c; ++s) {
      if (s == i) continue;
      diag += r(s, i) * r(s, i);
      system[i * n + s] = -r(s, i) * r(i, s);
    }
    system[i * n + i] = diag;
    system[i * n + c] = 1.0;
    system[c * n + i] = 1.0;
  }

  CouplingResult out;
  constexpr double kMinPivot = 1e-12;
  std::vector<double> rhs(n, 0.0);
  rhs[c] = 1.0;
  if (!detail::solve_dense(system, rhs, n, kMinPivot)) {
    out.used_ridge = true;
    for (std::size_t i = 0; i < c; ++i) system[i * n + i] += 1e-10;
    rhs.assign(n, 0.0);
    rhs[c] = 1.0;
    if (!detail::solve_dense(system, rhs, n, kMinPivot)) {
      out.singular = true;
      out.p.assign(c, 1.0 / static_cast<double>(c));
      return out;
    }
  }

  out.p.assign(rhs.begin(), rhs.begin() + static_cast<std::ptrdiff_t>(c));
  double total = 0.0;
  for (double& v : out.p) {
    if (v < 0.0) v = 0.0;
    total += v;
  }
  if (!(total > 0.0)) {
    out.singular = true;
    out.p.assign(c, 1.0 / static_cast<double>(c));
    return out;
  }
  for (double& v : out.p) v /= total;
  return out;
}

/// The coupling objective itself, for diagnostics and tests.
inline double coupling_objective(const PairwiseMatrix& r, std::span<const double> p) {
  double total = 0.0;
  for (std::size_t i = 0; i < r.num_classes; ++i) {
    for (std::size_t j = 0; j < r.num_classes; ++j) {
      if (i == j) continue;
      const double d = r(j, i) * p[i] - r(i, j) * p[j];
      total += d * d;
    }
  }
  return 0.5 * total;
}

}  // namespace hsi
