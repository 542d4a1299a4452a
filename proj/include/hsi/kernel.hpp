#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <list>
#include <span>
#include <unordered_map>
#include <vector>

#include "hsi/types.hpp"

namespace hsi {

enum class KernelKind : std::uint8_t { Rbf = 0 };

struct KernelSpec {
  KernelKind kind = KernelKind::Rbf;
  double sigma = 1.0;
};

inline void validate_kernel(const KernelSpec& k) {
  if (k.kind != KernelKind::Rbf) throw DataError("unsupported kernel kind");
  if (!(k.sigma > 0.0) || !std::isfinite(k.sigma)) throw DataError("kernel sigma must be positive");
}

inline double squared_distance(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

/// exp(-|x - y|^2 / (2 sigma^2))
inline double rbf(std::span<const double> x, std::span<const double> y, double sigma) {
  if (x.size() != y.size()) throw DataError("rbf: spectra differ in length");
  validate_kernel({KernelKind::Rbf, sigma});
  return std::exp(-squared_distance(x.data(), y.data(), x.size()) / (2.0 * sigma * sigma));
}

inline double kernel_value(const KernelSpec& k, const double* x, const double* y, std::size_t n) {
  return std::exp(-squared_distance(x, y, n) / (2.0 * k.sigma * k.sigma));
}

inline std::vector<double> gram_matrix(const SpectraMatrix& x, const KernelSpec& k) {
  const std::size_t m = x.rows;
  std::vector<double> g(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    g[i * m + i] = 1.0;
    for (std::size_t j = i + 1; j < m; ++j) {
      const double v = kernel_value(k, x.row(i), x.row(j), x.dim);
      g[i * m + j] = v;
      g[j * m + i] = v;
    }
  }
  return g;
}

/// Column access to the kernel matrix of a training set.
///
/// Small problems get the full Gram matrix up front. Larger ones keep
/// recently used columns in an LRU cache bounded by `cache_bytes`.
class KernelColumns {
 public:
  KernelColumns(const SpectraMatrix& x, const KernelSpec& k, std::size_t cache_bytes,
                std::size_t full_gram_limit)
      : x_(x), kernel_(k) {
    if (x.rows <= full_gram_limit) {
      full_ = gram_matrix(x, k);
    } else {
      const std::size_t column_bytes = x.rows * sizeof(double);
      capacity_ = std::max<std::size_t>(4, cache_bytes / column_bytes);
    }
  }

  std::size_t size() const { return x_.rows; }
  bool holds_full_matrix() const { return !full_.empty(); }
  std::size_t cached_columns() const { return lru_.size(); }

  /// Column i. The span stays valid while column i is one of the two most
  /// recently requested columns.
  std::span<const double> column(std::size_t i) {
    const std::size_t m = x_.rows;
    if (!full_.empty()) return {full_.data() + i * m, m};
    if (auto it = index_.find(i); it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->values;
    }
    if (lru_.size() >= capacity_) {
      index_.erase(lru_.back().index);
      lru_.pop_back();
    }
    Entry e{i, std::vector<double>(m)};
    for (std::size_t j = 0; j < m; ++j) {
      e.values[j] = j == i ? 1.0 : kernel_value(kernel_, x_.row(i), x_.row(j), x_.dim);
    }
    lru_.push_front(std::move(e));
    index_[i] = lru_.begin();
    return lru_.front().values;
  }

 private:
  struct Entry {
    std::size_t index;
    std::vector<double> values;
  };

  const SpectraMatrix& x_;
  KernelSpec kernel_;
  std::vector<double> full_;
  std::size_t capacity_ = 0;
  std::list<Entry> lru_;
  std::unordered_map<std::size_t, std::list<Entry>::iterator> index_;
};

}  // namespace hsi
