#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hsi/coupling.hpp"
#include "hsi/kernel.hpp"
#include "hsi/nu_svc.hpp"
#include "hsi/parallel.hpp"
#include "hsi/random.hpp"
#include "hsi/sigmoid.hpp"
#include "hsi/types.hpp"

namespace hsi {

struct MulticlassOptions {
  SvmOptions svm;
  std::size_t probability_folds = 5;   // internal CV producing sigmoid inputs
  std::size_t min_sigmoid_class_size = 5;
  std::size_t threads = 0;
};

/// Index of the unordered pair (i, j), i < j, in the order
/// (0,1), (0,2), ..., (0,c-1), (1,2), ..., (c-2,c-1).
inline std::size_t pair_index(std::size_t i, std::size_t j, std::size_t num_classes) {
  return i * (2 * num_classes - i - 1) / 2 + (j - i - 1);
}

/// One-against-one ensemble. In pairwise[pair_index(i, j)] class i is the
/// positive class.
struct MulticlassModel {
  std::size_t num_classes = 0;
  KernelSpec kernel;
  std::vector<BinaryModel> pairwise;

  const BinaryModel& pair(std::size_t i, std::size_t j) const {
    return pairwise[pair_index(i, j, num_classes)];
  }

  bool converged() const {
    for (const auto& m : pairwise) {
      if (!m.converged) return false;
    }
    return true;
  }
};

namespace detail {

inline SpectraMatrix gather_rows(const SpectraMatrix& src, std::span<const std::uint32_t> rows) {
  SpectraMatrix out{rows.size(), src.dim, std::vector<double>(rows.size() * src.dim)};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(src.row(rows[i]), src.row(rows[i]) + src.dim, out.data.begin() + i * src.dim);
  }
  return out;
}

/// Decision values for every training point, each predicted by a model that
/// did not see it.
inline std::vector<double> cross_validated_decisions(const SpectraMatrix& x, std::span<const int> y,
                                                     double nu, const KernelSpec& kernel,
                                                     const MulticlassOptions& opt,
                                                     std::uint64_t seed) {
  const std::size_t m = y.size();
  std::vector<std::size_t> cls(m);
  for (std::size_t i = 0; i < m; ++i) cls[i] = y[i] > 0 ? 0 : 1;
  const auto fold = stratified_folds(cls, opt.probability_folds, seed);
  std::vector<double> dec(m, 0.0);
  for (std::size_t f = 0; f < opt.probability_folds; ++f) {
    std::vector<std::uint32_t> train_rows;
    std::vector<int> train_y;
    for (std::size_t i = 0; i < m; ++i) {
      if (fold[i] != f) {
        train_rows.push_back(static_cast<std::uint32_t>(i));
        train_y.push_back(y[i]);
      }
    }
    const double limit = nu_max(train_y);
    const bool both = std::find(train_y.begin(), train_y.end(), 1) != train_y.end() &&
                      std::find(train_y.begin(), train_y.end(), -1) != train_y.end();
    if (!both) {
      for (std::size_t i = 0; i < m; ++i) {
        if (fold[i] == f) dec[i] = train_y.empty() ? 0.0 : (train_y.front() > 0 ? 1.0 : -1.0);
      }
      continue;
    }
    const SpectraMatrix sub = gather_rows(x, train_rows);
    const BinaryModel model = train_binary(sub, train_y, std::min(nu, limit), kernel, opt.svm);
    for (std::size_t i = 0; i < m; ++i) {
      if (fold[i] == f) dec[i] = decision(model, {x.row(i), x.dim});
    }
  }
  return dec;
}

}  // namespace detail

/// Trains all c(c-1)/2 pairwise models on the given rows of `spectra`.
/// `classes[k]` is the 0-based class of row `rows[k]`.
inline MulticlassModel train_multiclass(const SpectraMatrix& spectra,
                                        std::span<const std::uint32_t> rows,
                                        std::span<const std::size_t> classes,
                                        std::size_t num_classes, double nu,
                                        const KernelSpec& kernel, std::uint64_t seed,
                                        const MulticlassOptions& opt = {}) {
  validate_kernel(kernel);
  if (num_classes < 2) throw DataError("at least two classes are required");
  if (rows.size() != classes.size()) throw DataError("rows and classes differ in count");

  std::vector<std::vector<std::uint32_t>> members(num_classes);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (classes[k] >= num_classes) throw DataError("training class out of range");
    members[classes[k]].push_back(rows[k]);
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (members[c].empty()) {
      throw DataError("class " + std::to_string(c + 1) + " has no training pixels");
    }
    std::sort(members[c].begin(), members[c].end());
  }

  MulticlassModel model;
  model.num_classes = num_classes;
  model.kernel = kernel;
  model.pairwise.resize(num_classes * (num_classes - 1) / 2);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < num_classes; ++i) {
    for (std::size_t j = i + 1; j < num_classes; ++j) pairs.emplace_back(i, j);
  }

  parallel_for(pairs.size(), opt.threads, [&](std::size_t p) {
    const auto [ci, cj] = pairs[p];
    std::vector<std::uint32_t> ids(members[ci]);
    ids.insert(ids.end(), members[cj].begin(), members[cj].end());
    std::vector<int> y(ids.size(), -1);
    std::fill(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(members[ci].size()), 1);
    const SpectraMatrix x = detail::gather_rows(spectra, ids);

    BinaryModel bm = train_binary(x, y, nu, kernel, opt.svm, ids);
    if (std::min(members[ci].size(), members[cj].size()) >= opt.min_sigmoid_class_size) {
      const auto dec = detail::cross_validated_decisions(x, y, nu, kernel, opt, mix_seed(seed, p));
      bm.sigmoid = fit_sigmoid(dec, y).params;
      bm.sigmoid_fallback = false;
    } else {
      bm.sigmoid = SigmoidParams{};
      bm.sigmoid_fallback = true;
    }
    model.pairwise[p] = std::move(bm);
  });
  return model;
}

/// Trains on the training pixels of `split`; classes are 0..max class.
inline MulticlassModel train_multiclass(const HyperCube& cube, const SplitSpec& split, double nu,
                                        const KernelSpec& kernel,
                                        const MulticlassOptions& opt = {}) {
  validate_cube(cube);
  const SpectraMatrix spectra = pixel_spectra(cube);
  std::vector<std::uint32_t> rows;
  std::vector<std::size_t> classes;
  std::size_t num_classes = 0;
  for (const auto& p : split.training) {
    if (p.row >= cube.height || p.col >= cube.width) throw DataError("training pixel outside cube");
    rows.push_back(static_cast<std::uint32_t>(p.row * cube.width + p.col));
    classes.push_back(p.cls);
    num_classes = std::max<std::size_t>(num_classes, p.cls + 1);
  }
  return train_multiclass(spectra, rows, classes, num_classes, nu, kernel, split.seed, opt);
}

/// Support vectors of all pairwise models, deduplicated by source pixel so a
/// pixel's kernel values are computed once per prediction.
class SupportPool {
 public:
  explicit SupportPool(const MulticlassModel& model) : model_(&model) {
    std::map<std::uint32_t, std::uint32_t> by_pixel;
    std::size_t dim = 0;
    for (const auto& bm : model.pairwise) {
      if (bm.size() > 0) dim = bm.support_vectors.dim;
    }
    vectors_.dim = dim;
    slots_.resize(model.pairwise.size());
    for (std::size_t p = 0; p < model.pairwise.size(); ++p) {
      const auto& bm = model.pairwise[p];
      for (std::size_t s = 0; s < bm.size(); ++s) {
        std::uint32_t slot;
        const auto key = bm.sv_pixel[s];
        if (auto it = by_pixel.find(key); key != kInlineVector && it != by_pixel.end()) {
          slot = it->second;
        } else {
          slot = static_cast<std::uint32_t>(vectors_.rows++);
          vectors_.data.insert(vectors_.data.end(), bm.support_vectors.row(s),
                               bm.support_vectors.row(s) + dim);
          if (key != kInlineVector) by_pixel.emplace(key, slot);
        }
        slots_[p].push_back(slot);
      }
    }
  }

  std::size_t size() const { return vectors_.rows; }
  std::size_t dim() const { return vectors_.dim; }

  /// Decision value of every pairwise model at x.
  void decisions(const double* x, std::vector<double>& kernel_buf, std::vector<double>& out) const {
    kernel_buf.resize(vectors_.rows);
    for (std::size_t s = 0; s < vectors_.rows; ++s) {
      kernel_buf[s] = kernel_value(model_->kernel, vectors_.row(s), x, vectors_.dim);
    }
    out.resize(model_->pairwise.size());
    for (std::size_t p = 0; p < model_->pairwise.size(); ++p) {
      const auto& bm = model_->pairwise[p];
      double f = bm.bias;
      for (std::size_t s = 0; s < bm.size(); ++s) f += bm.alpha_y[s] * kernel_buf[slots_[p][s]];
      out[p] = f;
    }
  }

 private:
  const MulticlassModel* model_;
  SpectraMatrix vectors_;
  std::vector<std::vector<std::uint32_t>> slots_;
};

inline PairwiseMatrix pairwise_from_decisions(const MulticlassModel& model,
                                              std::span<const double> dec) {
  PairwiseMatrix r(model.num_classes);
  for (std::size_t i = 0; i < model.num_classes; ++i) {
    for (std::size_t j = i + 1; j < model.num_classes; ++j) {
      const std::size_t p = pair_index(i, j, model.num_classes);
      r.set_pair(i, j, sigmoid_probability(dec[p], model.pairwise[p].sigmoid));
    }
  }
  return r;
}

/// Coupled class probabilities of one spectrum, evaluated model by model.
inline std::vector<double> predict_probabilities(const MulticlassModel& model,
                                                 std::span<const double> x) {
  std::vector<double> dec(model.pairwise.size());
  for (std::size_t p = 0; p < dec.size(); ++p) dec[p] = decision(model.pairwise[p], x);
  return couple(pairwise_from_decisions(model, dec)).p;
}

/// One-against-one majority vote; ties go to the smaller class index.
inline std::size_t vote(const MulticlassModel& model, std::span<const double> dec) {
  std::vector<std::size_t> wins(model.num_classes, 0);
  for (std::size_t i = 0; i < model.num_classes; ++i) {
    for (std::size_t j = i + 1; j < model.num_classes; ++j) {
      ++wins[dec[pair_index(i, j, model.num_classes)] > 0.0 ? i : j];
    }
  }
  return static_cast<std::size_t>(std::max_element(wins.begin(), wins.end()) - wins.begin());
}

/// Stage-1 probability tensor. Training pixels get the one-hot vector of
/// their class; every other pixel, labeled or not, gets coupled
/// probabilities.
inline ProbabilityTensor predict_tensor(const MulticlassModel& model, const HyperCube& cube,
                                        const SplitSpec& split, std::size_t threads = 0) {
  validate_cube(cube);
  const SpectraMatrix spectra = pixel_spectra(cube);
  const SupportPool pool(model);
  if (pool.size() > 0 && pool.dim() != cube.bands) {
    throw DataError("model band count does not match the cube");
  }
  ProbabilityTensor out(cube.height, cube.width, model.num_classes);
  std::vector<std::int32_t> fixed(cube.pixels(), -1);
  for (const auto& p : split.training) {
    if (p.cls >= model.num_classes) throw DataError("training class not covered by the model");
    fixed[p.row * cube.width + p.col] = static_cast<std::int32_t>(p.cls);
  }

  parallel_for(cube.height, threads, [&](std::size_t row) {
    std::vector<double> kbuf, dec;
    for (std::size_t col = 0; col < cube.width; ++col) {
      const std::size_t px = row * cube.width + col;
      if (fixed[px] >= 0) {
        out.at(static_cast<std::size_t>(fixed[px]), px) = 1.0;
        continue;
      }
      pool.decisions(spectra.row(px), kbuf, dec);
      const auto p = couple(pairwise_from_decisions(model, dec)).p;
      for (std::size_t k = 0; k < model.num_classes; ++k) out.at(k, px) = p[k];
    }
  });
  return out;
}

}  // namespace hsi
