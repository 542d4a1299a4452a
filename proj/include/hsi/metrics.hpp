#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hsi/types.hpp"

namespace hsi {

struct MetricsReport {
  double oa = 0.0;
  double aa = 0.0;
  double kappa = 0.0;
  std::vector<double> per_class_accuracy;  // NaN for classes without test pixels
  ConfusionMatrix confusion;
};

/// Per-pixel argmax over classes (1-based labels); ties go to the smaller
/// class index.
inline LabelMap classify_argmax(const ProbabilityTensor& u) {
  LabelMap out;
  out.height = u.height;
  out.width = u.width;
  out.num_classes = u.num_classes;
  out.labels.assign(u.pixels(), 0);
  for (std::size_t px = 0; px < u.pixels(); ++px) {
    std::size_t best = 0;
    double best_value = u.at(0, px);
    for (std::size_t k = 1; k < u.num_classes; ++k) {
      if (u.at(k, px) > best_value) {
        best_value = u.at(k, px);
        best = k;
      }
    }
    out.labels[px] = static_cast<std::uint16_t>(best + 1);
  }
  return out;
}

/// OA, AA and Cohen's kappa of a confusion matrix. Kappa uses the integer
/// form (N tr - S) / (N^2 - S), S = sum_k row_k col_k, so the only rounding
/// is the final division.
inline MetricsReport metrics_from_confusion(const ConfusionMatrix& cm) {
  MetricsReport r;
  r.confusion = cm;
  const std::size_t c = cm.num_classes;
  const std::uint64_t total = cm.total();
  if (total == 0) throw DataError("no testing pixels to score");
  std::uint64_t trace = 0;
  unsigned __int128 chance = 0;
  long double recall_sum = 0.0L;
  std::size_t scored_classes = 0;
  r.per_class_accuracy.assign(c, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < c; ++k) {
    std::uint64_t row = 0, col = 0;
    for (std::size_t j = 0; j < c; ++j) {
      row += cm(k, j);
      col += cm(j, k);
    }
    trace += cm(k, k);
    chance += static_cast<unsigned __int128>(row) * col;
    if (row > 0) {
      const long double recall = static_cast<long double>(cm(k, k)) / row;
      r.per_class_accuracy[k] = static_cast<double>(recall);
      recall_sum += recall;
      ++scored_classes;
    }
  }
  r.oa = static_cast<double>(trace) / static_cast<double>(total);
  r.aa = static_cast<double>(recall_sum / scored_classes);
  const auto n2 = static_cast<unsigned __int128>(total) * total;
  const auto agree = static_cast<unsigned __int128>(total) * trace;
  if (n2 == chance) {
    r.kappa = agree == chance ? 1.0 : 0.0;
  } else {
    const long double num = agree >= chance ? static_cast<long double>(agree - chance)
                                            : -static_cast<long double>(chance - agree);
    r.kappa = static_cast<double>(num / static_cast<long double>(n2 - chance));
  }
  return r;
}

/// Scores `predicted` against `truth` on the testing pixels only.
inline MetricsReport compute_metrics(const LabelMap& predicted, const LabelMap& truth,
                                     std::span<const LabeledPixel> testing) {
  if (predicted.height != truth.height || predicted.width != truth.width) {
    throw DataError("predicted and ground-truth maps differ in shape");
  }
  if (testing.empty()) throw DataError("empty testing set");
  const std::size_t c = std::max(truth.num_classes, predicted.num_classes);
  ConfusionMatrix cm(c);
  for (const auto& p : testing) {
    const std::size_t px = p.row * truth.width + p.col;
    const auto t = truth.class_of(px);
    if (!t) throw DataError("testing pixel is unlabeled in the ground truth");
    const auto q = predicted.class_of(px);
    if (!q) throw DataError("testing pixel has no predicted class");
    ++cm(*t, *q);
  }
  return metrics_from_confusion(cm);
}

/// Per-pixel count of runs in which the pixel was tested and misclassified.
struct Heatmap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t runs = 0;
  std::vector<std::uint32_t> counts;
  PixelMask tested;  // 1 if the pixel was a testing pixel in any run
};

inline Heatmap misclassification_heatmap(std::span<const LabelMap> runs, const LabelMap& truth,
                                         std::span<const std::vector<LabeledPixel>> testing) {
  if (runs.size() != testing.size()) throw DataError("one testing set per run is required");
  Heatmap h{truth.height, truth.width, runs.size(), std::vector<std::uint32_t>(truth.pixels(), 0),
            PixelMask(truth.pixels(), 0)};
  for (std::size_t r = 0; r < runs.size(); ++r) {
    if (runs[r].height != truth.height || runs[r].width != truth.width) {
      throw DataError("run " + std::to_string(r + 1) + " differs in shape from the ground truth");
    }
    for (const auto& p : testing[r]) {
      const std::size_t px = p.row * truth.width + p.col;
      h.tested[px] = 1;
      if (runs[r].labels[px] != truth.labels[px]) ++h.counts[px];
    }
  }
  return h;
}

}  // namespace hsi
