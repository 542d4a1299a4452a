#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hsi/multiclass.hpp"
#include "hsi/random.hpp"
#include "hsi/types.hpp"

namespace hsi {

struct CvPoint {
  double nu = 0.0;
  double sigma = 0.0;
  double accuracy = -1.0;  // negative when nu is infeasible for some fold
};

struct CvResult {
  double best_nu = 0.0;
  double best_sigma = 0.0;
  double best_accuracy = -1.0;
  std::size_t folds = 0;
  std::vector<CvPoint> scores;  // sigma-major, nu-minor, in grid order
  std::vector<std::string> warnings;
};

/// Fold id of every training pixel of `split`, stratified by class.
inline std::vector<std::size_t> training_folds(const SplitSpec& split, std::size_t folds) {
  std::vector<std::size_t> cls(split.training.size());
  for (std::size_t i = 0; i < cls.size(); ++i) cls[i] = split.training[i].cls;
  return stratified_folds(cls, folds, mix_seed(split.seed, 0xC0FFEE));
}

/// OAO voting accuracy of one (nu, sigma) over the given folds of the
/// training pixels. Throws DataError when nu is infeasible for a fold.
inline double cv_accuracy(const SpectraMatrix& spectra, std::span<const std::uint32_t> rows,
                          std::span<const std::size_t> classes, std::size_t num_classes,
                          std::span<const std::size_t> fold, std::size_t folds, double nu,
                          double sigma, std::uint64_t seed, const MulticlassOptions& base) {
  MulticlassOptions opt = base;
  opt.min_sigmoid_class_size = std::numeric_limits<std::size_t>::max();  // votes only
  std::size_t correct = 0, total = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::uint32_t> train_rows;
    std::vector<std::size_t> train_cls;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (fold[i] != f) {
        train_rows.push_back(rows[i]);
        train_cls.push_back(classes[i]);
      }
    }
    const MulticlassModel model = train_multiclass(spectra, train_rows, train_cls, num_classes, nu,
                                                   {KernelKind::Rbf, sigma}, seed, opt);
    const SupportPool pool(model);
    std::vector<double> kbuf, dec;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (fold[i] != f) continue;
      pool.decisions(spectra.row(rows[i]), kbuf, dec);
      correct += vote(model, dec) == classes[i] ? 1 : 0;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

/// Stratified k-fold grid search over (nu, sigma) using training pixels only.
/// Ties prefer the smaller sigma, then the smaller nu.
inline CvResult cross_validate(const HyperCube& cube, const SplitSpec& split,
                               std::span<const double> nu_grid, std::span<const double> sigma_grid,
                               std::size_t folds = 5, const MulticlassOptions& opt = {}) {
  validate_cube(cube);
  if (nu_grid.empty() || sigma_grid.empty()) throw DataError("empty parameter grid");
  CvResult res;
  std::size_t num_classes = 0;
  for (const auto& p : split.training) num_classes = std::max<std::size_t>(num_classes, p.cls + 1);
  std::vector<std::size_t> per_class(num_classes, 0);
  for (const auto& p : split.training) ++per_class[p.cls];
  const std::size_t smallest = *std::min_element(per_class.begin(), per_class.end());
  res.folds = folds;
  if (smallest < folds) {
    res.folds = std::max<std::size_t>(2, smallest);
    res.warnings.push_back("smallest class has " + std::to_string(smallest) +
                           " training pixels; using " + std::to_string(res.folds) + " folds");
  }

  const SpectraMatrix spectra = pixel_spectra(cube);
  std::vector<std::uint32_t> rows;
  std::vector<std::size_t> classes;
  for (const auto& p : split.training) {
    rows.push_back(static_cast<std::uint32_t>(p.row * cube.width + p.col));
    classes.push_back(p.cls);
  }
  const auto fold = training_folds(split, res.folds);

  for (double sigma : sigma_grid) {
    for (double nu : nu_grid) {
      CvPoint pt{nu, sigma, -1.0};
      try {
        pt.accuracy = cv_accuracy(spectra, rows, classes, num_classes, fold, res.folds, nu, sigma,
                                  split.seed, opt);
      } catch (const DataError& e) {
        res.warnings.push_back("nu=" + std::to_string(nu) + " sigma=" + std::to_string(sigma) +
                               " skipped: " + e.what());
      }
      res.scores.push_back(pt);
    }
  }

  const CvPoint* best = nullptr;
  for (const auto& pt : res.scores) {
    if (pt.accuracy < 0.0) continue;
    if (!best || pt.accuracy > best->accuracy ||
        (pt.accuracy == best->accuracy &&
         (pt.sigma < best->sigma || (pt.sigma == best->sigma && pt.nu < best->nu)))) {
      best = &pt;
    }
  }
  if (!best) throw DataError("no feasible (nu, sigma) in the grid");
  res.best_nu = best->nu;
  res.best_sigma = best->sigma;
  res.best_accuracy = best->accuracy;
  return res;
}

}  // namespace hsi
