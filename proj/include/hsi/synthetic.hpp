#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "hsi/types.hpp"

namespace hsi {

/// Piecewise-constant scene with Gaussian class spectra, for tests and demos.
struct SyntheticScene {
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t bands = 8;
  std::size_t classes = 4;
  double separation = 1.0;  // distance between neighbouring class means
  double noise = 0.5;       // per-band standard deviation
  std::uint64_t seed = 1;
  double unlabeled_fraction = 0.0;
};

struct SyntheticData {
  HyperCube cube;
  LabelMap labels;
};

/// Class regions are vertical bands of equal width, split once horizontally
/// when there are more than two classes, so every class forms a few
/// contiguous blocks. Class k has mean separation * k * d for a fixed unit
/// direction d plus a class-specific bump in one band.
inline SyntheticData make_synthetic_scene(const SyntheticScene& s) {
  if (s.classes == 0 || s.classes > 0xFFFE) throw DataError("synthetic scene needs 1..65534 classes");
  std::mt19937_64 rng(s.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> direction(s.bands);
  double norm = 0.0;
  for (auto& d : direction) {
    d = 0.5 + unit(rng);
    norm += d * d;
  }
  for (auto& d : direction) d /= std::sqrt(norm);

  std::vector<std::vector<double>> means(s.classes, std::vector<double>(s.bands));
  for (std::size_t k = 0; k < s.classes; ++k) {
    for (std::size_t b = 0; b < s.bands; ++b) means[k][b] = s.separation * k * direction[b];
    means[k][k % s.bands] += 0.5 * s.separation;
  }

  SyntheticData out;
  out.cube.height = out.labels.height = s.height;
  out.cube.width = out.labels.width = s.width;
  out.cube.bands = s.bands;
  out.cube.data.assign(s.height * s.width * s.bands, 0.0);
  out.labels.num_classes = s.classes;
  out.labels.labels.assign(s.height * s.width, 0);

  const std::size_t columns = s.classes > 2 ? (s.classes + 1) / 2 : s.classes;
  const std::size_t rows = s.classes > 2 ? 2 : 1;
  const std::size_t n = s.height * s.width;
  for (std::size_t r = 0; r < s.height; ++r) {
    for (std::size_t c = 0; c < s.width; ++c) {
      const std::size_t band_col = c * columns / s.width;
      const std::size_t band_row = r * rows / s.height;
      std::size_t k = band_row * columns + band_col;
      if (k >= s.classes) k = s.classes - 1;
      const std::size_t px = r * s.width + c;
      for (std::size_t b = 0; b < s.bands; ++b) {
        out.cube.data[b * n + px] = means[k][b] + s.noise * gauss(rng);
      }
      const bool hidden = s.unlabeled_fraction > 0.0 && unit(rng) < s.unlabeled_fraction;
      out.labels.labels[px] = hidden ? 0 : static_cast<std::uint16_t>(k + 1);
    }
  }
  return out;
}

}  // namespace hsi
