#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hsi {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: wrong dimensions, non-finite values, bad files,
/// infeasible parameters for the supplied data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// An iterative method failed to reach its tolerance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// H x W x B spectral cube stored band-sequential: data[(b * H + r) * W + c].
struct HyperCube {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t bands = 0;
  std::vector<double> data;
  bool normalized = false;

  std::size_t pixels() const { return height * width; }

  double at(std::size_t band, std::size_t row, std::size_t col) const {
    return data[(band * height + row) * width + col];
  }
  double& at(std::size_t band, std::size_t row, std::size_t col) {
    return data[(band * height + row) * width + col];
  }
};

/// Ground truth or predicted labels. 0 marks an unlabeled pixel and classes
/// are numbered 1..num_classes, as on disk. Everything downstream of the
/// label map (splits, tensors, confusion matrices) uses 0-based classes.
struct LabelMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t num_classes = 0;
  std::vector<std::uint16_t> labels;

  std::size_t pixels() const { return height * width; }

  /// 0-based class of a pixel, or nullopt when unlabeled.
  std::optional<std::size_t> class_of(std::size_t pixel) const {
    const auto l = labels[pixel];
    if (l == 0) return std::nullopt;
    return static_cast<std::size_t>(l - 1);
  }
};

struct LabeledPixel {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  std::uint32_t cls = 0;  // 0-based

  friend bool operator==(const LabeledPixel&, const LabeledPixel&) = default;
};

/// Training pixels (the pinned set during denoising) and testing pixels.
struct SplitSpec {
  std::vector<LabeledPixel> training;
  std::vector<LabeledPixel> testing;
  std::uint64_t seed = 0;
};

/// H x W x C tensor stored class-major: values[(k * H + r) * W + c].
struct ProbabilityTensor {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t num_classes = 0;
  std::vector<double> values;

  ProbabilityTensor() = default;
  ProbabilityTensor(std::size_t h, std::size_t w, std::size_t c)
      : height(h), width(w), num_classes(c), values(h * w * c, 0.0) {}

  std::size_t pixels() const { return height * width; }

  double at(std::size_t cls, std::size_t pixel) const {
    return values[cls * pixels() + pixel];
  }
  double& at(std::size_t cls, std::size_t pixel) {
    return values[cls * pixels() + pixel];
  }
};

/// rows = true class, columns = predicted class.
struct ConfusionMatrix {
  std::size_t num_classes = 0;
  std::vector<std::uint64_t> counts;

  explicit ConfusionMatrix(std::size_t c = 0) : num_classes(c), counts(c * c, 0) {}

  std::uint64_t& operator()(std::size_t truth, std::size_t predicted) {
    return counts[truth * num_classes + predicted];
  }
  std::uint64_t operator()(std::size_t truth, std::size_t predicted) const {
    return counts[truth * num_classes + predicted];
  }
  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto v : counts) t += v;
    return t;
  }
};

/// Per-pixel membership flags (1 = in the set).
using PixelMask = std::vector<std::uint8_t>;

inline PixelMask training_mask(const SplitSpec& split, std::size_t height, std::size_t width) {
  PixelMask mask(height * width, 0);
  for (const auto& p : split.training) mask[p.row * width + p.col] = 1;
  return mask;
}

inline void validate_cube(const HyperCube& cube) {
  if (cube.height == 0 || cube.width == 0 || cube.bands == 0) {
    throw DataError("cube dimensions must be positive");
  }
  const std::size_t expected = cube.height * cube.width * cube.bands;
  if (cube.data.size() != expected) {
    throw DataError("cube data length " + std::to_string(cube.data.size()) +
                    " does not match " + std::to_string(cube.height) + "x" +
                    std::to_string(cube.width) + "x" + std::to_string(cube.bands) + " = " +
                    std::to_string(expected));
  }
  for (std::size_t i = 0; i < cube.data.size(); ++i) {
    if (!std::isfinite(cube.data[i])) {
      throw DataError("non-finite cube value at index " + std::to_string(i));
    }
  }
}

inline void validate_labels(const LabelMap& labels) {
  if (labels.height == 0 || labels.width == 0) {
    throw DataError("label map dimensions must be positive");
  }
  if (labels.labels.size() != labels.height * labels.width) {
    throw DataError("label map length does not match its dimensions");
  }
  for (std::size_t i = 0; i < labels.labels.size(); ++i) {
    if (labels.labels[i] > labels.num_classes) {
      throw DataError("label " + std::to_string(labels.labels[i]) + " at pixel " +
                      std::to_string(i) + " exceeds num_classes " +
                      std::to_string(labels.num_classes));
    }
  }
}

/// Maps every band affinely onto [0, 1]; constant bands become 0.
///
/// Results are rounded to single precision so that a normalized cube is
/// exactly representable in the on-disk format. This keeps file-based and
/// in-memory pipelines bit-identical, and makes the map idempotent.
inline HyperCube normalize_cube(const HyperCube& cube) {
  validate_cube(cube);
  HyperCube out = cube;
  const std::size_t n = cube.pixels();
  for (std::size_t b = 0; b < cube.bands; ++b) {
    const double* band = cube.data.data() + b * n;
    const auto [lo_it, hi_it] = std::minmax_element(band, band + n);
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    double* dst = out.data.data() + b * n;
    for (std::size_t i = 0; i < n; ++i) {
      dst[i] = range > 0.0 ? static_cast<double>(static_cast<float>((band[i] - lo) / range)) : 0.0;
    }
  }
  out.normalized = true;
  return out;
}

/// Pixel-interleaved copy of a cube: row p holds the spectrum of pixel p.
struct SpectraMatrix {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> data;

  const double* row(std::size_t i) const { return data.data() + i * dim; }
};

inline SpectraMatrix pixel_spectra(const HyperCube& cube) {
  SpectraMatrix m{cube.pixels(), cube.bands, std::vector<double>(cube.pixels() * cube.bands)};
  const std::size_t n = cube.pixels();
  for (std::size_t b = 0; b < cube.bands; ++b) {
    for (std::size_t p = 0; p < n; ++p) m.data[p * cube.bands + b] = cube.data[b * n + p];
  }
  return m;
}

}  // namespace hsi
