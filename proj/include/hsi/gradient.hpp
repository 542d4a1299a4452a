#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "hsi/types.hpp"

namespace hsi {

/// Row-major H x W real map.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  Image() = default;
  Image(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), data(h * w, fill) {}

  std::size_t size() const { return data.size(); }
  double operator()(std::size_t r, std::size_t c) const { return data[r * width + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * width + c]; }
};

/// Forward differences with periodic wrap, written into a 2n array:
/// [0, n) holds the horizontal part, [n, 2n) the vertical part.
inline void gradient(const double* u, std::size_t height, std::size_t width, double* out) {
  const std::size_t n = height * width;
  for (std::size_t r = 0; r < height; ++r) {
    const std::size_t down = (r + 1 == height ? 0 : r + 1) * width;
    const std::size_t here = r * width;
    for (std::size_t c = 0; c + 1 < width; ++c) out[here + c] = u[here + c + 1] - u[here + c];
    out[here + width - 1] = u[here] - u[here + width - 1];
    for (std::size_t c = 0; c < width; ++c) out[n + here + c] = u[down + c] - u[here + c];
  }
}

/// Transpose of gradient(): backward differences of the two components.
inline void gradient_adjoint(const double* p, std::size_t height, std::size_t width, double* out) {
  const std::size_t n = height * width;
  for (std::size_t r = 0; r < height; ++r) {
    const std::size_t up = (r == 0 ? height - 1 : r - 1) * width;
    const std::size_t here = r * width;
    out[here] = p[here + width - 1] - p[here];
    for (std::size_t c = 1; c < width; ++c) out[here + c] = p[here + c - 1] - p[here + c];
    for (std::size_t c = 0; c < width; ++c) out[here + c] += p[n + up + c] - p[n + here + c];
  }
}

struct GradientField {
  Image dx;
  Image dy;
};

inline GradientField gradient(const Image& u) {
  std::vector<double> both(2 * u.size());
  gradient(u.data.data(), u.height, u.width, both.data());
  GradientField g{Image(u.height, u.width), Image(u.height, u.width)};
  std::copy(both.begin(), both.begin() + static_cast<std::ptrdiff_t>(u.size()), g.dx.data.begin());
  std::copy(both.begin() + static_cast<std::ptrdiff_t>(u.size()), both.end(), g.dy.data.begin());
  return g;
}

inline Image gradient_adjoint(const Image& px, const Image& py) {
  if (px.height != py.height || px.width != py.width) throw DataError("gradient components differ in shape");
  std::vector<double> both(px.data);
  both.insert(both.end(), py.data.begin(), py.data.end());
  Image out(px.height, px.width);
  gradient_adjoint(both.data(), px.height, px.width, out.data.data());
  return out;
}

}  // namespace hsi
