#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "hsi/types.hpp"

namespace hsi {

namespace detail {

// FFTW's planner is not thread-safe; plan execution is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

struct PlanDestroy {
  void operator()(fftw_plan p) const {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};

using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;
using Plan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDestroy>;

}  // namespace detail

/// Solves (1 + mu) u + (beta2 + mu) D'D u = rhs on an H x W periodic grid by
/// pointwise division in the 2-D Fourier domain. D is the periodic forward
/// difference gradient, whose normal operator D'D has the symbol
/// |1 - e^{-2 pi i k / W}|^2 + |1 - e^{-2 pi i l / H}|^2.
///
/// Plans are created once per grid size and executed on caller-owned
/// workspaces, so one solver can be shared between threads.
class PeriodicSolver {
 public:
  class Workspace {
   public:
    explicit Workspace(const PeriodicSolver& s)
        : real_(fftw_alloc_real(s.height_ * s.width_)),
          spectrum_(fftw_alloc_complex(s.height_ * s.half_width_)) {}

   private:
    friend class PeriodicSolver;
    detail::RealBuffer real_;
    detail::ComplexBuffer spectrum_;
  };

  PeriodicSolver(std::size_t height, std::size_t width)
      : height_(height), width_(width), half_width_(width / 2 + 1), symbol_(height * half_width_) {
    if (height == 0 || width == 0) throw DataError("periodic solver needs a non-empty grid");
    for (std::size_t l = 0; l < height; ++l) {
      const double ty = 2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * static_cast<double>(l) / height);
      for (std::size_t k = 0; k < half_width_; ++k) {
        const double tx = 2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / width);
        symbol_[l * half_width_ + k] = tx + ty;
      }
    }
    Workspace probe(*this);
    std::lock_guard lock(detail::fftw_planner_mutex());
    const int h = static_cast<int>(height), w = static_cast<int>(width);
    // FFTW_ESTIMATE keeps plan choice, and hence rounding, reproducible.
    forward_.reset(fftw_plan_dft_r2c_2d(h, w, probe.real_.get(), probe.spectrum_.get(), FFTW_ESTIMATE));
    inverse_.reset(fftw_plan_dft_c2r_2d(h, w, probe.spectrum_.get(), probe.real_.get(), FFTW_ESTIMATE));
    if (!forward_ || !inverse_) throw NumericalError("FFTW planning failed");
  }

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }

  /// Full H x W grid of transfer-function values 1 + mu + (beta2 + mu) |D^|^2.
  std::vector<double> denominators(double beta2, double mu) const {
    std::vector<double> out(height_ * width_);
    for (std::size_t l = 0; l < height_; ++l) {
      for (std::size_t k = 0; k < width_; ++k) {
        const std::size_t kk = k < half_width_ ? k : width_ - k;
        const std::size_t ll = k < half_width_ ? l : (height_ - l) % height_;
        out[l * width_ + k] = 1.0 + mu + (beta2 + mu) * symbol_[ll * half_width_ + kk];
      }
    }
    return out;
  }

  void solve(const double* rhs, double beta2, double mu, double* out, Workspace& ws) const {
    const std::size_t n = height_ * width_;
    std::copy(rhs, rhs + n, ws.real_.get());
    fftw_execute_dft_r2c(forward_.get(), ws.real_.get(), ws.spectrum_.get());
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < height_ * half_width_; ++i) {
      const double d = scale / (1.0 + mu + (beta2 + mu) * symbol_[i]);
      ws.spectrum_[i][0] *= d;
      ws.spectrum_[i][1] *= d;
    }
    fftw_execute_dft_c2r(inverse_.get(), ws.spectrum_.get(), ws.real_.get());
    std::copy(ws.real_.get(), ws.real_.get() + n, out);
  }

 private:
  std::size_t height_;
  std::size_t width_;
  std::size_t half_width_;
  std::vector<double> symbol_;  // H x (W/2 + 1)
  detail::Plan forward_;
  detail::Plan inverse_;
};

}  // namespace hsi
