#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "hsi/nu_svc.hpp"
#include "hsi/types.hpp"

namespace hsi {

struct SigmoidFit {
  SigmoidParams params;
  int iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;
  std::vector<double> objective_history;  // one entry per accepted step, plus the start
};

/// Regularized negative log-likelihood of labels `y` under
/// P(+1 | f) = 1 / (1 + exp(slope f + offset)), with Platt's targets.
inline double sigmoid_objective(std::span<const double> f, std::span<const int> y,
                                SigmoidParams s) {
  std::size_t pos = 0, neg = 0;
  for (int v : y) (v > 0 ? pos : neg)++;
  const double hi = (pos + 1.0) / (pos + 2.0);
  const double lo = 1.0 / (neg + 2.0);
  double total = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double t = y[i] > 0 ? hi : lo;
    const double z = f[i] * s.slope + s.offset;
    total += z >= 0 ? t * z + std::log1p(std::exp(-z)) : (t - 1.0) * z + std::log1p(std::exp(z));
  }
  return total;
}

/// Newton's method with backtracking on the sigmoid likelihood
/// (Lin, Weng & Keerthi's stable variant of Platt scaling).
inline SigmoidFit fit_sigmoid(std::span<const double> f, std::span<const int> y,
                              int max_iterations = 100) {
  if (f.size() != y.size()) throw DataError("fit_sigmoid: values and labels differ in count");
  std::size_t pos = 0, neg = 0;
  for (int v : y) (v > 0 ? pos : neg)++;
  if (pos == 0 || neg == 0) throw DataError("fit_sigmoid needs both labels");

  constexpr double kMinStep = 1e-10;
  constexpr double kHessianRidge = 1e-12;
  constexpr double kEps = 1e-5;
  const double hi = (pos + 1.0) / (pos + 2.0);
  const double lo = 1.0 / (neg + 2.0);

  SigmoidFit fit;
  double a = 0.0;
  double b = std::log((neg + 1.0) / (pos + 1.0));
  double fval = sigmoid_objective(f, y, {a, b});
  fit.objective_history.push_back(fval);

  for (fit.iterations = 0; fit.iterations < max_iterations; ++fit.iterations) {
    double h11 = kHessianRidge, h22 = kHessianRidge, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double z = f[i] * a + b;
      double p, q;
      if (z >= 0) {
        p = std::exp(-z) / (1.0 + std::exp(-z));
        q = 1.0 / (1.0 + std::exp(-z));
      } else {
        p = 1.0 / (1.0 + std::exp(z));
        q = std::exp(z) / (1.0 + std::exp(z));
      }
      const double d2 = p * q;
      h11 += f[i] * f[i] * d2;
      h22 += d2;
      h21 += f[i] * d2;
      const double d1 = (y[i] > 0 ? hi : lo) - p;
      g1 += f[i] * d1;
      g2 += d1;
    }
    fit.gradient_norm = std::hypot(g1, g2);
    if (std::abs(g1) < kEps && std::abs(g2) < kEps) {
      fit.converged = true;
      break;
    }
    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;

    double step = 1.0;
    while (step >= kMinStep) {
      const double na = a + step * da;
      const double nb = b + step * db;
      const double nf = sigmoid_objective(f, y, {na, nb});
      if (nf < fval + 1e-4 * step * gd) {
        a = na;
        b = nb;
        fval = nf;
        fit.objective_history.push_back(fval);
        break;
      }
      step /= 2.0;
    }
    if (step < kMinStep) break;  // line search failed; keep the last accepted point
  }
  fit.params = {a, b};
  return fit;
}

/// Sigmoid output for an already computed decision value. The exponent is
/// clamped to [-40, 40] and the result to [1e-12, 1 - 1e-12].
inline double sigmoid_probability(double f, const SigmoidParams& s) {
  const double z = std::clamp(s.slope * f + s.offset, -40.0, 40.0);
  return std::clamp(1.0 / (1.0 + std::exp(z)), 1e-12, 1.0 - 1e-12);
}

/// Probability that x belongs to the model's positive class, given that it
/// belongs to one of the model's two classes.
inline double pairwise_probability(const BinaryModel& model, std::span<const double> x) {
  return sigmoid_probability(decision(model, x), model.sigmoid);
}

}  // namespace hsi
