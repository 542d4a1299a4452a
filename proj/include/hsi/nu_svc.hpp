#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "hsi/kernel.hpp"
#include "hsi/types.hpp"

namespace hsi {

struct SvmOptions {
  double tolerance = 1e-6;  // maximal KKT violation at exit
  std::uint64_t max_iterations = 10'000'000;
  std::size_t cache_bytes = std::size_t{256} << 20;
  std::size_t full_gram_limit = 4000;
};

/// probability = 1 / (1 + exp(slope * f + offset))
struct SigmoidParams {
  double slope = -1.0;
  double offset = 0.0;
};

inline constexpr std::uint32_t kInlineVector = 0xFFFFFFFFu;

/// A trained two-class nu-SVC. Only support vectors (nonzero multipliers)
/// are kept; `alpha_y` holds alpha_i * y_i.
struct BinaryModel {
  KernelSpec kernel;
  SpectraMatrix support_vectors;
  std::vector<std::uint32_t> sv_pixel;  // source pixel index or kInlineVector
  std::vector<double> alpha_y;
  double bias = 0.0;
  double nu = 0.5;
  SigmoidParams sigmoid;
  bool sigmoid_fallback = true;
  bool converged = true;  // solver met its tolerance; not stored in files

  std::size_t size() const { return alpha_y.size(); }
};

/// Dual solution of
///   min 1/2 sum_ij a_i a_j y_i y_j K_ij
///   s.t. 0 <= a_i <= 1/m, sum a_i y_i = 0, sum a_i >= nu.
/// The inequality is active at the optimum, so it is solved as two equalities
/// sum_{y=+1} a = sum_{y=-1} a = nu / 2.
struct NuSvcSolution {
  std::vector<double> alpha;
  std::vector<double> gradient;  // (Q alpha)_i with Q_ij = y_i y_j K_ij
  double bias = 0.0;
  double margin = 0.0;  // the rho of the primal: y_i f(x_i) >= margin - slack_i
  double objective = 0.0;
  double max_violation = 0.0;
  std::uint64_t iterations = 0;
  bool converged = false;

  /// y_i f(x_i) for training point i.
  double functional_margin(std::size_t i, int yi) const { return gradient[i] + yi * bias; }
};

inline void check_labels(std::span<const int> y, std::size_t& positives, std::size_t& negatives) {
  positives = negatives = 0;
  for (int v : y) {
    if (v == 1) {
      ++positives;
    } else if (v == -1) {
      ++negatives;
    } else {
      throw DataError("binary labels must be +1 or -1");
    }
  }
}

/// Largest nu for which the dual constraints are satisfiable: 2 min(m+, m-) / m.
inline double nu_max(std::span<const int> y) {
  std::size_t p = 0, n = 0;
  check_labels(y, p, n);
  if (y.empty()) return 0.0;
  return 2.0 * static_cast<double>(std::min(p, n)) / static_cast<double>(y.size());
}

/// Two-variable working-set decomposition. Both variables of a working set
/// always share a label, which keeps the two equality constraints intact.
inline NuSvcSolution solve_nu_svc(KernelColumns& kernel, std::span<const int> y, double nu,
                                  const SvmOptions& opt = {}) {
  const std::size_t m = y.size();
  std::size_t m_pos = 0, m_neg = 0;
  check_labels(y, m_pos, m_neg);
  if (m < 2 || m_pos == 0 || m_neg == 0) {
    throw DataError("nu-SVC needs at least one example of each class");
  }
  if (kernel.size() != m) throw DataError("kernel and label sizes differ");
  const double upper = 1.0 / static_cast<double>(m);
  const double nu_limit = 2.0 * static_cast<double>(std::min(m_pos, m_neg)) / static_cast<double>(m);
  if (!(nu > 0.0) || nu > nu_limit * (1.0 + 1e-12)) {
    throw DataError("nu = " + std::to_string(nu) + " is infeasible (must lie in (0, " +
                    std::to_string(nu_limit) + "])");
  }

  NuSvcSolution sol;
  sol.alpha.assign(m, 0.0);
  sol.gradient.assign(m, 0.0);
  auto& alpha = sol.alpha;
  auto& grad = sol.gradient;

  double remaining_pos = nu / 2.0;
  double remaining_neg = nu / 2.0;
  for (std::size_t i = 0; i < m; ++i) {
    double& remaining = y[i] > 0 ? remaining_pos : remaining_neg;
    alpha[i] = std::min(upper, remaining);
    remaining -= alpha[i];
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (alpha[i] == 0.0) continue;
    const auto col = kernel.column(i);
    for (std::size_t k = 0; k < m; ++k) grad[k] += y[k] * y[i] * col[k] * alpha[i];
  }

  auto at_upper = [&](std::size_t t) { return alpha[t] >= upper; };
  auto at_lower = [&](std::size_t t) { return alpha[t] <= 0.0; };
  constexpr double kTau = 1e-12;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  while (sol.iterations < opt.max_iterations) {
    double gmax_p = -kInf, gmax_p2 = -kInf, gmax_n = -kInf, gmax_n2 = -kInf;
    std::ptrdiff_t ip = -1, in = -1;
    for (std::size_t t = 0; t < m; ++t) {
      if (y[t] > 0) {
        if (!at_upper(t) && -grad[t] >= gmax_p) {
          gmax_p = -grad[t];
          ip = static_cast<std::ptrdiff_t>(t);
        }
      } else if (!at_lower(t) && grad[t] >= gmax_n) {
        gmax_n = grad[t];
        in = static_cast<std::ptrdiff_t>(t);
      }
    }

    std::vector<double> col_p, col_n;
    if (ip >= 0) {
      const auto c = kernel.column(static_cast<std::size_t>(ip));
      col_p.assign(c.begin(), c.end());
    }
    if (in >= 0) {
      const auto c = kernel.column(static_cast<std::size_t>(in));
      col_n.assign(c.begin(), c.end());
    }

    std::ptrdiff_t jmin = -1;
    double best = kInf;
    for (std::size_t j = 0; j < m; ++j) {
      if (y[j] > 0) {
        if (at_lower(j)) continue;
        gmax_p2 = std::max(gmax_p2, grad[j]);
        const double diff = gmax_p + grad[j];
        if (diff > 0.0) {
          double quad = 2.0 - 2.0 * col_p[j];
          if (quad <= 0.0) quad = kTau;
          const double obj = -(diff * diff) / quad;
          if (obj <= best) {
            best = obj;
            jmin = static_cast<std::ptrdiff_t>(j);
          }
        }
      } else {
        if (at_upper(j)) continue;
        gmax_n2 = std::max(gmax_n2, -grad[j]);
        const double diff = gmax_n - grad[j];
        if (diff > 0.0) {
          double quad = 2.0 - 2.0 * col_n[j];
          if (quad <= 0.0) quad = kTau;
          const double obj = -(diff * diff) / quad;
          if (obj <= best) {
            best = obj;
            jmin = static_cast<std::ptrdiff_t>(j);
          }
        }
      }
    }

    sol.max_violation = std::max(gmax_p + gmax_p2, gmax_n + gmax_n2);
    if (sol.max_violation < opt.tolerance || jmin < 0) {
      sol.converged = true;
      break;
    }

    const auto j = static_cast<std::size_t>(jmin);
    const auto i = static_cast<std::size_t>(y[j] > 0 ? ip : in);
    const std::vector<double>& col_i = y[j] > 0 ? col_p : col_n;
    double quad = 2.0 - 2.0 * col_i[j];
    if (quad <= 0.0) quad = kTau;
    const double delta = (grad[i] - grad[j]) / quad;
    const double old_i = alpha[i];
    const double old_j = alpha[j];
    const double sum = old_i + old_j;
    double ai = old_i - delta;
    double aj = old_j + delta;
    if (sum > upper) {
      if (ai > upper) {
        ai = upper;
        aj = sum - upper;
      }
    } else if (aj < 0.0) {
      aj = 0.0;
      ai = sum;
    }
    if (sum > upper) {
      if (aj > upper) {
        aj = upper;
        ai = sum - upper;
      }
    } else if (ai < 0.0) {
      ai = 0.0;
      aj = sum;
    }
    alpha[i] = ai;
    alpha[j] = aj;

    const double di = ai - old_i;
    const double dj = aj - old_j;
    const auto col_j = kernel.column(j);
    for (std::size_t k = 0; k < m; ++k) {
      // y_i == y_j, so y_k y_i = y_k y_j
      grad[k] += y[k] * y[i] * (col_i[k] * di + col_j[k] * dj);
    }
    ++sol.iterations;
  }

  // Threshold terms from the free variables of each class, or the midpoint
  // of the feasible interval when a class has none.
  double ub[2] = {kInf, kInf}, lb[2] = {-kInf, -kInf}, sum_free[2] = {0, 0};
  std::size_t n_free[2] = {0, 0};
  for (std::size_t t = 0; t < m; ++t) {
    const int g = y[t] > 0 ? 0 : 1;
    if (at_upper(t)) {
      lb[g] = std::max(lb[g], grad[t]);
    } else if (at_lower(t)) {
      ub[g] = std::min(ub[g], grad[t]);
    } else {
      ++n_free[g];
      sum_free[g] += grad[t];
    }
  }
  double r[2];
  for (int g = 0; g < 2; ++g) {
    if (n_free[g] > 0) {
      r[g] = sum_free[g] / static_cast<double>(n_free[g]);
    } else if (std::isinf(ub[g])) {
      r[g] = lb[g];
    } else if (std::isinf(lb[g])) {
      r[g] = ub[g];
    } else {
      r[g] = 0.5 * (ub[g] + lb[g]);
    }
  }
  sol.margin = 0.5 * (r[0] + r[1]);
  sol.bias = 0.5 * (r[1] - r[0]);
  double obj = 0.0;
  for (std::size_t t = 0; t < m; ++t) obj += alpha[t] * grad[t];
  sol.objective = 0.5 * obj;
  return sol;
}

/// Number of training points with y_i f(x_i) < margin - tolerance. Points
/// on the margin are only resolved to the solver's KKT tolerance, so that is
/// the default here.
inline std::size_t count_margin_errors(const NuSvcSolution& sol, std::span<const int> y,
                                       double tolerance = SvmOptions{}.tolerance) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (sol.functional_margin(i, y[i]) < sol.margin - tolerance) ++n;
  }
  return n;
}

inline BinaryModel make_binary_model(const SpectraMatrix& x, std::span<const int> y,
                                     const NuSvcSolution& sol, double nu, const KernelSpec& kernel,
                                     std::span<const std::uint32_t> pixel_ids = {}) {
  BinaryModel model;
  model.kernel = kernel;
  model.nu = nu;
  model.bias = sol.bias;
  model.converged = sol.converged;
  model.support_vectors.dim = x.dim;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (sol.alpha[i] == 0.0) continue;
    model.alpha_y.push_back(sol.alpha[i] * y[i]);
    model.sv_pixel.push_back(pixel_ids.empty() ? kInlineVector : pixel_ids[i]);
    model.support_vectors.data.insert(model.support_vectors.data.end(), x.row(i), x.row(i) + x.dim);
  }
  model.support_vectors.rows = model.alpha_y.size();
  return model;
}

/// Trains a nu-SVC on rows of `x` with labels in {+1, -1}. The sigmoid is
/// left at its fallback value; see fit_sigmoid.
inline BinaryModel train_binary(const SpectraMatrix& x, std::span<const int> y, double nu,
                                const KernelSpec& kernel, const SvmOptions& opt = {},
                                std::span<const std::uint32_t> pixel_ids = {}) {
  validate_kernel(kernel);
  if (x.rows != y.size()) throw DataError("train_binary: spectra and labels differ in count");
  KernelColumns columns(x, kernel, opt.cache_bytes, opt.full_gram_limit);
  const NuSvcSolution sol = solve_nu_svc(columns, y, nu, opt);
  return make_binary_model(x, y, sol, nu, kernel, pixel_ids);
}

/// f(x) = sum_i alpha_i y_i K(x_i, x) + b
inline double decision(const BinaryModel& model, std::span<const double> x) {
  if (model.size() > 0 && x.size() != model.support_vectors.dim) {
    throw DataError("decision: spectrum length does not match the model");
  }
  double f = model.bias;
  for (std::size_t i = 0; i < model.size(); ++i) {
    f += model.alpha_y[i] *
         kernel_value(model.kernel, model.support_vectors.row(i), x.data(), x.size());
  }
  return f;
}

}  // namespace hsi
