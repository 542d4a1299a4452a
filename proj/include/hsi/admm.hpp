#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hsi/gradient.hpp"
#include "hsi/parallel.hpp"
#include "hsi/periodic_solver.hpp"
#include "hsi/types.hpp"

namespace hsi {

struct DenoiseParams {
  double beta1 = 0.3;  // anisotropic TV weight
  double beta2 = 3.0;  // quadratic gradient weight
  double mu = 1.0;     // augmented Lagrangian penalty
  double tol = 1e-6;   // relative change of u
  std::size_t max_iters = 200;
};

inline void validate_params(const DenoiseParams& p) {
  if (!(p.beta1 >= 0.0) || !(p.beta2 >= 0.0)) throw DataError("beta1 and beta2 must be non-negative");
  if (!(p.mu > 0.0)) throw DataError("mu must be positive");
  if (!(p.tol > 0.0)) throw DataError("tol must be positive");
  if (p.max_iters == 0) throw DataError("max_iters must be positive");
}

/// Iterates of the splitting s = Du, w = u. Gradient-sized arrays hold the
/// horizontal component in [0, n) and the vertical one in [n, 2n).
struct AdmmState {
  std::vector<double> u;
  std::vector<double> s;
  std::vector<double> w;
  std::vector<double> lambda1;
  std::vector<double> lambda2;
  std::size_t iter = 0;
};

struct IterationRecord {
  std::size_t iteration = 0;
  double relative_change = 0.0;
  double objective = 0.0;
};

struct AdmmDiagnostics {
  std::size_t iterations = 0;
  double relative_change = 0.0;
  double primal_residual = 0.0;  // |Eu - g| / |Eu| after the last iteration
  double objective = 0.0;
  double max_pinned_deviation = 0.0;  // max over the pinned set of |u - v|
  bool converged = false;
  std::vector<IterationRecord> history;  // filled when requested
};

/// Soft thresholding sgn(r) max(|r| - kappa, 0).
inline double shrink(double r, double kappa) {
  const double m = std::abs(r) - kappa;
  if (m <= 0.0) return 0.0;
  return r > 0.0 ? m : -m;
}

inline std::vector<double> shrink(std::span<const double> r, double kappa) {
  std::vector<double> out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = shrink(r[i], kappa);
  return out;
}

/// v on the pinned set, the unconstrained candidate elsewhere.
inline std::vector<double> project_w(std::span<const double> candidate, std::span<const double> v,
                                     const PixelMask& pinned) {
  std::vector<double> out(candidate.begin(), candidate.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (pinned[i]) out[i] = v[i];
  }
  return out;
}

/// 1/2 |u - v|^2 + beta1 |Du|_1 + beta2/2 |Du|^2 (the constraint is not
/// included).
inline double denoise_objective(std::span<const double> u, std::span<const double> v,
                                std::size_t height, std::size_t width, double beta1, double beta2) {
  std::vector<double> du(2 * u.size());
  gradient(u.data(), height, width, du.data());
  double data = 0.0, l1 = 0.0, l2 = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) data += (u[i] - v[i]) * (u[i] - v[i]);
  for (double g : du) {
    l1 += std::abs(g);
    l2 += g * g;
  }
  return 0.5 * data + beta1 * l1 + 0.5 * beta2 * l2;
}

/// u-update: (I + beta2 D'D + mu E'E)^{-1} (v + mu E'(g + lambda)) with
/// E = [D; I], g = (s, w), lambda = (lambda1, lambda2).
inline void solve_u(const PeriodicSolver& solver, PeriodicSolver::Workspace& ws,
                    std::span<const double> v, std::span<const double> s,
                    std::span<const double> w, std::span<const double> lambda1,
                    std::span<const double> lambda2, const DenoiseParams& params,
                    std::vector<double>& scratch2n, std::vector<double>& rhs,
                    std::span<double> out) {
  const std::size_t n = v.size();
  scratch2n.resize(2 * n);
  rhs.resize(n);
  for (std::size_t i = 0; i < 2 * n; ++i) scratch2n[i] = s[i] + lambda1[i];
  gradient_adjoint(scratch2n.data(), solver.height(), solver.width(), rhs.data());
  for (std::size_t i = 0; i < n; ++i) rhs[i] = v[i] + params.mu * (rhs[i] + w[i] + lambda2[i]);
  solver.solve(rhs.data(), params.beta2, params.mu, out.data(), ws);
}

/// Convenience overload allocating its own plan and buffers.
inline std::vector<double> solve_u(const Image& v, std::span<const double> s,
                                   std::span<const double> w, std::span<const double> lambda1,
                                   std::span<const double> lambda2, const DenoiseParams& params) {
  PeriodicSolver solver(v.height, v.width);
  PeriodicSolver::Workspace ws(solver);
  std::vector<double> scratch, rhs, out(v.size());
  solve_u(solver, ws, v.data, s, w, lambda1, lambda2, params, scratch, rhs, out);
  return out;
}

/// Minimizes 1/2 |u - v|^2 + beta1 |Du|_1 + beta2/2 |Du|^2 subject to
/// u = v on the pinned set, by ADMM on the splitting s = Du, w = u.
///
/// Starts from u = v, s = Du, w = v, lambda = 0 and stops when both
/// |u_new - u| / max(|u|, 1e-12) and |Eu - g| / max(|Eu|, 1e-12) drop below
/// tol, or after max_iters iterations.
inline Image admm_denoise(const Image& v, const PixelMask& pinned, const DenoiseParams& params,
                          const PeriodicSolver& solver, AdmmDiagnostics* diag = nullptr,
                          bool record_history = false, AdmmState* final_state = nullptr) {
  validate_params(params);
  const std::size_t n = v.size();
  if (pinned.size() != n) throw DataError("pinned mask does not match the map");
  if (solver.height() != v.height || solver.width() != v.width) {
    throw DataError("solver grid does not match the map");
  }
  for (double x : v.data) {
    if (!std::isfinite(x)) throw DataError("probability map contains non-finite values");
  }
  const std::size_t h = v.height, wd = v.width;

  AdmmState st;
  st.u = v.data;
  st.s.resize(2 * n);
  gradient(st.u.data(), h, wd, st.s.data());
  st.w = project_w(st.u, v.data, pinned);
  st.lambda1.assign(2 * n, 0.0);
  st.lambda2.assign(n, 0.0);

  PeriodicSolver::Workspace ws(solver);
  std::vector<double> u_next(n), du(2 * n), scratch, rhs;
  const double kappa = params.beta1 / params.mu;
  AdmmDiagnostics local;
  AdmmDiagnostics& d = diag ? *diag : local;
  d = AdmmDiagnostics{};

  while (st.iter < params.max_iters) {
    solve_u(solver, ws, v.data, st.s, st.w, st.lambda1, st.lambda2, params, scratch, rhs, u_next);
    gradient(u_next.data(), h, wd, du.data());
    double res2 = 0.0, eu2 = 0.0;
    for (std::size_t i = 0; i < 2 * n; ++i) {
      st.s[i] = shrink(du[i] - st.lambda1[i], kappa);
      const double r = st.s[i] - du[i];
      st.lambda1[i] += r;
      res2 += r * r;
      eu2 += du[i] * du[i];
    }
    double diff2 = 0.0, norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      st.w[i] = pinned[i] ? v.data[i] : u_next[i] - st.lambda2[i];
      const double r = st.w[i] - u_next[i];
      st.lambda2[i] += r;
      res2 += r * r;
      eu2 += u_next[i] * u_next[i];
      diff2 += (u_next[i] - st.u[i]) * (u_next[i] - st.u[i]);
      norm2 += st.u[i] * st.u[i];
    }
    st.u.swap(u_next);
    ++st.iter;
    d.relative_change = std::sqrt(diff2) / std::max(std::sqrt(norm2), 1e-12);
    d.primal_residual = std::sqrt(res2) / std::max(std::sqrt(eu2), 1e-12);
    if (record_history) {
      d.history.push_back({st.iter, d.relative_change,
                           denoise_objective(st.u, v.data, h, wd, params.beta1, params.beta2)});
    }
    // u can stall while the splitting is still far from consistent, so the
    // residual |Eu - g| has to be small as well.
    if (d.relative_change < params.tol && d.primal_residual < params.tol) {
      d.converged = true;
      break;
    }
  }

  d.iterations = st.iter;
  d.objective = denoise_objective(st.u, v.data, h, wd, params.beta1, params.beta2);
  d.max_pinned_deviation = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (pinned[i]) d.max_pinned_deviation = std::max(d.max_pinned_deviation, std::abs(st.u[i] - v.data[i]));
  }

  Image out(h, wd);
  out.data = st.u;
  if (final_state) *final_state = std::move(st);
  return out;
}

inline Image admm_denoise(const Image& v, const PixelMask& pinned, const DenoiseParams& params,
                          AdmmDiagnostics* diag = nullptr) {
  const PeriodicSolver solver(v.height, v.width);
  return admm_denoise(v, pinned, params, solver, diag);
}

struct TensorDenoiseResult {
  ProbabilityTensor restored;
  std::vector<AdmmDiagnostics> per_class;
  bool all_converged = true;
};

/// Restores every class slice independently with identical parameters.
inline TensorDenoiseResult denoise_tensor(const ProbabilityTensor& tensor, const PixelMask& pinned,
                                          const DenoiseParams& params, std::size_t threads = 0,
                                          bool record_history = false) {
  validate_params(params);
  if (tensor.values.size() != tensor.pixels() * tensor.num_classes) {
    throw DataError("probability tensor length does not match its dimensions");
  }
  const PeriodicSolver solver(tensor.height, tensor.width);
  TensorDenoiseResult res;
  res.restored = ProbabilityTensor(tensor.height, tensor.width, tensor.num_classes);
  res.per_class.resize(tensor.num_classes);
  const std::size_t n = tensor.pixels();
  parallel_for(tensor.num_classes, threads, [&](std::size_t k) {
    Image v(tensor.height, tensor.width);
    std::copy(tensor.values.begin() + static_cast<std::ptrdiff_t>(k * n),
              tensor.values.begin() + static_cast<std::ptrdiff_t>((k + 1) * n), v.data.begin());
    const Image u = admm_denoise(v, pinned, params, solver, &res.per_class[k], record_history);
    std::copy(u.data.begin(), u.data.end(),
              res.restored.values.begin() + static_cast<std::ptrdiff_t>(k * n));
  });
  for (const auto& d : res.per_class) res.all_converged = res.all_converged && d.converged;
  return res;
}

}  // namespace hsi
