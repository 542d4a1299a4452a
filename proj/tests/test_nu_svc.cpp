#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "hsi/nu_svc.hpp"
#include "oracles.hpp"

namespace {

using hsi::KernelSpec;
using hsi::SpectraMatrix;

Eigen::MatrixXd dense_gram(const SpectraMatrix& x, double sigma) {
  Eigen::MatrixXd k(x.rows, x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < x.rows; ++j) {
      double d2 = 0.0;
      for (std::size_t b = 0; b < x.dim; ++b) d2 += (x.row(i)[b] - x.row(j)[b]) * (x.row(i)[b] - x.row(j)[b]);
      k(i, j) = std::exp(-d2 / (2.0 * sigma * sigma));
    }
  }
  return k;
}

hsi::NuSvcSolution solve(const SpectraMatrix& x, const std::vector<int>& y, double nu, double sigma) {
  hsi::KernelColumns cols(x, {hsi::KernelKind::Rbf, sigma}, 1 << 20, 4000);
  return hsi::solve_nu_svc(cols, y, nu);
}

struct Problem {
  SpectraMatrix x;
  std::vector<int> y;
};

Problem random_problem(std::size_t m, std::mt19937_64& rng, double shift = 1.0) {
  Problem p{SpectraMatrix{m, 2, {}}, {}};
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    const int label = i % 2 == 0 ? 1 : -1;
    p.y.push_back(label);
    p.x.data.push_back(g(rng) + shift * label);
    p.x.data.push_back(g(rng));
  }
  return p;
}

void expect_dual_feasible(const hsi::NuSvcSolution& s, const std::vector<int>& y, double nu) {
  const double upper = 1.0 / static_cast<double>(y.size());
  double ya = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    EXPECT_GE(s.alpha[i], 0.0);
    EXPECT_LE(s.alpha[i], upper);
    ya += s.alpha[i] * y[i];
    sum += s.alpha[i];
  }
  EXPECT_LE(std::abs(ya), 1e-8);
  EXPECT_GE(sum, nu - 1e-8);
}

TEST(NuSvc, FourPointProblemMatchesEnumerationOracle) {
  const SpectraMatrix x{4, 2, {0, 0, 0, 1, 3, 0, 3, 1}};
  const std::vector<int> y{-1, -1, 1, 1};
  const auto sol = solve(x, y, 0.5, 1.0);
  const auto oracle = hsi::oracle::nu_svc_dual_by_enumeration(dense_gram(x, 1.0), y, 0.5);
  EXPECT_TRUE(sol.converged);
  EXPECT_NEAR(sol.objective, oracle.objective, 1e-10);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(sol.alpha[i], oracle.alpha(i), 1e-5);
  expect_dual_feasible(sol, y, 0.5);

  const auto model = hsi::train_binary(x, y, 0.5, {hsi::KernelKind::Rbf, 1.0});
  for (std::size_t i = 0; i < 4; ++i) {
    const double f = hsi::decision(model, {x.row(i), 2});
    EXPECT_EQ(f > 0 ? 1 : -1, y[i]) << "point " << i;
  }
  // every point is a support vector of this symmetric problem
  EXPECT_EQ(model.size(), 4u);
}

TEST(NuSvc, RandomSmallProblemsMatchEnumerationOracle) {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 12; ++t) {
    const std::size_t m = 4 + t % 5;
    const auto p = random_problem(m, rng, 0.5);
    const double nu = std::min(0.9, hsi::nu_max(p.y)) * (0.2 + 0.06 * t);
    const double sigma = 0.5 + 0.25 * (t % 4);
    const auto sol = solve(p.x, p.y, nu, sigma);
    const auto oracle = hsi::oracle::nu_svc_dual_by_enumeration(dense_gram(p.x, sigma), p.y, nu);
    ASSERT_TRUE(std::isfinite(oracle.objective));
    EXPECT_NEAR(sol.objective, oracle.objective, 1e-7 * std::max(1.0, oracle.objective)) << "trial " << t;
    expect_dual_feasible(sol, p.y, nu);
  }
}

TEST(NuSvc, InfeasibleNuRejected) {
  const SpectraMatrix x{3, 1, {0, 1, 2}};
  const std::vector<int> y{1, -1, -1};
  EXPECT_DOUBLE_EQ(hsi::nu_max(y), 2.0 / 3.0);
  EXPECT_THROW(solve(x, y, 0.7, 1.0), hsi::DataError);
  EXPECT_THROW(solve(x, y, 0.0, 1.0), hsi::DataError);
  EXPECT_NO_THROW(solve(x, y, 2.0 / 3.0, 1.0));
}

TEST(NuSvc, SingleClassRejected) {
  const SpectraMatrix x{2, 1, {0, 1}};
  EXPECT_THROW(solve(x, {1, 1}, 0.5, 1.0), hsi::DataError);
  EXPECT_THROW(solve(x, {1, 0}, 0.5, 1.0), hsi::DataError);
}

TEST(NuSvc, DuplicatedPointWithOpposingLabels) {
  const SpectraMatrix x{4, 1, {0.0, 0.0, 2.0, -2.0}};
  const std::vector<int> y{1, -1, 1, -1};
  const double nu = hsi::nu_max(y);
  const auto sol = solve(x, y, nu, 1.0);
  const auto oracle = hsi::oracle::nu_svc_dual_by_enumeration(dense_gram(x, 1.0), y, nu);
  EXPECT_NEAR(sol.objective, oracle.objective, 1e-10);
  const std::size_t errors = hsi::count_margin_errors(sol, y);
  EXPECT_GE(errors, 1u);
  EXPECT_LE(static_cast<double>(errors) / 4.0, nu);
}

TEST(NuSvc, MarginErrorFractionBoundedByNu) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 15; ++t) {
    const std::size_t m = 10 + 3 * t;
    const auto p = random_problem(m, rng, 0.7);
    const double nu = hsi::nu_max(p.y) * (0.1 + 0.06 * t);
    const auto sol = solve(p.x, p.y, nu, 1.0);
    EXPECT_TRUE(sol.converged);
    expect_dual_feasible(sol, p.y, nu);
    const double frac = static_cast<double>(hsi::count_margin_errors(sol, p.y)) / static_cast<double>(m);
    EXPECT_LE(frac, nu + 1.0 / static_cast<double>(m));
  }
}

TEST(NuSvc, CachedKernelGivesSameSolution) {
  std::mt19937_64 rng(6);
  const auto p = random_problem(40, rng);
  hsi::KernelColumns full(p.x, {hsi::KernelKind::Rbf, 1.0}, 1 << 20, 4000);
  hsi::KernelColumns lru(p.x, {hsi::KernelKind::Rbf, 1.0}, 8 * 40 * 5, 0);
  const auto a = hsi::solve_nu_svc(full, p.y, 0.4);
  const auto b = hsi::solve_nu_svc(lru, p.y, 0.4);
  EXPECT_NEAR(a.objective, b.objective, 1e-12);
  for (std::size_t i = 0; i < 40; ++i) EXPECT_NEAR(a.alpha[i], b.alpha[i], 1e-9);
}

TEST(Decision, EmptyModelReturnsBias) {
  hsi::BinaryModel m;
  m.bias = 0.7;
  m.support_vectors.dim = 3;
  const std::vector<double> x{1, 2, 3};
  EXPECT_EQ(hsi::decision(m, x), 0.7);
}

TEST(Decision, SymmetricTwoPointMidpointIsZero) {
  const SpectraMatrix x{2, 2, {-1.0, 0.5, 1.0, 0.5}};
  const std::vector<int> y{-1, 1};
  const auto model = hsi::train_binary(x, y, 1.0, {hsi::KernelKind::Rbf, 0.9});
  const std::vector<double> mid{0.0, 0.5};
  EXPECT_NEAR(hsi::decision(model, mid), 0.0, 1e-8);
  EXPECT_GT(hsi::decision(model, std::vector<double>{1.0, 0.5}), 0.0);
}

TEST(Decision, SupportVectorsKeepTheirSign) {
  std::mt19937_64 rng(8);
  auto p = random_problem(20, rng, 3.0);  // strictly separable with high probability
  const auto model = hsi::train_binary(p.x, p.y, 0.2, {hsi::KernelKind::Rbf, 1.5});
  for (std::size_t s = 0; s < model.size(); ++s) {
    const double f = hsi::decision(model, {model.support_vectors.row(s), 2});
    EXPECT_EQ(f > 0, model.alpha_y[s] > 0);
  }
}

TEST(Decision, ContinuousInSigma) {
  std::mt19937_64 rng(9);
  const auto p = random_problem(30, rng);
  for (double sigma : {0.1, 1.0, 10.0}) {
    auto model = hsi::train_binary(p.x, p.y, 0.3, {hsi::KernelKind::Rbf, sigma});
    for (int t = 0; t < 10; ++t) {
      const auto x = hsi::testing::random_vector(2, rng, -2, 2);
      const double f0 = hsi::decision(model, x);
      model.kernel.sigma = sigma + 1e-9;
      const double f1 = hsi::decision(model, x);
      model.kernel.sigma = sigma;
      EXPECT_LT(std::abs(f1 - f0), 1e-6);
    }
  }
}

TEST(Decision, RejectsWrongLength) {
  const SpectraMatrix x{2, 2, {-1.0, 0.5, 1.0, 0.5}};
  const auto model = hsi::train_binary(x, std::vector<int>{-1, 1}, 1.0, {hsi::KernelKind::Rbf, 1.0});
  EXPECT_THROW(hsi::decision(model, std::vector<double>{1.0}), hsi::DataError);
}

}  // namespace
