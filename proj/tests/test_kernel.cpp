#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "hsi/kernel.hpp"

namespace {

using hsi::KernelSpec;
using hsi::SpectraMatrix;

SpectraMatrix random_spectra(std::size_t m, std::size_t d, std::mt19937_64& rng) {
  return SpectraMatrix{m, d, hsi::testing::random_vector(m * d, rng)};
}

TEST(Rbf, SelfSimilarityIsOne) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) {
    const auto x = hsi::testing::random_vector(7, rng, -5, 5);
    EXPECT_EQ(hsi::rbf(x, x, 0.3 + t), 1.0);
  }
}

TEST(Rbf, KnownValue) {
  const std::vector<double> x{0.0, 0.0}, y{1.0, 1.0};
  EXPECT_NEAR(hsi::rbf(x, y, 1.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(hsi::rbf(x, y, 1.0), 0.3678794, 1e-7);
}

TEST(Rbf, RejectsBadInput) {
  const std::vector<double> x{0.0, 0.0}, y{1.0};
  EXPECT_THROW(hsi::rbf(x, y, 1.0), hsi::DataError);
  EXPECT_THROW(hsi::rbf(x, x, 0.0), hsi::DataError);
  EXPECT_THROW(hsi::validate_kernel({hsi::KernelKind::Rbf, -1.0}), hsi::DataError);
}

TEST(Gram, PositiveSemidefinite) {
  std::mt19937_64 rng(2);
  for (std::size_t m : {5u, 17u, 50u}) {
    for (double sigma : {0.05, 0.5, 5.0}) {
      const auto x = random_spectra(m, 4, rng);
      const auto g = hsi::gram_matrix(x, {hsi::KernelKind::Rbf, sigma});
      const Eigen::Map<const Eigen::MatrixXd> k(g.data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
      EXPECT_EQ((k - k.transpose()).cwiseAbs().maxCoeff(), 0.0);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
      EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10) << "m=" << m << " sigma=" << sigma;
    }
  }
}

TEST(KernelColumns, CacheMatchesFullMatrix) {
  std::mt19937_64 rng(3);
  const auto x = random_spectra(30, 6, rng);
  const KernelSpec k{hsi::KernelKind::Rbf, 0.8};
  hsi::KernelColumns full(x, k, 1 << 20, 100);
  hsi::KernelColumns cached(x, k, 1, 0);  // smallest possible cache
  EXPECT_TRUE(full.holds_full_matrix());
  EXPECT_FALSE(cached.holds_full_matrix());
  std::uniform_int_distribution<std::size_t> pick(0, 29);
  for (int t = 0; t < 200; ++t) {
    const std::size_t i = pick(rng);
    const auto a = full.column(i);
    const std::vector<double> expected(a.begin(), a.end());
    const auto b = cached.column(i);
    ASSERT_EQ(b.size(), 30u);
    for (std::size_t j = 0; j < 30; ++j) {
      EXPECT_NEAR(b[j], expected[j], 1e-15);
      EXPECT_NEAR(b[j], hsi::rbf({x.row(i), 6}, {x.row(j), 6}, 0.8), 1e-15);
    }
    EXPECT_LE(cached.cached_columns(), 4u);
  }
}

TEST(KernelColumns, LeastRecentlyUsedEviction) {
  std::mt19937_64 rng(4);
  const auto x = random_spectra(10, 2, rng);
  hsi::KernelColumns cache(x, {hsi::KernelKind::Rbf, 1.0}, 0, 0);
  for (std::size_t i = 0; i < 6; ++i) cache.column(i);
  EXPECT_EQ(cache.cached_columns(), 4u);
  const auto recent = cache.column(5);
  const auto second = cache.column(4);
  EXPECT_EQ(recent[5], 1.0);
  EXPECT_EQ(second[4], 1.0);
}

}  // namespace
