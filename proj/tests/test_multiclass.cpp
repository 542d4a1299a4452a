#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "hsi/multiclass.hpp"
#include "hsi/split.hpp"
#include "hsi/synthetic.hpp"

namespace {

struct Fixture {
  hsi::HyperCube cube;
  hsi::LabelMap labels;
  hsi::SplitSpec split;
};

Fixture make(std::size_t classes, std::size_t size = 16, double percent = 20.0, std::uint64_t seed = 3) {
  hsi::SyntheticScene s;
  s.height = s.width = size;
  s.classes = classes;
  s.seed = seed;
  auto d = hsi::make_synthetic_scene(s);
  Fixture f{hsi::normalize_cube(d.cube), d.labels, {}};
  f.split = hsi::stratified_split(f.labels, hsi::PercentPerClass{percent}, seed);
  return f;
}

TEST(PairIndex, LexicographicOrder) {
  std::size_t k = 0;
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = i + 1; j < 6; ++j) EXPECT_EQ(hsi::pair_index(i, j, 6), k++);
}

TEST(TrainMulticlass, ThreeClassesGiveThreeModels) {
  const auto f = make(3);
  const auto model = hsi::train_multiclass(f.cube, f.split, 0.2, {hsi::KernelKind::Rbf, 0.5});
  ASSERT_EQ(model.pairwise.size(), 3u);
  // the positive class of pair (i, j) is i
  for (auto [i, j] : {std::pair{0, 1}, {0, 2}, {1, 2}}) {
    const auto& bm = model.pair(i, j);
    for (std::size_t s = 0; s < bm.size(); ++s) {
      const auto px = bm.sv_pixel[s];
      const auto cls = *f.labels.class_of(px);
      EXPECT_EQ(cls, static_cast<std::size_t>(bm.alpha_y[s] > 0 ? i : j));
    }
    EXPECT_FALSE(bm.sigmoid_fallback);
    EXPECT_LT(bm.sigmoid.slope, 0.0);
  }
}

TEST(TrainMulticlass, TwoClassesReduceToBinary) {
  const auto f = make(2);
  const auto model = hsi::train_multiclass(f.cube, f.split, 0.3, {hsi::KernelKind::Rbf, 0.5});
  ASSERT_EQ(model.pairwise.size(), 1u);
  const auto spectra = hsi::pixel_spectra(f.cube);
  for (const auto& t : f.split.testing) {
    const std::size_t px = t.row * f.cube.width + t.col;
    const std::span<const double> x(spectra.row(px), f.cube.bands);
    const auto p = hsi::predict_probabilities(model, x);
    const auto& bm = model.pairwise[0];
    // p0 > 1/2 exactly when slope * f + offset < 0
    const double threshold = -bm.sigmoid.offset / bm.sigmoid.slope;
    const double fval = hsi::decision(bm, x);
    if (std::abs(p[0] - p[1]) > 1e-9) EXPECT_EQ(p[0] > p[1], fval > threshold);
  }
}

TEST(TrainMulticlass, DeterministicForFixedSeed) {
  const auto f = make(3);
  const auto a = hsi::train_multiclass(f.cube, f.split, 0.2, {hsi::KernelKind::Rbf, 0.5});
  hsi::MulticlassOptions opt;
  opt.threads = 3;
  const auto b = hsi::train_multiclass(f.cube, f.split, 0.2, {hsi::KernelKind::Rbf, 0.5}, opt);
  for (std::size_t p = 0; p < a.pairwise.size(); ++p) {
    EXPECT_EQ(a.pairwise[p].alpha_y, b.pairwise[p].alpha_y);
    EXPECT_EQ(a.pairwise[p].sigmoid.slope, b.pairwise[p].sigmoid.slope);
    EXPECT_EQ(a.pairwise[p].sigmoid.offset, b.pairwise[p].sigmoid.offset);
  }
}

TEST(TrainMulticlass, SmallClassesUseSigmoidFallback) {
  const auto f = make(3);
  hsi::SplitSpec tiny;
  std::size_t per_class[3] = {0, 0, 0};
  for (const auto& p : f.split.training) {
    if (per_class[p.cls] < 3) {
      tiny.training.push_back(p);
      ++per_class[p.cls];
    }
  }
  const auto model = hsi::train_multiclass(f.cube, tiny, 0.3, {hsi::KernelKind::Rbf, 0.5});
  for (const auto& bm : model.pairwise) {
    EXPECT_TRUE(bm.sigmoid_fallback);
    EXPECT_EQ(bm.sigmoid.slope, -1.0);
    EXPECT_EQ(bm.sigmoid.offset, 0.0);
  }
}

TEST(TrainMulticlass, MissingClassRejected) {
  const auto f = make(3);
  hsi::SplitSpec s;
  for (const auto& p : f.split.training)
    if (p.cls != 1) s.training.push_back(p);
  EXPECT_THROW(hsi::train_multiclass(f.cube, s, 0.2, {hsi::KernelKind::Rbf, 0.5}), hsi::DataError);
}

TEST(TrainMulticlass, TrainingPixelsRecoverTheirClass) {
  const auto f = make(4, 32, 10.0, 1);
  const auto model = hsi::train_multiclass(f.cube, f.split, 0.3, {hsi::KernelKind::Rbf, 0.5});
  const auto spectra = hsi::pixel_spectra(f.cube);
  std::size_t correct = 0;
  for (const auto& t : f.split.training) {
    const auto p = hsi::predict_probabilities(model, {spectra.row(t.row * f.cube.width + t.col), f.cube.bands});
    const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    correct += best == t.cls;
  }
  EXPECT_GE(static_cast<double>(correct), 0.95 * static_cast<double>(f.split.training.size()));
}

TEST(PredictTensor, OneHotTrainingPixelsAndSimplexElsewhere) {
  const auto f = make(4);
  const auto model = hsi::train_multiclass(f.cube, f.split, 0.3, {hsi::KernelKind::Rbf, 0.5});
  const auto t = hsi::predict_tensor(model, f.cube, f.split);
  const auto mask = hsi::training_mask(f.split, f.cube.height, f.cube.width);
  for (const auto& p : f.split.training) {
    const std::size_t px = p.row * f.cube.width + p.col;
    for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(t.at(k, px), k == p.cls ? 1.0 : 0.0);
  }
  for (std::size_t px = 0; px < t.pixels(); ++px) {
    if (mask[px]) continue;
    double sum = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_GE(t.at(k, px), 0.0);
      sum += t.at(k, px);
    }
    EXPECT_NEAR(sum, 1.0, 1e-10);
  }
}

TEST(PredictTensor, ParallelMatchesSequentialOracle) {
  const auto f = make(3, 8, 25.0, 7);
  const auto model = hsi::train_multiclass(f.cube, f.split, 0.3, {hsi::KernelKind::Rbf, 0.5});
  const auto spectra = hsi::pixel_spectra(f.cube);
  const auto mask = hsi::training_mask(f.split, 8, 8);
  for (std::size_t threads : {1u, 2u, 5u}) {
    const auto t = hsi::predict_tensor(model, f.cube, f.split, threads);
    for (std::size_t px = 0; px < 64; ++px) {
      if (mask[px]) continue;
      const auto p = hsi::predict_probabilities(model, {spectra.row(px), f.cube.bands});
      for (std::size_t k = 0; k < 3; ++k) ASSERT_EQ(t.at(k, px), p[k]) << "pixel " << px;
    }
  }
}

TEST(Vote, TiesGoToSmallerClass) {
  hsi::MulticlassModel m;
  m.num_classes = 3;
  m.pairwise.resize(3);
  // 0 beats 1, 1 beats 2, 2 beats 0: one win each
  const std::vector<double> dec{1.0, -1.0, 1.0};
  EXPECT_EQ(hsi::vote(m, dec), 0u);
  const std::vector<double> dec2{-1.0, -1.0, 1.0};
  EXPECT_EQ(hsi::vote(m, dec2), 1u);
}

}  // namespace
