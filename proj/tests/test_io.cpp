#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "fixtures.hpp"
#include "hsi/io.hpp"
#include "hsi/multiclass.hpp"
#include "hsi/split.hpp"
#include "hsi/synthetic.hpp"

namespace {

using hsi::DataError;
namespace io = hsi::io;

std::vector<double> f32_values(std::size_t n, std::mt19937_64& rng) {
  auto v = hsi::testing::random_vector(n, rng, -10, 10);
  for (auto& x : v) x = static_cast<float>(x);
  return v;
}

TEST(CubeFormat, RoundTripProperty) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> dim(1, 6);
  for (int trial = 0; trial < 30; ++trial) {
    hsi::HyperCube c;
    c.height = dim(rng);
    c.width = dim(rng);
    c.bands = dim(rng);
    c.normalized = trial % 2 == 0;
    c.data = f32_values(c.height * c.width * c.bands, rng);
    const auto back = io::decode_cube(io::encode_cube(c));
    EXPECT_EQ(back.height, c.height);
    EXPECT_EQ(back.width, c.width);
    EXPECT_EQ(back.bands, c.bands);
    EXPECT_EQ(back.normalized, c.normalized);
    EXPECT_EQ(back.data, c.data);
  }
}

TEST(CubeFormat, HeaderLayout) {
  hsi::HyperCube c{2, 3, 1, {1, 2, 3, 4, 5, 6}, true};
  const std::string b = io::encode_cube(c);
  ASSERT_EQ(b.size(), 4u + 12u + 1u + 6u * 4u);
  EXPECT_EQ(b.substr(0, 4), "HSC1");
  EXPECT_EQ(static_cast<unsigned char>(b[4]), 2);
  EXPECT_EQ(static_cast<unsigned char>(b[8]), 3);
  EXPECT_EQ(static_cast<unsigned char>(b[16]), 1);
  float first;
  std::memcpy(&first, b.data() + 17, 4);
  EXPECT_EQ(first, 1.0f);
}

TEST(CubeFormat, RejectsCorruptInput) {
  hsi::HyperCube c{2, 2, 1, {1, 2, 3, 4}, false};
  const std::string good = io::encode_cube(c);
  EXPECT_THROW(io::decode_cube("HSX1" + good.substr(4)), DataError);
  EXPECT_THROW(io::decode_cube(good.substr(0, good.size() - 1)), DataError);
  EXPECT_THROW(io::decode_cube(good + "x"), DataError);
  EXPECT_THROW(io::decode_cube(""), DataError);
  std::string huge = good;
  huge[4] = '\xff';
  huge[5] = '\xff';
  EXPECT_THROW(io::decode_cube(huge), DataError);
}

TEST(LabelFormat, RoundTripProperty) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    hsi::LabelMap m;
    m.height = 1 + trial % 5;
    m.width = 2 + trial % 3;
    m.num_classes = 1 + trial % 7;
    std::uniform_int_distribution<int> lab(0, static_cast<int>(m.num_classes));
    for (std::size_t i = 0; i < m.height * m.width; ++i) m.labels.push_back(static_cast<std::uint16_t>(lab(rng)));
    const auto back = io::decode_labels(io::encode_labels(m));
    EXPECT_EQ(back.height, m.height);
    EXPECT_EQ(back.width, m.width);
    EXPECT_EQ(back.num_classes, m.num_classes);
    EXPECT_EQ(back.labels, m.labels);
  }
}

TEST(LabelFormat, RejectsOutOfRangeLabel) {
  hsi::LabelMap m{1, 2, 2, {1, 2}};
  std::string b = io::encode_labels(m);
  b[b.size() - 2] = 9;
  EXPECT_THROW(io::decode_labels(b), DataError);
}

TEST(SplitFormat, RoundTripPreservesTrainingOrderAndSeed) {
  const auto scene = hsi::make_synthetic_scene({.height = 10, .width = 12, .classes = 3, .unlabeled_fraction = 0.2});
  const auto s = hsi::stratified_split(scene.labels, hsi::PercentPerClass{20.0}, 1234567890123ull);
  const auto back = io::decode_split(io::encode_split(s), scene.labels);
  EXPECT_EQ(back.seed, s.seed);
  EXPECT_EQ(back.training, s.training);
  EXPECT_EQ(back.testing, s.testing);
}

TEST(SplitFormat, RejectsUnlabeledOrDuplicatePixels) {
  hsi::LabelMap m{1, 3, 1, {1, 0, 1}};
  hsi::SplitSpec s;
  s.training = {{0, 1, 0}};
  EXPECT_THROW(io::decode_split(io::encode_split(s), m), DataError);
  s.training = {{0, 0, 0}, {0, 0, 0}};
  EXPECT_THROW(io::decode_split(io::encode_split(s), m), DataError);
  s.training = {{0, 5, 0}};
  EXPECT_THROW(io::decode_split(io::encode_split(s), m), DataError);
}

TEST(ProbabilityFormat, RoundTripProperty) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    hsi::ProbabilityTensor t(1 + trial % 4, 2 + trial % 3, 1 + trial % 5);
    t.values = f32_values(t.values.size(), rng);
    const auto back = io::decode_probabilities(io::encode_probabilities(t));
    EXPECT_EQ(back.height, t.height);
    EXPECT_EQ(back.num_classes, t.num_classes);
    EXPECT_EQ(back.values, t.values);
  }
}

TEST(ProbabilityFormat, QuantizeMatchesFileRoundTrip) {
  std::mt19937_64 rng(22);
  hsi::ProbabilityTensor t(3, 3, 2);
  t.values = hsi::testing::random_vector(t.values.size(), rng);
  EXPECT_EQ(io::quantize_f32(t).values, io::decode_probabilities(io::encode_probabilities(t)).values);
}

TEST(ModelFormat, RoundTrip) {
  const auto scene = hsi::make_synthetic_scene({.height = 12, .width = 12, .bands = 5, .classes = 3});
  const auto cube = hsi::normalize_cube(scene.cube);
  const auto split = hsi::stratified_split(scene.labels, hsi::PercentPerClass{25.0}, 3);
  const auto model = hsi::train_multiclass(cube, split, 0.3, {hsi::KernelKind::Rbf, 0.7});
  const auto back = io::decode_model(io::encode_model(model), cube.bands);
  ASSERT_EQ(back.pairwise.size(), model.pairwise.size());
  EXPECT_EQ(back.kernel.sigma, model.kernel.sigma);
  for (std::size_t p = 0; p < model.pairwise.size(); ++p) {
    const auto& a = model.pairwise[p];
    const auto& b = back.pairwise[p];
    EXPECT_EQ(a.bias, b.bias);
    EXPECT_EQ(a.nu, b.nu);
    EXPECT_EQ(a.sigmoid.slope, b.sigmoid.slope);
    EXPECT_EQ(a.sigmoid.offset, b.sigmoid.offset);
    EXPECT_EQ(a.sigmoid_fallback, b.sigmoid_fallback);
    EXPECT_EQ(a.alpha_y, b.alpha_y);
    EXPECT_EQ(a.sv_pixel, b.sv_pixel);
    EXPECT_EQ(a.support_vectors.data, b.support_vectors.data);
  }
  EXPECT_THROW(io::decode_model(io::encode_model(model), cube.bands + 1), DataError);
}

TEST(Files, AtomicWriteLeavesNoTemporary) {
  hsi::testing::TempDir dir("io");
  io::write_file_atomic(dir.file("a.bin"), "abc");
  io::write_file_atomic(dir.file("a.bin"), "defg");
  EXPECT_EQ(io::read_file(dir.file("a.bin")), "defg");
  EXPECT_FALSE(std::filesystem::exists(dir.file("a.bin.tmp")));
  EXPECT_THROW(io::read_file(dir.file("missing.bin")), DataError);
}

TEST(ClassCounts, ParsesBothForms) {
  EXPECT_EQ(io::parse_class_counts("10\n20\n# note\n\n30\n", 3), (std::vector<std::size_t>{10, 20, 30}));
  EXPECT_EQ(io::parse_class_counts("class,count\n2,5\n1,7\n", 2), (std::vector<std::size_t>{7, 5}));
  EXPECT_THROW(io::parse_class_counts("1,5\n", 2), DataError);
  EXPECT_THROW(io::parse_class_counts("1,5\n1,6\n2,1\n", 2), DataError);
  EXPECT_THROW(io::parse_class_counts("3,5\n", 2), DataError);
  EXPECT_THROW(io::parse_class_counts("5\nabc\n", 2), DataError);
}

TEST(Heatmap, PgmLayout) {
  hsi::Heatmap h{1, 3, 10, {0, 3, 10}, {1, 1, 0}};
  const std::string pgm = io::encode_heatmap_pgm(h);
  EXPECT_EQ(pgm, std::string("P5\n3 1\n10\n") + std::string("\x00\x03\x0a", 3));
  EXPECT_EQ(io::encode_heatmap_csv(h), "row,col,misclassified,tested\n0,0,0,1\n0,1,3,1\n0,2,10,0\n");
}

}  // namespace
