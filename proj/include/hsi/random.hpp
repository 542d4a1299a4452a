#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace hsi {

/// splitmix64 finalizer; derives independent stream seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Fisher-Yates with an explicit generator so results do not depend on the
/// standard library's shuffle implementation.
template <typename T>
void shuffle_in_place(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

/// Fold id in [0, folds) for every item, balanced within each class.
inline std::vector<std::size_t> stratified_folds(std::span<const std::size_t> classes,
                                                 std::size_t folds, std::uint64_t seed) {
  std::vector<std::size_t> out(classes.size(), 0);
  if (folds == 0 || classes.empty()) return out;
  const std::size_t num_classes = *std::max_element(classes.begin(), classes.end()) + 1;
  std::vector<std::vector<std::size_t>> members(num_classes);
  for (std::size_t i = 0; i < classes.size(); ++i) members[classes[i]].push_back(i);
  std::mt19937_64 rng(seed);
  // Continue the fold rotation across classes so small classes do not all
  // land in fold 0.
  std::size_t offset = 0;
  for (auto& m : members) {
    shuffle_in_place(m, rng);
    for (std::size_t k = 0; k < m.size(); ++k) out[m[k]] = (offset + k) % folds;
    offset += m.size();
  }
  return out;
}

}  // namespace hsi
