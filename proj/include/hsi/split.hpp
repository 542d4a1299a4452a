#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "hsi/random.hpp"
#include "hsi/types.hpp"

namespace hsi {

/// Training pixels per class (0-based index), or a percentage of each class.
struct PerClassCounts {
  std::vector<std::size_t> counts;
};
struct PercentPerClass {
  double percent = 10.0;
};
using SplitRequest = std::variant<PerClassCounts, PercentPerClass>;

inline std::vector<std::vector<std::uint32_t>> pixels_by_class(const LabelMap& labels) {
  std::vector<std::vector<std::uint32_t>> out(labels.num_classes);
  for (std::size_t px = 0; px < labels.pixels(); ++px) {
    if (auto c = labels.class_of(px)) out[*c].push_back(static_cast<std::uint32_t>(px));
  }
  return out;
}

/// Builds a split from explicit training pixels; every other labeled pixel
/// becomes a testing pixel.
inline SplitSpec split_from_training(const LabelMap& labels,
                                     const std::vector<std::uint32_t>& training_pixels,
                                     std::uint64_t seed) {
  std::vector<std::uint8_t> is_train(labels.pixels(), 0);
  for (auto px : training_pixels) {
    if (px >= labels.pixels()) throw DataError("training pixel outside the label map");
    if (!labels.class_of(px)) {
      throw DataError("training pixel " + std::to_string(px) + " is unlabeled");
    }
    if (is_train[px]) throw DataError("training pixel listed twice");
    is_train[px] = 1;
  }
  SplitSpec split;
  split.seed = seed;
  for (std::size_t px = 0; px < labels.pixels(); ++px) {
    const auto c = labels.class_of(px);
    if (!c) continue;
    LabeledPixel lp{static_cast<std::uint32_t>(px / labels.width),
                    static_cast<std::uint32_t>(px % labels.width), static_cast<std::uint32_t>(*c)};
    (is_train[px] ? split.training : split.testing).push_back(lp);
  }
  return split;
}

/// Checks disjointness, label agreement, and that every class present in the
/// label map has at least one training pixel.
inline void validate_split(const LabelMap& labels, const SplitSpec& split) {
  std::vector<std::uint8_t> seen(labels.pixels(), 0);
  std::vector<std::size_t> train_per_class(labels.num_classes, 0);
  auto check = [&](const LabeledPixel& p, std::uint8_t tag) {
    if (p.row >= labels.height || p.col >= labels.width) throw DataError("split pixel outside the label map");
    const std::size_t px = p.row * labels.width + p.col;
    const auto c = labels.class_of(px);
    if (!c || *c != p.cls) throw DataError("split pixel disagrees with the label map");
    if (seen[px]) throw DataError("pixel appears twice in the split");
    seen[px] = tag;
  };
  for (const auto& p : split.training) {
    check(p, 1);
    ++train_per_class[p.cls];
  }
  for (const auto& p : split.testing) check(p, 2);
  const auto members = pixels_by_class(labels);
  for (std::size_t c = 0; c < labels.num_classes; ++c) {
    if (!members[c].empty() && train_per_class[c] == 0) {
      throw DataError("class " + std::to_string(c + 1) + " has no training pixels");
    }
  }
}

inline std::vector<std::size_t> training_counts(const SplitSpec& split, std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (const auto& p : split.training) ++counts.at(p.cls);
  return counts;
}

/// Uniform sampling without replacement inside each class, deterministic
/// for a fixed seed.
inline SplitSpec stratified_split(const LabelMap& labels, const SplitRequest& request,
                                  std::uint64_t seed, std::vector<std::string>* warnings = nullptr) {
  validate_labels(labels);
  auto members = pixels_by_class(labels);
  std::vector<std::uint32_t> chosen;
  for (std::size_t c = 0; c < members.size(); ++c) {
    const std::size_t available = members[c].size();
    std::size_t take = 0;
    if (const auto* counts = std::get_if<PerClassCounts>(&request)) {
      if (counts->counts.size() != labels.num_classes) {
        throw DataError("expected " + std::to_string(labels.num_classes) +
                        " per-class counts, got " + std::to_string(counts->counts.size()));
      }
      take = counts->counts[c];
      if (take > available) {
        throw DataError("class " + std::to_string(c + 1) + " has " + std::to_string(available) +
                        " labeled pixels, fewer than the requested " + std::to_string(take));
      }
      if (take == 0 && available > 0) {
        throw DataError("class " + std::to_string(c + 1) + " needs at least one training pixel");
      }
    } else {
      const double pct = std::get<PercentPerClass>(request).percent;
      if (!(pct > 0.0 && pct <= 100.0)) throw DataError("percentage must lie in (0, 100]");
      if (available == 0) continue;
      take = static_cast<std::size_t>(std::llround(pct / 100.0 * static_cast<double>(available)));
      take = std::clamp<std::size_t>(take, 1, available);
    }
    std::mt19937_64 rng(mix_seed(seed, c));
    shuffle_in_place(members[c], rng);
    chosen.insert(chosen.end(), members[c].begin(),
                  members[c].begin() + static_cast<std::ptrdiff_t>(take));
  }
  SplitSpec split = split_from_training(labels, chosen, seed);
  if (split.testing.empty() && warnings) {
    warnings->push_back("split leaves no testing pixels");
  }
  return split;
}

}  // namespace hsi
