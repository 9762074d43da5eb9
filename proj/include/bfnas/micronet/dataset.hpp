#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bfnas/micronet/tensor.hpp"
#include "bfnas/rng.hpp"

namespace bfnas::micronet {

inline constexpr int kImageSize = 8;
inline constexpr int kNumClasses = 4;

// Deterministic 4-class 8x8 grayscale task. Class patterns:
//   0 horizontal stripes, 1 vertical stripes, 2 diagonal stripes (period 4),
//   3 checkerboard,
// each plus seeded per-pixel uniform noise of the given amplitude, clipped
// to [0,1]. Classes are assigned round-robin, so counts are balanced +-1.
struct SynthDataset {
  Tensor train_images;  // (n_train, 1, 8, 8)
  std::vector<int> train_labels;
  Tensor val_images;  // (n_val, 1, 8, 8)
  std::vector<int> val_labels;
  std::uint64_t seed = 0;
};

namespace detail {
inline double class_pattern(int cls, int y, int x) {
  constexpr double lo = 0.25, hi = 0.75;
  switch (cls) {
    case 0: return y % 2 == 0 ? hi : lo;
    case 1: return x % 2 == 0 ? hi : lo;
    case 2: return (x + y) % 4 < 2 ? hi : lo;
    default: return (x + y) % 2 == 0 ? hi : lo;
  }
}

inline void fill_split(Tensor& images, std::vector<int>& labels, int count, RngStream& rng,
                       double noise) {
  images = Tensor(count, 1, kImageSize, kImageSize);
  labels.resize(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    int cls = i % kNumClasses;
    labels[static_cast<std::size_t>(i)] = cls;
    for (int y = 0; y < kImageSize; ++y)
      for (int x = 0; x < kImageSize; ++x) {
        double v = class_pattern(cls, y, x) + rng.uniform(-noise, noise);
        images.at(i, 0, y, x) = std::clamp(v, 0.0, 1.0);
      }
  }
}
}  // namespace detail

inline SynthDataset synth_dataset(std::uint64_t seed, int n_train, int n_val,
                                  double noise_amplitude = 0.15) {
  if (n_train < kNumClasses || n_val < kNumClasses)
    throw std::invalid_argument("synth_dataset: need at least 4 samples per split");
  SynthDataset ds;
  ds.seed = seed;
  RngStream train_rng(mix_seed({seed, seed_tag("synth-train")}));
  RngStream val_rng(mix_seed({seed, seed_tag("synth-val")}));
  detail::fill_split(ds.train_images, ds.train_labels, n_train, train_rng, noise_amplitude);
  detail::fill_split(ds.val_images, ds.val_labels, n_val, val_rng, noise_amplitude);
  return ds;
}

}  // namespace bfnas::micronet
