// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ABSGN Project Contributors

#pragma once

#include <utility>

#include "absgn/image_io.hpp"
#include "absgn/rng.hpp"

namespace absgn {

// Paired low/normal-light dataset handling, the geometric train-time
// transforms, and a synthetic pair generator so the whole toolkit runs
// without any external download.

struct PairRecord {
  std::string name;       // shared filename, e.g. "001.png"
  std::string low_path;   // degraded input
  std::string ref_path;   // normal-light reference
};

struct PairedDataset {
  std::string root;
  std::string split;
  std::vector<PairRecord> records;  // sorted by filename

  size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

/// Enumerate matching files under <dir>/low and <dir>/high where <dir> is
/// root/<split> (with root/our485 and root/eval15 accepted as aliases for the
/// usual pair-set layout) or root itself. A low image without its same-named
/// reference is an error; an absent or empty low directory yields an empty
/// dataset.
PairedDataset load_paired_dataset(const std::string& root, const std::string& split);

/// Load and validate one pair: both 8-bit RGB, identical dimensions.
std::pair<Tensor<float>, Tensor<float>> load_pair(const PairRecord& rec);

// ---- geometric transforms (always applied identically to both images) ----

struct GeomTransform {
  bool hflip = false;
  bool vflip = false;
  int rot90 = 0;  // quarter turns, 0..3
};

Tensor<float> apply_geometry(const Tensor<float>& img, const GeomTransform& t);

std::pair<Tensor<float>, Tensor<float>> random_crop_pair(const Tensor<float>& low,
                                                         const Tensor<float>& ref, int size,
                                                         Rng& rng);
std::pair<Tensor<float>, Tensor<float>> random_crop_pair(const Tensor<float>& low,
                                                         const Tensor<float>& ref, int size,
                                                         uint64_t seed);

/// Flip each axis with probability 1/2 and rotate by a uniform quarter turn.
std::pair<Tensor<float>, Tensor<float>> augment_pair(const Tensor<float>& low,
                                                     const Tensor<float>& ref, Rng& rng);
std::pair<Tensor<float>, Tensor<float>> augment_pair(const Tensor<float>& low,
                                                     const Tensor<float>& ref, uint64_t seed);

// ---- synthetic pairs ----

struct SynthParams {
  double gamma = 3.0;        // darkening exponent, meant for [2,5]
  double brightness = 0.3;   // scale, meant for [0.1,0.5]
  double noise_sigma = 0.02; // additive Gaussian sigma, meant for [0.01,0.05]
  uint64_t seed = 0;
};

/// low = clip(clean^gamma * brightness + N(0, sigma^2), 0, 1).
Tensor<float> synthesize_lowlight(const Tensor<float>& clean, const SynthParams& p);

/// Smooth random "scene": per-channel gradients plus a few Gaussian blobs,
/// values within [0.1, 0.95].
Tensor<float> make_synthetic_clean(int h, int w, uint64_t seed);

/// Materialize count synthetic pairs as 8-bit PNGs under root/low and
/// root/high (shared filenames, zero-padded indices).
void write_synthetic_dataset(const std::string& root, int count, int h, int w, uint64_t seed,
                             const SynthParams& degrade = {});

}  // namespace absgn
