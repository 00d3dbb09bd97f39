// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ABSGN Project Contributors

#include "absgn/data.hpp"

#include <algorithm>
#include <filesystem>

namespace absgn {

namespace fs = std::filesystem;

namespace {

bool has_image_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

fs::path resolve_split_dir(const std::string& root, const std::string& split) {
  std::vector<fs::path> candidates{fs::path(root) / split};
  if (split == "train") candidates.emplace_back(fs::path(root) / "our485");
  if (split == "eval") candidates.emplace_back(fs::path(root) / "eval15");
  candidates.emplace_back(root);
  for (const auto& c : candidates)
    if (fs::exists(c / "low")) return c;
  return root;
}

}  // namespace

PairedDataset load_paired_dataset(const std::string& root, const std::string& split) {
  check(split == "train" || split == "eval", "load_paired_dataset: split must be train or eval");
  PairedDataset ds;
  ds.root = root;
  ds.split = split;

  fs::path dir = resolve_split_dir(root, split);
  fs::path low_dir = dir / "low";
  fs::path high_dir = dir / "high";
  if (!fs::exists(low_dir)) return ds;  // nothing to enumerate

  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(low_dir))
    if (entry.is_regular_file() && has_image_extension(entry.path()))
      names.push_back(entry.path().filename().string());
  std::sort(names.begin(), names.end());

  for (const auto& name : names) {
    fs::path ref = high_dir / name;
    if (!fs::exists(ref))
      throw std::runtime_error("missing reference image for \"" + name + "\" under " +
                               high_dir.string());
    ds.records.push_back({name, (low_dir / name).string(), ref.string()});
  }
  return ds;
}

std::pair<Tensor<float>, Tensor<float>> load_pair(const PairRecord& rec) {
  Tensor<float> low = load_image_rgb(rec.low_path);
  Tensor<float> ref = load_image_rgb(rec.ref_path);
  if (!low.same_shape(ref))
    throw std::runtime_error("dimension mismatch within pair \"" + rec.name + "\": " +
                             shape_str(low.shape()) + " vs " + shape_str(ref.shape()));
  return {std::move(low), std::move(ref)};
}

namespace {

Tensor<float> rot90_ccw(const Tensor<float>& img) {
  const int c = img.dim(1), h = img.dim(2), w = img.dim(3);
  Tensor<float> out(Shape{1, c, w, h});
  for (int ci = 0; ci < c; ++ci)
    for (int i = 0; i < w; ++i)
      for (int j = 0; j < h; ++j) out.at(0, ci, i, j) = img.at(0, ci, j, w - 1 - i);
  return out;
}

}  // namespace

Tensor<float> apply_geometry(const Tensor<float>& img, const GeomTransform& t) {
  check(img.rank() == 4 && img.dim(0) == 1, "apply_geometry: expected [1,C,H,W]");
  const int c = img.dim(1), h = img.dim(2), w = img.dim(3);
  Tensor<float> out(img.shape());
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < h; ++y) {
      const int sy = t.vflip ? h - 1 - y : y;
      for (int x = 0; x < w; ++x) out.at(0, ci, y, x) = img.at(0, ci, sy, t.hflip ? w - 1 - x : x);
    }
  for (int k = 0; k < (t.rot90 % 4 + 4) % 4; ++k) out = rot90_ccw(out);
  return out;
}

std::pair<Tensor<float>, Tensor<float>> random_crop_pair(const Tensor<float>& low,
                                                         const Tensor<float>& ref, int size,
                                                         Rng& rng) {
  check(low.same_shape(ref), "random_crop_pair: pair shapes differ");
  check(low.rank() == 4 && low.dim(0) == 1, "random_crop_pair: expected [1,C,H,W]");
  const int c = low.dim(1), h = low.dim(2), w = low.dim(3);
  check(size >= 1, "random_crop_pair: size must be positive");
  check(h >= size && w >= size, "random_crop_pair: image " + shape_str(low.shape()) +
                                    " smaller than crop " + std::to_string(size));
  const int y0 = rng.uniform_int(h - size + 1);
  const int x0 = rng.uniform_int(w - size + 1);
  Tensor<float> lo(Shape{1, c, size, size}), re(Shape{1, c, size, size});
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        lo.at(0, ci, y, x) = low.at(0, ci, y0 + y, x0 + x);
        re.at(0, ci, y, x) = ref.at(0, ci, y0 + y, x0 + x);
      }
  return {std::move(lo), std::move(re)};
}

std::pair<Tensor<float>, Tensor<float>> random_crop_pair(const Tensor<float>& low,
                                                         const Tensor<float>& ref, int size,
                                                         uint64_t seed) {
  Rng rng(seed);
  return random_crop_pair(low, ref, size, rng);
}

std::pair<Tensor<float>, Tensor<float>> augment_pair(const Tensor<float>& low,
                                                     const Tensor<float>& ref, Rng& rng) {
  check(low.same_shape(ref), "augment_pair: pair shapes differ");
  GeomTransform t;
  t.hflip = rng.bernoulli(0.5);
  t.vflip = rng.bernoulli(0.5);
  t.rot90 = rng.uniform_int(4);
  return {apply_geometry(low, t), apply_geometry(ref, t)};
}

std::pair<Tensor<float>, Tensor<float>> augment_pair(const Tensor<float>& low,
                                                     const Tensor<float>& ref, uint64_t seed) {
  Rng rng(seed);
  return augment_pair(low, ref, rng);
}

Tensor<float> synthesize_lowlight(const Tensor<float>& clean, const SynthParams& p) {
  check(p.gamma > 0 && p.brightness > 0 && p.noise_sigma >= 0, "synthesize_lowlight: bad parameters");
  Rng rng(p.seed);
  Tensor<float> out(clean.shape());
  for (int64_t i = 0; i < clean.numel(); ++i) {
    double v = clean[i];
    check(v >= 0.0 && v <= 1.0, "synthesize_lowlight: clean image must lie in [0,1]");
    double lo = std::pow(v, p.gamma) * p.brightness;
    if (p.noise_sigma > 0) lo += p.noise_sigma * rng.normal();
    out[i] = static_cast<float>(std::min(1.0, std::max(0.0, lo)));
  }
  return out;
}

Tensor<float> make_synthetic_clean(int h, int w, uint64_t seed) {
  check(h >= 2 && w >= 2, "make_synthetic_clean: size too small");
  Rng rng(seed);
  Tensor<float> img(Shape{1, 3, h, w});
  for (int c = 0; c < 3; ++c) {
    const double base = rng.uniform_in(0.25, 0.55);
    const double gx = rng.uniform_in(-0.3, 0.3);
    const double gy = rng.uniform_in(-0.3, 0.3);
    struct Blob {
      double cx, cy, sigma, amp;
    };
    std::vector<Blob> blobs;
    for (int i = 0; i < 3; ++i)
      blobs.push_back({rng.uniform_in(0, w - 1.0), rng.uniform_in(0, h - 1.0),
                       rng.uniform_in(0.1, 0.3) * std::min(h, w), rng.uniform_in(-0.35, 0.4)});
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double v = base + gx * double(x) / (w - 1) + gy * double(y) / (h - 1);
        for (const auto& b : blobs) {
          double d2 = (x - b.cx) * (x - b.cx) + (y - b.cy) * (y - b.cy);
          v += b.amp * std::exp(-d2 / (2.0 * b.sigma * b.sigma));
        }
        img.at(0, c, y, x) = static_cast<float>(std::min(0.95, std::max(0.1, v)));
      }
  }
  return img;
}

void write_synthetic_dataset(const std::string& root, int count, int h, int w, uint64_t seed,
                             const SynthParams& degrade) {
  check(count >= 0, "write_synthetic_dataset: negative count");
  fs::create_directories(fs::path(root) / "low");
  fs::create_directories(fs::path(root) / "high");
  for (int i = 0; i < count; ++i) {
    Tensor<float> clean = make_synthetic_clean(h, w, Rng::derive(seed, uint64_t(i)));
    SynthParams p = degrade;
    p.seed = Rng::derive(seed, uint64_t(i) + 0x10000u);
    Tensor<float> low = synthesize_lowlight(clean, p);
    char name[32];
    std::snprintf(name, sizeof(name), "img_%03d.png", i);
    save_image_rgb(clean, (fs::path(root) / "high" / name).string());
    save_image_rgb(low, (fs::path(root) / "low" / name).string());
  }
}

}  // namespace absgn
