// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ABSGN Project Contributors

#pragma once

#include <nlohmann/json.hpp>

#include "absgn/blocks.hpp"
#include "absgn/wavelet.hpp"

namespace absgn {

// Full ABSGN topology. A stem conv lifts the image to base_channels; three
// DWT+conv stages halve the resolution and double the width (base -> 2x ->
// 4x -> 8x); the coarsest map goes through the global attention block and the
// network's single batch-normalization layer; the decoder mirrors the way up
// with IDWT+conv, 1x1 skip merges and MGDBs per level; the full-resolution
// tail is a densely connected MGDB group followed by a two-conv head.

enum class Variant { kFull, kSpa, kGia, kDcr, kNoDc };

inline std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kSpa: return "spa";
    case Variant::kGia: return "gia";
    case Variant::kDcr: return "dcr";
    case Variant::kNoDc: return "no-dc";
  }
  throw std::invalid_argument("variant_name: unknown variant");
}

inline Variant variant_from_name(const std::string& name) {
  if (name == "full") return Variant::kFull;
  if (name == "spa") return Variant::kSpa;
  if (name == "gia") return Variant::kGia;
  if (name == "dcr") return Variant::kDcr;
  if (name == "no-dc" || name == "no_dc") return Variant::kNoDc;
  throw std::invalid_argument("unknown variant \"" + name + "\" (expected full|spa|gia|dcr|no-dc)");
}

inline const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> v{Variant::kFull, Variant::kSpa, Variant::kGia, Variant::kDcr,
                                      Variant::kNoDc};
  return v;
}

struct NetworkConfig {
  int base_channels = 32;
  int levels = 3;  // downsampling count; the topology assumes 3
  std::vector<int> mgdb_per_level{2, 2, 1};  // full-res group, mid level, coarse-mid level
  Variant variant = Variant::kFull;
  double gsa_shrink_ratio = 0.5;
  std::vector<int> mgdb_dilations{4, 2, 1};
  int mgdb_growth_divisor = 2;
  int ca_reduction = 8;

  void validate() const {
    check(levels == 3, "NetworkConfig: topology is fixed at 3 downsampling levels");
    check(base_channels >= 4 && base_channels % 4 == 0,
          "NetworkConfig: base_channels must be a positive multiple of 4");
    check(base_channels % ca_reduction == 0,
          "NetworkConfig: base_channels must be divisible by the channel-attention reduction");
    check(mgdb_per_level.size() == 3, "NetworkConfig: mgdb_per_level needs one entry per level");
    for (int n : mgdb_per_level) check(n >= 1, "NetworkConfig: mgdb_per_level entries must be >= 1");
    check(gsa_shrink_ratio > 0.0 && gsa_shrink_ratio <= 1.0,
          "NetworkConfig: gsa_shrink_ratio must be in (0,1]");
    check(mgdb_growth_divisor >= 1, "NetworkConfig: mgdb_growth_divisor must be >= 1");
    validate_mgdb_dilations(mgdb_dilations);
  }
};

/// Variant substitution: identical topology and parameter names outside the
/// substituted blocks.
inline NetworkConfig make_variant(NetworkConfig cfg, Variant v) {
  cfg.variant = v;
  return cfg;
}

inline void to_json(nlohmann::json& j, const NetworkConfig& c) {
  j = nlohmann::json{{"base_channels", c.base_channels},
                     {"levels", c.levels},
                     {"mgdb_per_level", c.mgdb_per_level},
                     {"variant", variant_name(c.variant)},
                     {"gsa_shrink_ratio", c.gsa_shrink_ratio},
                     {"mgdb_dilations", c.mgdb_dilations},
                     {"mgdb_growth_divisor", c.mgdb_growth_divisor},
                     {"ca_reduction", c.ca_reduction}};
}

inline void from_json(const nlohmann::json& j, NetworkConfig& c) {
  c = NetworkConfig{};
  if (j.contains("base_channels")) j.at("base_channels").get_to(c.base_channels);
  if (j.contains("levels")) j.at("levels").get_to(c.levels);
  if (j.contains("mgdb_per_level")) j.at("mgdb_per_level").get_to(c.mgdb_per_level);
  if (j.contains("variant")) c.variant = variant_from_name(j.at("variant").get<std::string>());
  if (j.contains("gsa_shrink_ratio")) j.at("gsa_shrink_ratio").get_to(c.gsa_shrink_ratio);
  if (j.contains("mgdb_dilations")) j.at("mgdb_dilations").get_to(c.mgdb_dilations);
  if (j.contains("mgdb_growth_divisor")) j.at("mgdb_growth_divisor").get_to(c.mgdb_growth_divisor);
  if (j.contains("ca_reduction")) j.at("ca_reduction").get_to(c.ca_reduction);
}

template <typename T>
class Network {
 public:
  Network(NetworkConfig cfg, uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(seed);
    const int base = cfg_.base_channels;
    const bool dcr = cfg_.variant == Variant::kDcr;
    const bool plain_dil = dcr || cfg_.variant == Variant::kNoDc;
    std::vector<int> dils = cfg_.mgdb_dilations;
    if (plain_dil) std::fill(dils.begin(), dils.end(), 1);

    auto mgdb_cfg = [&](int channels) {
      MgdbConfig m;
      m.channels = channels;
      m.growth = std::max(1, channels / cfg_.mgdb_growth_divisor);
      m.dilations = dils;
      m.use_channel_attention = !dcr;
      m.ca_reduction = cfg_.ca_reduction;
      return m;
    };

    stem_ = ConvPRelu<T>(store_, "stem", {3, base, 3, 1, true}, rng);
    int ch = base;
    for (int i = 1; i <= 3; ++i) {
      down_.emplace_back(store_, "down" + std::to_string(i), ConvSpec{4 * ch, 2 * ch, 3, 1, true}, rng);
      ch *= 2;
    }
    const int coarse = ch;  // 8 * base

    if (cfg_.variant == Variant::kSpa) {
      spa_only_.emplace(store_, "low.spa", rng);
    } else {
      GsaConfig g;
      g.channels = coarse;
      g.shrunk_channels = std::max(1, int(std::lround(coarse * cfg_.gsa_shrink_ratio)));
      g.use_spatial_attention = cfg_.variant != Variant::kGia;
      gsa_.emplace(store_, "low.gsa", g, rng);
    }
    bn_gamma_ = store_.add_param("low.bn.gamma", Tensor<T>(Shape{coarse}, T(1)));
    bn_beta_ = store_.add_param("low.bn.beta", Tensor<T>(Shape{coarse}));
    bn_rm_ = store_.add_buffer("low.bn.running_mean", Tensor<T>(Shape{coarse}));
    bn_rv_ = store_.add_buffer("low.bn.running_var", Tensor<T>(Shape{coarse}, T(1)));

    // decoder: level 2 (quarter res) then level 1 (half res)
    for (int lvl = 2; lvl >= 1; --lvl) {
      int width = base << lvl;  // channel width at this level
      std::string sl = std::to_string(lvl);
      up_.emplace_back(store_, "up" + sl, ConvSpec{width / 2, width, 3, 1, true}, rng);
      merge_.emplace_back(store_, "merge" + sl, ConvSpec{2 * width, width, 1, 1, false}, rng);
      auto& blocks = lvl == 2 ? mid2_ : mid1_;
      for (int i = 0; i < cfg_.mgdb_per_level[static_cast<size_t>(lvl)]; ++i)
        blocks.emplace_back(store_, "dec" + sl + ".mgdb" + std::to_string(i), mgdb_cfg(width), rng);
    }

    up_.emplace_back(store_, "up0", ConvSpec{base / 2, base, 3, 1, true}, rng);
    merge_.emplace_back(store_, "merge0", ConvSpec{2 * base, base, 1, 1, false}, rng);

    const int ndense = cfg_.mgdb_per_level[0];
    for (int i = 0; i < ndense; ++i) {
      if (i > 0)
        dense_merge_.emplace_back(store_, "dense.in_merge" + std::to_string(i),
                                  ConvSpec{(i + 1) * base, base, 1, 1, false}, rng);
      dense_.emplace_back(store_, "dense.mgdb" + std::to_string(i), mgdb_cfg(base), rng);
    }
    dense_out_ = ConvPRelu<T>(store_, "dense.out_merge", {(ndense + 1) * base, base, 1, 1, false}, rng);
    head1_ = ConvPRelu<T>(store_, "head1", {base, base, 3, 1, true}, rng);
    head2_ = ConvPRelu<T>(store_, "head2", {base, 3, 3, 1, false}, rng);
  }

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;

  const NetworkConfig& config() const { return cfg_; }
  ParamStore<T>& params() { return store_; }
  const ParamStore<T>& params() const { return store_; }
  int64_t count_params() const { return store_.param_count(); }

  /// Raw (unclamped) restored image for any H,W >= 8; pads internally to a
  /// multiple of 8 with reflection and crops back. Training mode drives the
  /// batch-norm layer with batch statistics.
  Var<T> forward(const Var<T>& input, bool training) {
    const Tensor<T>& iv = input.value();
    check(iv.rank() == 4 && iv.dim(1) == 3, "forward: input must be [B,3,H,W]");
    const int h = iv.dim(2), w = iv.dim(3);
    check(h >= 8 && w >= 8, "forward: spatial size must be at least 8x8");
    check(iv.all_finite(), "forward: non-finite input");

    const int pad_h = (8 - h % 8) % 8;
    const int pad_w = (8 - w % 8) % 8;
    Var<T> x = (pad_h || pad_w) ? reflect_pad(input, 0, pad_h, 0, pad_w) : input;

    Var<T> e0 = stem_.forward(x);
    Var<T> e1 = down_[0].forward(dwt2(e0));
    Var<T> e2 = down_[1].forward(dwt2(e1));
    Var<T> e3 = down_[2].forward(dwt2(e2));

    Var<T> low = spa_only_ ? spa_only_->forward(e3) : gsa_->forward(e3);
    low = batch_norm(low, bn_gamma_, bn_beta_, *bn_rm_, *bn_rv_, training);

    Var<T> m2 = merge_[0].forward(concat_channels<T>({e2, up_[0].forward(idwt2(low))}));
    for (auto& blk : mid2_) m2 = blk.forward(m2);
    Var<T> m1 = merge_[1].forward(concat_channels<T>({e1, up_[1].forward(idwt2(m2))}));
    for (auto& blk : mid1_) m1 = blk.forward(m1);
    Var<T> x0 = merge_[2].forward(concat_channels<T>({e0, up_[2].forward(idwt2(m1))}));

    std::vector<Var<T>> feats{x0};
    for (size_t i = 0; i < dense_.size(); ++i) {
      Var<T> in = i == 0 ? x0 : dense_merge_[i - 1].forward(concat_channels<T>(feats));
      feats.push_back(dense_[i].forward(in));
    }
    Var<T> y = dense_out_.forward(concat_channels<T>(feats));
    Var<T> out = head2_.forward(head1_.forward(y));

    if (pad_h || pad_w) out = crop(out, 0, 0, h, w);
    return out;
  }

  /// Inference entry point: eval-mode forward, output clamped to [0,1].
  Tensor<T> enhance(const Tensor<T>& image) {
    NoGradGuard ng;
    Var<T> x(image);
    return clamp01(forward(x, /*training=*/false).value());
  }

 private:
  NetworkConfig cfg_;
  ParamStore<T> store_;
  ConvPRelu<T> stem_;
  std::vector<ConvPRelu<T>> down_;
  std::optional<GsaBlock<T>> gsa_;
  std::optional<SpatialAttention<T>> spa_only_;
  Var<T> bn_gamma_, bn_beta_;
  std::shared_ptr<Tensor<T>> bn_rm_, bn_rv_;
  std::vector<ConvPRelu<T>> up_;     // level 2, level 1, level 0
  std::vector<ConvPRelu<T>> merge_;  // level 2, level 1, level 0
  std::vector<MgdbBlock<T>> mid2_, mid1_, dense_;
  std::vector<ConvPRelu<T>> dense_merge_;
  ConvPRelu<T> dense_out_, head1_, head2_;
};

}  // namespace absgn
