// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ABSGN Project Contributors

#pragma once

#include <optional>

#include "absgn/nn.hpp"
#include "absgn/params.hpp"

namespace absgn {

// The learnable building blocks: Conv+PReLU units, CBAM-style spatial and
// channel attention, the global spatial attention (GSA) block used at the
// coarsest scale, and the multi-level guided dense block (MGDB) whose
// dilated branches run largest-dilation-first so wide-context features guide
// the narrower ones.

inline constexpr double kPReluInit = 0.25;

struct ConvSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int dilation = 1;
  bool has_prelu = true;
};

template <typename T>
class ConvPRelu {
 public:
  ConvPRelu() = default;
  ConvPRelu(ParamStore<T>& store, const std::string& prefix, ConvSpec spec, Rng& rng) : spec_(spec) {
    check(spec.in_channels > 0 && spec.out_channels > 0, prefix + ": channel counts must be positive");
    check(spec.kernel % 2 == 1, prefix + ": kernel size must be odd");
    check(spec.dilation >= 1, prefix + ": dilation must be positive");
    Shape wshape{spec.out_channels, spec.in_channels, spec.kernel, spec.kernel};
    double slope = spec.has_prelu ? kPReluInit : 0.0;
    weight_ = store.add_param(prefix + ".weight", kaiming_conv_init<T>(wshape, slope, rng));
    bias_ = store.add_param(prefix + ".bias", Tensor<T>(Shape{spec.out_channels}));
    if (spec.has_prelu)
      slope_ = store.add_param(prefix + ".slope", Tensor<T>(Shape{spec.out_channels}, T(kPReluInit)));
  }

  Var<T> forward(const Var<T>& x) const {
    check(x.value().dim(1) == spec_.in_channels,
          "conv_prelu: expected " + std::to_string(spec_.in_channels) + " channels, got " +
              std::to_string(x.value().dim(1)));
    Var<T> y = conv2d(x, weight_, bias_, spec_.dilation);
    return spec_.has_prelu ? prelu(y, slope_) : y;
  }

  const ConvSpec& spec() const { return spec_; }
  Var<T>& weight() { return weight_; }
  Var<T>& bias() { return bias_; }
  Var<T>& slope() { return slope_; }

 private:
  ConvSpec spec_;
  Var<T> weight_, bias_, slope_;
};

/// CBAM-style spatial attention: per-pixel channel mean and max, a single
/// conv over the 2-channel descriptor, sigmoid gate multiplied onto the
/// input.
template <typename T>
class SpatialAttention {
 public:
  SpatialAttention() = default;
  SpatialAttention(ParamStore<T>& store, const std::string& prefix, Rng& rng, int kernel = 7) {
    check(kernel % 2 == 1, prefix + ": kernel size must be odd");
    weight_ = store.add_param(prefix + ".conv.weight", kaiming_conv_init<T>(Shape{1, 2, kernel, kernel}, 0.0, rng));
    bias_ = store.add_param(prefix + ".conv.bias", Tensor<T>(Shape{1}));
  }

  Var<T> attention_map(const Var<T>& x) const {
    Var<T> desc = concat_channels<T>({channel_mean(x), channel_max(x)});
    return sigmoid(conv2d(desc, weight_, bias_));
  }

  Var<T> forward(const Var<T>& x) const { return scale_by_map(x, attention_map(x)); }

 private:
  Var<T> weight_, bias_;
};

/// CBAM-style channel attention: global average and max pooling through a
/// shared two-layer bottleneck, summed and squashed into per-channel scales.
template <typename T>
class ChannelAttention {
 public:
  ChannelAttention() = default;
  ChannelAttention(ParamStore<T>& store, const std::string& prefix, int channels, int reduction, Rng& rng) {
    check(reduction >= 1, prefix + ": reduction must be positive");
    check(channels % reduction == 0, prefix + ": channels (" + std::to_string(channels) +
                                         ") not divisible by reduction (" + std::to_string(reduction) + ")");
    int mid = channels / reduction;
    fc1_w_ = store.add_param(prefix + ".fc1.weight", kaiming_conv_init<T>(Shape{mid, channels, 1, 1}, 0.0, rng));
    fc1_b_ = store.add_param(prefix + ".fc1.bias", Tensor<T>(Shape{mid}));
    fc2_w_ = store.add_param(prefix + ".fc2.weight", kaiming_conv_init<T>(Shape{channels, mid, 1, 1}, 0.0, rng));
    fc2_b_ = store.add_param(prefix + ".fc2.bias", Tensor<T>(Shape{channels}));
  }

  Var<T> scales(const Var<T>& x) const {
    Var<T> avg = bottleneck(global_avg_pool(x));
    Var<T> mx = bottleneck(global_max_pool(x));
    return sigmoid(add(avg, mx));
  }

  Var<T> forward(const Var<T>& x) const { return scale_by_channel(x, scales(x)); }

 private:
  Var<T> bottleneck(const Var<T>& v) const {
    return conv2d(relu(conv2d(v, fc1_w_, fc1_b_)), fc2_w_, fc2_b_);
  }

  Var<T> fc1_w_, fc1_b_, fc2_w_, fc2_b_;
};

struct GsaConfig {
  int channels = 0;
  int shrunk_channels = 0;  // defaults to channels/2 when 0
  bool use_spatial_attention = true;
};

/// Global spatial attention block. Pools a Conv+PReLU-refined map down to a
/// single global descriptor (average and max pooled, then averaged), spreads
/// it back over the full resolution, shrinks its channel count, optionally
/// sharpens it with spatial attention, and merges it with the local input.
template <typename T>
class GsaBlock {
 public:
  GsaBlock() = default;
  GsaBlock(ParamStore<T>& store, const std::string& prefix, GsaConfig cfg, Rng& rng) : cfg_(cfg) {
    check(cfg_.channels > 0, prefix + ": channels must be positive");
    if (cfg_.shrunk_channels == 0) cfg_.shrunk_channels = cfg_.channels / 2;
    check(cfg_.shrunk_channels >= 1 && cfg_.shrunk_channels <= cfg_.channels,
          prefix + ": shrunk channel count must be in [1, channels]");
    pre_ = ConvPRelu<T>(store, prefix + ".pre", {cfg_.channels, cfg_.channels, 3, 1, true}, rng);
    shrink_ = ConvPRelu<T>(store, prefix + ".shrink", {cfg_.channels, cfg_.shrunk_channels, 1, 1, true}, rng);
    if (cfg_.use_spatial_attention) spa_.emplace(store, prefix + ".spa", rng);
    merge_ = ConvPRelu<T>(store, prefix + ".merge",
                          {cfg_.channels + cfg_.shrunk_channels, cfg_.channels, 3, 1, true}, rng);
  }

  /// Global descriptor of the refined map: (avgpool + maxpool) / 2, [B,C,1,1].
  Var<T> pooled_global(const Var<T>& x) const {
    Var<T> t = pre_.forward(x);
    return mul_scalar(add(global_avg_pool(t), global_max_pool(t)), T(0.5));
  }

  Var<T> forward(const Var<T>& x) const {
    check(x.value().dim(1) == cfg_.channels, "gsa_forward: channel mismatch");
    const int h = x.value().dim(2), w = x.value().dim(3);
    Var<T> global = broadcast_hw(pooled_global(x), h, w);
    Var<T> shrunk = shrink_.forward(global);
    Var<T> attended = spa_ ? spa_->forward(shrunk) : shrunk;
    return merge_.forward(concat_channels<T>({x, attended}));
  }

  const GsaConfig& config() const { return cfg_; }

 private:
  GsaConfig cfg_;
  ConvPRelu<T> pre_, shrink_, merge_;
  std::optional<SpatialAttention<T>> spa_;
};

struct MgdbConfig {
  int channels = 0;
  int growth = 0;  // defaults to channels/2 when 0
  std::vector<int> dilations{4, 2, 1};
  bool use_channel_attention = true;  // false gives the plain DenseRes ablation block
  int ca_reduction = 8;
};

inline void validate_mgdb_dilations(const std::vector<int>& dilations) {
  check(!dilations.empty(), "mgdb: dilation list must not be empty");
  check(dilations.back() == 1, "mgdb: last dilation must be 1");
  for (size_t i = 0; i < dilations.size(); ++i) {
    check(dilations[i] >= 1, "mgdb: dilations must be positive");
    if (i > 0) check(dilations[i] <= dilations[i - 1], "mgdb: dilations must be non-increasing");
  }
}

/// Multi-level guided dense block. Each 3x3 branch sees the input plus every
/// earlier branch output and uses a smaller dilation than its predecessor; a
/// 1x1 linear conv fuses the cascade, channel attention rescales it, and a
/// residual connection adds the input back. With all dilations 1 and channel
/// attention disabled this is the plain DenseRes comparison block.
template <typename T>
class MgdbBlock {
 public:
  MgdbBlock() = default;
  MgdbBlock(ParamStore<T>& store, const std::string& prefix, MgdbConfig cfg, Rng& rng) : cfg_(cfg) {
    check(cfg_.channels > 0, prefix + ": channels must be positive");
    if (cfg_.growth == 0) cfg_.growth = std::max(1, cfg_.channels / 2);
    check(cfg_.growth >= 1, prefix + ": growth must be at least 1");
    validate_mgdb_dilations(cfg_.dilations);
    int in_ch = cfg_.channels;
    for (size_t i = 0; i < cfg_.dilations.size(); ++i) {
      branches_.emplace_back(store, prefix + ".branch" + std::to_string(i),
                             ConvSpec{in_ch, cfg_.growth, 3, cfg_.dilations[i], true}, rng);
      in_ch += cfg_.growth;
    }
    fuse_ = ConvPRelu<T>(store, prefix + ".fuse", {in_ch, cfg_.channels, 1, 1, false}, rng);
    if (cfg_.use_channel_attention)
      ca_.emplace(store, prefix + ".ca", cfg_.channels, cfg_.ca_reduction, rng);
  }

  Var<T> forward(const Var<T>& x) const {
    check(x.value().dim(1) == cfg_.channels, "mgdb_forward: channel mismatch");
    std::vector<Var<T>> feats{x};
    for (const auto& branch : branches_) {
      Var<T> in = feats.size() == 1 ? x : concat_channels<T>(feats);
      feats.push_back(branch.forward(in));
    }
    Var<T> fused = fuse_.forward(concat_channels<T>(feats));
    Var<T> scaled = ca_ ? ca_->forward(fused) : fused;
    return add(x, scaled);
  }

  const MgdbConfig& config() const { return cfg_; }
  ChannelAttention<T>* channel_attention() { return ca_ ? &*ca_ : nullptr; }

 private:
  MgdbConfig cfg_;
  std::vector<ConvPRelu<T>> branches_;
  ConvPRelu<T> fuse_;
  std::optional<ChannelAttention<T>> ca_;
};

}  // namespace absgn
