// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ABSGN Project Contributors

#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "absgn/autograd.hpp"
#include "absgn/rng.hpp"

namespace absgn {

/// Ordered registry of learnable parameters and non-learnable buffers.
/// Registration order is the canonical order for initialization draws,
/// optimizer state, and checkpoint layout.
template <typename T>
class ParamStore {
 public:
  Var<T>& add_param(const std::string& name, Tensor<T> init) {
    check(find_param(name) == nullptr, "ParamStore: duplicate parameter " + name);
    params_.emplace_back(name, Var<T>(std::move(init), /*requires_grad=*/true));
    return params_.back().second;
  }

  std::shared_ptr<Tensor<T>> add_buffer(const std::string& name, Tensor<T> init) {
    check(find_buffer(name) == nullptr, "ParamStore: duplicate buffer " + name);
    buffers_.emplace_back(name, std::make_shared<Tensor<T>>(std::move(init)));
    return buffers_.back().second;
  }

  std::vector<std::pair<std::string, Var<T>>>& params() { return params_; }
  const std::vector<std::pair<std::string, Var<T>>>& params() const { return params_; }
  std::vector<std::pair<std::string, std::shared_ptr<Tensor<T>>>>& buffers() { return buffers_; }
  const std::vector<std::pair<std::string, std::shared_ptr<Tensor<T>>>>& buffers() const { return buffers_; }

  Var<T>* find_param(const std::string& name) {
    for (auto& [n, v] : params_)
      if (n == name) return &v;
    return nullptr;
  }

  Tensor<T>* find_buffer(const std::string& name) {
    for (auto& [n, t] : buffers_)
      if (n == name) return t.get();
    return nullptr;
  }

  int64_t param_count() const {
    int64_t n = 0;
    for (const auto& [name, v] : params_) n += v.value().numel();
    return n;
  }

  void zero_grads() {
    for (auto& [name, v] : params_) v.zero_grad();
  }

 private:
  std::vector<std::pair<std::string, Var<T>>> params_;
  std::vector<std::pair<std::string, std::shared_ptr<Tensor<T>>>> buffers_;
};

/// Kaiming-normal fan-in initialization for a conv weight [OC,IC,K,K];
/// neg_slope is the slope of the rectifier that follows the conv.
template <typename T>
Tensor<T> kaiming_conv_init(const Shape& wshape, double neg_slope, Rng& rng) {
  check(wshape.size() == 4, "kaiming_conv_init: weight must be 4-d");
  double fan_in = double(wshape[1]) * wshape[2] * wshape[3];
  double gain = std::sqrt(2.0 / (1.0 + neg_slope * neg_slope));
  double stddev = gain / std::sqrt(fan_in);
  Tensor<T> w(wshape);
  for (int64_t i = 0; i < w.numel(); ++i) w[i] = static_cast<T>(stddev * rng.normal());
  return w;
}

}  // namespace absgn
