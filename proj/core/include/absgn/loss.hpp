// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ABSGN Project Contributors

#pragma once

#include "absgn/nn.hpp"

namespace absgn {

// Training objective: gamma * L_SSIM + (1 - gamma) * L_1 with gamma = 0.16.
// The SSIM kernel below (11x11 Gaussian window, sigma 1.5, k1 = 0.01,
// k2 = 0.03, dynamic range 1, "valid" windows only) is shared verbatim with
// the SSIM metric, so metric = 1 - loss holds exactly.

struct LossConfig {
  double gamma = 0.16;
  int ssim_window = 11;
  double ssim_sigma = 1.5;
  double ssim_k1 = 0.01;
  double ssim_k2 = 0.03;
  double dynamic_range = 1.0;

  void validate() const {
    check(gamma >= 0.0 && gamma <= 1.0, "LossConfig: gamma must be in [0,1]");
    check(ssim_window >= 3 && ssim_window % 2 == 1, "LossConfig: window must be odd and >= 3");
    check(ssim_sigma > 0.0, "LossConfig: sigma must be positive");
  }
};

/// Normalized 2-d Gaussian window (sums to 1).
template <typename T>
Tensor<T> gaussian_window(int size, double sigma) {
  check(size >= 1 && sigma > 0.0, "gaussian_window: bad parameters");
  std::vector<double> g(static_cast<size_t>(size));
  const double c = (size - 1) / 2.0;
  double sum = 0;
  for (int i = 0; i < size; ++i) {
    g[static_cast<size_t>(i)] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
    sum += g[static_cast<size_t>(i)];
  }
  Tensor<T> w(Shape{size, size});
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j)
      w[int64_t(i) * size + j] = static_cast<T>(g[static_cast<size_t>(i)] * g[static_cast<size_t>(j)] / (sum * sum));
  return w;
}

/// Mean SSIM over all valid windows, channels and batch entries, as a
/// differentiable scalar. Requires spatial size >= window.
template <typename T>
Var<T> ssim_mean(const Var<T>& a, const Var<T>& b, const LossConfig& cfg = {}) {
  cfg.validate();
  check(a.value().same_shape(b.value()), "ssim: shape mismatch " + shape_str(a.value().shape()) +
                                             " vs " + shape_str(b.value().shape()));
  check(a.value().rank() == 4, "ssim: inputs must be 4-d");
  check(a.value().dim(2) >= cfg.ssim_window && a.value().dim(3) >= cfg.ssim_window,
        "ssim: spatial size must be at least the window size");

  const Tensor<T> w = gaussian_window<T>(cfg.ssim_window, cfg.ssim_sigma);
  const T c1 = static_cast<T>(cfg.ssim_k1 * cfg.dynamic_range * cfg.ssim_k1 * cfg.dynamic_range);
  const T c2 = static_cast<T>(cfg.ssim_k2 * cfg.dynamic_range * cfg.ssim_k2 * cfg.dynamic_range);

  Var<T> mu1 = depthwise_blur_valid(a, w);
  Var<T> mu2 = depthwise_blur_valid(b, w);
  Var<T> mu1_sq = mul(mu1, mu1);
  Var<T> mu2_sq = mul(mu2, mu2);
  Var<T> mu12 = mul(mu1, mu2);
  Var<T> sigma1_sq = sub(depthwise_blur_valid(mul(a, a), w), mu1_sq);
  Var<T> sigma2_sq = sub(depthwise_blur_valid(mul(b, b), w), mu2_sq);
  Var<T> sigma12 = sub(depthwise_blur_valid(mul(a, b), w), mu12);

  Var<T> num = mul(add_scalar(mul_scalar(mu12, T(2)), c1), add_scalar(mul_scalar(sigma12, T(2)), c2));
  Var<T> den = mul(add_scalar(add(mu1_sq, mu2_sq), c1), add_scalar(add(sigma1_sq, sigma2_sq), c2));
  return mean_all(div(num, den));
}

/// Mean absolute difference over all elements.
template <typename T>
Var<T> l1_loss(const Var<T>& pred, const Var<T>& target) {
  check(pred.value().same_shape(target.value()), "l1_loss: shape mismatch");
  return mean_all(abs_val(sub(pred, target)));
}

/// 1 - mean SSIM, in [0,2].
template <typename T>
Var<T> ssim_loss(const Var<T>& pred, const Var<T>& target, const LossConfig& cfg = {}) {
  return add_scalar(mul_scalar(ssim_mean(pred, target, cfg), T(-1)), T(1));
}

inline double combine_loss_terms(double gamma, double ssim_term, double l1_term) {
  return gamma * ssim_term + (1.0 - gamma) * l1_term;
}

template <typename T>
Var<T> total_loss(const Var<T>& pred, const Var<T>& target, const LossConfig& cfg = {}) {
  cfg.validate();
  Var<T> s = ssim_loss(pred, target, cfg);
  Var<T> l = l1_loss(pred, target);
  return add(mul_scalar(s, static_cast<T>(cfg.gamma)), mul_scalar(l, static_cast<T>(1.0 - cfg.gamma)));
}

}  // namespace absgn
