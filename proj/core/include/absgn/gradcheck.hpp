// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ABSGN Project Contributors

#pragma once

#include <functional>

#include "absgn/autograd.hpp"
#include "absgn/rng.hpp"

namespace absgn {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_tensor;
  int64_t worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compare reverse-mode gradients of a scalar function against central finite
/// differences. For each checked tensor up to max_samples entries are probed
/// (all of them when the tensor is small); the relative error is
/// |analytic - numeric| / (|numeric| + 1e-12). Meant for float64 runs on tiny
/// shapes.
///
/// Two robustness refinements for piecewise-linear networks:
///   - the central difference is re-evaluated at eps/8, and when the two
///     estimates disagree the probe straddles a PReLU/max kink, so the step
///     shrinks once more to eps/64 and that estimate is used;
///   - entries whose analytic and numeric derivatives both sit below the
///     difference-quotient noise floor (|f| * 1e-12 / step) are counted as
///     exact agreement: a structurally zero gradient (for instance a bias
///     whose shift a downstream batch-norm mean removes) yields a central
///     difference of pure rounding noise, which no relative test can
///     classify.
template <typename T>
GradCheckResult finite_difference_check(const std::function<Var<T>()>& scalar_fn,
                                        const std::vector<std::pair<std::string, Var<T>>>& wrt,
                                        T eps = T(1e-4), int max_samples = 8, uint64_t seed = 0) {
  check(!wrt.empty(), "finite_difference_check: nothing to check");
  for (const auto& [name, v] : wrt)
    check(v.requires_grad(), "finite_difference_check: " + name + " does not require grad");

  std::vector<std::pair<std::string, Var<T>>> vars(wrt);
  for (auto& [name, v] : vars) v.zero_grad();
  Var<T> out = scalar_fn();
  check(out.value().numel() == 1, "finite_difference_check: function must return a scalar");
  backward(out);

  std::vector<Tensor<T>> analytic;
  for (auto& [name, v] : vars) analytic.push_back(v.has_grad() ? v.grad() : Tensor<T>(v.value().shape()));

  const double f0_abs = std::abs(scalar_value(out));

  Rng rng(seed);
  GradCheckResult res;
  for (size_t t = 0; t < vars.size(); ++t) {
    Tensor<T>& val = vars[t].second.value();
    const int64_t n = val.numel();
    std::vector<int64_t> idx;
    if (n <= max_samples) {
      for (int64_t i = 0; i < n; ++i) idx.push_back(i);
    } else {
      std::vector<int64_t> all(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) all[static_cast<size_t>(i)] = i;
      rng.shuffle(all.begin(), all.end());
      idx.assign(all.begin(), all.begin() + max_samples);
    }
    for (int64_t i : idx) {
      const T saved = val[i];
      NoGradGuard ng;
      auto central = [&](double step) {
        val[i] = static_cast<T>(saved + step);
        double fp = scalar_value(scalar_fn());
        val[i] = static_cast<T>(saved - step);
        double fm = scalar_value(scalar_fn());
        val[i] = saved;
        return (fp - fm) / (2.0 * step);
      };
      double step = double(eps);
      double coarse = central(step);
      double numeric = central(step / 8);
      if (std::abs(coarse - numeric) > 1e-4 * (std::abs(numeric) + 1e-12)) {
        step /= 64;
        numeric = central(step);
      } else {
        step /= 8;
      }
      double a = double(analytic[t][i]);
      const double noise_floor = f0_abs * 1e-12 / step + 1e-12;
      if (std::abs(a) < noise_floor && std::abs(numeric) < noise_floor) continue;
      double rel = std::abs(a - numeric) / (std::abs(numeric) + 1e-12);
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_tensor = vars[t].first;
        res.worst_index = i;
        res.worst_analytic = a;
        res.worst_numeric = numeric;
      }
    }
  }
  return res;
}

}  // namespace absgn
