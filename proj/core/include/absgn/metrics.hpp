// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ABSGN Project Contributors

#pragma once

#include <nlohmann/json.hpp>

#include "absgn/loss.hpp"

namespace absgn {

// Full-reference quality metrics. All accumulation happens in double no
// matter the input precision. PSNR and UQI are closed-form; SSIM reuses the
// loss kernel so that ssim_metric == 1 - ssim_loss exactly.

/// 10*log10(peak^2 / MSE); identical images (MSE == 0) report the 100 dB cap.
template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak = 1.0) {
  check(a.same_shape(b), "psnr: shape mismatch");
  check(a.numel() > 0, "psnr: empty input");
  double acc = 0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    double d = double(a[i]) - double(b[i]);
    acc += d * d;
  }
  double mse = acc / double(a.numel());
  if (mse == 0.0) return 100.0;
  return 10.0 * std::log10(peak * peak / mse);
}

/// Mean SSIM similarity in [-1,1], computed in double as 1 - ssim_loss so
/// metric and loss agree exactly.
template <typename T>
double ssim_metric(const Tensor<T>& a, const Tensor<T>& b, const LossConfig& cfg = {}) {
  NoGradGuard ng;
  Var<double> av(a.template cast<double>());
  Var<double> bv(b.template cast<double>());
  return 1.0 - scalar_value(ssim_loss(av, bv, cfg));
}

/// Universal quality index over sliding square windows (default 8x8), mean
/// over windows and channels:
///   4*sigma_xy*mx*my / ((sigma_x^2 + sigma_y^2) * (mx^2 + my^2) + 1e-12)
/// Window statistics use biased (1/N) moments via summed-area tables.
template <typename T>
double uqi(const Tensor<T>& a, const Tensor<T>& b, int window = 8) {
  check(a.same_shape(b), "uqi: shape mismatch");
  check(a.rank() == 4, "uqi: inputs must be 4-d");
  const int B = a.dim(0), C = a.dim(1), H = a.dim(2), W = a.dim(3);
  check(H >= window && W >= window, "uqi: image smaller than the window");
  constexpr double kEps = 1e-12;
  const double n = double(window) * window;

  const int SW = W + 1;
  std::vector<double> sx(size_t(H + 1) * SW), sy(sx.size()), sxx(sx.size()), syy(sx.size()), sxy(sx.size());
  double total = 0;
  int64_t count = 0;
  for (int bi = 0; bi < B; ++bi)
    for (int c = 0; c < C; ++c) {
      const T* pa = a.data() + (int64_t(bi) * C + c) * H * W;
      const T* pb = b.data() + (int64_t(bi) * C + c) * H * W;
      for (int h = 0; h < H; ++h)
        for (int w = 0; w < W; ++w) {
          double x = double(pa[int64_t(h) * W + w]);
          double y = double(pb[int64_t(h) * W + w]);
          size_t i = size_t(h + 1) * SW + (w + 1);
          size_t up = i - SW, left = i - 1, diag = up - 1;
          sx[i] = x + sx[up] + sx[left] - sx[diag];
          sy[i] = y + sy[up] + sy[left] - sy[diag];
          sxx[i] = x * x + sxx[up] + sxx[left] - sxx[diag];
          syy[i] = y * y + syy[up] + syy[left] - syy[diag];
          sxy[i] = x * y + sxy[up] + sxy[left] - sxy[diag];
        }
      auto window_sum = [&](const std::vector<double>& s, int h, int w) {
        size_t i0 = size_t(h) * SW + w;
        size_t i1 = size_t(h + window) * SW + (w + window);
        return s[i1] - s[size_t(h) * SW + (w + window)] - s[size_t(h + window) * SW + w] + s[i0];
      };
      for (int h = 0; h + window <= H; ++h)
        for (int w = 0; w + window <= W; ++w) {
          double mx = window_sum(sx, h, w) / n;
          double my = window_sum(sy, h, w) / n;
          double vx = window_sum(sxx, h, w) / n - mx * mx;
          double vy = window_sum(syy, h, w) / n - my * my;
          double cov = window_sum(sxy, h, w) / n - mx * my;
          total += 4.0 * cov * mx * my / ((vx + vy) * (mx * mx + my * my) + kEps);
          ++count;
        }
    }
  return total / double(count);
}

struct MetricRow {
  std::string name;
  double psnr_db = 0;
  double ssim = 0;
  double uqi = 0;
  double infer_ms = 0;
};

/// Per-image metric rows plus aggregates; serializable as JSON and as an
/// aligned plain-text table.
struct MetricReport {
  std::vector<MetricRow> rows;

  double mean_psnr() const;
  double mean_ssim() const;
  double mean_uqi() const;
  double mean_ms() const;
  double median_ms() const;
  double min_ms() const;
  double max_ms() const;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

void save_report(const MetricReport& report, const std::string& json_path,
                 const std::string& table_path);

}  // namespace absgn
