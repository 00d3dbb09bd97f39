// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ABSGN Project Contributors

#include "absgn/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>

namespace absgn {

namespace {

double mean_of(const std::vector<MetricRow>& rows, double MetricRow::* field) {
  if (rows.empty()) return 0.0;
  double acc = 0;
  for (const auto& r : rows) acc += r.*field;
  return acc / double(rows.size());
}

}  // namespace

double MetricReport::mean_psnr() const { return mean_of(rows, &MetricRow::psnr_db); }
double MetricReport::mean_ssim() const { return mean_of(rows, &MetricRow::ssim); }
double MetricReport::mean_uqi() const { return mean_of(rows, &MetricRow::uqi); }
double MetricReport::mean_ms() const { return mean_of(rows, &MetricRow::infer_ms); }

double MetricReport::median_ms() const {
  if (rows.empty()) return 0.0;
  std::vector<double> ms;
  for (const auto& r : rows) ms.push_back(r.infer_ms);
  std::sort(ms.begin(), ms.end());
  size_t n = ms.size();
  return n % 2 ? ms[n / 2] : 0.5 * (ms[n / 2 - 1] + ms[n / 2]);
}

double MetricReport::min_ms() const {
  double m = rows.empty() ? 0.0 : rows[0].infer_ms;
  for (const auto& r : rows) m = std::min(m, r.infer_ms);
  return m;
}

double MetricReport::max_ms() const {
  double m = rows.empty() ? 0.0 : rows[0].infer_ms;
  for (const auto& r : rows) m = std::max(m, r.infer_ms);
  return m;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json images = nlohmann::json::array();
  for (const auto& r : rows)
    images.push_back({{"name", r.name},
                      {"psnr_db", r.psnr_db},
                      {"ssim", r.ssim},
                      {"uqi", r.uqi},
                      {"infer_ms", r.infer_ms}});
  return nlohmann::json{{"images", images},
                        {"aggregate",
                         {{"count", rows.size()},
                          {"mean_psnr_db", mean_psnr()},
                          {"mean_ssim", mean_ssim()},
                          {"mean_uqi", mean_uqi()},
                          {"mean_ms", mean_ms()},
                          {"median_ms", median_ms()},
                          {"min_ms", min_ms()},
                          {"max_ms", max_ms()}}}};
}

std::string MetricReport::to_table() const {
  std::ostringstream os;
  os << std::left << std::setw(28) << "image" << std::right << std::setw(10) << "psnr_db"
     << std::setw(10) << "ssim" << std::setw(10) << "uqi" << std::setw(12) << "infer_ms" << '\n';
  os << std::string(70, '-') << '\n';
  os << std::fixed;
  for (const auto& r : rows)
    os << std::left << std::setw(28) << r.name << std::right << std::setprecision(2) << std::setw(10)
       << r.psnr_db << std::setprecision(4) << std::setw(10) << r.ssim << std::setw(10) << r.uqi
       << std::setprecision(2) << std::setw(12) << r.infer_ms << '\n';
  os << std::string(70, '-') << '\n';
  os << std::left << std::setw(28) << "mean" << std::right << std::setprecision(2) << std::setw(10)
     << mean_psnr() << std::setprecision(4) << std::setw(10) << mean_ssim() << std::setw(10)
     << mean_uqi() << std::setprecision(2) << std::setw(12) << mean_ms() << '\n';
  return os.str();
}

void save_report(const MetricReport& report, const std::string& json_path,
                 const std::string& table_path) {
  if (!json_path.empty()) {
    std::ofstream f(json_path);
    if (!f) throw std::runtime_error("cannot write report: " + json_path);
    f << report.to_json().dump(2) << '\n';
  }
  if (!table_path.empty()) {
    std::ofstream f(table_path);
    if (!f) throw std::runtime_error("cannot write report table: " + table_path);
    f << report.to_table();
  }
}

}  // namespace absgn
