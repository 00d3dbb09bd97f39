// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ABSGN Project Contributors

// Command-line front end: train, enhance, eval, ablate, bench, synth.
// Exit codes: 0 success, 2 usage error, 1 runtime failure.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "absgn/trainer.hpp"

namespace fs = std::filesystem;
using namespace absgn;

namespace {

struct FileConfig {
  NetworkConfig network;
  TrainConfig train;
};

FileConfig read_config(const std::string& path) {
  FileConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read config: " + path);
  nlohmann::json j = nlohmann::json::parse(f);
  if (j.contains("network")) cfg.network = j.at("network").get<NetworkConfig>();
  if (j.contains("train")) cfg.train = j.at("train").get<TrainConfig>();
  return cfg;
}

std::pair<int, int> parse_size(const std::string& s) {
  auto x = s.find('x');
  if (x == std::string::npos || x == 0 || x + 1 >= s.size())
    throw CLI::ValidationError("--size", "expected WxH, e.g. 400x600");
  int w = 0, h = 0;
  try {
    size_t used = 0;
    w = std::stoi(s.substr(0, x), &used);
    if (used != x) throw std::invalid_argument("");
    std::string rest = s.substr(x + 1);
    h = std::stoi(rest, &used);
    if (used != rest.size()) throw std::invalid_argument("");
  } catch (const std::exception&) {
    throw CLI::ValidationError("--size", "expected WxH with integer pixels");
  }
  if (w < 8 || h < 8) throw CLI::ValidationError("--size", "both sides must be at least 8");
  return {w, h};
}

int cmd_train(const std::string& config_path, const std::string& data_dir, const std::string& out_dir,
              uint64_t seed_override, bool has_seed) {
  FileConfig cfg = read_config(config_path);
  if (has_seed) cfg.train.seed = seed_override;
  fs::create_directories(out_dir);
  cfg.train.checkpoint_path = (fs::path(out_dir) / "checkpoint.absgn").string();
  cfg.train.history_path = (fs::path(out_dir) / "history.jsonl").string();

  PairedDataset train_ds = load_paired_dataset(data_dir, "train");
  if (train_ds.empty()) throw std::runtime_error("no training pairs found under " + data_dir);
  PairedDataset eval_ds = load_paired_dataset(data_dir, "eval");

  Network<float> net(cfg.network, cfg.train.seed);
  std::cout << "training " << variant_name(cfg.network.variant) << " variant: "
            << net.count_params() << " params, " << train_ds.size() << " pairs, "
            << cfg.train.epochs << " epochs\n";
  TrainResult res = train(net, train_ds, eval_ds.empty() ? nullptr : &eval_ds, cfg.train);
  const EpochRecord& last = res.history.back();
  std::cout << "done: total=" << last.total << " l1=" << last.l1 << " ssim=" << last.ssim << '\n'
            << "checkpoint: " << cfg.train.checkpoint_path << '\n'
            << "history:    " << cfg.train.history_path << '\n';
  return 0;
}

int cmd_enhance(const std::string& ckpt, const std::string& input, const std::string& output) {
  Network<float> net = load_checkpoint<float>(ckpt);
  Tensor<float> img = load_image_rgb(input);
  Tensor<float> out = net.enhance(img);
  save_image_rgb(out, output);
  std::cout << "wrote " << output << " (" << out.dim(3) << "x" << out.dim(2) << ")\n";
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data_dir, const std::string& report_path) {
  Network<float> net = load_checkpoint<float>(ckpt);
  PairedDataset ds = load_paired_dataset(data_dir, "eval");
  if (ds.empty()) throw std::runtime_error("no eval pairs found under " + data_dir);
  MetricReport report = evaluate(net, ds);

  fs::path table_path = fs::path(report_path).replace_extension(".txt");
  save_report(report, report_path, table_path.string());
  std::cout << report.to_table() << "report: " << report_path << " and " << table_path.string() << '\n';
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& data_dir,
               const std::string& variants_csv, const std::string& out_dir) {
  FileConfig cfg = read_config(config_path);
  std::vector<Variant> variants;
  {
    std::stringstream ss(variants_csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        variants.push_back(variant_from_name(item));
      } catch (const std::invalid_argument& e) {
        throw CLI::ValidationError("--variants", e.what());
      }
    }
  }
  if (variants.empty()) throw CLI::ValidationError("--variants", "empty variant list");
  fs::create_directories(out_dir);

  PairedDataset train_ds = load_paired_dataset(data_dir, "train");
  if (train_ds.empty()) throw std::runtime_error("no training pairs found under " + data_dir);
  PairedDataset eval_ds = load_paired_dataset(data_dir, "eval");
  const PairedDataset& score_ds = eval_ds.empty() ? train_ds : eval_ds;

  struct Row {
    std::string name;
    double psnr, ssim;
  };
  std::vector<Row> rows;
  for (Variant v : variants) {
    NetworkConfig ncfg = make_variant(cfg.network, v);
    TrainConfig tcfg = cfg.train;  // identical seed and budget per variant
    std::string tag = variant_name(v);
    tcfg.checkpoint_path = (fs::path(out_dir) / ("checkpoint_" + tag + ".absgn")).string();
    tcfg.history_path = (fs::path(out_dir) / ("history_" + tag + ".jsonl")).string();

    Network<float> net(ncfg, tcfg.seed);
    std::cout << "[" << tag << "] training (" << net.count_params() << " params)...\n";
    train(net, train_ds, nullptr, tcfg);
    MetricReport rep = evaluate(net, score_ds);
    rows.push_back({tag, rep.mean_psnr(), rep.mean_ssim()});
    std::cout << "[" << tag << "] psnr=" << rep.mean_psnr() << " ssim=" << rep.mean_ssim() << '\n';
  }

  std::ostringstream table;
  table << std::left << std::setw(10) << "variant" << std::right << std::setw(12) << "psnr_db"
        << std::setw(12) << "ssim" << '\n'
        << std::string(34, '-') << '\n'
        << std::fixed;
  nlohmann::json jrows = nlohmann::json::array();
  std::ofstream csv(fs::path(out_dir) / "ablation.csv");
  csv << "variant,psnr_db,ssim\n";
  for (const Row& r : rows) {
    table << std::left << std::setw(10) << r.name << std::right << std::setprecision(2)
          << std::setw(12) << r.psnr << std::setprecision(4) << std::setw(12) << r.ssim << '\n';
    csv << r.name << ',' << r.psnr << ',' << r.ssim << '\n';
    jrows.push_back({{"variant", r.name}, {"psnr_db", r.psnr}, {"ssim", r.ssim}});
  }
  std::ofstream jf(fs::path(out_dir) / "ablation.json");
  jf << jrows.dump(2) << '\n';
  std::ofstream tf(fs::path(out_dir) / "ablation.txt");
  tf << table.str();
  std::cout << table.str() << "wrote " << (fs::path(out_dir) / "ablation.{csv,json,txt}").string()
            << '\n';
  return 0;
}

int cmd_bench(const std::string& ckpt, const std::string& size_str, int runs, int warmup,
              const std::string& report_path, const std::string& csv_path) {
  auto [w, h] = parse_size(size_str);
  Network<float> net = load_checkpoint<float>(ckpt);

  Rng rng(0);
  Tensor<float> img(Shape{1, 3, h, w});
  for (int64_t i = 0; i < img.numel(); ++i) img[i] = float(rng.uniform());

  for (int i = 0; i < warmup; ++i) net.enhance(img);
  std::vector<double> ms;
  for (int i = 0; i < runs; ++i) {
    auto t0 = std::chrono::steady_clock::now();
    net.enhance(img);
    auto t1 = std::chrono::steady_clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::vector<double> sorted = ms;
  std::sort(sorted.begin(), sorted.end());
  double mean = 0;
  for (double v : ms) mean += v;
  mean /= double(runs);
  double median = runs % 2 ? sorted[size_t(runs / 2)]
                           : 0.5 * (sorted[size_t(runs / 2 - 1)] + sorted[size_t(runs / 2)]);

  nlohmann::json j{{"size", size_str},
                   {"runs", runs},
                   {"warmup", warmup},
                   {"params", net.count_params()},
                   {"mean_ms", mean},
                   {"median_ms", median},
                   {"min_ms", sorted.front()},
                   {"max_ms", sorted.back()}};
  std::cout << j.dump(2) << '\n';
  if (!report_path.empty()) {
    std::ofstream f(report_path);
    f << j.dump(2) << '\n';
  }
  // scatter-ready record: runtime on one axis, quality on the other (SSIM is
  // a placeholder here; fill it from an eval report to reproduce the
  // runtime-vs-quality plot)
  std::ofstream csv(csv_path);
  csv << "label,time_ms,ssim,params\n";
  csv << "absgn," << median << ",," << net.count_params() << '\n';
  std::cout << "scatter record: " << csv_path << '\n';
  return 0;
}

int cmd_synth(const std::string& out_dir, int count, const std::string& size_str, uint64_t seed,
              double gamma, double brightness, double sigma) {
  auto [w, h] = parse_size(size_str);
  SynthParams p;
  p.gamma = gamma;
  p.brightness = brightness;
  p.noise_sigma = sigma;
  write_synthetic_dataset(out_dir, count, h, w, seed, p);
  std::cout << "wrote " << count << " pairs (" << w << "x" << h << ") under " << out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ABSGN low-light image enhancement toolkit"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir, ckpt, input, output, report_path;
  std::string variants = "full,spa,gia,dcr,no-dc";
  std::string size_str = "400x600";
  std::string csv_path = "bench_scatter.csv";
  uint64_t seed = 0;
  int runs = 100, warmup = 10, count = 4;
  double gamma = 3.0, brightness = 0.3, sigma = 0.02;

  auto* train_cmd = app.add_subcommand("train", "train a model on a paired dataset");
  train_cmd->add_option("--config", config_path, "JSON config with network/train sections");
  train_cmd->add_option("--data-dir", data_dir, "dataset root (train/eval splits with low/ and high/)")
      ->required();
  train_cmd->add_option("--out", out_dir, "output directory for checkpoint and history")->required();
  auto* seed_opt = train_cmd->add_option("--seed", seed, "override the config seed");

  auto* enhance_cmd = app.add_subcommand("enhance", "restore one low-light image");
  enhance_cmd->add_option("--ckpt", ckpt, "checkpoint file")->required();
  enhance_cmd->add_option("--input", input, "input image (PNG/JPEG)")->required();
  enhance_cmd->add_option("--output", output, "output image path")->required();

  auto* eval_cmd = app.add_subcommand("eval", "compute PSNR/SSIM/UQI over an eval split");
  eval_cmd->add_option("--ckpt", ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--data-dir", data_dir, "dataset root")->required();
  eval_cmd->add_option("--report", report_path, "JSON report path (table lands beside it)")->required();

  auto* ablate_cmd = app.add_subcommand("ablate", "train and score several variants under one budget");
  ablate_cmd->add_option("--config", config_path, "JSON config with network/train sections");
  ablate_cmd->add_option("--data-dir", data_dir, "dataset root")->required();
  ablate_cmd->add_option("--variants", variants, "comma list from full,spa,gia,dcr,no-dc");
  ablate_cmd->add_option("--out-dir", out_dir, "output directory")->required();

  auto* bench_cmd = app.add_subcommand("bench", "time repeated forward passes");
  bench_cmd->add_option("--ckpt", ckpt, "checkpoint file")->required();
  bench_cmd->add_option("--size", size_str, "input size as WxH (default 400x600)");
  bench_cmd->add_option("--runs", runs, "timed runs (default 100)");
  bench_cmd->add_option("--warmup", warmup, "warmup runs (default 10)");
  bench_cmd->add_option("--report", report_path, "optional JSON report path");
  bench_cmd->add_option("--csv", csv_path, "scatter-ready CSV path");

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic paired dataset");
  synth_cmd->add_option("--out", out_dir, "dataset root to create")->required();
  synth_cmd->add_option("--count", count, "number of pairs (default 4)");
  synth_cmd->add_option("--size", size_str, "pair size as WxH");
  synth_cmd->add_option("--seed", seed, "generator seed");
  synth_cmd->add_option("--gamma", gamma, "darkening exponent");
  synth_cmd->add_option("--brightness", brightness, "brightness scale");
  synth_cmd->add_option("--noise", sigma, "additive noise sigma");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help exits 0, every usage problem exits 2
  }

  try {
    if (train_cmd->parsed())
      return cmd_train(config_path, data_dir, out_dir, seed, seed_opt->count() > 0);
    if (enhance_cmd->parsed()) return cmd_enhance(ckpt, input, output);
    if (eval_cmd->parsed()) return cmd_eval(ckpt, data_dir, report_path);
    if (ablate_cmd->parsed()) return cmd_ablate(config_path, data_dir, variants, out_dir);
    if (bench_cmd->parsed()) return cmd_bench(ckpt, size_str, runs, warmup, report_path, csv_path);
    if (synth_cmd->parsed()) return cmd_synth(out_dir, count, size_str, seed, gamma, brightness, sigma);
  } catch (const CLI::ParseError& e) {  // late flag validation (e.g. malformed --size)
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
