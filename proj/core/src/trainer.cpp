// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ABSGN Project Contributors

#include "absgn/trainer.hpp"

#include <chrono>
#include <fstream>

namespace absgn {

void TrainConfig::validate() const {
  check(epochs >= 1, "TrainConfig: epochs must be >= 1");
  check(!lr_boundaries.empty() && lr_boundaries.size() == lr_rates.size(),
        "TrainConfig: lr_boundaries and lr_rates must be non-empty and the same length");
  for (size_t i = 0; i < lr_boundaries.size(); ++i) {
    check(lr_boundaries[i] >= 1, "TrainConfig: phase boundaries must be positive");
    check(lr_rates[i] > 0, "TrainConfig: rates must be positive");
    if (i > 0) {
      check(lr_boundaries[i] > lr_boundaries[i - 1], "TrainConfig: phase boundaries must increase");
      check(lr_rates[i] < lr_rates[i - 1], "TrainConfig: rates must decrease");
    }
  }
  check(epochs <= lr_boundaries.back(), "TrainConfig: schedule must cover all epochs");
  check(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
  check(crop >= 0, "TrainConfig: crop must be >= 0");
  check(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1,
        "TrainConfig: betas must lie in [0,1)");
  check(adam_eps > 0, "TrainConfig: adam_eps must be positive");
  loss.validate();
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"epochs", c.epochs},
                     {"lr_boundaries", c.lr_boundaries},
                     {"lr_rates", c.lr_rates},
                     {"adam_beta1", c.adam_beta1},
                     {"adam_beta2", c.adam_beta2},
                     {"adam_eps", c.adam_eps},
                     {"batch_size", c.batch_size},
                     {"crop", c.crop},
                     {"augment", c.augment},
                     {"seed", c.seed},
                     {"checkpoint_every", c.checkpoint_every},
                     {"eval_every", c.eval_every},
                     {"gamma", c.loss.gamma}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  if (j.contains("epochs")) j.at("epochs").get_to(c.epochs);
  if (j.contains("lr_boundaries")) j.at("lr_boundaries").get_to(c.lr_boundaries);
  if (j.contains("lr_rates")) j.at("lr_rates").get_to(c.lr_rates);
  if (j.contains("adam_beta1")) j.at("adam_beta1").get_to(c.adam_beta1);
  if (j.contains("adam_beta2")) j.at("adam_beta2").get_to(c.adam_beta2);
  if (j.contains("adam_eps")) j.at("adam_eps").get_to(c.adam_eps);
  if (j.contains("batch_size")) j.at("batch_size").get_to(c.batch_size);
  if (j.contains("crop")) j.at("crop").get_to(c.crop);
  if (j.contains("augment")) j.at("augment").get_to(c.augment);
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
  if (j.contains("checkpoint_every")) j.at("checkpoint_every").get_to(c.checkpoint_every);
  if (j.contains("eval_every")) j.at("eval_every").get_to(c.eval_every);
  if (j.contains("gamma")) j.at("gamma").get_to(c.loss.gamma);
}

double lr_at(int epoch, const TrainConfig& cfg) {
  cfg.validate();
  check(epoch >= 0 && epoch < cfg.lr_boundaries.back(),
        "lr_at: epoch " + std::to_string(epoch) + " outside schedule [0, " +
            std::to_string(cfg.lr_boundaries.back()) + ")");
  for (size_t i = 0; i < cfg.lr_boundaries.size(); ++i)
    if (epoch < cfg.lr_boundaries[i]) return cfg.lr_rates[i];
  return cfg.lr_rates.back();  // unreachable
}

void adam_step(ParamStore<float>& params, AdamState& state, double lr, double beta1, double beta2,
               double eps) {
  auto& ps = params.params();
  if (state.m.empty()) {
    for (auto& [name, p] : ps) {
      state.m.emplace_back(p.value().shape());
      state.v.emplace_back(p.value().shape());
    }
  }
  check(state.m.size() == ps.size(), "adam_step: state does not match parameter store");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(beta2, double(state.step));
  for (size_t i = 0; i < ps.size(); ++i) {
    auto& [name, p] = ps[i];
    Tensor<float>& val = p.value();
    check(state.m[i].same_shape(val), "adam_step: shape mismatch for " + name);
    const bool has_grad = p.has_grad();
    const Tensor<float>* g = has_grad ? &p.grad() : nullptr;
    if (has_grad && !g->all_finite())
      throw std::runtime_error("adam_step: non-finite gradient in " + name);
    for (int64_t k = 0; k < val.numel(); ++k) {
      const double gk = has_grad ? double((*g)[k]) : 0.0;
      double m = beta1 * double(state.m[i][k]) + (1.0 - beta1) * gk;
      double v = beta2 * double(state.v[i][k]) + (1.0 - beta2) * gk * gk;
      state.m[i][k] = static_cast<float>(m);
      state.v[i][k] = static_cast<float>(v);
      val[k] -= static_cast<float>(lr * (m / bc1) / (std::sqrt(v / bc2) + eps));
    }
  }
}

nlohmann::json epoch_record_json(const EpochRecord& r) {
  nlohmann::json j{{"epoch", r.epoch}, {"lr", r.lr},       {"total", r.total},
                   {"l1", r.l1},       {"ssim", r.ssim},   {"steps", r.steps}};
  if (r.eval_psnr) j["eval_psnr"] = *r.eval_psnr;
  if (r.eval_ssim) j["eval_ssim"] = *r.eval_ssim;
  return j;
}

namespace {

Tensor<float> stack_batch(const std::vector<Tensor<float>>& items) {
  const Shape& s = items[0].shape();
  Tensor<float> out(Shape{int(items.size()), s[1], s[2], s[3]});
  const int64_t stride = items[0].numel();
  for (size_t i = 0; i < items.size(); ++i) {
    check(items[i].shape() == s, "stack_batch: mixed sizes in one batch (enable cropping)");
    std::copy(items[i].data(), items[i].data() + stride, out.data() + int64_t(i) * stride);
  }
  return out;
}

}  // namespace

TrainResult train(Network<float>& net, const PairedDataset& train_ds, const PairedDataset* eval_ds,
                  const TrainConfig& cfg) {
  cfg.validate();
  check(!train_ds.empty(), "train: training dataset is empty");

  const size_t n = train_ds.size();
  // Small datasets are decoded once and kept resident.
  const bool cache = n <= 64;
  std::vector<std::optional<std::pair<Tensor<float>, Tensor<float>>>> cached(cache ? n : 0);
  auto fetch = [&](size_t idx) -> std::pair<Tensor<float>, Tensor<float>> {
    if (cache) {
      if (!cached[idx]) cached[idx] = load_pair(train_ds.records[idx]);
      return *cached[idx];
    }
    return load_pair(train_ds.records[idx]);
  };

  std::ofstream hist;
  if (!cfg.history_path.empty()) {
    hist.open(cfg.history_path, std::ios::trunc);
    if (!hist) throw std::runtime_error("train: cannot write history to " + cfg.history_path);
  }

  AdamState state;
  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(epoch, cfg);
    Rng erng(Rng::derive(cfg.seed, uint64_t(epoch)));
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    erng.shuffle(order.begin(), order.end());

    // Full batches only, except that a dataset smaller than the batch size
    // still trains as one batch per epoch.
    const size_t bsz = std::min<size_t>(size_t(cfg.batch_size), n);
    const size_t steps = n / bsz;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    for (size_t s = 0; s < steps; ++s) {
      std::vector<Tensor<float>> lows, refs;
      for (size_t k = 0; k < bsz; ++k) {
        auto [low, ref] = fetch(order[s * bsz + k]);
        if (cfg.crop > 0) std::tie(low, ref) = random_crop_pair(low, ref, cfg.crop, erng);
        if (cfg.augment) std::tie(low, ref) = augment_pair(low, ref, erng);
        lows.push_back(std::move(low));
        refs.push_back(std::move(ref));
      }
      Var<float> input(stack_batch(lows));
      Var<float> target(stack_batch(refs));

      Var<float> out = net.forward(input, /*training=*/true);
      Var<float> l1v = l1_loss(out, target);
      Var<float> ssimv = ssim_loss(out, target, cfg.loss);
      Var<float> tot = add(mul_scalar(ssimv, float(cfg.loss.gamma)),
                           mul_scalar(l1v, float(1.0 - cfg.loss.gamma)));

      const double tval = scalar_value(tot);
      if (!std::isfinite(tval)) {
        if (!cfg.checkpoint_path.empty()) save_checkpoint(net, cfg.checkpoint_path + ".diverged");
        throw std::runtime_error("train: loss became non-finite at epoch " + std::to_string(epoch) +
                                 " step " + std::to_string(s) + " (l1=" + std::to_string(scalar_value(l1v)) +
                                 ", ssim=" + std::to_string(scalar_value(ssimv)) + ")");
      }
      net.params().zero_grads();
      backward(tot);
      adam_step(net.params(), state, lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);

      rec.total += tval;
      rec.l1 += scalar_value(l1v);
      rec.ssim += scalar_value(ssimv);
      rec.steps += 1;
    }
    if (rec.steps > 0) {
      rec.total /= rec.steps;
      rec.l1 /= rec.steps;
      rec.ssim /= rec.steps;
    }

    if (eval_ds && !eval_ds->empty() && cfg.eval_every > 0 &&
        ((epoch + 1) % cfg.eval_every == 0 || epoch + 1 == cfg.epochs)) {
      MetricReport r = evaluate(net, *eval_ds);
      rec.eval_psnr = r.mean_psnr();
      rec.eval_ssim = r.mean_ssim();
    }

    result.history.push_back(rec);
    if (hist.is_open()) hist << epoch_record_json(rec).dump() << '\n';

    if (!cfg.checkpoint_path.empty() && cfg.checkpoint_every > 0 &&
        (epoch + 1) % cfg.checkpoint_every == 0)
      save_checkpoint(net, cfg.checkpoint_path);
  }

  if (!cfg.checkpoint_path.empty()) save_checkpoint(net, cfg.checkpoint_path);
  return result;
}

MetricReport evaluate(Network<float>& net, const PairedDataset& ds) {
  check(!ds.empty(), "evaluate: dataset is empty");
  MetricReport report;
  for (const auto& rec : ds.records) {
    auto [low, ref] = load_pair(rec);
    const auto t0 = std::chrono::steady_clock::now();
    Tensor<float> out = net.enhance(low);
    const auto t1 = std::chrono::steady_clock::now();
    MetricRow row;
    row.name = rec.name;
    row.psnr_db = psnr(out, ref);
    row.ssim = ssim_metric(out, ref);
    row.uqi = uqi(out, ref);
    row.infer_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace absgn
