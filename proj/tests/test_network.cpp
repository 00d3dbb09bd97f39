// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ABSGN Project Contributors

#include <doctest.h>

#include <fstream>

#include "absgn/checkpoint.hpp"
#include "absgn/gradcheck.hpp"
#include "test_util.hpp"

using namespace absgn;

namespace {

NetworkConfig tiny_config(Variant v = Variant::kFull) {
  NetworkConfig cfg;
  cfg.base_channels = 8;
  cfg.ca_reduction = 8;
  cfg.variant = v;
  return cfg;
}

std::vector<std::string> param_names(const Network<float>& net) {
  std::vector<std::string> names;
  for (const auto& [n, p] : net.params().params()) names.push_back(n);
  return names;
}

bool is_substituted(const std::string& name) {
  return name.rfind("low.gsa", 0) == 0 || name.rfind("low.spa", 0) == 0 ||
         name.find(".mgdb") != std::string::npos;
}

std::vector<char> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE_BEGIN("network");

TEST_CASE("same seed builds identical parameter bytes") {
  Network<float> a(tiny_config(), 42);
  Network<float> b(tiny_config(), 42);
  REQUIRE(a.params().params().size() == b.params().params().size());
  for (size_t i = 0; i < a.params().params().size(); ++i) {
    CHECK(a.params().params()[i].first == b.params().params()[i].first);
    CHECK(bitwise_equal(a.params().params()[i].second.value(), b.params().params()[i].second.value()));
  }
  Network<float> c(tiny_config(), 43);
  CHECK_FALSE(bitwise_equal(a.params().params()[0].second.value(),
                            c.params().params()[0].second.value()));
}

TEST_CASE("encoder channel schedule doubles per level") {
  Network<float> net(NetworkConfig{}, 1);  // base 32
  const ParamStore<float>& s = net.params();
  auto shape_of = [&](const std::string& n) {
    return const_cast<ParamStore<float>&>(s).find_param(n)->value().shape();
  };
  CHECK(shape_of("down1.weight") == Shape{64, 128, 3, 3});
  CHECK(shape_of("down2.weight") == Shape{128, 256, 3, 3});
  CHECK(shape_of("down3.weight") == Shape{256, 512, 3, 3});
}

TEST_CASE("count_params matches closed forms") {
  SUBCASE("1x1 conv 4->4 with bias") {
    ParamStore<float> store;
    Rng rng(1);
    ConvPRelu<float> conv(store, "c", {4, 4, 1, 1, false}, rng);
    CHECK(store.param_count() == 20);
  }
  SUBCASE("conv_prelu 3x3 3->32") {
    ParamStore<float> store;
    Rng rng(1);
    ConvPRelu<float> conv(store, "c", {3, 32, 3, 1, true}, rng);
    CHECK(store.param_count() == 928);
  }
}

TEST_CASE("forward preserves shape, pads internally, runs deterministically") {
  Network<float> net(tiny_config(), 7);
  Rng rng(2);
  for (const Shape& s : {Shape{1, 3, 8, 8}, Shape{1, 3, 67, 93}, Shape{2, 3, 16, 16}}) {
    Tensor<float> img = testutil::random_uniform<float>(s, rng);
    Tensor<float> out = net.enhance(img);
    CHECK(out.shape() == s);
    for (int64_t i = 0; i < out.numel(); ++i) {
      CHECK(out[i] >= 0.0f);
      CHECK(out[i] <= 1.0f);
    }
    CHECK(bitwise_equal(net.enhance(img), out));  // inference determinism
  }
}

TEST_CASE("forward validates input") {
  Network<float> net(tiny_config(), 7);
  CHECK_THROWS_AS(net.enhance(Tensor<float>(Shape{1, 3, 4, 16})), std::invalid_argument);
  CHECK_THROWS_AS(net.enhance(Tensor<float>(Shape{1, 1, 16, 16})), std::invalid_argument);
  Tensor<float> nan_img(Shape{1, 3, 16, 16});
  nan_img[0] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(net.enhance(nan_img), std::invalid_argument);
}

TEST_CASE("training mode updates batch-norm buffers, eval mode does not") {
  Network<float> net(tiny_config(), 3);
  Rng rng(4);
  Tensor<float> img = testutil::random_uniform<float>(Shape{2, 3, 16, 16}, rng);
  Tensor<float> rm_before = *net.params().buffers()[0].second;
  { Var<float> x(img); net.forward(x, /*training=*/true); }
  Tensor<float> rm_train = *net.params().buffers()[0].second;
  CHECK_FALSE(bitwise_equal(rm_before, rm_train));
  net.enhance(img);
  CHECK(bitwise_equal(*net.params().buffers()[0].second, rm_train));
}

TEST_CASE("variants substitute only their own blocks") {
  Network<float> full(tiny_config(Variant::kFull), 5);
  auto base_names = param_names(full);
  std::vector<std::string> base_outside;
  for (const auto& n : base_names)
    if (!is_substituted(n)) base_outside.push_back(n);

  for (Variant v : {Variant::kSpa, Variant::kGia, Variant::kDcr, Variant::kNoDc}) {
    Network<float> net(tiny_config(v), 5);
    std::vector<std::string> outside;
    for (const auto& n : param_names(net))
      if (!is_substituted(n)) outside.push_back(n);
    CHECK(outside == base_outside);
  }

  SUBCASE("no-dc keeps the full parameter count") {
    Network<float> nodc(tiny_config(Variant::kNoDc), 5);
    CHECK(nodc.count_params() == full.count_params());
    CHECK(param_names(nodc) == base_names);
  }
  SUBCASE("gia removes the SPA subtree only") {
    Network<float> gia(tiny_config(Variant::kGia), 5);
    for (const auto& n : param_names(gia)) CHECK(n.find("low.gsa.spa") == std::string::npos);
  }
  SUBCASE("dcr removes channel attention from MGDBs") {
    Network<float> dcr(tiny_config(Variant::kDcr), 5);
    for (const auto& n : param_names(dcr)) CHECK(n.find(".mgdb0.ca.") == std::string::npos);
    CHECK(dcr.count_params() < full.count_params());
  }
}

TEST_CASE("make_variant and variant names") {
  NetworkConfig cfg = tiny_config();
  nlohmann::json before = cfg;
  nlohmann::json after = make_variant(cfg, Variant::kFull);
  CHECK(before == after);
  CHECK(variant_from_name("no-dc") == Variant::kNoDc);
  CHECK(variant_from_name("no_dc") == Variant::kNoDc);
  CHECK_THROWS_AS(variant_from_name("bogus"), std::invalid_argument);
}

TEST_CASE("all variants run forward at several sizes") {
  Rng rng(6);
  Tensor<float> img = testutil::random_uniform<float>(Shape{1, 3, 24, 40}, rng);
  for (Variant v : all_variants()) {
    Network<float> net(tiny_config(v), 11);
    CHECK(net.enhance(img).shape() == img.shape());
  }
}

TEST_CASE("checkpoint round trip is bitwise stable") {
  testutil::TempDir tmp("ckpt");
  std::string path = tmp.str() + "/model.absgn";
  Network<float> net(tiny_config(), 9);
  Rng rng(10);
  Tensor<float> img = testutil::random_uniform<float>(Shape{1, 3, 16, 16}, rng);
  // touch the BN buffers so they carry non-initial values
  { Var<float> x(img); net.forward(x, true); }
  Tensor<float> before = net.enhance(img);

  save_checkpoint(net, path);
  Network<float> loaded = load_checkpoint<float>(path);
  CHECK(bitwise_equal(loaded.enhance(img), before));

  std::string path2 = tmp.str() + "/model2.absgn";
  save_checkpoint(loaded, path2);
  CHECK(read_file(path) == read_file(path2));
}

TEST_CASE("manifest element counts account for every payload byte") {
  testutil::TempDir tmp("manifest");
  std::string path = tmp.str() + "/default.absgn";
  Network<float> net(NetworkConfig{}, 0);  // default width
  save_checkpoint(net, path);

  std::vector<char> bytes = read_file(path);
  uint64_t mlen = 0;
  std::memcpy(&mlen, bytes.data() + 8, 8);
  nlohmann::json manifest = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + long(mlen));

  int64_t total = 0, learnable = 0;
  for (const auto& rec : manifest.at("tensors")) {
    int64_t n = 1;
    for (int d : rec.at("shape").get<Shape>()) n *= d;
    total += n;
    if (rec.at("name").get<std::string>().find("running_") == std::string::npos) learnable += n;
  }
  CHECK(total * 4 == int64_t(bytes.size()) - 16 - int64_t(mlen));
  CHECK(learnable == net.count_params());
}

TEST_CASE("checkpoint errors are explicit") {
  testutil::TempDir tmp("ckpt_err");
  std::string path = tmp.str() + "/model.absgn";
  Network<float> net(tiny_config(), 1);
  save_checkpoint(net, path);
  std::vector<char> bytes = read_file(path);

  SUBCASE("truncated payload") {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), long(bytes.size()) - 64);
    f.close();
    CHECK_THROWS_WITH_AS(load_checkpoint<float>(path), doctest::Contains("size mismatch"),
                         CheckpointError);
  }
  SUBCASE("bad magic") {
    bytes[0] = 'X';
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), long(bytes.size()));
    f.close();
    CHECK_THROWS_AS(load_checkpoint<float>(path), CheckpointError);
  }
  SUBCASE("unknown version") {
    bytes[4] = 99;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), long(bytes.size()));
    f.close();
    CHECK_THROWS_WITH_AS(load_checkpoint<float>(path), doctest::Contains("version"), CheckpointError);
  }
  SUBCASE("overlapping offsets rejected") {
    uint64_t mlen = 0;
    std::memcpy(&mlen, bytes.data() + 8, 8);
    nlohmann::json manifest =
        nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + long(mlen));
    manifest["tensors"][1]["offset"] = 0;  // overlaps tensor 0
    std::string mstr = manifest.dump();
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), 8);
    uint64_t nlen = mstr.size();
    f.write(reinterpret_cast<const char*>(&nlen), 8);
    f.write(mstr.data(), long(mstr.size()));
    f.write(bytes.data() + 16 + long(mlen), long(bytes.size()) - 16 - long(mlen));
    f.close();
    CHECK_THROWS_WITH_AS(load_checkpoint<float>(path), doctest::Contains("offset"), CheckpointError);
  }
}

TEST_CASE("tiny full network gradients match central differences" * doctest::timeout(300)) {
  Network<double> net(tiny_config(), 21);
  Rng rng(22);
  Tensor<double> img = testutil::random_uniform<double>(Shape{1, 3, 16, 16}, rng, 0.05, 0.95);
  Var<double> input(img, /*requires_grad=*/true);

  std::vector<std::pair<std::string, Var<double>>> wrt = net.params().params();
  wrt.emplace_back("input", input);
  // eps an order below the per-block checks: across a ~40-op-deep composition
  // a +-1e-4 probe can straddle a PReLU kink, invalidating the secant.
  auto res = finite_difference_check<double>(
      [&] { return sum_all(net.forward(input, /*training=*/true)); }, wrt, 1e-5, 3, 23);
  INFO("worst: ", res.worst_tensor, "[", res.worst_index, "] analytic=", res.worst_analytic,
       " numeric=", res.worst_numeric);
  CHECK(res.max_rel_err < 1e-3);
}

TEST_SUITE_END();
