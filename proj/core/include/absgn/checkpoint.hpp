// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ABSGN Project Contributors

#pragma once

#include <bit>
#include <cstring>
#include <fstream>

#include "absgn/network.hpp"

namespace absgn {

// Portable weight files. Layout:
//   bytes [0,4)   magic "ABSG"
//   bytes [4,8)   format version, u32 little-endian
//   bytes [8,16)  manifest byte length, u64 little-endian
//   manifest      UTF-8 JSON: {"config": {...}, "tensors": [{name, shape,
//                 dtype, offset}, ...]} with tensors in store order
//   payload       raw little-endian float32, tensors back to back
// Offsets are byte offsets into the payload. Loading then saving reproduces
// the file byte for byte.

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

inline constexpr uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'A', 'B', 'S', 'G'};

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename T>
std::vector<std::pair<std::string, const Tensor<T>*>> checkpoint_entries(const Network<T>& net) {
  std::vector<std::pair<std::string, const Tensor<T>*>> out;
  for (const auto& [name, v] : net.params().params()) out.emplace_back(name, &v.value());
  for (const auto& [name, t] : net.params().buffers()) out.emplace_back(name, t.get());
  return out;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>*>> checkpoint_entries_mut(Network<T>& net) {
  std::vector<std::pair<std::string, Tensor<T>*>> out;
  for (auto& [name, v] : net.params().params()) out.emplace_back(name, &v.value());
  for (auto& [name, t] : net.params().buffers()) out.emplace_back(name, t.get());
  return out;
}

}  // namespace detail

template <typename T>
void save_checkpoint(const Network<T>& net, const std::string& path) {
  auto entries = detail::checkpoint_entries(net);
  nlohmann::json tensors = nlohmann::json::array();
  uint64_t offset = 0;
  for (const auto& [name, t] : entries) {
    tensors.push_back({{"name", name},
                       {"shape", t->shape()},
                       {"dtype", "float32"},
                       {"offset", offset}});
    offset += static_cast<uint64_t>(t->numel()) * 4;
  }
  nlohmann::json manifest{{"config", net.config()}, {"tensors", tensors}};
  std::string mstr = manifest.dump();

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("cannot open checkpoint for writing: " + path);
  f.write(kCheckpointMagic, 4);
  uint32_t version = kCheckpointVersion;
  uint64_t mlen = mstr.size();
  f.write(reinterpret_cast<const char*>(&version), 4);
  f.write(reinterpret_cast<const char*>(&mlen), 8);
  f.write(mstr.data(), static_cast<std::streamsize>(mstr.size()));
  std::vector<float> buf;
  for (const auto& [name, t] : entries) {
    buf.resize(static_cast<size_t>(t->numel()));
    for (int64_t i = 0; i < t->numel(); ++i) buf[static_cast<size_t>(i)] = static_cast<float>((*t)[i]);
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
  }
  if (!f) throw CheckpointError("failed writing checkpoint: " + path);
}

template <typename T>
Network<T> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint: " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16) throw CheckpointError("checkpoint truncated: missing header");
  if (std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
    throw CheckpointError("bad checkpoint magic (expected \"ABSG\")");
  uint32_t version = 0;
  uint64_t mlen = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(&mlen, bytes.data() + 8, 8);
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  if (16 + mlen > bytes.size()) throw CheckpointError("checkpoint truncated: manifest exceeds file");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<long>(mlen));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt manifest: ") + e.what());
  }
  if (!manifest.contains("config") || !manifest.contains("tensors"))
    throw CheckpointError("corrupt manifest: missing config or tensors");

  NetworkConfig cfg = manifest.at("config").get<NetworkConfig>();
  Network<T> net(cfg, /*seed=*/0);
  auto entries = detail::checkpoint_entries_mut(net);

  const auto& tensors = manifest.at("tensors");
  if (!tensors.is_array() || tensors.size() != entries.size())
    throw CheckpointError("manifest lists " + std::to_string(tensors.size()) + " tensors, model has " +
                          std::to_string(entries.size()));
  uint64_t expect_offset = 0;
  for (size_t i = 0; i < entries.size(); ++i) {
    const auto& rec = tensors[i];
    auto& [name, dst] = entries[i];
    if (rec.at("name").get<std::string>() != name)
      throw CheckpointError("manifest tensor " + std::to_string(i) + " is \"" +
                            rec.at("name").get<std::string>() + "\", model expects \"" + name + "\"");
    if (rec.at("dtype").get<std::string>() != "float32")
      throw CheckpointError("unsupported dtype for " + name);
    if (rec.at("shape").get<Shape>() != dst->shape())
      throw CheckpointError("shape mismatch for " + name);
    uint64_t off = rec.at("offset").get<uint64_t>();
    if (off != expect_offset)
      throw CheckpointError("offset for " + name + " is " + std::to_string(off) + ", expected " +
                            std::to_string(expect_offset) + " (overlapping or out-of-order layout)");
    expect_offset += static_cast<uint64_t>(dst->numel()) * 4;
  }
  uint64_t payload_bytes = bytes.size() - 16 - mlen;
  if (payload_bytes != expect_offset)
    throw CheckpointError("payload size mismatch: file has " + std::to_string(payload_bytes) +
                          " bytes, manifest sums to " + std::to_string(expect_offset));

  const char* payload = bytes.data() + 16 + mlen;
  for (auto& [name, dst] : entries) {
    for (int64_t i = 0; i < dst->numel(); ++i) {
      float v;
      std::memcpy(&v, payload + i * 4, 4);
      (*dst)[i] = static_cast<T>(v);
    }
    payload += dst->numel() * 4;
  }
  return net;
}

}  // namespace absgn
