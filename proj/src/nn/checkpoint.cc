/*
 * Copyright 2026 The Fedguard Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fedguard/nn/checkpoint.h"

#include <fstream>

#include "fedguard/error.h"
#include "internal/binary_io.h"

namespace fedguard::nn {
namespace {

constexpr char kMagic[] = "ADWT";
constexpr std::uint32_t kVersion = 1;

}  // namespace

Checkpoint MakeCheckpoint(const Network& net, std::map<std::string, std::string> metadata) {
  return MakeCheckpoint(net, 0, net.layer_count(), std::move(metadata));
}

Checkpoint MakeCheckpoint(const Network& net, std::size_t begin, std::size_t end,
                          std::map<std::string, std::string> metadata) {
  Checkpoint c;
  c.model_name = net.name();
  c.metadata = std::move(metadata);
  for (std::size_t i = begin; i < end && i < net.layer_count(); ++i) {
    for (const Tensor& t : net.layer(i).params()) c.tensors.push_back(t);
  }
  return c;
}

void ApplyCheckpoint(const Checkpoint& ckpt, Network& net, std::size_t begin) {
  std::size_t k = 0;
  for (std::size_t i = begin; i < net.layer_count(); ++i) {
    for (Tensor& t : net.layer(i).params()) {
      if (k >= ckpt.tensors.size()) {
        throw Error("length_mismatch", "checkpoint '" + ckpt.model_name +
                                           "' has too few tensors for " + net.name());
      }
      if (ckpt.tensors[k].shape() != t.shape()) {
        throw Error("shape_mismatch", "checkpoint tensor " + std::to_string(k) + " has shape " +
                                          ShapeString(ckpt.tensors[k].shape()) + ", layer expects " +
                                          ShapeString(t.shape()));
      }
      t = ckpt.tensors[k++];
    }
  }
  if (k != ckpt.tensors.size()) {
    throw Error("length_mismatch", "checkpoint '" + ckpt.model_name +
                                       "' has more tensors than " + net.name());
  }
}

void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot open " + path.string() + " for writing");
  internal::LeWriter w(out);
  w.Bytes(std::string(kMagic, 4));
  w.U32(kVersion);
  w.U16(static_cast<std::uint16_t>(ckpt.model_name.size()));
  w.Bytes(ckpt.model_name);
  w.U32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const Tensor& t : ckpt.tensors) {
    w.U8(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) w.U32(static_cast<std::uint32_t>(d));
    for (double v : t.values()) w.F32(static_cast<float>(v));
  }
  w.U32(static_cast<std::uint32_t>(ckpt.metadata.size()));
  for (const auto& [key, value] : ckpt.metadata) {
    w.U16(static_cast<std::uint16_t>(key.size()));
    w.Bytes(key);
    w.U32(static_cast<std::uint32_t>(value.size()));
    w.Bytes(value);
  }
  if (!out) throw Error("io", "write failed for " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open " + path.string());
  internal::LeReader r(in, path.string());
  if (r.Bytes(4) != std::string(kMagic, 4)) {
    throw Error("malformed_header", path.string() + ": bad magic");
  }
  if (r.U32() != kVersion) throw Error("malformed_header", path.string() + ": bad version");
  Checkpoint c;
  c.model_name = r.Bytes(r.U16());
  const std::uint32_t count = r.U32();
  for (std::uint32_t i = 0; i < count; ++i) {
    Shape shape(r.U8());
    for (std::size_t& d : shape) d = r.U32();
    std::vector<double> data(ShapeSize(shape));
    for (double& v : data) v = r.F32();
    c.tensors.emplace_back(std::move(shape), std::move(data));
  }
  if (!r.AtEnd()) {
    const std::uint32_t entries = r.U32();
    for (std::uint32_t i = 0; i < entries; ++i) {
      std::string key = r.Bytes(r.U16());
      c.metadata[key] = r.Bytes(r.U32());
    }
  }
  return c;
}

void RoundParametersToFloat(Network& net) {
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    for (Tensor& t : net.layer(i).params()) {
      for (double& v : t.values()) v = static_cast<double>(static_cast<float>(v));
    }
  }
}

}  // namespace fedguard::nn
