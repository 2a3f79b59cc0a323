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

#include "fedguard/transfer.h"

#include <algorithm>
#include <cmath>

#include "fedguard/error.h"
#include "fedguard/nn/checkpoint.h"
#include "fedguard/random.h"

namespace fedguard::transfer {

std::size_t HeadSpec::ParameterCount(std::size_t width) const {
  std::size_t n = 0;
  std::size_t in = width;
  for (std::size_t h : hidden) {
    n += in * h + h;
    in = h;
  }
  return n + in * 2 + 2;
}

SplitResult SplitAndFreeze(const nn::Network& net) {
  if (!net.base_boundary()) {
    throw Error("missing_boundary", net.name() + " has no base/head boundary");
  }
  const std::size_t boundary = *net.base_boundary();
  SplitResult r{net.Slice(0, boundary), 0};
  r.base.SetTrainable(0, r.base.layer_count(), false);
  r.base.set_base_boundary(r.base.layer_count());
  r.head_input_width = nn::ShapeSize(r.base.output_shape());
  return r;
}

nn::Network BuildHead(std::size_t input_width, const HeadSpec& spec, std::uint64_t seed) {
  nn::Network head("head", {input_width});
  for (std::size_t h : spec.hidden) head.Add(nn::Dense(h)).Add(nn::Act(spec.activation));
  head.Add(nn::Dense(2)).Add(nn::Act(nn::Activation::kSigmoid));
  Rng rng = MakeRng(seed, {0x68656164ULL});
  head.Initialize(rng);
  head.set_base_boundary(0);
  return head;
}

CollaborativeModel::CollaborativeModel(nn::Network base, nn::Network head, std::string source)
    : base_(std::move(base)), head_(std::move(head)), source_(std::move(source)) {
  base_.SetTrainable(0, base_.layer_count(), false);
  if (nn::ShapeSize(base_.output_shape()) != head_.input_width()) {
    throw Error("width_mismatch", "head expects " + std::to_string(head_.input_width()) +
                                      " inputs, base emits " +
                                      std::to_string(nn::ShapeSize(base_.output_shape())));
  }
  head_.set_name(source_ + "/head");
  head_finite_ = head_.ParametersFinite();
}

std::vector<double> CollaborativeModel::Embed(std::span<const double> input) const {
  if (base_.layer_count() == 0) return {input.begin(), input.end()};
  nn::Tensor t = base_.Forward(input);
  return {t.data(), t.data() + t.size()};
}

std::array<double, 2> CollaborativeModel::Predict(std::span<const double> input) const {
  return head_.Predict(Embed(input));
}

nn::Network CollaborativeModel::Composite() const {
  nn::Network net(source_, base_.input_shape());
  for (std::size_t i = 0; i < base_.layer_count(); ++i) net.Add(base_.layer(i).Clone());
  net.set_base_boundary(net.layer_count());
  for (std::size_t i = 0; i < head_.layer_count(); ++i) net.Add(head_.layer(i).Clone());
  net.SetTrainable(0, base_.layer_count(), false);
  return net;
}

std::vector<double> CollaborativeModel::ExportHead() const {
  return head_.FlatParameters(false);
}

void CollaborativeModel::ImportHead(std::span<const double> weights) {
  head_.AssignFlatParameters(weights, false);
  head_finite_ = std::all_of(weights.begin(), weights.end(),
                             [](double v) { return std::isfinite(v); });
}

std::uint64_t CollaborativeModel::BaseHash() const {
  return base_.ParameterHash(0, base_.layer_count());
}

CollaborativeModel AttachHead(const nn::Network& base, const HeadSpec& spec,
                              std::uint64_t seed) {
  const std::size_t width = nn::ShapeSize(base.output_shape());
  if (spec.input_width && *spec.input_width != width) {
    throw Error("width_mismatch", "head spec expects " + std::to_string(*spec.input_width) +
                                      " inputs, base emits " + std::to_string(width));
  }
  return CollaborativeModel(base, BuildHead(width, spec, seed), base.name());
}

void SaveHead(const CollaborativeModel& model, const std::filesystem::path& path) {
  nn::Checkpoint c = nn::MakeCheckpoint(model.head(), {{"part", "head"},
                                                       {"source", model.source()}});
  nn::SaveCheckpoint(c, path);
}

void LoadHead(CollaborativeModel& model, const std::filesystem::path& path) {
  nn::Checkpoint c = nn::LoadCheckpoint(path);
  auto it = c.metadata.find("part");
  if (it == c.metadata.end() || it->second != "head") {
    throw Error("malformed_header", path.string() + " is not a head-only checkpoint");
  }
  nn::Network head = model.head();
  nn::ApplyCheckpoint(c, head);
  model.ImportHead(head.FlatParameters(false));
}

}  // namespace fedguard::transfer
