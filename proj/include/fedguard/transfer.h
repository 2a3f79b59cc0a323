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

#ifndef FEDGUARD_TRANSFER_H_
#define FEDGUARD_TRANSFER_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedguard/nn/layers.h"
#include "fedguard/nn/network.h"

namespace fedguard::transfer {

// Replacement classification head: hidden dense layers followed by a 2-unit
// sigmoid output.
struct HeadSpec {
  std::vector<std::size_t> hidden = {64, 32};
  nn::Activation activation = nn::Activation::kTanh;
  // When set, the base output width must equal this value.
  std::optional<std::size_t> input_width;

  std::size_t ParameterCount(std::size_t input_width) const;
};

struct SplitResult {
  nn::Network base;  // every layer frozen
  std::size_t head_input_width = 0;
};

// Throws Error("missing_boundary") if `net` has no base boundary.
SplitResult SplitAndFreeze(const nn::Network& net);

nn::Network BuildHead(std::size_t input_width, const HeadSpec& spec, std::uint64_t seed);

// Frozen base plus trainable head. Only the head ever changes after
// construction, and only head weights are exchanged during federation.
class CollaborativeModel {
 public:
  CollaborativeModel() = default;
  CollaborativeModel(nn::Network base, nn::Network head, std::string source);

  const nn::Network& base() const { return base_; }
  const nn::Network& head() const { return head_; }
  nn::Network& mutable_head() { return head_; }
  const std::string& source() const { return source_; }

  // Base output for `input`; the head sees exactly this vector.
  std::vector<double> Embed(std::span<const double> input) const;
  std::array<double, 2> Predict(std::span<const double> input) const;
  // Base and head joined into one network, base frozen, boundary set.
  nn::Network Composite() const;

  std::size_t head_parameter_count() const { return head_.ParameterCount(); }
  std::vector<double> ExportHead() const;
  // Replaces head weights only. Non-finite values are accepted; head_finite()
  // reports them.
  void ImportHead(std::span<const double> weights);
  bool head_finite() const { return head_finite_; }

  std::uint64_t BaseHash() const;

 private:
  nn::Network base_;
  nn::Network head_;
  std::string source_;
  bool head_finite_ = true;
};

// Throws Error("width_mismatch") when spec.input_width disagrees with the
// base output.
CollaborativeModel AttachHead(const nn::Network& base, const HeadSpec& spec,
                              std::uint64_t seed);

// Head weights as an ADWT checkpoint tagged part=head.
void SaveHead(const CollaborativeModel& model, const std::filesystem::path& path);
void LoadHead(CollaborativeModel& model, const std::filesystem::path& path);

}  // namespace fedguard::transfer

#endif  // FEDGUARD_TRANSFER_H_
