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

#ifndef FEDGUARD_NN_NETWORK_H_
#define FEDGUARD_NN_NETWORK_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedguard/nn/layers.h"
#include "fedguard/nn/tensor.h"
#include "fedguard/random.h"

namespace fedguard::nn {

// Sequential model. Copies are deep; a copy shares nothing with its source.
//
// Layers [0, base_boundary) form the base of a transfer-learning split and the
// remaining layers the head. A network used for classification ends in
// Act(kSigmoid) with two outputs: {P(benign), P(malware)}.
class Network {
 public:
  Network() = default;
  Network(std::string name, Shape input_shape);

  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  // Configures the layer against the current output shape.
  Network& Add(std::unique_ptr<Layer> layer);
  void Initialize(Rng& rng);

  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }
  const Shape& input_shape() const { return input_shape_; }
  const Shape& output_shape() const;
  std::size_t input_width() const { return ShapeSize(input_shape_); }

  std::size_t layer_count() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }
  const Layer& layer(std::size_t i) const { return *layers_[i]; }

  std::optional<std::size_t> base_boundary() const { return base_boundary_; }
  void set_base_boundary(std::size_t boundary);

  // Marks layers [begin, end) trainable or frozen.
  void SetTrainable(std::size_t begin, std::size_t end, bool trainable);

  // Throws Error("shape_mismatch") / Error("non_finite") on bad input.
  Tensor Forward(std::span<const double> input) const;
  std::array<double, 2> Predict(std::span<const double> input) const;
  // activations[0] is the input, activations[i + 1] the output of layer i.
  void ForwardTrace(std::span<const double> input,
                    std::vector<Tensor>& activations) const;

  bool EndsWithSigmoid() const;

  std::size_t ParameterCount() const;
  std::size_t TrainableParameterCount() const;
  // Concatenation of parameter tensors in layer order.
  std::vector<double> FlatParameters(bool trainable_only) const;
  void AssignFlatParameters(std::span<const double> values, bool trainable_only);
  bool ParametersFinite() const;

  // Copy of layers [begin, end) with their parameters and trainable flags.
  Network Slice(std::size_t begin, std::size_t end) const;

  // FNV-1a over the raw bytes of parameters of layers [begin, end).
  std::uint64_t ParameterHash(std::size_t begin, std::size_t end) const;

  std::string Summary() const;

 private:
  std::string name_;
  Shape input_shape_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::optional<std::size_t> base_boundary_;
};

}  // namespace fedguard::nn

#endif  // FEDGUARD_NN_NETWORK_H_
