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

#ifndef FEDGUARD_NN_LAYERS_H_
#define FEDGUARD_NN_LAYERS_H_

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fedguard/nn/tensor.h"
#include "fedguard/random.h"

namespace fedguard::nn {

enum class LayerKind {
  kDense,
  kConv2D,
  kMaxPool,
  kGlobalAvgPool,
  kActivation,
  kFlatten,
  kReshape,
};

enum class Activation { kRelu, kTanh, kSigmoid };

const char* LayerKindName(LayerKind kind);
const char* ActivationName(Activation activation);

class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  virtual std::string Describe() const = 0;
  virtual std::unique_ptr<Layer> Clone() const = 0;
  virtual std::optional<Activation> activation() const { return std::nullopt; }

  // Binds the input shape, allocates parameters and returns the output shape.
  // Throws Error("shape_mismatch") if the layer cannot accept `input`.
  virtual Shape Configure(const Shape& input) = 0;
  // Uniform Glorot for weights, zero biases.
  virtual void Initialize(Rng& /*rng*/) {}

  virtual void Forward(const Tensor& in, Tensor& out) const = 0;
  // Accumulates (+=) into param_grads, which mirrors params(). Overwrites
  // grad_in when non-null.
  virtual void Backward(const Tensor& in, const Tensor& out,
                        const Tensor& grad_out, Tensor* grad_in,
                        std::vector<Tensor>* param_grads) const = 0;

  std::vector<Tensor>& params() { return params_; }
  const std::vector<Tensor>& params() const { return params_; }
  std::size_t parameter_count() const;

  bool trainable() const { return trainable_; }
  void set_trainable(bool trainable) { trainable_ = trainable; }

  const Shape& input_shape() const { return input_shape_; }
  const Shape& output_shape() const { return output_shape_; }

 protected:
  // Keeps existing parameters when their shapes already match, so a
  // configured clone can be re-added to another network.
  void AllocateParams(const std::vector<Shape>& shapes);

  std::vector<Tensor> params_;
  bool trainable_ = true;
  Shape input_shape_;
  Shape output_shape_;
};

std::unique_ptr<Layer> Dense(std::size_t units);
// 3x3 kernel, stride 1, "same" zero padding.
std::unique_ptr<Layer> Conv2D(std::size_t filters);
// 2x2 window, stride 2; odd trailing rows/columns are dropped.
std::unique_ptr<Layer> MaxPool();
std::unique_ptr<Layer> GlobalAvgPool();
std::unique_ptr<Layer> Act(Activation activation);
std::unique_ptr<Layer> Flatten();
// Rank-1 input of length n <= side*side, zero-padded into side x side x 1.
std::unique_ptr<Layer> ReshapeGrid(std::size_t side);

}  // namespace fedguard::nn

#endif  // FEDGUARD_NN_LAYERS_H_
