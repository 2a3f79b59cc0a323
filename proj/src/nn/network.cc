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

#include "fedguard/nn/network.h"

#include <cmath>
#include <cstring>
#include <sstream>

#include "fedguard/error.h"

namespace fedguard::nn {

Network::Network(std::string name, Shape input_shape)
    : name_(std::move(name)), input_shape_(std::move(input_shape)) {}

Network::Network(const Network& other)
    : name_(other.name_),
      input_shape_(other.input_shape_),
      base_boundary_(other.base_boundary_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->Clone());
}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

const Shape& Network::output_shape() const {
  return layers_.empty() ? input_shape_ : layers_.back()->output_shape();
}

Network& Network::Add(std::unique_ptr<Layer> layer) {
  layer->Configure(output_shape());
  layers_.push_back(std::move(layer));
  return *this;
}

void Network::Initialize(Rng& rng) {
  for (auto& l : layers_) l->Initialize(rng);
}

void Network::set_base_boundary(std::size_t boundary) {
  if (boundary > layers_.size()) {
    throw Error("missing_boundary", "base boundary beyond last layer");
  }
  base_boundary_ = boundary;
}

void Network::SetTrainable(std::size_t begin, std::size_t end, bool trainable) {
  for (std::size_t i = begin; i < end && i < layers_.size(); ++i) {
    layers_[i]->set_trainable(trainable);
  }
}

void Network::ForwardTrace(std::span<const double> input,
                           std::vector<Tensor>& activations) const {
  if (input.size() != input_width()) {
    throw Error("shape_mismatch", name_ + ": input of " + std::to_string(input.size()) +
                                      " values, expected " + ShapeString(input_shape_));
  }
  for (double v : input) {
    if (!std::isfinite(v)) throw Error("non_finite", name_ + ": non-finite input");
  }
  activations.resize(layers_.size() + 1);
  activations[0].Reshape(input_shape_);
  std::copy(input.begin(), input.end(), activations[0].data());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->Forward(activations[i], activations[i + 1]);
  }
}

Tensor Network::Forward(std::span<const double> input) const {
  std::vector<Tensor> acts;
  ForwardTrace(input, acts);
  return std::move(acts.back());
}

std::array<double, 2> Network::Predict(std::span<const double> input) const {
  Tensor out = Forward(input);
  if (out.size() != 2) {
    throw Error("shape_mismatch", name_ + ": classifier must emit 2 values");
  }
  return {out[0], out[1]};
}

bool Network::EndsWithSigmoid() const {
  return !layers_.empty() && layers_.back()->activation() == Activation::kSigmoid &&
         ShapeSize(layers_.back()->output_shape()) == 2;
}

std::size_t Network::ParameterCount() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l->parameter_count();
  return n;
}

std::size_t Network::TrainableParameterCount() const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    if (l->trainable()) n += l->parameter_count();
  }
  return n;
}

std::vector<double> Network::FlatParameters(bool trainable_only) const {
  std::vector<double> out;
  out.reserve(trainable_only ? TrainableParameterCount() : ParameterCount());
  for (const auto& l : layers_) {
    if (trainable_only && !l->trainable()) continue;
    for (const Tensor& t : l->params()) out.insert(out.end(), t.data(), t.data() + t.size());
  }
  return out;
}

void Network::AssignFlatParameters(std::span<const double> values, bool trainable_only) {
  const std::size_t expected = trainable_only ? TrainableParameterCount() : ParameterCount();
  if (values.size() != expected) {
    throw Error("length_mismatch", name_ + ": got " + std::to_string(values.size()) +
                                       " parameters, expected " + std::to_string(expected));
  }
  std::size_t pos = 0;
  for (auto& l : layers_) {
    if (trainable_only && !l->trainable()) continue;
    for (Tensor& t : l->params()) {
      std::copy(values.begin() + static_cast<std::ptrdiff_t>(pos),
                values.begin() + static_cast<std::ptrdiff_t>(pos + t.size()), t.data());
      pos += t.size();
    }
  }
}

bool Network::ParametersFinite() const {
  for (const auto& l : layers_) {
    for (const Tensor& t : l->params()) {
      if (!t.IsFinite()) return false;
    }
  }
  return true;
}

Network Network::Slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > layers_.size()) {
    throw Error("shape_mismatch", "invalid layer slice");
  }
  const Shape in = begin == 0 ? input_shape_ : layers_[begin - 1]->output_shape();
  Network out(name_, in);
  for (std::size_t i = begin; i < end; ++i) out.layers_.push_back(layers_[i]->Clone());
  return out;
}

std::uint64_t Network::ParameterHash(std::size_t begin, std::size_t end) const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = begin; i < end && i < layers_.size(); ++i) {
    for (const Tensor& t : layers_[i]->params()) {
      const auto* bytes = reinterpret_cast<const unsigned char*>(t.data());
      for (std::size_t b = 0; b < t.size() * sizeof(double); ++b) {
        h ^= bytes[b];
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

std::string Network::Summary() const {
  std::ostringstream os;
  os << name_ << " input=" << ShapeString(input_shape_) << "\n";
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (base_boundary_ && *base_boundary_ == i) os << "  -- head --\n";
    os << "  " << i << ": " << layers_[i]->Describe() << " -> "
       << ShapeString(layers_[i]->output_shape()) << " params="
       << layers_[i]->parameter_count() << (layers_[i]->trainable() ? "" : " (frozen)")
       << "\n";
  }
  return os.str();
}

}  // namespace fedguard::nn
