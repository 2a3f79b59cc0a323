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

#include "fedguard/nn/layers.h"

#include <algorithm>
#include <cmath>

#include "fedguard/error.h"

namespace fedguard::nn {
namespace {

void GlorotUniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.values()) v = UniformRange(rng, -limit, limit);
}

void RequireRank(const Shape& s, std::size_t rank, const char* layer) {
  if (s.size() != rank) {
    throw Error("shape_mismatch", std::string(layer) + " expects rank-" +
                                      std::to_string(rank) + " input, got " +
                                      ShapeString(s));
  }
}

class DenseLayer final : public Layer {
 public:
  explicit DenseLayer(std::size_t units) : units_(units) {}

  LayerKind kind() const override { return LayerKind::kDense; }
  std::string Describe() const override { return "dense(" + std::to_string(units_) + ")"; }
  std::unique_ptr<Layer> Clone() const override { return std::make_unique<DenseLayer>(*this); }

  Shape Configure(const Shape& input) override {
    RequireRank(input, 1, "dense");
    input_shape_ = input;
    output_shape_ = {units_};
    AllocateParams({{units_, input[0]}, {units_}});
    return output_shape_;
  }

  void Initialize(Rng& rng) override {
    GlorotUniform(params_[0], input_shape_[0], units_, rng);
    params_[1].Fill(0.0);
  }

  void Forward(const Tensor& in, Tensor& out) const override {
    const std::size_t n = input_shape_[0];
    const double* w = params_[0].data();
    const double* b = params_[1].data();
    const double* x = in.data();
    out.Reshape(output_shape_);
    for (std::size_t o = 0; o < units_; ++o) {
      const double* row = w + o * n;
      double acc = b[o];
      for (std::size_t i = 0; i < n; ++i) acc += row[i] * x[i];
      out[o] = acc;
    }
  }

  void Backward(const Tensor& in, const Tensor& /*out*/, const Tensor& grad_out,
                Tensor* grad_in, std::vector<Tensor>* param_grads) const override {
    const std::size_t n = input_shape_[0];
    const double* w = params_[0].data();
    const double* x = in.data();
    const double* g = grad_out.data();
    if (param_grads != nullptr) {
      double* gw = (*param_grads)[0].data();
      double* gb = (*param_grads)[1].data();
      for (std::size_t o = 0; o < units_; ++o) {
        const double go = g[o];
        if (go == 0.0) continue;
        double* row = gw + o * n;
        for (std::size_t i = 0; i < n; ++i) row[i] += go * x[i];
        gb[o] += go;
      }
    }
    if (grad_in != nullptr) {
      grad_in->Reshape(input_shape_);
      grad_in->Fill(0.0);
      double* gi = grad_in->data();
      for (std::size_t o = 0; o < units_; ++o) {
        const double go = g[o];
        if (go == 0.0) continue;
        const double* row = w + o * n;
        for (std::size_t i = 0; i < n; ++i) gi[i] += row[i] * go;
      }
    }
  }

 private:
  std::size_t units_;
};

// Weights laid out as [filters][3][3][channels].
class Conv2DLayer final : public Layer {
 public:
  explicit Conv2DLayer(std::size_t filters) : filters_(filters) {}

  LayerKind kind() const override { return LayerKind::kConv2D; }
  std::string Describe() const override {
    return "conv2d(" + std::to_string(filters_) + ",3x3,same)";
  }
  std::unique_ptr<Layer> Clone() const override { return std::make_unique<Conv2DLayer>(*this); }

  Shape Configure(const Shape& input) override {
    RequireRank(input, 3, "conv2d");
    input_shape_ = input;
    output_shape_ = {input[0], input[1], filters_};
    AllocateParams({{filters_, 3, 3, input[2]}, {filters_}});
    return output_shape_;
  }

  void Initialize(Rng& rng) override {
    GlorotUniform(params_[0], 9 * input_shape_[2], 9 * filters_, rng);
    params_[1].Fill(0.0);
  }

  void Forward(const Tensor& in, Tensor& out) const override {
    const std::size_t h = input_shape_[0], w = input_shape_[1], c = input_shape_[2];
    const std::size_t k = filters_;
    const double* weights = params_[0].data();
    const double* bias = params_[1].data();
    out.Reshape(output_shape_);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double* o = out.data() + (y * w + x) * k;
        for (std::size_t f = 0; f < k; ++f) o[f] = bias[f];
        for (int dy = -1; dy <= 1; ++dy) {
          const auto yy = static_cast<std::ptrdiff_t>(y) + dy;
          if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (int dx = -1; dx <= 1; ++dx) {
            const auto xx = static_cast<std::ptrdiff_t>(x) + dx;
            if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(w)) continue;
            const double* px = in.data() + (static_cast<std::size_t>(yy) * w +
                                             static_cast<std::size_t>(xx)) * c;
            const std::size_t tap = static_cast<std::size_t>((dy + 1) * 3 + (dx + 1));
            for (std::size_t f = 0; f < k; ++f) {
              const double* wf = weights + (f * 9 + tap) * c;
              double acc = 0.0;
              for (std::size_t ch = 0; ch < c; ++ch) acc += wf[ch] * px[ch];
              o[f] += acc;
            }
          }
        }
      }
    }
  }

  void Backward(const Tensor& in, const Tensor& /*out*/, const Tensor& grad_out,
                Tensor* grad_in, std::vector<Tensor>* param_grads) const override {
    const std::size_t h = input_shape_[0], w = input_shape_[1], c = input_shape_[2];
    const std::size_t k = filters_;
    const double* weights = params_[0].data();
    double* gw = param_grads ? (*param_grads)[0].data() : nullptr;
    double* gb = param_grads ? (*param_grads)[1].data() : nullptr;
    if (grad_in != nullptr) {
      grad_in->Reshape(input_shape_);
      grad_in->Fill(0.0);
    }
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double* g = grad_out.data() + (y * w + x) * k;
        if (gb != nullptr) {
          for (std::size_t f = 0; f < k; ++f) gb[f] += g[f];
        }
        for (int dy = -1; dy <= 1; ++dy) {
          const auto yy = static_cast<std::ptrdiff_t>(y) + dy;
          if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (int dx = -1; dx <= 1; ++dx) {
            const auto xx = static_cast<std::ptrdiff_t>(x) + dx;
            if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(w)) continue;
            const std::size_t offset = (static_cast<std::size_t>(yy) * w +
                                        static_cast<std::size_t>(xx)) * c;
            const double* px = in.data() + offset;
            double* gx = grad_in ? grad_in->data() + offset : nullptr;
            const std::size_t tap = static_cast<std::size_t>((dy + 1) * 3 + (dx + 1));
            for (std::size_t f = 0; f < k; ++f) {
              const double gf = g[f];
              if (gf == 0.0) continue;
              const std::size_t base = (f * 9 + tap) * c;
              if (gw != nullptr) {
                for (std::size_t ch = 0; ch < c; ++ch) gw[base + ch] += gf * px[ch];
              }
              if (gx != nullptr) {
                for (std::size_t ch = 0; ch < c; ++ch) gx[ch] += gf * weights[base + ch];
              }
            }
          }
        }
      }
    }
  }

 private:
  std::size_t filters_;
};

class MaxPoolLayer final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::kMaxPool; }
  std::string Describe() const override { return "maxpool(2x2)"; }
  std::unique_ptr<Layer> Clone() const override { return std::make_unique<MaxPoolLayer>(*this); }

  Shape Configure(const Shape& input) override {
    RequireRank(input, 3, "maxpool");
    if (input[0] < 2 || input[1] < 2) {
      throw Error("shape_mismatch", "maxpool needs spatial size >= 2, got " +
                                        ShapeString(input));
    }
    input_shape_ = input;
    output_shape_ = {input[0] / 2, input[1] / 2, input[2]};
    return output_shape_;
  }

  void Forward(const Tensor& in, Tensor& out) const override {
    const std::size_t w = input_shape_[1], c = input_shape_[2];
    const std::size_t oh = output_shape_[0], ow = output_shape_[1];
    out.Reshape(output_shape_);
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          double m = in[((2 * y) * w + 2 * x) * c + ch];
          m = std::max(m, in[((2 * y) * w + 2 * x + 1) * c + ch]);
          m = std::max(m, in[((2 * y + 1) * w + 2 * x) * c + ch]);
          m = std::max(m, in[((2 * y + 1) * w + 2 * x + 1) * c + ch]);
          out[(y * ow + x) * c + ch] = m;
        }
      }
    }
  }

  void Backward(const Tensor& in, const Tensor& /*out*/, const Tensor& grad_out,
                Tensor* grad_in, std::vector<Tensor>* /*param_grads*/) const override {
    if (grad_in == nullptr) return;
    const std::size_t w = input_shape_[1], c = input_shape_[2];
    const std::size_t oh = output_shape_[0], ow = output_shape_[1];
    grad_in->Reshape(input_shape_);
    grad_in->Fill(0.0);
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          // Gradient goes to the first maximal element of the window.
          const std::size_t cand[4] = {
              ((2 * y) * w + 2 * x) * c + ch, ((2 * y) * w + 2 * x + 1) * c + ch,
              ((2 * y + 1) * w + 2 * x) * c + ch, ((2 * y + 1) * w + 2 * x + 1) * c + ch};
          std::size_t best = cand[0];
          for (std::size_t idx : cand) {
            if (in[idx] > in[best]) best = idx;
          }
          (*grad_in)[best] += grad_out[(y * ow + x) * c + ch];
        }
      }
    }
  }
};

class GlobalAvgPoolLayer final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::kGlobalAvgPool; }
  std::string Describe() const override { return "global_avg_pool"; }
  std::unique_ptr<Layer> Clone() const override {
    return std::make_unique<GlobalAvgPoolLayer>(*this);
  }

  Shape Configure(const Shape& input) override {
    RequireRank(input, 3, "global_avg_pool");
    input_shape_ = input;
    output_shape_ = {input[2]};
    return output_shape_;
  }

  void Forward(const Tensor& in, Tensor& out) const override {
    const std::size_t pixels = input_shape_[0] * input_shape_[1], c = input_shape_[2];
    out.Reshape(output_shape_);
    out.Fill(0.0);
    for (std::size_t p = 0; p < pixels; ++p) {
      for (std::size_t ch = 0; ch < c; ++ch) out[ch] += in[p * c + ch];
    }
    for (std::size_t ch = 0; ch < c; ++ch) out[ch] /= static_cast<double>(pixels);
  }

  void Backward(const Tensor& /*in*/, const Tensor& /*out*/, const Tensor& grad_out,
                Tensor* grad_in, std::vector<Tensor>* /*param_grads*/) const override {
    if (grad_in == nullptr) return;
    const std::size_t pixels = input_shape_[0] * input_shape_[1], c = input_shape_[2];
    grad_in->Reshape(input_shape_);
    const double scale = 1.0 / static_cast<double>(pixels);
    for (std::size_t p = 0; p < pixels; ++p) {
      for (std::size_t ch = 0; ch < c; ++ch) (*grad_in)[p * c + ch] = grad_out[ch] * scale;
    }
  }
};

class ActivationLayer final : public Layer {
 public:
  explicit ActivationLayer(Activation a) : activation_(a) {}

  LayerKind kind() const override { return LayerKind::kActivation; }
  std::string Describe() const override { return ActivationName(activation_); }
  std::unique_ptr<Layer> Clone() const override {
    return std::make_unique<ActivationLayer>(*this);
  }

  std::optional<Activation> activation() const override { return activation_; }

  Shape Configure(const Shape& input) override {
    input_shape_ = input;
    output_shape_ = input;
    return output_shape_;
  }

  void Forward(const Tensor& in, Tensor& out) const override {
    out.Reshape(input_shape_);
    const std::size_t n = in.size();
    switch (activation_) {
      case Activation::kRelu:
        for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
        break;
      case Activation::kTanh:
        for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(in[i]);
        break;
      case Activation::kSigmoid:
        for (std::size_t i = 0; i < n; ++i) out[i] = 1.0 / (1.0 + std::exp(-in[i]));
        break;
    }
  }

  void Backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                Tensor* grad_in, std::vector<Tensor>* /*param_grads*/) const override {
    if (grad_in == nullptr) return;
    grad_in->Reshape(input_shape_);
    const std::size_t n = in.size();
    switch (activation_) {
      case Activation::kRelu:
        for (std::size_t i = 0; i < n; ++i) (*grad_in)[i] = in[i] > 0.0 ? grad_out[i] : 0.0;
        break;
      case Activation::kTanh:
        for (std::size_t i = 0; i < n; ++i) {
          (*grad_in)[i] = grad_out[i] * (1.0 - out[i] * out[i]);
        }
        break;
      case Activation::kSigmoid:
        for (std::size_t i = 0; i < n; ++i) {
          (*grad_in)[i] = grad_out[i] * out[i] * (1.0 - out[i]);
        }
        break;
    }
  }

 private:
  Activation activation_;
};

class FlattenLayer final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::kFlatten; }
  std::string Describe() const override { return "flatten"; }
  std::unique_ptr<Layer> Clone() const override { return std::make_unique<FlattenLayer>(*this); }

  Shape Configure(const Shape& input) override {
    input_shape_ = input;
    output_shape_ = {ShapeSize(input)};
    return output_shape_;
  }

  void Forward(const Tensor& in, Tensor& out) const override {
    out.Reshape(output_shape_);
    std::copy(in.data(), in.data() + in.size(), out.data());
  }

  void Backward(const Tensor& /*in*/, const Tensor& /*out*/, const Tensor& grad_out,
                Tensor* grad_in, std::vector<Tensor>* /*param_grads*/) const override {
    if (grad_in == nullptr) return;
    grad_in->Reshape(input_shape_);
    std::copy(grad_out.data(), grad_out.data() + grad_out.size(), grad_in->data());
  }
};

class ReshapeGridLayer final : public Layer {
 public:
  explicit ReshapeGridLayer(std::size_t side) : side_(side) {}

  LayerKind kind() const override { return LayerKind::kReshape; }
  std::string Describe() const override {
    return "reshape(" + std::to_string(side_) + "," + std::to_string(side_) + ",1)";
  }
  std::unique_ptr<Layer> Clone() const override {
    return std::make_unique<ReshapeGridLayer>(*this);
  }

  Shape Configure(const Shape& input) override {
    RequireRank(input, 1, "reshape");
    if (input[0] > side_ * side_) {
      throw Error("shape_mismatch", std::to_string(input[0]) +
                                        " features do not fit a " +
                                        std::to_string(side_) + "x" +
                                        std::to_string(side_) + " grid");
    }
    input_shape_ = input;
    output_shape_ = {side_, side_, 1};
    return output_shape_;
  }

  void Forward(const Tensor& in, Tensor& out) const override {
    out.Reshape(output_shape_);
    out.Fill(0.0);
    std::copy(in.data(), in.data() + in.size(), out.data());
  }

  void Backward(const Tensor& /*in*/, const Tensor& /*out*/, const Tensor& grad_out,
                Tensor* grad_in, std::vector<Tensor>* /*param_grads*/) const override {
    if (grad_in == nullptr) return;
    grad_in->Reshape(input_shape_);
    std::copy(grad_out.data(), grad_out.data() + input_shape_[0], grad_in->data());
  }

 private:
  std::size_t side_;
};

}  // namespace

const char* LayerKindName(LayerKind kind) {
  switch (kind) {
    case LayerKind::kDense:
      return "dense";
    case LayerKind::kConv2D:
      return "conv2d";
    case LayerKind::kMaxPool:
      return "maxpool";
    case LayerKind::kGlobalAvgPool:
      return "global_avg_pool";
    case LayerKind::kActivation:
      return "activation";
    case LayerKind::kFlatten:
      return "flatten";
    case LayerKind::kReshape:
      return "reshape";
  }
  return "?";
}

const char* ActivationName(Activation activation) {
  switch (activation) {
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kSigmoid:
      return "sigmoid";
  }
  return "?";
}

void Layer::AllocateParams(const std::vector<Shape>& shapes) {
  bool same = params_.size() == shapes.size();
  for (std::size_t i = 0; same && i < shapes.size(); ++i) {
    same = params_[i].shape() == shapes[i];
  }
  if (same) return;
  params_.clear();
  for (const Shape& s : shapes) params_.emplace_back(s);
}

std::size_t Layer::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor& t : params_) n += t.size();
  return n;
}

std::unique_ptr<Layer> Dense(std::size_t units) {
  if (units == 0) throw Error("shape_mismatch", "dense layer needs units > 0");
  return std::make_unique<DenseLayer>(units);
}
std::unique_ptr<Layer> Conv2D(std::size_t filters) {
  if (filters == 0) throw Error("shape_mismatch", "conv2d needs filters > 0");
  return std::make_unique<Conv2DLayer>(filters);
}
std::unique_ptr<Layer> MaxPool() { return std::make_unique<MaxPoolLayer>(); }
std::unique_ptr<Layer> GlobalAvgPool() { return std::make_unique<GlobalAvgPoolLayer>(); }
std::unique_ptr<Layer> Act(Activation activation) {
  return std::make_unique<ActivationLayer>(activation);
}
std::unique_ptr<Layer> Flatten() { return std::make_unique<FlattenLayer>(); }
std::unique_ptr<Layer> ReshapeGrid(std::size_t side) {
  return std::make_unique<ReshapeGridLayer>(side);
}

}  // namespace fedguard::nn
