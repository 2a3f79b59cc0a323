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

#include "fedguard/nn/training.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedguard/error.h"
#include "fedguard/random.h"

namespace fedguard::nn {
namespace {

double Softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double Target(Label label, int output) {
  return (label == Label::kMalware) == (output == 1) ? 1.0 : 0.0;
}

void RequireClassifier(const Network& net) {
  if (!net.EndsWithSigmoid()) {
    throw Error("shape_mismatch", net.name() + ": loss needs a 2-unit sigmoid output");
  }
}

// Per-layer parameter gradients; empty for frozen layers.
using ParamGrads = std::vector<std::vector<Tensor>>;

ParamGrads ZeroGrads(const Network& net) {
  ParamGrads g(net.layer_count());
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const Layer& l = net.layer(i);
    if (!l.trainable()) continue;
    for (const Tensor& p : l.params()) g[i].emplace_back(p.shape());
  }
  return g;
}

std::size_t FirstTrainableLayer(const Network& net) {
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    if (net.layer(i).trainable() && net.layer(i).parameter_count() > 0) return i;
  }
  return net.layer_count();
}

struct Workspace {
  std::vector<Tensor> acts;
  Tensor grad_a;
  Tensor grad_b;
};

struct BatchStats {
  double unweighted_loss_sum = 0.0;
  ConfusionCounts confusion;
};

// Accumulates sum_i w_i * dBCE_i/dW into `grads`; returns sum_i w_i * BCE_i.
double Accumulate(const Network& net, std::span<const Example> batch, ParamGrads& grads,
                  Workspace& ws, BatchStats* stats) {
  const std::size_t n_layers = net.layer_count();
  const std::size_t first = FirstTrainableLayer(net);
  double loss = 0.0;
  for (const Example& ex : batch) {
    net.ForwardTrace(ex.input, ws.acts);
    const Tensor& logits = ws.acts[n_layers - 1];
    const Tensor& probs = ws.acts[n_layers];
    const double bce = BinaryCrossEntropyFromLogits(logits[0], logits[1], ex.label);
    loss += ex.weight * bce;
    if (stats != nullptr) {
      stats->unweighted_loss_sum += bce;
      stats->confusion.Add(ex.label, DecideLabel(probs[0], probs[1]));
    }
    if (first >= n_layers - 1) continue;
    // d(w * BCE)/dlogit = w * (sigmoid(logit) - target).
    ws.grad_a.Reshape(logits.shape());
    for (int j = 0; j < 2; ++j) ws.grad_a[j] = ex.weight * (probs[j] - Target(ex.label, j));
    for (std::size_t i = n_layers - 1; i-- > first;) {
      const Layer& l = net.layer(i);
      std::vector<Tensor>* pg = l.trainable() && !grads[i].empty() ? &grads[i] : nullptr;
      Tensor* gin = i > first ? &ws.grad_b : nullptr;
      l.Backward(ws.acts[i], ws.acts[i + 1], ws.grad_a, gin, pg);
      if (gin != nullptr) std::swap(ws.grad_a, ws.grad_b);
    }
  }
  return loss;
}

bool GradsFinite(const ParamGrads& grads) {
  for (const auto& layer : grads) {
    for (const Tensor& t : layer) {
      if (!t.IsFinite()) return false;
    }
  }
  return true;
}

void ApplyGrads(Network& net, const ParamGrads& grads, double lr) {
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    Layer& l = net.layer(i);
    if (!l.trainable() || grads[i].empty()) continue;
    for (std::size_t p = 0; p < l.params().size(); ++p) {
      Tensor& w = l.params()[p];
      const Tensor& g = grads[i][p];
      for (std::size_t k = 0; k < w.size(); ++k) w[k] -= lr * g[k];
    }
  }
}

std::vector<Example> MeanWeighted(std::span<const Sample> batch) {
  std::vector<Example> out;
  out.reserve(batch.size());
  const double w = 1.0 / static_cast<double>(batch.size());
  for (const Sample& s : batch) out.push_back({s.input, s.label, w});
  return out;
}

}  // namespace

double BinaryCrossEntropyFromLogits(double logit_benign, double logit_malware,
                                    Label label) {
  // -[y log s(z) + (1-y) log(1-s(z))] = softplus(z) - y z
  return Softplus(logit_benign) - Target(label, 0) * logit_benign +
         Softplus(logit_malware) - Target(label, 1) * logit_malware;
}

double SampleLoss(const Network& net, std::span<const double> input, Label label) {
  RequireClassifier(net);
  std::vector<Tensor> acts;
  net.ForwardTrace(input, acts);
  const Tensor& logits = acts[net.layer_count() - 1];
  return BinaryCrossEntropyFromLogits(logits[0], logits[1], label);
}

LossGradient ComputeLossGradient(const Network& net, std::span<const Example> batch) {
  RequireClassifier(net);
  if (batch.empty()) throw Error("empty_batch", "gradient of an empty batch");
  ParamGrads grads = ZeroGrads(net);
  Workspace ws;
  LossGradient out;
  out.loss = Accumulate(net, batch, grads, ws, nullptr);
  for (const auto& layer : grads) {
    for (const Tensor& t : layer) out.gradient.insert(out.gradient.end(), t.data(), t.data() + t.size());
  }
  out.finite = std::isfinite(out.loss) && GradsFinite(grads);
  return out;
}

StepResult SgdStep(Network& net, std::span<const Example> batch, double learning_rate) {
  RequireClassifier(net);
  if (batch.empty()) throw Error("empty_batch", "SGD step on an empty batch");
  if (!(learning_rate >= 0.0)) throw Error("domain_violation", "learning rate must be >= 0");
  ParamGrads grads = ZeroGrads(net);
  Workspace ws;
  StepResult r;
  r.loss = Accumulate(net, batch, grads, ws, nullptr);
  if (std::isfinite(r.loss) && GradsFinite(grads)) {
    ApplyGrads(net, grads, learning_rate);
    r.applied = true;
  }
  return r;
}

StepResult BackwardAndStep(Network& net, std::span<const Sample> batch,
                           double learning_rate) {
  if (batch.empty()) throw Error("empty_batch", "SGD step on an empty batch");
  std::vector<Example> ex = MeanWeighted(batch);
  return SgdStep(net, ex, learning_rate);
}

void ConfusionCounts::Add(Label truth, Label predicted) {
  const bool t = truth == Label::kMalware;
  const bool p = predicted == Label::kMalware;
  if (t && p) ++tp;
  else if (!t && p) ++fp;
  else if (t && !p) ++fn;
  else ++tn;
}

Metrics MetricsFromConfusion(const ConfusionCounts& c, double mean_loss) {
  Metrics m;
  m.loss = mean_loss;
  const auto total = static_cast<double>(c.total());
  m.accuracy = total > 0 ? static_cast<double>(c.tp + c.tn) / total : 0.0;
  m.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  m.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

Metrics Evaluate(const Network& net, std::span<const Sample> samples) {
  RequireClassifier(net);
  if (samples.empty()) throw Error("empty_split", "evaluation on an empty sample set");
  std::vector<Tensor> acts;
  ConfusionCounts c;
  double loss = 0.0;
  const std::size_t n_layers = net.layer_count();
  for (const Sample& s : samples) {
    if (s.label == Label::kUnlabeled) {
      throw Error("unlabeled", "evaluation requires labeled samples");
    }
    net.ForwardTrace(s.input, acts);
    loss += BinaryCrossEntropyFromLogits(acts[n_layers - 1][0], acts[n_layers - 1][1], s.label);
    c.Add(s.label, DecideLabel(acts[n_layers][0], acts[n_layers][1]));
  }
  return MetricsFromConfusion(c, loss / static_cast<double>(samples.size()));
}

void BestSnapshot::Observe(std::size_t epoch, double score, const Network& net,
                           double tie_break) {
  if (network_.has_value()) {
    const bool better = score > score_ || (score == score_ && tie_break < tie_break_);
    if (!better) return;
  }
  network_ = net;
  epoch_ = epoch;
  score_ = score;
  tie_break_ = tie_break;
}

TrainResult Train(const Network& initial, std::span<const Sample> train,
                  std::span<const Sample> validation, const TrainingConfig& config) {
  RequireClassifier(initial);
  if (train.empty() || validation.empty()) {
    throw Error("empty_split", "training needs non-empty train and validation splits");
  }
  if (config.batch_size == 0 || config.epochs == 0) {
    throw Error("domain_violation", "batch size and epochs must be positive");
  }
  Network net = initial;
  TrainResult result;
  BestSnapshot best;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  ParamGrads grads = ZeroGrads(net);
  Workspace ws;
  std::vector<Example> batch;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng rng = MakeRng(config.seed, {0x65706f6368ULL, epoch});
    Shuffle(order.begin(), order.end(), rng);
    BatchStats stats;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double w = 1.0 / static_cast<double>(end - start);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) {
        const Sample& s = train[order[k]];
        batch.push_back({s.input, s.label, w});
      }
      for (auto& layer : grads) {
        for (Tensor& t : layer) t.Fill(0.0);
      }
      const double loss = Accumulate(net, batch, grads, ws, &stats);
      if (std::isfinite(loss) && GradsFinite(grads)) ApplyGrads(net, grads, config.learning_rate);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train = MetricsFromConfusion(stats.confusion,
                                     stats.unweighted_loss_sum / static_cast<double>(train.size()));
    rec.validation = Evaluate(net, validation);
    best.Observe(epoch, rec.validation.accuracy, net, rec.validation.loss);
    result.history.push_back(rec);
  }
  result.best_epoch = best.epoch();
  result.best_validation_accuracy = best.score();
  result.best = best.Take();
  return result;
}

void WriteHistoryCsv(std::span<const EpochRecord> history, std::ostream& out) {
  out << "epoch,loss,val_loss,accuracy,val_accuracy,f1,val_f1\n";
  for (const EpochRecord& r : history) {
    out << r.epoch << ',' << r.train.loss << ',' << r.validation.loss << ','
        << r.train.accuracy << ',' << r.validation.accuracy << ',' << r.train.f1 << ','
        << r.validation.f1 << '\n';
  }
}

SweepResult LrSweep(const std::function<Network()>& builder, std::span<const Sample> train,
                    std::span<const Sample> validation, std::span<const double> grid,
                    const TrainingConfig& config) {
  if (grid.empty()) throw Error("empty_grid", "learning-rate grid is empty");
  SweepResult out;
  double best_acc = -1.0;
  for (double lr : grid) {
    TrainingConfig c = config;
    c.learning_rate = lr;
    TrainResult r = Train(builder(), train, validation, c);
    SweepEntry e;
    e.learning_rate = lr;
    e.best_validation_accuracy = r.best_validation_accuracy;
    e.first_loss = r.history.front().train.loss;
    e.final_loss = r.history.back().train.loss;
    // One epoch gives no trajectory; only a non-finite loss counts then.
    e.diverged = !std::isfinite(e.final_loss) ||
                 (r.history.size() > 1 && !(e.final_loss < e.first_loss));
    if (e.best_validation_accuracy > best_acc) {
      best_acc = e.best_validation_accuracy;
      out.best_learning_rate = lr;
    }
    out.entries.push_back(e);
  }
  return out;
}

}  // namespace fedguard::nn
