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

#ifndef FEDGUARD_NN_TRAINING_H_
#define FEDGUARD_NN_TRAINING_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "fedguard/label.h"
#include "fedguard/nn/network.h"

namespace fedguard::nn {

struct Sample {
  std::vector<double> input;
  Label label = Label::kBenign;
};

// A sample reference with its weight in the batch loss.
struct Example {
  std::span<const double> input;
  Label label = Label::kBenign;
  double weight = 1.0;
};

// Binary cross-entropy summed over the two sigmoid outputs against the one-hot
// target of `label`, evaluated from the pre-sigmoid logits.
double BinaryCrossEntropyFromLogits(double logit_benign, double logit_malware,
                                    Label label);
double SampleLoss(const Network& net, std::span<const double> input, Label label);

struct LossGradient {
  double loss = 0.0;
  // Trainable parameters only, in FlatParameters(true) order.
  std::vector<double> gradient;
  bool finite = true;
};

// loss = sum_i weight_i * BCE_i.
LossGradient ComputeLossGradient(const Network& net, std::span<const Example> batch);

struct StepResult {
  double loss = 0.0;  // before the step
  bool applied = false;
};

// W <- W - lr * grad(sum_i weight_i * BCE_i). A non-finite loss or gradient
// leaves the weights untouched and reports applied = false.
StepResult SgdStep(Network& net, std::span<const Example> batch, double learning_rate);

// Plain mean-BCE step over `batch`.
StepResult BackwardAndStep(Network& net, std::span<const Sample> batch,
                           double learning_rate);

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  void Add(Label truth, Label predicted);
};

// Precision, recall and F1 refer to the malware class.
struct Metrics {
  double loss = 0.0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

Metrics MetricsFromConfusion(const ConfusionCounts& counts, double mean_loss);
Metrics Evaluate(const Network& net, std::span<const Sample> samples);

enum class CheckpointMetric { kValidationAccuracy };

struct TrainingConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  CheckpointMetric checkpoint_metric = CheckpointMetric::kValidationAccuracy;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  Metrics train;
  Metrics validation;
};

// Keeps the snapshot with the highest score. Equal scores are resolved by the
// lower tie-break value (validation loss during training), then by the
// earlier epoch.
class BestSnapshot {
 public:
  void Observe(std::size_t epoch, double score, const Network& net,
               double tie_break = 0.0);

  bool has_value() const { return network_.has_value(); }
  const Network& network() const { return *network_; }
  Network Take() { return std::move(*network_); }
  std::size_t epoch() const { return epoch_; }
  double score() const { return score_; }

 private:
  std::optional<Network> network_;
  std::size_t epoch_ = 0;
  double score_ = 0.0;
  double tie_break_ = 0.0;
};

struct TrainResult {
  Network best;
  std::size_t best_epoch = 0;
  double best_validation_accuracy = 0.0;
  std::vector<EpochRecord> history;
};

// Mini-batch SGD with a seeded shuffle per epoch. Train metrics are
// accumulated from the forward passes of the epoch; validation metrics from
// a full evaluation at epoch end.
TrainResult Train(const Network& initial, std::span<const Sample> train,
                  std::span<const Sample> validation, const TrainingConfig& config);

// epoch,loss,val_loss,accuracy,val_accuracy,f1,val_f1
void WriteHistoryCsv(std::span<const EpochRecord> history, std::ostream& out);

struct SweepEntry {
  double learning_rate = 0.0;
  double best_validation_accuracy = 0.0;
  double first_loss = 0.0;
  double final_loss = 0.0;
  // Training loss failed to decrease or became non-finite.
  bool diverged = false;
};

struct SweepResult {
  std::vector<SweepEntry> entries;
  double best_learning_rate = 0.0;
};

// One short run per learning rate (config.epochs is the per-run budget).
// Ties keep the earlier grid entry.
SweepResult LrSweep(const std::function<Network()>& builder,
                    std::span<const Sample> train, std::span<const Sample> validation,
                    std::span<const double> grid, const TrainingConfig& config);

}  // namespace fedguard::nn

#endif  // FEDGUARD_NN_TRAINING_H_
