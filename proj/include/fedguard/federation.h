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

#ifndef FEDGUARD_FEDERATION_H_
#define FEDGUARD_FEDERATION_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedguard/attacks.h"
#include "fedguard/consensus.h"
#include "fedguard/fingerprint.h"
#include "fedguard/nn/network.h"
#include "fedguard/nn/training.h"
#include "fedguard/transfer.h"

namespace fedguard::federation {

using WeightVector = std::vector<double>;

enum class Exclusion { kNone, kBelowThreshold, kNonFinite, kLabelMismatch, kStraggler };
const char* ExclusionName(Exclusion reason);

struct Verdict {
  bool accepted = true;
  Exclusion reason = Exclusion::kNone;
  double accuracy = 0.0;
  double loss = 0.0;
};

// A collaborative model kind: the frozen pre-trained base shared by server
// and clients, and the fingerprint indices it reads.
struct KindContext {
  std::string kind;
  std::vector<std::size_t> projection;
  nn::Network base;
};

struct GuardModel {
  std::string kind;
  transfer::CollaborativeModel model;
  std::vector<std::size_t> projection;
  double baseline_accuracy = 0.0;
  double threshold = 0.0;
  // Server validation split, already passed through the frozen base.
  std::vector<nn::Sample> validation;

  std::vector<double> Embed(const Fingerprint& fp) const;
};

struct GuardConfig {
  transfer::HeadSpec head;
  nn::TrainingConfig training{.learning_rate = 0.05, .batch_size = 32, .epochs = 30};
  // threshold = baseline - theta_margin, clamped to [0, 1].
  double theta_margin = 0.02;
  std::optional<double> theta;
};

// One guard per kind, trained on the server's train split and calibrated on
// its validation split. Throws Error("empty_classes") unless both classes
// are present in both splits.
std::map<std::string, GuardModel> TrainGuards(const Dataset& server_data,
                                              const std::map<std::string, KindContext>& kinds,
                                              const GuardConfig& config);

// Loads `head_weights` into the guard's base and evaluates it on the server
// validation set. Throws Error("length_mismatch") on a wrong length.
Verdict GuardCheckWeights(const GuardModel& guard, std::span<const double> head_weights);

struct LabelCheck {
  Verdict verdict;
  double match_rate = 0.0;
  std::map<std::string, double> per_kind_match;
  std::size_t fingerprints = 0;
};

// Guards vote per fingerprint (majority, ties -> malware); each client head,
// loaded into the matching guard base, labels the same fingerprints. The
// client is excluded when the pooled match rate is below `match_threshold`.
// Embeddings may be supplied per kind to skip recomputation.
LabelCheck GuardCheckLabels(const std::map<std::string, GuardModel>& guards,
                            const std::map<std::string, WeightVector>& client_heads,
                            std::span<const Fingerprint> fingerprints, double match_threshold,
                            const std::map<std::string, std::vector<std::vector<double>>>*
                                embeddings = nullptr);

struct WeightedUpdate {
  std::span<const double> weights;
  std::size_t samples = 0;
};

struct Aggregate {
  WeightVector weights;
  bool finite = true;
};

// Sample-count weighted mean sum_i (t_i / sum t) f_i, computed as a running
// weighted mean. Throws Error("empty_batch") for no updates and
// Error("length_mismatch") for unequal lengths.
Aggregate AggregateUpdates(std::span<const WeightedUpdate> updates);

// Local data of one simulated phone. `pseudo[i]` marks samples whose label
// came from consensus pseudo-labelling.
struct ClientData {
  std::vector<LabeledSample> samples;
  std::vector<bool> pseudo;
};

struct ClientState {
  std::size_t client_id = 0;
  ClientData data;
  std::map<std::string, transfer::CollaborativeModel> models;
  bool malicious = false;

  std::size_t sample_count() const { return data.samples.size(); }
};

struct ClientUpdate {
  std::size_t client_id = 0;
  std::string kind;
  WeightVector weights;
  std::size_t samples = 0;
};

struct FederationConfig {
  std::size_t rounds = 20;
  // 0 selects every client each round.
  std::size_t clients_per_round = 0;
  // Asynchronous mode drops clients whose latency exceeds the deadline.
  bool asynchronous = false;
  double latency_mean_s = 3.5;
  double latency_stddev_s = 0.5;
  double deadline_s = 5.0;

  std::size_t local_epochs = 1;
  double local_learning_rate = 0.05;
  std::size_t batch_size = 32;
  consensus::DeltaSchedule delta;

  bool guards_enabled = true;
  bool label_check = false;
  double match_threshold = 0.7;
  std::size_t fingerprint_cap = 100;

  GuardConfig guard;
  attacks::AttackConfig attack;
  std::uint64_t seed = 0;
};

struct ClientRecord {
  std::size_t client_id = 0;
  bool malicious = false;
  attacks::AttackKind attack = attacks::AttackKind::kNone;
  std::optional<attacks::Bounds> weight_bounds;
  std::optional<attacks::Bounds> feature_bounds;
  double latency_s = 0.0;
  std::size_t samples = 0;
  std::map<std::string, Verdict> weight_verdicts;
  std::optional<LabelCheck> label_check;
  Verdict verdict;
  double loss_share = 0.0;
};

struct KindSummary {
  std::size_t accepted = 0;
  bool aggregate_finite = true;
  bool used_fallback = false;
  double validation_accuracy = 0.0;
  std::uint64_t broadcast_hash = 0;
};

struct RoundReport {
  std::size_t round = 0;
  std::vector<std::size_t> participants;
  std::vector<ClientRecord> clients;
  std::map<std::string, KindSummary> kinds;

  std::vector<std::size_t> Excluded() const;
  std::vector<std::size_t> Malicious() const;
};

// One JSON object on a single line.
std::string RoundReportJson(const RoundReport& report);

// Called on every outgoing update after tampering, before guard checks.
using UpdateInterceptor = std::function<void(ClientUpdate&)>;

class Simulation {
 public:
  // Trains the guards and broadcasts their heads as the initial
  // collaborative weights.
  Simulation(std::map<std::string, KindContext> kinds, const Dataset& server_data,
             std::vector<ClientData> clients, FederationConfig config);

  RoundReport RunRound();
  std::vector<RoundReport> Run();

  const std::map<std::string, GuardModel>& guards() const { return guards_; }
  const std::vector<ClientState>& clients() const { return clients_; }
  const std::map<std::string, WeightVector>& broadcast() const { return broadcast_; }
  const FederationConfig& config() const { return config_; }
  std::size_t rounds_completed() const { return round_; }
  // Base hashes captured at construction, keyed by kind.
  const std::map<std::string, std::uint64_t>& initial_base_hashes() const {
    return initial_base_hashes_;
  }
  std::size_t head_length(const std::string& kind) const;

  void set_update_interceptor(UpdateInterceptor f) { interceptor_ = std::move(f); }

 private:
  struct Embedded {
    std::vector<std::vector<double>> inputs;
  };

  std::map<std::string, WeightVector> TrainLocally(ClientState& client, std::size_t round,
                                                   const std::vector<LabeledSample>& samples,
                                                   const std::map<std::string, Embedded>& cache);
  std::vector<Fingerprint> LabelCheckFingerprints(const std::vector<LabeledSample>& samples) const;

  std::map<std::string, KindContext> kinds_;
  FederationConfig config_;
  std::map<std::string, GuardModel> guards_;
  std::vector<ClientState> clients_;
  // Per client, per kind embeddings of its untampered local samples.
  std::vector<std::map<std::string, Embedded>> client_cache_;
  std::map<std::string, WeightVector> broadcast_;
  std::map<std::string, std::uint64_t> initial_base_hashes_;
  UpdateInterceptor interceptor_;
  std::size_t round_ = 0;
};

}  // namespace fedguard::federation

#endif  // FEDGUARD_FEDERATION_H_
