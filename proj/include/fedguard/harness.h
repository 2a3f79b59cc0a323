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

#ifndef FEDGUARD_HARNESS_H_
#define FEDGUARD_HARNESS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedguard/attacks.h"
#include "fedguard/federation.h"
#include "fedguard/fingerprint.h"
#include "fedguard/nn/training.h"
#include "fedguard/zoo.h"

namespace fedguard::harness {

// Everything needed to reproduce an experiment. Textual form is one
// "key = value" pair per line; '#' starts a comment; unknown keys are errors.
struct ExperimentConfig {
  std::uint64_t seed = 7;
  std::string out_dir = "out";

  // Zoo corpus.
  double signal_strength = 0.9;
  std::size_t n_benign = 2500;
  std::size_t n_malware = 2500;
  double planted_fraction = 0.15;

  // Server corpus: stock-ROM apps, unseen benign extras and a malware
  // admixture so guards can measure both classes.
  std::size_t server_system = 300;
  std::size_t server_benign_extra = 150;
  std::size_t server_malware = 450;

  // Client shards.
  std::size_t clients = 7;
  std::size_t client_labeled = 120;
  std::size_t client_unlabeled = 120;

  // Feature-specific models.
  zoo::Scale scale = zoo::Scale::kDesk;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  std::size_t sweep_epochs = 3;
  std::vector<double> lr_grid = {0.01, 0.03, 0.1};

  // Federation.
  std::size_t rounds = 20;
  std::size_t clients_per_round = 0;
  double theta_margin = 0.02;
  bool asynchronous = false;
  std::size_t local_epochs = 1;
  double local_learning_rate = 0.05;
  std::size_t guard_epochs = 30;
  double guard_learning_rate = 0.05;
  bool label_check = false;
  double match_threshold = 0.7;
  std::size_t fingerprint_cap = 100;
  double delta_max = 3.0;
  double delta_start = 5.0;
  double delta_end = 25.0;

  // Attacks.
  attacks::AttackKind attack = attacks::AttackKind::kNone;
  double malicious_fraction = 0.0;
  double flip_fraction = 1.0;
  std::optional<std::size_t> weight_lb;
  std::optional<std::size_t> weight_ub;
  std::optional<std::size_t> feature_lb;
  std::optional<std::size_t> feature_ub;

  // Throws Error("config") naming the offending key.
  void Set(const std::string& key, const std::string& value);
  std::string ToText() const;
  void Validate() const;

  std::filesystem::path DataDir() const { return std::filesystem::path(out_dir) / "data"; }
  std::filesystem::path ZooDir() const { return std::filesystem::path(out_dir) / "zoo"; }
  std::filesystem::path GuardDir() const { return std::filesystem::path(out_dir) / "guards"; }
  std::filesystem::path PseudoDir() const { return std::filesystem::path(out_dir) / "pseudo"; }
  std::filesystem::path FederateDir() const { return std::filesystem::path(out_dir) / "federate"; }

  attacks::AttackConfig Attack() const;
  federation::FederationConfig Federation() const;
};

ExperimentConfig ParseConfig(const std::string& text);
ExperimentConfig LoadConfig(const std::filesystem::path& path);

// gen-data: zoo.adfp, server.adfp and client_<i>.adfp under DataDir().
struct GeneratedFiles {
  std::filesystem::path zoo;
  std::filesystem::path server;
  std::vector<std::filesystem::path> clients;
};
GeneratedFiles CmdGenData(const ExperimentConfig& config);

struct ModelReport {
  std::string name;
  nn::SweepResult sweep;
  double learning_rate = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  nn::Metrics test;
};

// train-zoo: per model a learning-rate sweep, full training, checkpoint
// (<name>.adwt), history CSV and sweep CSV under ZooDir().
std::vector<ModelReport> CmdTrainZoo(const ExperimentConfig& config);

// Rebuilds the seven models and loads their checkpoints.
zoo::Zoo LoadZoo(const ExperimentConfig& config, const TemplateRegistry& registry);

// Models x clients matrices of agreement on the clients' unlabeled apps.
struct PseudoEvalReport {
  std::vector<std::string> models;
  std::vector<std::vector<double>> consensus_match;
  std::vector<std::vector<double>> truth_match;
  std::vector<double> consensus_truth_match;  // per client
};
PseudoEvalReport CmdPseudoEval(const ExperimentConfig& config);

struct GuardSummary {
  std::string kind;
  double baseline_accuracy = 0.0;
  double threshold = 0.0;
};
std::vector<GuardSummary> CmdTrainGuards(const ExperimentConfig& config);

struct FederateSummary {
  std::vector<std::size_t> excluded_per_round;
  std::map<std::string, std::vector<double>> accuracy_trajectory;
  // Exclusions scored against the adversary schedule, pooled over rounds.
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double exclusion_precision = 0.0;
  double exclusion_recall = 0.0;
  // Mean label-check match rate per kind, split by client role.
  std::map<std::string, double> honest_match;
  std::map<std::string, double> malicious_match;
  std::map<std::string, std::uint64_t> base_hash_initial;
  bool bases_intact = true;
};

struct FederateResult {
  std::vector<federation::RoundReport> rounds;
  FederateSummary summary;
  std::filesystem::path round_log;
};

// federate: round log (rounds.jsonl) and summary.json under FederateDir().
FederateResult CmdFederate(const ExperimentConfig& config);

struct AttackBenchReport {
  double weight_multiplier_mean = 0.0;
  double weight_span = 0.0;
  double feature_density = 0.0;
  bool weight_locality = true;
  bool feature_locality = true;
};
AttackBenchReport CmdAttackBench(const ExperimentConfig& config, std::size_t draws = 100000);

// Client shard with consensus pseudo-labels attached to its unlabeled apps.
federation::ClientData PseudoLabelClient(const Dataset& shard, const zoo::Zoo& models);

// Frozen bases of the CNN-based models.
std::map<std::string, federation::KindContext> CollaborativeKinds(const zoo::Zoo& models);

}  // namespace fedguard::harness

#endif  // FEDGUARD_HARNESS_H_
