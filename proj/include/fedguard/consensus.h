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

#ifndef FEDGUARD_CONSENSUS_H_
#define FEDGUARD_CONSENSUS_H_

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fedguard/fingerprint.h"
#include "fedguard/label.h"
#include "fedguard/nn/network.h"
#include "fedguard/nn/training.h"
#include "fedguard/zoo.h"

namespace fedguard::consensus {

struct ClassProbabilities {
  double p_benign = 0.0;
  double p_malware = 0.0;
  std::string model_name;
};

// Benign iff P(benign) >= P(malware). Throws Error("non_finite") for
// non-finite input and Error("domain_violation") outside [0, 1].
Label Classify(const ClassProbabilities& probs);

struct Vote {
  Label label = Label::kMalware;
  std::size_t count = 0;
};

// Boyer-Moore majority vote followed by a verification count. Without a
// strict majority the result is malware with its vote count.
Vote MajorityVote(std::span<const Label> labels);

struct ConsensusResult {
  Label label = Label::kMalware;
  std::size_t votes_for = 0;
  std::size_t voters = 0;
  std::vector<ClassProbabilities> per_model;
  std::vector<Label> per_model_label;
};

// Votes of already computed model outputs.
ConsensusResult ConsensusOf(std::vector<ClassProbabilities> per_model);

// Every zoo model classifies its own projection of `fp`.
ConsensusResult PseudoLabel(const Fingerprint& fp, const zoo::Zoo& models);

// Weight of the pseudo-labelled loss term: 0 before `start_epoch`, `delta_max`
// from `end_epoch` on, linear in between.
struct DeltaSchedule {
  double delta_max = 3.0;
  double start_epoch = 5.0;
  double end_epoch = 25.0;

  double At(double epoch) const;
};

// mean(labeled) + delta * mean(pseudo); an empty side contributes 0.
double CombineLosses(std::span<const double> labeled_losses,
                     std::span<const double> pseudo_losses, double delta);

// Builds the weighted batch whose summed BCE equals CombineLosses(); pass
// the result to nn::SgdStep or nn::ComputeLossGradient.
std::vector<nn::Example> CombinedBatch(std::span<const nn::Example> labeled,
                                       std::span<const nn::Example> pseudo, double delta);

double CombinedLoss(const nn::Network& net, std::span<const nn::Example> labeled,
                    std::span<const nn::Example> pseudo, double epoch,
                    const DeltaSchedule& schedule);

// app_id, per-model label/P(benign)/P(malware), consensus label, vote count.
void WriteAuditHeader(const std::vector<std::string>& model_names, std::ostream& out);
void WriteAuditRow(const std::string& app_id, const ConsensusResult& result,
                   std::ostream& out);

}  // namespace fedguard::consensus

#endif  // FEDGUARD_CONSENSUS_H_
