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

#ifndef FEDGUARD_ATTACKS_H_
#define FEDGUARD_ATTACKS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedguard/fingerprint.h"
#include "fedguard/random.h"

namespace fedguard::attacks {

enum class AttackKind {
  kNone,
  kWeightManipulation,
  kFeatureManipulation,
  kLabelFlip,
  // Feature manipulation, then label flipping.
  kCombined,
};

const char* AttackKindName(AttackKind kind);
AttackKind ParseAttackKind(const std::string& text);

// Half-open index range [lb, ub) into the attacked buffer.
struct Bounds {
  std::size_t lb = 0;
  std::size_t ub = 0;
};

struct AttackConfig {
  AttackKind kind = AttackKind::kNone;
  // Unset means the whole buffer.
  std::optional<Bounds> weight_bounds;
  std::optional<Bounds> feature_bounds;
  double flip_fraction = 1.0;
  // Per-round probability that a participating client is malicious.
  double malicious_fraction = 0.0;
  std::uint64_t seed = 0;

  bool TouchesWeights() const { return kind == AttackKind::kWeightManipulation; }
  bool TouchesFeatures() const {
    return kind == AttackKind::kFeatureManipulation || kind == AttackKind::kCombined;
  }
  bool TouchesLabels() const {
    return kind == AttackKind::kLabelFlip || kind == AttackKind::kCombined;
  }
};

// Throws Error("invalid_bounds") unless 0 <= lb < ub <= length.
void ValidateBounds(std::size_t lb, std::size_t ub, std::size_t length);

// u * (ub - lb) with u ~ U[-1, 1].
double DrawWeightMultiplier(std::size_t lb, std::size_t ub, Rng& rng);

// Every index in [lb, ub) is scaled by its own multiplier; the rest is copied.
std::vector<double> ManipulateWeights(std::span<const double> weights, std::size_t lb,
                                      std::size_t ub, Rng& rng);

// Every bit in [lb, ub) becomes 1 if U[0, 1] < 0.5, else 0.
Fingerprint ManipulateFeatures(const Fingerprint& fp, std::size_t lb, std::size_t ub,
                               Rng& rng);

// Swaps benign/malware on floor(fraction * n) randomly chosen labeled samples.
// The chosen subset depends only on the rng state and which samples are
// labeled, so a second call with an identically seeded rng undoes the first.
std::vector<LabeledSample> FlipLabels(std::vector<LabeledSample> batch, double fraction,
                                      Rng& rng);

// Data-side tampering of a malicious client's local training set.
void TamperTrainingData(std::vector<LabeledSample>& data, const AttackConfig& config,
                        Rng& rng);
// Weight-side tampering of an outgoing update.
void TamperWeights(std::vector<double>& weights, const AttackConfig& config, Rng& rng);

}  // namespace fedguard::attacks

#endif  // FEDGUARD_ATTACKS_H_
