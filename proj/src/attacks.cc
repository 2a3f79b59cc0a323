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

#include "fedguard/attacks.h"

#include <algorithm>
#include <numeric>

#include "fedguard/error.h"

namespace fedguard::attacks {

const char* AttackKindName(AttackKind kind) {
  switch (kind) {
    case AttackKind::kNone:
      return "none";
    case AttackKind::kWeightManipulation:
      return "weight_manipulation";
    case AttackKind::kFeatureManipulation:
      return "feature_manipulation";
    case AttackKind::kLabelFlip:
      return "label_flip";
    case AttackKind::kCombined:
      return "combined";
  }
  return "?";
}

AttackKind ParseAttackKind(const std::string& text) {
  for (AttackKind k : {AttackKind::kNone, AttackKind::kWeightManipulation,
                       AttackKind::kFeatureManipulation, AttackKind::kLabelFlip,
                       AttackKind::kCombined}) {
    if (text == AttackKindName(k)) return k;
  }
  throw Error("config", "unknown attack kind '" + text + "'");
}

void ValidateBounds(std::size_t lb, std::size_t ub, std::size_t length) {
  if (!(lb < ub) || ub > length) {
    throw Error("invalid_bounds", "bounds [" + std::to_string(lb) + ", " + std::to_string(ub) +
                                      ") invalid for a buffer of " + std::to_string(length));
  }
}

double DrawWeightMultiplier(std::size_t lb, std::size_t ub, Rng& rng) {
  const double span = static_cast<double>(ub > lb ? ub - lb : lb - ub);
  return UniformRange(rng, -1.0, 1.0) * span;
}

std::vector<double> ManipulateWeights(std::span<const double> weights, std::size_t lb,
                                      std::size_t ub, Rng& rng) {
  ValidateBounds(lb, ub, weights.size());
  std::vector<double> out(weights.begin(), weights.end());
  for (std::size_t i = lb; i < ub; ++i) out[i] *= DrawWeightMultiplier(lb, ub, rng);
  return out;
}

Fingerprint ManipulateFeatures(const Fingerprint& fp, std::size_t lb, std::size_t ub,
                               Rng& rng) {
  ValidateBounds(lb, ub, fp.bits.size());
  Fingerprint out = fp;
  for (std::size_t i = lb; i < ub; ++i) out.bits[i] = Uniform01(rng) < 0.5 ? 1.0f : 0.0f;
  return out;
}

std::vector<LabeledSample> FlipLabels(std::vector<LabeledSample> batch, double fraction,
                                      Rng& rng) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error("domain_violation", "flip fraction must lie in [0, 1]");
  }
  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].label != Label::kUnlabeled) labeled.push_back(i);
  }
  const auto k = static_cast<std::size_t>(fraction * static_cast<double>(labeled.size()));
  Shuffle(labeled.begin(), labeled.end(), rng);
  for (std::size_t j = 0; j < k; ++j) {
    LabeledSample& s = batch[labeled[j]];
    s.label = FlipLabel(s.label);
  }
  return batch;
}

void TamperTrainingData(std::vector<LabeledSample>& data, const AttackConfig& config,
                        Rng& rng) {
  if (config.TouchesFeatures()) {
    for (LabeledSample& s : data) {
      const std::size_t f = s.fingerprint.bits.size();
      const Bounds b = config.feature_bounds.value_or(Bounds{0, f});
      s.fingerprint = ManipulateFeatures(s.fingerprint, b.lb, b.ub, rng);
    }
  }
  if (config.TouchesLabels()) data = FlipLabels(std::move(data), config.flip_fraction, rng);
}

void TamperWeights(std::vector<double>& weights, const AttackConfig& config, Rng& rng) {
  if (!config.TouchesWeights()) return;
  const Bounds b = config.weight_bounds.value_or(Bounds{0, weights.size()});
  weights = ManipulateWeights(weights, b.lb, b.ub, rng);
}

}  // namespace fedguard::attacks
