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

#ifndef FEDGUARD_FINGERPRINT_H_
#define FEDGUARD_FINGERPRINT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedguard/label.h"

namespace fedguard {

enum class Provenance : std::uint8_t { kSystem = 0, kUser = 1, kSynthetic = 2 };
enum class Split : std::uint8_t { kTrain = 0, kValidation = 1, kTest = 2 };

const char* ProvenanceName(Provenance provenance);
const char* SplitName(Split split);

// A named, contiguous block [start, end) of fingerprint indices.
struct FeatureTemplate {
  std::string name;
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t width() const { return end - start; }
  bool operator==(const FeatureTemplate&) const = default;
};

// Ordered set of disjoint templates exactly covering [0, F).
class TemplateRegistry {
 public:
  TemplateRegistry() = default;
  // Validates disjointness and covering; throws Error otherwise.
  explicit TemplateRegistry(std::vector<FeatureTemplate> templates);

  const std::vector<FeatureTemplate>& templates() const { return templates_; }
  std::size_t total_features() const { return total_features_; }
  std::size_t size() const { return templates_.size(); }

  const FeatureTemplate* Find(const std::string& name) const;
  // Throws Error("unknown_template") when absent.
  const FeatureTemplate& At(const std::string& name) const;
  bool Contains(const std::string& name) const { return Find(name) != nullptr; }

  bool operator==(const TemplateRegistry&) const = default;

 private:
  std::vector<FeatureTemplate> templates_;
  std::size_t total_features_ = 0;
};

using TemplateWidths = std::vector<std::pair<std::string, std::size_t>>;

TemplateRegistry BuildRegistry(const TemplateWidths& spec);

// The eleven fingerprint categories at desk scale (F = 256).
const TemplateWidths& DefaultTemplateWidths();
TemplateRegistry DefaultRegistry();

struct Fingerprint {
  std::vector<float> bits;
  std::string app_id;

  bool operator==(const Fingerprint&) const = default;
};

struct LabeledSample {
  Fingerprint fingerprint;
  Label label = Label::kUnlabeled;
  Provenance provenance = Provenance::kSynthetic;
  Split split = Split::kTrain;
  // Ground truth of unlabeled samples; read by evaluation code only.
  std::optional<Label> hidden_truth;

  bool operator==(const LabeledSample&) const = default;
};

struct Dataset {
  TemplateRegistry registry;
  std::vector<LabeledSample> samples;

  std::vector<const LabeledSample*> WithSplit(Split split) const;
  // Throws on F mismatch, non-binary bits, or system samples not benign.
  void Validate() const;

  bool operator==(const Dataset&) const = default;
};

// Registry-ordered indices covered by the named templates. Throws on an empty
// selection or an unknown name.
std::vector<std::size_t> ProjectionIndices(const TemplateRegistry& registry,
                                           std::span<const std::string> names);

Fingerprint Project(const Fingerprint& fp, const TemplateRegistry& registry,
                    std::span<const std::string> names);

struct SynthParams {
  std::size_t n_benign = 0;
  std::size_t n_malware = 0;
  std::size_t n_unlabeled = 0;
  double signal_strength = 0.9;
  std::uint64_t seed = 0;
  // Seed of the planted-feature plan; defaults to `seed`. Corpora meant to
  // share one class distribution share this value.
  std::optional<std::uint64_t> plan_seed;
  // Share of every template planted as class-indicative, per class.
  double planted_fraction = 0.15;
  double background_rate = 0.1;
  Provenance provenance = Provenance::kSynthetic;
  std::string id_prefix = "app";
};

// Class-indicative feature indices; disjoint between the two classes and
// present in every template.
struct PlantedFeatures {
  std::vector<std::size_t> benign;
  std::vector<std::size_t> malware;
};

PlantedFeatures PlanFeatures(const TemplateRegistry& registry,
                             const SynthParams& params);

Dataset SynthGenerate(const TemplateRegistry& registry,
                      const SynthParams& params);

// Binary "ADFP" container; a path ending in ".jsonl" selects the JSON-lines
// twin. App ids and hidden ground truth travel in a "<path>.ids" sidecar for
// the binary form.
void SaveDataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset LoadDataset(const std::filesystem::path& path);

}  // namespace fedguard

#endif  // FEDGUARD_FINGERPRINT_H_
