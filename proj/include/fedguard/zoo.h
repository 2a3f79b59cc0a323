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

#ifndef FEDGUARD_ZOO_H_
#define FEDGUARD_ZOO_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedguard/fingerprint.h"
#include "fedguard/nn/network.h"

namespace fedguard::zoo {

enum class Architecture { kCnn, kMlp };

// kPaper builds the full-size layer widths; kDesk keeps the topology and
// shrinks widths so models train in minutes on a CPU.
enum class Scale { kPaper, kDesk };

const char* ArchitectureName(Architecture a);
const char* ScaleName(Scale s);
Scale ParseScale(const std::string& text);

struct ModelSpec {
  std::string name;
  Architecture architecture = Architecture::kCnn;
  std::vector<std::string> templates;
  Scale scale = Scale::kDesk;
};

// "Static", "HM1", ..., "HM6".
const std::vector<std::string>& ModelNames();
// The CNN-based models that get collaborative counterparts and guards.
const std::vector<std::string>& CollaborativeModelNames();

// Feature selection and architecture class of one model. Throws
// Error("wrong_name") for an unknown model.
ModelSpec TableSpec(const std::string& name, Scale scale = Scale::kDesk);

// Side of the smallest square grid holding `features` values.
std::size_t GridSide(std::size_t features);

// reshape -> 4 x [2 x (conv3x3 + relu) + maxpool] -> global_avg_pool ->
// 2 x (dense + tanh) -> dense(2) + sigmoid. Base ends after the pooling.
nn::Network BuildStatic(std::size_t features, Scale scale, Rng& rng);
// flatten -> 2 x (dense + tanh) -> dense(2) + sigmoid. Base ends after the
// first hidden layer. Names: HM1, HM2, HM4.
nn::Network BuildMlpHelper(const std::string& name, std::size_t features, Scale scale,
                           Rng& rng);
// reshape -> conv,conv,pool,conv,conv,pool -> global_avg_pool -> dense + tanh
// -> dense(2) + sigmoid. Base ends after the pooling. Names: HM3, HM5, HM6.
nn::Network BuildCnnHelper(const std::string& name, std::size_t features, Scale scale,
                           Rng& rng);

nn::Network BuildModel(const ModelSpec& spec, std::size_t features, Rng& rng);

struct ZooModel {
  ModelSpec spec;
  // Fingerprint indices feeding the model, registry order.
  std::vector<std::size_t> projection;
  nn::Network network;

  std::vector<double> Input(const Fingerprint& fp) const;
};

using Zoo = std::map<std::string, ZooModel>;

// All seven models with freshly initialised weights. Throws
// Error("missing_template") naming the first absent template.
Zoo BuildAll(const TemplateRegistry& registry, Scale scale, std::uint64_t seed);

// Gathers `indices` of `fp` as network input.
std::vector<double> GatherInput(const Fingerprint& fp, const std::vector<std::size_t>& indices);

}  // namespace fedguard::zoo

#endif  // FEDGUARD_ZOO_H_
