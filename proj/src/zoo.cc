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

#include "fedguard/zoo.h"

#include <algorithm>
#include <cmath>

#include "fedguard/error.h"

namespace fedguard::zoo {
namespace {

using nn::Activation;

const std::vector<std::string> kBasic = {"permissions", "protection-levels",
                                         "device-features"};
const std::vector<std::string> kComponents = {"intents", "categories", "providers",
                                              "receivers", "services"};

std::vector<std::string> Concat(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

struct Row {
  Architecture architecture;
  std::vector<std::string> templates;
};

const std::map<std::string, Row>& Table() {
  static const std::map<std::string, Row> kTable = {
      {"Static", {Architecture::kCnn,
                  Concat({{"manifest-attributes"}, kBasic, kComponents,
                          {"api-classes", "api-sensitive-methods"}})}},
      {"HM1", {Architecture::kMlp, kBasic}},
      {"HM2", {Architecture::kMlp, Concat({kBasic, kComponents})}},
      {"HM3", {Architecture::kCnn,
               Concat({kBasic, {"api-classes", "api-sensitive-methods"}})}},
      {"HM4", {Architecture::kMlp, Concat({kBasic, {"api-classes"}})}},
      {"HM5", {Architecture::kCnn, Concat({kBasic, kComponents, {"api-classes"}})}},
      {"HM6", {Architecture::kCnn, Concat({kBasic, kComponents,
                                           {"api-classes", "api-sensitive-methods"}})}},
  };
  return kTable;
}

void AddClassifierOutput(nn::Network& net) {
  net.Add(nn::Dense(2)).Add(nn::Act(Activation::kSigmoid));
}

void CheckName(const std::string& name, std::initializer_list<const char*> allowed,
               const char* builder) {
  for (const char* a : allowed) {
    if (name == a) return;
  }
  throw Error("wrong_name", "'" + name + "' is not built by " + builder);
}

}  // namespace

const char* ArchitectureName(Architecture a) { return a == Architecture::kCnn ? "CNN" : "MLP"; }
const char* ScaleName(Scale s) { return s == Scale::kPaper ? "paper" : "desk"; }

Scale ParseScale(const std::string& text) {
  if (text == "paper") return Scale::kPaper;
  if (text == "desk") return Scale::kDesk;
  throw Error("config", "unknown model scale '" + text + "'");
}

const std::vector<std::string>& ModelNames() {
  static const std::vector<std::string> kNames = {"Static", "HM1", "HM2", "HM3",
                                                  "HM4",    "HM5", "HM6"};
  return kNames;
}

const std::vector<std::string>& CollaborativeModelNames() {
  static const std::vector<std::string> kNames = {"Static", "HM3", "HM5", "HM6"};
  return kNames;
}

ModelSpec TableSpec(const std::string& name, Scale scale) {
  auto it = Table().find(name);
  if (it == Table().end()) throw Error("wrong_name", "unknown model '" + name + "'");
  return {name, it->second.architecture, it->second.templates, scale};
}

std::size_t GridSide(std::size_t features) {
  auto side = static_cast<std::size_t>(std::sqrt(static_cast<double>(features)));
  while (side * side < features) ++side;
  while (side > 0 && (side - 1) * (side - 1) >= features) --side;
  return side;
}

nn::Network BuildStatic(std::size_t features, Scale scale, Rng& rng) {
  const std::size_t side = GridSide(features);
  if (side < 16) {
    throw Error("grid_too_small", std::to_string(features) + " features give a " +
                                      std::to_string(side) + "x" + std::to_string(side) +
                                      " grid; four 2x2 poolings need side >= 16");
  }
  const bool paper = scale == Scale::kPaper;
  const std::size_t filters[4] = {paper ? 16u : 4u, paper ? 32u : 8u, paper ? 64u : 16u,
                                  paper ? 128u : 32u};
  const std::size_t dense = paper ? 1024 : 64;

  nn::Network net("Static", {features});
  net.Add(nn::ReshapeGrid(side));
  for (std::size_t f : filters) {
    net.Add(nn::Conv2D(f)).Add(nn::Act(Activation::kRelu));
    net.Add(nn::Conv2D(f)).Add(nn::Act(Activation::kRelu));
    net.Add(nn::MaxPool());
  }
  net.Add(nn::GlobalAvgPool());
  net.set_base_boundary(net.layer_count());
  net.Add(nn::Dense(dense)).Add(nn::Act(Activation::kTanh));
  net.Add(nn::Dense(dense)).Add(nn::Act(Activation::kTanh));
  AddClassifierOutput(net);
  net.Initialize(rng);
  return net;
}

nn::Network BuildMlpHelper(const std::string& name, std::size_t features, Scale scale,
                           Rng& rng) {
  CheckName(name, {"HM1", "HM2", "HM4"}, "the MLP builder");
  const bool paper = scale == Scale::kPaper;
  nn::Network net(name, {features});
  net.Add(nn::Flatten());
  net.Add(nn::Dense(paper ? 1024 : 64)).Add(nn::Act(Activation::kTanh));
  net.set_base_boundary(net.layer_count());
  net.Add(nn::Dense(paper ? 512 : 32)).Add(nn::Act(Activation::kTanh));
  AddClassifierOutput(net);
  net.Initialize(rng);
  return net;
}

nn::Network BuildCnnHelper(const std::string& name, std::size_t features, Scale scale,
                           Rng& rng) {
  CheckName(name, {"HM3", "HM5", "HM6"}, "the CNN helper builder");
  const std::size_t side = GridSide(features);
  if (side < 4) {
    throw Error("grid_too_small", std::to_string(features) +
                                      " features cannot survive two 2x2 poolings");
  }
  const bool paper = scale == Scale::kPaper;
  const std::size_t filters[4] = {paper ? 16u : 4u, paper ? 32u : 8u, paper ? 64u : 16u,
                                  paper ? 128u : 32u};
  nn::Network net(name, {features});
  net.Add(nn::ReshapeGrid(side));
  for (int i = 0; i < 4; ++i) {
    net.Add(nn::Conv2D(filters[i])).Add(nn::Act(Activation::kRelu));
    if (i % 2 == 1) net.Add(nn::MaxPool());
  }
  net.Add(nn::GlobalAvgPool());
  net.set_base_boundary(net.layer_count());
  net.Add(nn::Dense(paper ? 512 : 32)).Add(nn::Act(Activation::kTanh));
  AddClassifierOutput(net);
  net.Initialize(rng);
  return net;
}

nn::Network BuildModel(const ModelSpec& spec, std::size_t features, Rng& rng) {
  if (spec.name == "Static") return BuildStatic(features, spec.scale, rng);
  if (spec.architecture == Architecture::kMlp) {
    return BuildMlpHelper(spec.name, features, spec.scale, rng);
  }
  return BuildCnnHelper(spec.name, features, spec.scale, rng);
}

std::vector<double> GatherInput(const Fingerprint& fp, const std::vector<std::size_t>& indices) {
  std::vector<double> x(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= fp.bits.size()) {
      throw Error("f_mismatch", "fingerprint shorter than projection index");
    }
    x[i] = fp.bits[indices[i]];
  }
  return x;
}

std::vector<double> ZooModel::Input(const Fingerprint& fp) const {
  return GatherInput(fp, projection);
}

Zoo BuildAll(const TemplateRegistry& registry, Scale scale, std::uint64_t seed) {
  for (const std::string& name : ModelNames()) {
    for (const std::string& t : TableSpec(name).templates) {
      if (!registry.Contains(t)) {
        throw Error("missing_template", "registry lacks template '" + t + "'");
      }
    }
  }
  Zoo zoo;
  std::uint64_t salt = 0;
  for (const std::string& name : ModelNames()) {
    ZooModel m;
    m.spec = TableSpec(name, scale);
    m.projection = ProjectionIndices(registry, m.spec.templates);
    Rng rng = MakeRng(seed, {0x7a6f6fULL, ++salt});
    m.network = BuildModel(m.spec, m.projection.size(), rng);
    zoo.emplace(name, std::move(m));
  }
  return zoo;
}

}  // namespace fedguard::zoo
