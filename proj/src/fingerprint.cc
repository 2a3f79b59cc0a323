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

#include "fedguard/fingerprint.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fedguard/error.h"
#include "fedguard/random.h"
#include "internal/binary_io.h"
#include "json.hpp"

namespace fedguard {
namespace {

constexpr char kMagic[] = "ADFP";
constexpr std::uint32_t kVersion = 1;

std::filesystem::path SidecarPath(const std::filesystem::path& path) {
  std::filesystem::path p = path;
  p += ".ids";
  return p;
}

bool IsJsonLines(const std::filesystem::path& path) {
  return path.extension() == ".jsonl";
}

Label DecodeLabel(std::uint32_t v) {
  if (v > 2) throw Error("domain_violation", "label code out of range");
  return static_cast<Label>(v);
}
Provenance DecodeProvenance(std::uint32_t v) {
  if (v > 2) throw Error("domain_violation", "provenance code out of range");
  return static_cast<Provenance>(v);
}
Split DecodeSplit(std::uint32_t v) {
  if (v > 2) throw Error("domain_violation", "split code out of range");
  return static_cast<Split>(v);
}

void CheckBit(float v) {
  if (v != 0.0f && v != 1.0f) {
    throw Error("domain_violation",
                "fingerprint value " + std::to_string(v) + " is not 0 or 1");
  }
}

std::string TruthText(const std::optional<Label>& truth) {
  return truth ? LabelName(*truth) : "";
}

std::optional<Label> ParseTruth(const std::string& text) {
  if (text.empty()) return std::nullopt;
  if (text == "benign") return Label::kBenign;
  if (text == "malware") return Label::kMalware;
  throw Error("malformed_header", "unknown ground-truth label '" + text + "'");
}

void SaveBinary(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot open " + path.string() + " for writing");
  internal::LeWriter w(out);
  w.Bytes(std::string(kMagic, 4));
  w.U32(kVersion);
  w.U32(static_cast<std::uint32_t>(ds.registry.total_features()));
  w.U32(static_cast<std::uint32_t>(ds.registry.size()));
  for (const FeatureTemplate& t : ds.registry.templates()) {
    w.U16(static_cast<std::uint16_t>(t.name.size()));
    w.Bytes(t.name);
    w.U32(static_cast<std::uint32_t>(t.start));
    w.U32(static_cast<std::uint32_t>(t.end));
  }
  w.U32(static_cast<std::uint32_t>(ds.samples.size()));
  for (const LabeledSample& s : ds.samples) {
    w.U8(static_cast<std::uint8_t>(s.label));
    w.U8(static_cast<std::uint8_t>(s.provenance));
    w.U8(static_cast<std::uint8_t>(s.split));
    for (float b : s.fingerprint.bits) w.F32(b);
  }
  if (!out) throw Error("io", "write failed for " + path.string());

  std::ofstream ids(SidecarPath(path));
  if (!ids) throw Error("io", "cannot write id sidecar for " + path.string());
  for (const LabeledSample& s : ds.samples) {
    ids << s.fingerprint.app_id << ',' << TruthText(s.hidden_truth) << '\n';
  }
}

Dataset LoadBinary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open " + path.string());
  internal::LeReader r(in, path.string());
  if (r.Bytes(4) != std::string(kMagic, 4)) {
    throw Error("malformed_header", path.string() + ": bad magic");
  }
  if (std::uint32_t v = r.U32(); v != kVersion) {
    throw Error("malformed_header",
                path.string() + ": unsupported version " + std::to_string(v));
  }
  std::uint32_t f = r.U32();
  std::uint32_t template_count = r.U32();
  std::vector<FeatureTemplate> templates;
  templates.reserve(template_count);
  for (std::uint32_t i = 0; i < template_count; ++i) {
    FeatureTemplate t;
    t.name = r.Bytes(r.U16());
    t.start = r.U32();
    t.end = r.U32();
    templates.push_back(std::move(t));
  }
  Dataset ds;
  ds.registry = TemplateRegistry(std::move(templates));
  if (ds.registry.total_features() != f) {
    throw Error("f_mismatch", path.string() + ": header F=" + std::to_string(f) +
                                  " but templates cover " +
                                  std::to_string(ds.registry.total_features()));
  }
  std::uint32_t count = r.U32();
  ds.samples.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    LabeledSample& s = ds.samples[i];
    s.label = DecodeLabel(r.U8());
    s.provenance = DecodeProvenance(r.U8());
    s.split = DecodeSplit(r.U8());
    s.fingerprint.bits.resize(f);
    for (float& b : s.fingerprint.bits) {
      try {
        b = r.F32();
      } catch (const Error&) {
        throw Error("f_mismatch", path.string() + ": sample " + std::to_string(i) +
                                      " shorter than F=" + std::to_string(f));
      }
      CheckBit(b);
    }
    s.fingerprint.app_id = "app-" + std::to_string(i);
  }
  if (!r.AtEnd()) {
    throw Error("f_mismatch", path.string() + ": trailing bytes after " +
                                  std::to_string(count) + " samples of F=" +
                                  std::to_string(f));
  }

  std::ifstream ids(SidecarPath(path));
  if (ids) {
    std::string line;
    std::size_t i = 0;
    while (std::getline(ids, line)) {
      if (i >= ds.samples.size()) {
        throw Error("malformed_header", "id sidecar has more rows than samples");
      }
      auto comma = line.rfind(',');
      if (comma == std::string::npos) {
        throw Error("malformed_header", "id sidecar row without comma");
      }
      ds.samples[i].fingerprint.app_id = line.substr(0, comma);
      ds.samples[i].hidden_truth = ParseTruth(line.substr(comma + 1));
      ++i;
    }
    if (i != ds.samples.size()) {
      throw Error("malformed_header", "id sidecar has fewer rows than samples");
    }
  }
  ds.Validate();
  return ds;
}

void SaveJsonLines(const Dataset& ds, const std::filesystem::path& path) {
  using nlohmann::json;
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot open " + path.string() + " for writing");
  json header;
  header["magic"] = kMagic;
  header["version"] = kVersion;
  header["F"] = ds.registry.total_features();
  json templates = json::array();
  for (const FeatureTemplate& t : ds.registry.templates()) {
    templates.push_back({{"name", t.name}, {"start", t.start}, {"end", t.end}});
  }
  header["templates"] = templates;
  header["sample_count"] = ds.samples.size();
  out << header.dump() << '\n';
  for (const LabeledSample& s : ds.samples) {
    json row;
    row["app_id"] = s.fingerprint.app_id;
    row["label"] = static_cast<int>(s.label);
    row["provenance"] = static_cast<int>(s.provenance);
    row["split"] = static_cast<int>(s.split);
    if (s.hidden_truth) row["hidden_truth"] = static_cast<int>(*s.hidden_truth);
    row["bits"] = s.fingerprint.bits;
    out << row.dump() << '\n';
  }
}

Dataset LoadJsonLines(const std::filesystem::path& path) {
  using nlohmann::json;
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw Error("malformed_header", path.string() + ": empty file");
  }
  Dataset ds;
  std::size_t f = 0;
  std::size_t expected = 0;
  try {
    json header = json::parse(line);
    if (header.at("magic").get<std::string>() != kMagic ||
        header.at("version").get<std::uint32_t>() != kVersion) {
      throw Error("malformed_header", path.string() + ": bad magic or version");
    }
    f = header.at("F").get<std::size_t>();
    expected = header.at("sample_count").get<std::size_t>();
    std::vector<FeatureTemplate> templates;
    for (const json& t : header.at("templates")) {
      templates.push_back({t.at("name").get<std::string>(),
                           t.at("start").get<std::size_t>(),
                           t.at("end").get<std::size_t>()});
    }
    ds.registry = TemplateRegistry(std::move(templates));
  } catch (const json::exception& e) {
    throw Error("malformed_header", path.string() + ": " + e.what());
  }
  if (ds.registry.total_features() != f) {
    throw Error("f_mismatch", path.string() + ": header F disagrees with templates");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    LabeledSample s;
    try {
      json row = json::parse(line);
      s.fingerprint.app_id = row.at("app_id").get<std::string>();
      s.label = DecodeLabel(row.at("label").get<std::uint32_t>());
      s.provenance = DecodeProvenance(row.at("provenance").get<std::uint32_t>());
      s.split = DecodeSplit(row.at("split").get<std::uint32_t>());
      if (row.contains("hidden_truth")) {
        s.hidden_truth = DecodeLabel(row.at("hidden_truth").get<std::uint32_t>());
      }
      s.fingerprint.bits = row.at("bits").get<std::vector<float>>();
    } catch (const json::exception& e) {
      throw Error("malformed_header", path.string() + ": " + e.what());
    }
    if (s.fingerprint.bits.size() != f) {
      throw Error("f_mismatch", path.string() + ": row of length " +
                                    std::to_string(s.fingerprint.bits.size()) +
                                    ", expected F=" + std::to_string(f));
    }
    for (float b : s.fingerprint.bits) CheckBit(b);
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.size() != expected) {
    throw Error("malformed_header", path.string() + ": sample_count mismatch");
  }
  ds.Validate();
  return ds;
}

}  // namespace

const char* LabelName(Label label) {
  switch (label) {
    case Label::kBenign:
      return "benign";
    case Label::kMalware:
      return "malware";
    case Label::kUnlabeled:
      return "unlabeled";
  }
  return "?";
}

const char* ProvenanceName(Provenance provenance) {
  switch (provenance) {
    case Provenance::kSystem:
      return "system";
    case Provenance::kUser:
      return "user";
    case Provenance::kSynthetic:
      return "synthetic";
  }
  return "?";
}

const char* SplitName(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kValidation:
      return "validation";
    case Split::kTest:
      return "test";
  }
  return "?";
}

Label FlipLabel(Label label) {
  switch (label) {
    case Label::kBenign:
      return Label::kMalware;
    case Label::kMalware:
      return Label::kBenign;
    case Label::kUnlabeled:
      return Label::kUnlabeled;
  }
  return label;
}

TemplateRegistry::TemplateRegistry(std::vector<FeatureTemplate> templates)
    : templates_(std::move(templates)) {
  if (templates_.empty()) throw Error("empty_registry", "registry has no templates");
  std::set<std::string> names;
  std::vector<const FeatureTemplate*> by_start;
  for (const FeatureTemplate& t : templates_) {
    if (t.start >= t.end) {
      throw Error("zero_width", "template '" + t.name + "' has an empty range");
    }
    if (!names.insert(t.name).second) {
      throw Error("duplicate_name", "template '" + t.name + "' defined twice");
    }
    by_start.push_back(&t);
  }
  std::sort(by_start.begin(), by_start.end(),
            [](const auto* a, const auto* b) { return a->start < b->start; });
  std::size_t cursor = 0;
  for (const FeatureTemplate* t : by_start) {
    if (t->start < cursor) {
      throw Error("overlap", "template '" + t->name + "' overlaps its neighbour");
    }
    if (t->start > cursor) {
      throw Error("gap", "indices [" + std::to_string(cursor) + ", " +
                             std::to_string(t->start) + ") are not covered");
    }
    cursor = t->end;
  }
  total_features_ = cursor;
}

const FeatureTemplate* TemplateRegistry::Find(const std::string& name) const {
  for (const FeatureTemplate& t : templates_) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const FeatureTemplate& TemplateRegistry::At(const std::string& name) const {
  const FeatureTemplate* t = Find(name);
  if (t == nullptr) {
    throw Error("unknown_template", "unknown feature template '" + name + "'");
  }
  return *t;
}

TemplateRegistry BuildRegistry(const TemplateWidths& spec) {
  std::vector<FeatureTemplate> templates;
  std::set<std::string> seen;
  std::size_t cursor = 0;
  for (const auto& [name, width] : spec) {
    if (width == 0) throw Error("zero_width", "template '" + name + "' has zero width");
    if (!seen.insert(name).second) {
      throw Error("duplicate_name", "template '" + name + "' listed twice");
    }
    templates.push_back({name, cursor, cursor + width});
    cursor += width;
  }
  return TemplateRegistry(std::move(templates));
}

const TemplateWidths& DefaultTemplateWidths() {
  static const TemplateWidths kWidths = {
      {"manifest-attributes", 16}, {"permissions", 64},
      {"protection-levels", 8},    {"device-features", 16},
      {"intents", 32},             {"categories", 8},
      {"providers", 8},            {"receivers", 16},
      {"services", 16},            {"api-classes", 40},
      {"api-sensitive-methods", 32},
  };
  return kWidths;
}

TemplateRegistry DefaultRegistry() { return BuildRegistry(DefaultTemplateWidths()); }

std::vector<const LabeledSample*> Dataset::WithSplit(Split split) const {
  std::vector<const LabeledSample*> out;
  for (const LabeledSample& s : samples) {
    if (s.split == split) out.push_back(&s);
  }
  return out;
}

void Dataset::Validate() const {
  const std::size_t f = registry.total_features();
  for (const LabeledSample& s : samples) {
    if (s.fingerprint.bits.size() != f) {
      throw Error("f_mismatch", "sample '" + s.fingerprint.app_id + "' has " +
                                    std::to_string(s.fingerprint.bits.size()) +
                                    " features, registry has " + std::to_string(f));
    }
    for (float b : s.fingerprint.bits) CheckBit(b);
    if (s.provenance == Provenance::kSystem && s.label != Label::kBenign) {
      throw Error("domain_violation",
                  "system app '" + s.fingerprint.app_id + "' must be benign");
    }
  }
}

std::vector<std::size_t> ProjectionIndices(const TemplateRegistry& registry,
                                           std::span<const std::string> names) {
  if (names.empty()) throw Error("empty_selection", "no templates selected");
  for (const std::string& n : names) registry.At(n);
  std::vector<std::size_t> out;
  for (const FeatureTemplate& t : registry.templates()) {
    if (std::find(names.begin(), names.end(), t.name) == names.end()) continue;
    for (std::size_t i = t.start; i < t.end; ++i) out.push_back(i);
  }
  return out;
}

Fingerprint Project(const Fingerprint& fp, const TemplateRegistry& registry,
                    std::span<const std::string> names) {
  if (fp.bits.size() != registry.total_features()) {
    throw Error("f_mismatch", "fingerprint length does not match registry");
  }
  Fingerprint out;
  out.app_id = fp.app_id;
  for (std::size_t i : ProjectionIndices(registry, names)) out.bits.push_back(fp.bits[i]);
  return out;
}

PlantedFeatures PlanFeatures(const TemplateRegistry& registry,
                             const SynthParams& params) {
  Rng rng = MakeRng(params.plan_seed.value_or(params.seed), {0x706c616eULL});
  PlantedFeatures planted;
  for (const FeatureTemplate& t : registry.templates()) {
    std::size_t w = t.width();
    if (w < 2) continue;
    auto k = static_cast<std::size_t>(
        std::lround(static_cast<double>(w) * params.planted_fraction));
    k = std::clamp<std::size_t>(k, 1, w / 2);
    std::vector<std::size_t> idx(w);
    for (std::size_t i = 0; i < w; ++i) idx[i] = t.start + i;
    Shuffle(idx.begin(), idx.end(), rng);
    planted.benign.insert(planted.benign.end(), idx.begin(), idx.begin() + k);
    planted.malware.insert(planted.malware.end(), idx.begin() + k,
                           idx.begin() + 2 * k);
  }
  std::sort(planted.benign.begin(), planted.benign.end());
  std::sort(planted.malware.begin(), planted.malware.end());
  return planted;
}

Dataset SynthGenerate(const TemplateRegistry& registry, const SynthParams& params) {
  if (params.n_benign == 0 && params.n_malware == 0) {
    throw Error("empty_classes", "need at least one labeled benign or malware sample");
  }
  if (!(params.signal_strength >= 0.5 && params.signal_strength <= 1.0)) {
    throw Error("domain_violation", "signal_strength must lie in [0.5, 1.0]");
  }
  const std::size_t f = registry.total_features();
  const PlantedFeatures planted = PlanFeatures(registry, params);
  // Per-index firing probability for each class.
  std::vector<double> p_benign(f, params.background_rate);
  std::vector<double> p_malware(f, params.background_rate);
  for (std::size_t i : planted.benign) {
    p_benign[i] = params.signal_strength;
    p_malware[i] = 1.0 - params.signal_strength;
  }
  for (std::size_t i : planted.malware) {
    p_malware[i] = params.signal_strength;
    p_benign[i] = 1.0 - params.signal_strength;
  }

  Rng rng = MakeRng(params.seed, {0x73796e74ULL});
  auto draw = [&](Label truth) {
    const auto& p = truth == Label::kBenign ? p_benign : p_malware;
    Fingerprint fp;
    fp.bits.resize(f);
    for (std::size_t i = 0; i < f; ++i) fp.bits[i] = Uniform01(rng) < p[i] ? 1.0f : 0.0f;
    return fp;
  };

  const double malware_share =
      static_cast<double>(params.n_malware) /
      static_cast<double>(params.n_benign + params.n_malware);

  // Each group gets its own 80:10:10 split so classes stay balanced per split.
  std::vector<LabeledSample> all;
  auto add_group = [&](std::size_t n, Label label) {
    std::vector<LabeledSample> group;
    group.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      LabeledSample s;
      s.provenance = params.provenance;
      if (label == Label::kUnlabeled) {
        Label truth = Uniform01(rng) < malware_share ? Label::kMalware : Label::kBenign;
        s.fingerprint = draw(truth);
        s.hidden_truth = truth;
      } else {
        s.fingerprint = draw(label);
      }
      s.label = label;
      group.push_back(std::move(s));
    }
    const std::size_t n_train = n * 8 / 10;
    const std::size_t n_val = n / 10;
    for (std::size_t i = 0; i < n; ++i) {
      group[i].split = i < n_train           ? Split::kTrain
                       : i < n_train + n_val ? Split::kValidation
                                             : Split::kTest;
    }
    for (auto& s : group) all.push_back(std::move(s));
  };
  add_group(params.n_benign, Label::kBenign);
  add_group(params.n_malware, Label::kMalware);
  add_group(params.n_unlabeled, Label::kUnlabeled);
  Shuffle(all.begin(), all.end(), rng);

  const int width = static_cast<int>(std::to_string(all.size()).size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    std::string num = std::to_string(i);
    all[i].fingerprint.app_id =
        params.id_prefix + "-" + std::string(width - num.size(), '0') + num;
  }

  Dataset ds{registry, std::move(all)};
  ds.Validate();
  return ds;
}

void SaveDataset(const Dataset& dataset, const std::filesystem::path& path) {
  dataset.Validate();
  if (IsJsonLines(path)) {
    SaveJsonLines(dataset, path);
  } else {
    SaveBinary(dataset, path);
  }
}

Dataset LoadDataset(const std::filesystem::path& path) {
  return IsJsonLines(path) ? LoadJsonLines(path) : LoadBinary(path);
}

}  // namespace fedguard
