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

#include "fedguard/harness.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "fedguard/consensus.h"
#include "fedguard/error.h"
#include "fedguard/nn/checkpoint.h"
#include "fedguard/random.h"
#include "fedguard/transfer.h"
#include "json.hpp"

namespace fedguard::harness {
namespace {

namespace fs = std::filesystem;

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string DoubleText(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double ParseDouble(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) {
    throw Error("config", key + ": '" + v + "' is not a number");
  }
  return out;
}

std::uint64_t ParseUnsigned(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) {
    throw Error("config", key + ": '" + v + "' is not a non-negative integer");
  }
  return out;
}

bool ParseBool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error("config", key + ": '" + v + "' is not a boolean");
}

std::optional<std::size_t> ParseOptionalIndex(const std::string& key, const std::string& v) {
  if (v.empty() || v == "full") return std::nullopt;
  return ParseUnsigned(key, v);
}

std::string OptionalText(const std::optional<std::size_t>& v) {
  return v ? std::to_string(*v) : "full";
}

struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define FG_SIZE(name)                                                                  \
  Field {                                                                              \
    #name, [](ExperimentConfig& c, const std::string& v) { c.name = ParseUnsigned(#name, v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.name); }               \
  }
#define FG_DOUBLE(name)                                                                \
  Field {                                                                              \
    #name, [](ExperimentConfig& c, const std::string& v) { c.name = ParseDouble(#name, v); }, \
        [](const ExperimentConfig& c) { return DoubleText(c.name); }                   \
  }
#define FG_BOOL(name)                                                                  \
  Field {                                                                              \
    #name, [](ExperimentConfig& c, const std::string& v) { c.name = ParseBool(#name, v); }, \
        [](const ExperimentConfig& c) { return std::string(c.name ? "true" : "false"); } \
  }
#define FG_INDEX(name)                                                                 \
  Field {                                                                              \
    #name, [](ExperimentConfig& c, const std::string& v) { c.name = ParseOptionalIndex(#name, v); }, \
        [](const ExperimentConfig& c) { return OptionalText(c.name); }                 \
  }

const std::vector<Field>& Fields() {
  static const std::vector<Field> kFields = {
      FG_SIZE(seed),
      {"out_dir", [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; },
       [](const ExperimentConfig& c) { return c.out_dir; }},
      FG_DOUBLE(signal_strength),
      FG_SIZE(n_benign),
      FG_SIZE(n_malware),
      FG_DOUBLE(planted_fraction),
      FG_SIZE(server_system),
      FG_SIZE(server_benign_extra),
      FG_SIZE(server_malware),
      FG_SIZE(clients),
      FG_SIZE(client_labeled),
      FG_SIZE(client_unlabeled),
      {"scale", [](ExperimentConfig& c, const std::string& v) { c.scale = zoo::ParseScale(v); },
       [](const ExperimentConfig& c) { return std::string(zoo::ScaleName(c.scale)); }},
      FG_SIZE(epochs),
      FG_SIZE(batch_size),
      FG_SIZE(sweep_epochs),
      {"lr_grid",
       [](ExperimentConfig& c, const std::string& v) {
         c.lr_grid.clear();
         std::stringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ',')) c.lr_grid.push_back(ParseDouble("lr_grid", Trim(item)));
       },
       [](const ExperimentConfig& c) {
         std::string s;
         for (std::size_t i = 0; i < c.lr_grid.size(); ++i) {
           if (i) s += ",";
           s += DoubleText(c.lr_grid[i]);
         }
         return s;
       }},
      FG_SIZE(rounds),
      FG_SIZE(clients_per_round),
      FG_DOUBLE(theta_margin),
      FG_BOOL(asynchronous),
      FG_SIZE(local_epochs),
      FG_DOUBLE(local_learning_rate),
      FG_SIZE(guard_epochs),
      FG_DOUBLE(guard_learning_rate),
      FG_BOOL(label_check),
      FG_DOUBLE(match_threshold),
      FG_SIZE(fingerprint_cap),
      FG_DOUBLE(delta_max),
      FG_DOUBLE(delta_start),
      FG_DOUBLE(delta_end),
      {"attack",
       [](ExperimentConfig& c, const std::string& v) { c.attack = attacks::ParseAttackKind(v); },
       [](const ExperimentConfig& c) { return std::string(attacks::AttackKindName(c.attack)); }},
      FG_DOUBLE(malicious_fraction),
      FG_DOUBLE(flip_fraction),
      FG_INDEX(weight_lb),
      FG_INDEX(weight_ub),
      FG_INDEX(feature_lb),
      FG_INDEX(feature_ub),
  };
  return kFields;
}

#undef FG_SIZE
#undef FG_DOUBLE
#undef FG_BOOL
#undef FG_INDEX

fs::path ZooDataPath(const ExperimentConfig& c) { return c.DataDir() / "zoo.adfp"; }
fs::path ServerDataPath(const ExperimentConfig& c) { return c.DataDir() / "server.adfp"; }
fs::path ClientDataPath(const ExperimentConfig& c, std::size_t i) {
  return c.DataDir() / ("client_" + std::to_string(i) + ".adfp");
}
fs::path CheckpointPath(const ExperimentConfig& c, const std::string& model) {
  return c.ZooDir() / (model + ".adwt");
}

Dataset LoadExisting(const fs::path& path, const char* what) {
  if (!fs::exists(path)) {
    throw Error("missing_dataset", std::string(what) + " not found at " + path.string() +
                                       " (run gen-data first)");
  }
  return LoadDataset(path);
}

SynthParams BaseParams(const ExperimentConfig& c) {
  SynthParams p;
  p.signal_strength = c.signal_strength;
  p.planted_fraction = c.planted_fraction;
  p.plan_seed = c.seed;
  return p;
}

void Append(Dataset& into, Dataset&& from) {
  for (LabeledSample& s : from.samples) into.samples.push_back(std::move(s));
}

std::vector<nn::Sample> ProjectSplit(const Dataset& ds, Split split, const zoo::ZooModel& m) {
  std::vector<nn::Sample> out;
  for (const LabeledSample* s : ds.WithSplit(split)) {
    if (s->label == Label::kUnlabeled) continue;
    out.push_back({m.Input(s->fingerprint), s->label});
  }
  return out;
}

std::string JoinNames(const std::vector<std::string>& names) {
  std::string s;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) s += ",";
    s += names[i];
  }
  return s;
}

std::ofstream OpenOut(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot open " + path.string() + " for writing");
  out.precision(10);
  return out;
}

}  // namespace

void ExperimentConfig::Set(const std::string& key, const std::string& value) {
  for (const Field& f : Fields()) {
    if (f.key == key) {
      f.set(*this, value);
      return;
    }
  }
  throw Error("config", "unknown configuration key '" + key + "'");
}

std::string ExperimentConfig::ToText() const {
  std::string out;
  for (const Field& f : Fields()) out += f.key + " = " + f.get(*this) + "\n";
  return out;
}

void ExperimentConfig::Validate() const {
  if (!(signal_strength >= 0.5 && signal_strength <= 1.0)) {
    throw Error("config", "signal_strength must lie in [0.5, 1.0]");
  }
  if (n_benign == 0 || n_malware == 0) throw Error("config", "zoo corpus needs both classes");
  if (clients == 0) throw Error("config", "clients must be positive");
  if (client_labeled + client_unlabeled == 0) throw Error("config", "client shards are empty");
  if (server_system + server_benign_extra == 0 || server_malware == 0) {
    throw Error("config", "server corpus needs benign and malware samples");
  }
  if (epochs == 0 || batch_size == 0 || sweep_epochs == 0) {
    throw Error("config", "epochs, batch_size and sweep_epochs must be positive");
  }
  if (lr_grid.empty()) throw Error("config", "lr_grid is empty");
  for (double lr : lr_grid) {
    if (!(lr > 0.0)) throw Error("config", "learning rates must be positive");
  }
  if (!(malicious_fraction >= 0.0 && malicious_fraction <= 1.0)) {
    throw Error("config", "malicious_fraction must lie in [0, 1]");
  }
  if (!(flip_fraction >= 0.0 && flip_fraction <= 1.0)) {
    throw Error("config", "flip_fraction must lie in [0, 1]");
  }
  if (weight_lb.has_value() != weight_ub.has_value()) {
    throw Error("config", "weight_lb and weight_ub must be set together");
  }
  if (feature_lb.has_value() != feature_ub.has_value()) {
    throw Error("config", "feature_lb and feature_ub must be set together");
  }
  if (weight_lb && !(*weight_lb < *weight_ub)) throw Error("config", "weight_lb must be < weight_ub");
  if (feature_lb && !(*feature_lb < *feature_ub)) {
    throw Error("config", "feature_lb must be < feature_ub");
  }
  if (attack != attacks::AttackKind::kNone && malicious_fraction == 0.0) {
    throw Error("config", "attack configured with malicious_fraction = 0");
  }
  if (clients_per_round > clients) throw Error("config", "clients_per_round exceeds clients");
}

attacks::AttackConfig ExperimentConfig::Attack() const {
  attacks::AttackConfig a;
  a.kind = attack;
  if (weight_lb) a.weight_bounds = attacks::Bounds{*weight_lb, *weight_ub};
  if (feature_lb) a.feature_bounds = attacks::Bounds{*feature_lb, *feature_ub};
  a.flip_fraction = flip_fraction;
  a.malicious_fraction = malicious_fraction;
  a.seed = seed;
  return a;
}

federation::FederationConfig ExperimentConfig::Federation() const {
  federation::FederationConfig f;
  f.rounds = rounds;
  f.clients_per_round = clients_per_round;
  f.asynchronous = asynchronous;
  f.local_epochs = local_epochs;
  f.local_learning_rate = local_learning_rate;
  f.batch_size = batch_size;
  f.delta = {delta_max, delta_start, delta_end};
  f.label_check = label_check;
  f.match_threshold = match_threshold;
  f.fingerprint_cap = fingerprint_cap;
  f.guard.theta_margin = theta_margin;
  f.guard.training.epochs = guard_epochs;
  f.guard.training.learning_rate = guard_learning_rate;
  f.guard.training.batch_size = batch_size;
  f.attack = Attack();
  f.seed = seed;
  return f;
}

ExperimentConfig ParseConfig(const std::string& text) {
  ExperimentConfig c;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error("config", "line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    c.Set(Trim(line.substr(0, eq)), Trim(line.substr(eq + 1)));
  }
  return c;
}

ExperimentConfig LoadConfig(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str());
}

GeneratedFiles CmdGenData(const ExperimentConfig& config) {
  config.Validate();
  fs::create_directories(config.DataDir());
  const TemplateRegistry registry = DefaultRegistry();
  GeneratedFiles files;

  SynthParams zp = BaseParams(config);
  zp.n_benign = config.n_benign;
  zp.n_malware = config.n_malware;
  zp.seed = DeriveSeed(config.seed, {1});
  zp.id_prefix = "zoo";
  files.zoo = ZooDataPath(config);
  SaveDataset(SynthGenerate(registry, zp), files.zoo);

  SynthParams sys = BaseParams(config);
  sys.n_benign = config.server_system;
  sys.provenance = Provenance::kSystem;
  sys.seed = DeriveSeed(config.seed, {2});
  sys.id_prefix = "system";
  Dataset server = config.server_system > 0 ? SynthGenerate(registry, sys) : Dataset{registry, {}};
  SynthParams extra = BaseParams(config);
  extra.n_benign = config.server_benign_extra;
  extra.n_malware = config.server_malware;
  extra.provenance = Provenance::kSynthetic;
  extra.seed = DeriveSeed(config.seed, {3});
  extra.id_prefix = "server";
  Append(server, SynthGenerate(registry, extra));
  files.server = ServerDataPath(config);
  SaveDataset(server, files.server);

  for (std::size_t i = 0; i < config.clients; ++i) {
    SynthParams cp = BaseParams(config);
    cp.n_benign = config.client_labeled / 2;
    cp.n_malware = config.client_labeled - config.client_labeled / 2;
    cp.n_unlabeled = config.client_unlabeled;
    if (cp.n_benign + cp.n_malware == 0) cp.n_benign = 1;
    cp.provenance = Provenance::kUser;
    cp.seed = DeriveSeed(config.seed, {4, i});
    cp.id_prefix = "c" + std::to_string(i);
    files.clients.push_back(ClientDataPath(config, i));
    SaveDataset(SynthGenerate(registry, cp), files.clients.back());
  }
  return files;
}

std::vector<ModelReport> CmdTrainZoo(const ExperimentConfig& config) {
  config.Validate();
  const Dataset data = LoadExisting(ZooDataPath(config), "zoo corpus");
  fs::create_directories(config.ZooDir());
  zoo::Zoo models = zoo::BuildAll(data.registry, config.scale, config.seed);

  std::vector<ModelReport> reports;
  std::ofstream summary = OpenOut(config.ZooDir() / "summary.csv");
  summary << "model,learning_rate,best_epoch,test_loss,test_accuracy,test_precision,test_recall,"
             "test_f1\n";
  for (const std::string& name : zoo::ModelNames()) {
    zoo::ZooModel& m = models.at(name);
    const auto train = ProjectSplit(data, Split::kTrain, m);
    const auto val = ProjectSplit(data, Split::kValidation, m);
    const auto test = ProjectSplit(data, Split::kTest, m);

    nn::TrainingConfig tc;
    tc.batch_size = config.batch_size;
    tc.seed = DeriveSeed(config.seed, {0x747a, std::hash<std::string>{}(name)});
    ModelReport rep;
    rep.name = name;
    tc.epochs = config.sweep_epochs;
    const nn::Network initial = m.network;
    rep.sweep = nn::LrSweep([&] { return initial; }, train, val, config.lr_grid, tc);
    rep.learning_rate = rep.sweep.best_learning_rate;

    tc.epochs = config.epochs;
    tc.learning_rate = rep.learning_rate;
    nn::TrainResult r = nn::Train(initial, train, val, tc);
    nn::RoundParametersToFloat(r.best);
    rep.best_epoch = r.best_epoch;
    rep.epochs_run = r.history.size();
    rep.test = nn::Evaluate(r.best, test);
    m.network = r.best;

    nn::SaveCheckpoint(nn::MakeCheckpoint(m.network, {{"model", name},
                                                       {"architecture", zoo::ArchitectureName(m.spec.architecture)},
                                                       {"templates", JoinNames(m.spec.templates)},
                                                       {"scale", zoo::ScaleName(config.scale)},
                                                       {"learning_rate", DoubleText(rep.learning_rate)},
                                                       {"best_epoch", std::to_string(r.best_epoch)}}),
                       CheckpointPath(config, name));
    {
      std::ofstream h = OpenOut(config.ZooDir() / (name + "_history.csv"));
      nn::WriteHistoryCsv(r.history, h);
    }
    {
      std::ofstream s = OpenOut(config.ZooDir() / (name + "_sweep.csv"));
      s << "learning_rate,best_val_accuracy,first_loss,final_loss,diverged\n";
      for (const nn::SweepEntry& e : rep.sweep.entries) {
        s << e.learning_rate << ',' << e.best_validation_accuracy << ',' << e.first_loss << ','
          << e.final_loss << ',' << (e.diverged ? "true" : "false") << '\n';
      }
    }
    summary << name << ',' << DoubleText(rep.learning_rate) << ',' << rep.best_epoch << ','
            << DoubleText(rep.test.loss) << ',' << DoubleText(rep.test.accuracy) << ','
            << DoubleText(rep.test.precision) << ',' << DoubleText(rep.test.recall) << ','
            << DoubleText(rep.test.f1) << '\n';
    reports.push_back(std::move(rep));
  }
  return reports;
}

zoo::Zoo LoadZoo(const ExperimentConfig& config, const TemplateRegistry& registry) {
  zoo::Zoo models = zoo::BuildAll(registry, config.scale, config.seed);
  for (auto& [name, m] : models) {
    const fs::path path = CheckpointPath(config, name);
    if (!fs::exists(path)) {
      throw Error("missing_checkpoint", name + " checkpoint not found at " + path.string() +
                                            " (run train-zoo first)");
    }
    nn::Checkpoint c = nn::LoadCheckpoint(path);
    if (auto it = c.metadata.find("templates");
        it != c.metadata.end() && it->second != JoinNames(m.spec.templates)) {
      throw Error("checkpoint_mismatch", path.string() + " was trained on other templates");
    }
    nn::ApplyCheckpoint(c, m.network);
  }
  return models;
}

federation::ClientData PseudoLabelClient(const Dataset& shard, const zoo::Zoo& models) {
  federation::ClientData out;
  for (const LabeledSample& s : shard.samples) {
    LabeledSample copy = s;
    bool pseudo = false;
    if (s.label == Label::kUnlabeled) {
      copy.label = consensus::PseudoLabel(s.fingerprint, models).label;
      pseudo = true;
    }
    out.samples.push_back(std::move(copy));
    out.pseudo.push_back(pseudo);
  }
  return out;
}

std::map<std::string, federation::KindContext> CollaborativeKinds(const zoo::Zoo& models) {
  std::map<std::string, federation::KindContext> kinds;
  for (const std::string& name : zoo::CollaborativeModelNames()) {
    const zoo::ZooModel& m = models.at(name);
    transfer::SplitResult split = transfer::SplitAndFreeze(m.network);
    kinds.emplace(name, federation::KindContext{name, m.projection, std::move(split.base)});
  }
  return kinds;
}

PseudoEvalReport CmdPseudoEval(const ExperimentConfig& config) {
  config.Validate();
  const TemplateRegistry registry = DefaultRegistry();
  const zoo::Zoo models = LoadZoo(config, registry);
  fs::create_directories(config.PseudoDir());

  PseudoEvalReport rep;
  rep.models = zoo::ModelNames();
  rep.consensus_match.assign(rep.models.size(), std::vector<double>(config.clients, 0.0));
  rep.truth_match = rep.consensus_match;
  rep.consensus_truth_match.assign(config.clients, 0.0);

  for (std::size_t c = 0; c < config.clients; ++c) {
    const Dataset shard = LoadExisting(ClientDataPath(config, c), "client shard");
    std::ofstream audit = OpenOut(config.PseudoDir() / ("audit_client_" + std::to_string(c) + ".csv"));
    consensus::WriteAuditHeader(rep.models, audit);
    std::size_t n = 0;
    std::size_t consensus_truth = 0;
    std::vector<std::size_t> agree(rep.models.size(), 0), truth(rep.models.size(), 0);
    for (const LabeledSample& s : shard.samples) {
      if (s.label != Label::kUnlabeled || !s.hidden_truth) continue;
      consensus::ConsensusResult r = consensus::PseudoLabel(s.fingerprint, models);
      consensus::WriteAuditRow(s.fingerprint.app_id, r, audit);
      ++n;
      consensus_truth += r.label == *s.hidden_truth;
      for (std::size_t m = 0; m < rep.models.size(); ++m) {
        agree[m] += r.per_model_label[m] == r.label;
        truth[m] += r.per_model_label[m] == *s.hidden_truth;
      }
    }
    if (n == 0) continue;
    for (std::size_t m = 0; m < rep.models.size(); ++m) {
      rep.consensus_match[m][c] = static_cast<double>(agree[m]) / static_cast<double>(n);
      rep.truth_match[m][c] = static_cast<double>(truth[m]) / static_cast<double>(n);
    }
    rep.consensus_truth_match[c] = static_cast<double>(consensus_truth) / static_cast<double>(n);
  }

  auto write_matrix = [&](const fs::path& path, const std::vector<std::vector<double>>& mat) {
    std::ofstream out = OpenOut(path);
    out << "model";
    for (std::size_t c = 0; c < config.clients; ++c) out << ",client_" << c;
    out << '\n';
    for (std::size_t m = 0; m < rep.models.size(); ++m) {
      out << rep.models[m];
      for (double v : mat[m]) out << ',' << v;
      out << '\n';
    }
  };
  write_matrix(config.PseudoDir() / "consensus_match.csv", rep.consensus_match);
  write_matrix(config.PseudoDir() / "truth_match.csv", rep.truth_match);
  return rep;
}

std::vector<GuardSummary> CmdTrainGuards(const ExperimentConfig& config) {
  config.Validate();
  const Dataset server = LoadExisting(ServerDataPath(config), "server corpus");
  const zoo::Zoo models = LoadZoo(config, server.registry);
  federation::GuardConfig gc = config.Federation().guard;
  gc.training.seed = config.seed;
  auto guards = federation::TrainGuards(server, CollaborativeKinds(models), gc);
  fs::create_directories(config.GuardDir());
  std::ofstream summary = OpenOut(config.GuardDir() / "summary.csv");
  summary << "kind,baseline_accuracy,threshold\n";
  std::vector<GuardSummary> out;
  for (const auto& [kind, g] : guards) {
    transfer::SaveHead(g.model, config.GuardDir() / (kind + ".adwt"));
    summary << kind << ',' << g.baseline_accuracy << ',' << g.threshold << '\n';
    out.push_back({kind, g.baseline_accuracy, g.threshold});
  }
  return out;
}

FederateResult CmdFederate(const ExperimentConfig& config) {
  config.Validate();
  const Dataset server = LoadExisting(ServerDataPath(config), "server corpus");
  const zoo::Zoo models = LoadZoo(config, server.registry);
  std::vector<federation::ClientData> clients;
  for (std::size_t c = 0; c < config.clients; ++c) {
    clients.push_back(PseudoLabelClient(LoadExisting(ClientDataPath(config, c), "client shard"), models));
  }
  federation::Simulation sim(CollaborativeKinds(models), server, std::move(clients),
                             config.Federation());

  FederateResult result;
  fs::create_directories(config.FederateDir());
  result.round_log = config.FederateDir() / "rounds.jsonl";
  std::ofstream log = OpenOut(result.round_log);
  FederateSummary& s = result.summary;
  std::map<std::string, std::pair<double, std::size_t>> honest, malicious;
  for (std::size_t r = 0; r < config.rounds; ++r) {
    federation::RoundReport rep = sim.RunRound();
    log << federation::RoundReportJson(rep) << '\n';
    s.excluded_per_round.push_back(rep.Excluded().size());
    for (const auto& [kind, k] : rep.kinds) s.accuracy_trajectory[kind].push_back(k.validation_accuracy);
    for (const federation::ClientRecord& c : rep.clients) {
      const bool excluded = !c.verdict.accepted && c.verdict.reason != federation::Exclusion::kStraggler;
      if (excluded && c.malicious) ++s.true_positives;
      if (excluded && !c.malicious) ++s.false_positives;
      if (!excluded && c.malicious) ++s.false_negatives;
      if (c.label_check) {
        auto& acc = c.malicious ? malicious : honest;
        for (const auto& [kind, m] : c.label_check->per_kind_match) {
          acc[kind].first += m;
          acc[kind].second += 1;
        }
      }
    }
    result.rounds.push_back(std::move(rep));
  }
  const auto tp = static_cast<double>(s.true_positives);
  s.exclusion_precision = s.true_positives + s.false_positives > 0
                              ? tp / static_cast<double>(s.true_positives + s.false_positives)
                              : 1.0;
  s.exclusion_recall = s.true_positives + s.false_negatives > 0
                           ? tp / static_cast<double>(s.true_positives + s.false_negatives)
                           : 1.0;
  for (const auto& [kind, v] : honest) s.honest_match[kind] = v.first / static_cast<double>(v.second);
  for (const auto& [kind, v] : malicious) s.malicious_match[kind] = v.first / static_cast<double>(v.second);

  s.base_hash_initial = sim.initial_base_hashes();
  for (const federation::ClientState& c : sim.clients()) {
    for (const auto& [kind, m] : c.models) s.bases_intact &= m.BaseHash() == s.base_hash_initial.at(kind);
  }
  for (const auto& [kind, g] : sim.guards()) {
    s.bases_intact &= g.model.BaseHash() == s.base_hash_initial.at(kind);
  }

  nlohmann::json j;
  j["rounds"] = config.rounds;
  j["excluded_per_round"] = s.excluded_per_round;
  j["accuracy_trajectory"] = s.accuracy_trajectory;
  j["exclusion"] = {{"true_positives", s.true_positives},
                    {"false_positives", s.false_positives},
                    {"false_negatives", s.false_negatives},
                    {"precision", s.exclusion_precision},
                    {"recall", s.exclusion_recall}};
  j["match_accuracy"] = {{"honest", s.honest_match}, {"malicious", s.malicious_match}};
  j["bases_intact"] = s.bases_intact;
  j["config"] = config.ToText();
  std::ofstream out = OpenOut(config.FederateDir() / "summary.json");
  out << j.dump(2) << '\n';
  return result;
}

AttackBenchReport CmdAttackBench(const ExperimentConfig& config, std::size_t draws) {
  AttackBenchReport rep;
  Rng rng = MakeRng(config.seed, {0x62656e6368ULL});
  // Weight multipliers over a slice of length `span` inside a larger buffer.
  const std::size_t lb = 16, ub = 48;
  rep.weight_span = static_cast<double>(ub - lb);
  double sum = 0.0;
  for (std::size_t i = 0; i < draws; ++i) sum += attacks::DrawWeightMultiplier(lb, ub, rng);
  rep.weight_multiplier_mean = sum / static_cast<double>(draws);

  std::vector<double> w(64);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.5 + static_cast<double>(i);
  std::vector<double> wm = attacks::ManipulateWeights(w, lb, ub, rng);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if ((i < lb || i >= ub) && wm[i] != w[i]) rep.weight_locality = false;
  }

  const TemplateRegistry registry = DefaultRegistry();
  const std::size_t f = registry.total_features();
  const std::size_t flb = 64, fub = 128;
  Fingerprint fp;
  fp.bits.assign(f, 0.0f);
  for (std::size_t i = 0; i < f; i += 3) fp.bits[i] = 1.0f;
  std::size_t ones = 0, seen = 0;
  while (seen < draws) {
    Fingerprint m = attacks::ManipulateFeatures(fp, flb, fub, rng);
    for (std::size_t i = 0; i < f; ++i) {
      if (i >= flb && i < fub) {
        if (seen < draws) {
          ones += m.bits[i] == 1.0f;
          ++seen;
        }
      } else if (m.bits[i] != fp.bits[i]) {
        rep.feature_locality = false;
      }
    }
  }
  rep.feature_density = static_cast<double>(ones) / static_cast<double>(seen);
  return rep;
}

}  // namespace fedguard::harness
