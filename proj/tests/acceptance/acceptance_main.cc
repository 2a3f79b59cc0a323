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


// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// The learning and federation criteria run the real pipeline at its default
// desk-scale configuration under --out.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../support/nn_oracles.h"
#include "../support/case_study_votes.h"
#include "CLI11.hpp"
#include "fedguard/consensus.h"
#include "fedguard/error.h"
#include "fedguard/federation.h"
#include "fedguard/fingerprint.h"
#include "fedguard/harness.h"
#include "fedguard/random.h"
#include "fedguard/zoo.h"

namespace {

namespace fs = std::filesystem;
using namespace fedguard;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Reporter {
 public:
  explicit Reporter(const fs::path& report) : report_(report) {}

  // Runs `check`, failing it when it throws or exceeds `budget_s`.
  void Run(int id, const std::string& title, double budget_s,
           const std::function<Outcome()>& check) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (budget_s > 0 && secs > budget_s) {
      o.pass = false;
      o.detail += "; over the " + Fixed(budget_s, 0) + " s budget";
    }
    std::ostringstream line;
    line << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << title << " ("
         << o.detail << "; " << Fixed(secs, 1) << " s)";
    std::cout << line.str() << std::endl;
    report_ << line.str() << '\n';
    report_.flush();
    failures_ += !o.pass;
  }

  int failures() const { return failures_; }

  static std::string Fixed(double v, int digits) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
  }

 private:
  std::ofstream report_;
  int failures_ = 0;
};

std::string Fixed(double v, int digits = 4) { return Reporter::Fixed(v, digits); }

std::string Sci(double v) {
  std::ostringstream s;
  s.precision(2);
  s << std::scientific << v;
  return s.str();
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome GradientCorrectness() {
  Rng rng(20260);
  double worst = 0.0;
  std::size_t largest = 0;
  std::set<std::string> kinds;
  std::set<std::string> activations;
  for (int i = 0; i < 50; ++i) {
    const nn::Network net = testing::RandomNetwork(rng, i, 500);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      kinds.insert(nn::LayerKindName(net.layer(l).kind()));
      if (auto a = net.layer(l).activation()) activations.insert(nn::ActivationName(*a));
    }
    const testing::GradientCheck g = testing::CheckGradient(net, rng);
    worst = std::max(worst, g.max_relative_error);
    largest = std::max(largest, g.parameters);
  }
  const bool covered = kinds.size() == 7 && activations.size() == 3;
  return {worst < 1e-3 && largest <= 500 && covered,
          "max relative error " + Sci(worst) + ", largest net " +
              std::to_string(largest) + " parameters, " + std::to_string(kinds.size()) +
              " layer kinds, " + std::to_string(activations.size()) + " activations"};
}

Outcome MajorityVoteSweep() {
  std::size_t vectors = 0;
  for (std::size_t n = 1; n <= 15; ++n) {
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      std::vector<Label> labels(n);
      std::size_t malware = 0;
      for (std::size_t i = 0; i < n; ++i) {
        labels[i] = (mask >> i) & 1 ? Label::kMalware : Label::kBenign;
        malware += (mask >> i) & 1;
      }
      const std::size_t benign = n - malware;
      if (2 * malware <= n && 2 * benign <= n) continue;
      const Label expected = 2 * malware > n ? Label::kMalware : Label::kBenign;
      const consensus::Vote v = consensus::MajorityVote(labels);
      if (v.label != expected || v.count != std::max(malware, benign)) {
        return {false, "mismatch at n=" + std::to_string(n) + " mask=" + std::to_string(mask)};
      }
      ++vectors;
    }
  }
  return {true, std::to_string(vectors) + " strict-majority vectors agree with counting"};
}

federation::Aggregate Agg(const std::vector<std::vector<double>>& ws,
                          const std::vector<std::size_t>& ts) {
  std::vector<federation::WeightedUpdate> u;
  for (std::size_t i = 0; i < ws.size(); ++i) u.push_back({ws[i], ts[i]});
  return federation::AggregateUpdates(u);
}

Outcome AggregationAlgebra() {
  Rng rng(31);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + UniformIndex(rng, 64), k = 1 + UniformIndex(rng, 9);
    std::vector<double> w(n), neg(n);
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = Normal(rng, 0, 3);
      neg[i] = -w[i];
    }
    std::vector<std::size_t> ts(k);
    for (auto& t : ts) t = 1 + UniformIndex(rng, 500);
    const auto identity = Agg(std::vector<std::vector<double>>(k, w), ts);
    const auto zero = Agg({w, neg}, {7, 7});
    std::vector<std::vector<double>> many(k, std::vector<double>(n));
    for (auto& m : many) {
      for (double& v : m) v = Normal(rng, 0, 3);
    }
    std::vector<std::size_t> perm(k);
    for (std::size_t i = 0; i < k; ++i) perm[i] = i;
    Shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<double>> pm;
    std::vector<std::size_t> pt;
    for (std::size_t i : perm) {
      pm.push_back(many[i]);
      pt.push_back(ts[i]);
    }
    const auto base = Agg(many, ts);
    const auto permuted = Agg(pm, pt);
    for (std::size_t i = 0; i < n; ++i) {
      worst = std::max({worst, std::abs(identity.weights[i] - w[i]), std::abs(zero.weights[i]),
                        std::abs(base.weights[i] - permuted.weights[i])});
    }
  }
  const double arithmetic = Agg({{1.0}, {4.0}, {7.0}}, {1, 2, 1}).weights[0];
  worst = std::max(worst, std::abs(arithmetic - 4.0));
  return {worst <= 1e-7, "weighted mean of (1,4,7) by (1,2,1) = " + Fixed(arithmetic, 12) +
                             ", max deviation " + Sci(worst)};
}

Outcome AttackFidelity() {
  harness::ExperimentConfig c;
  c.seed = 77;
  const harness::AttackBenchReport r = harness::CmdAttackBench(c, 100000);
  const bool pass = std::abs(r.weight_multiplier_mean) < 0.02 * r.weight_span &&
                    std::abs(r.feature_density - 0.5) <= 0.01 && r.weight_locality &&
                    r.feature_locality;
  return {pass, "multiplier mean " + Fixed(r.weight_multiplier_mean) + " over span " +
                    Fixed(r.weight_span, 0) + ", slice density " + Fixed(r.feature_density) +
                    ", complements " +
                    (r.weight_locality && r.feature_locality ? "untouched" : "modified")};
}

Outcome ScaledDownLearning(const harness::ExperimentConfig& c) {
  harness::CmdGenData(c);
  const Dataset data = LoadDataset(c.DataDir() / "zoo.adfp");
  const std::size_t features = data.registry.total_features();
  const std::size_t train = data.WithSplit(Split::kTrain).size();
  const auto reports = harness::CmdTrainZoo(c);
  bool pass = features == 256 && train == 4000 && reports.size() == 7 && c.epochs <= 30;
  std::string detail = "F=" + std::to_string(features) + ", " + std::to_string(train) +
                       " train samples, test accuracy";
  for (const harness::ModelReport& r : reports) {
    pass &= r.test.accuracy >= 0.95;
    detail += " " + r.name + "=" + Fixed(r.test.accuracy) + "@lr" + Fixed(r.learning_rate, 2);
  }
  return {pass, detail};
}

struct FederateRun {
  harness::FederateResult result;
  std::string log;
};

FederateRun Federate(const harness::ExperimentConfig& c) {
  FederateRun run{harness::CmdFederate(c), {}};
  run.log = ReadFile(run.result.round_log);
  return run;
}

harness::ExperimentConfig WeightAttackConfig(const harness::ExperimentConfig& base) {
  harness::ExperimentConfig c = base;
  c.attack = attacks::AttackKind::kWeightManipulation;
  c.malicious_fraction = 0.4;
  c.rounds = 20;
  return c;
}

Outcome WeightAttackGuard(const FederateRun& run, std::size_t clients) {
  const harness::FederateSummary& s = run.result.summary;
  const std::size_t attacks = s.true_positives + s.false_negatives;
  const bool pass = clients == 7 && run.result.rounds.size() == 20 && attacks > 0 &&
                    s.exclusion_precision >= 0.9 && s.exclusion_recall >= 0.9;
  return {pass, std::to_string(attacks) + " malicious client-rounds, precision " +
                    Fixed(s.exclusion_precision) + ", recall " + Fixed(s.exclusion_recall)};
}

// Separable client data reusing the trained zoo: the synthetic planting
// depends only on the seed, so the s=0.9 checkpoints apply unchanged.
harness::ExperimentConfig LabelFlipConfig(const harness::ExperimentConfig& zoo_config,
                                          const fs::path& out) {
  harness::ExperimentConfig c = zoo_config;
  c.out_dir = out.string();
  c.signal_strength = 1.0;
  c.attack = attacks::AttackKind::kLabelFlip;
  c.flip_fraction = 1.0;
  c.malicious_fraction = 0.4;
  c.label_check = true;
  c.rounds = 20;
  harness::CmdGenData(c);
  fs::create_directories(c.ZooDir());
  for (const std::string& name : zoo::ModelNames()) {
    fs::copy_file(zoo_config.ZooDir() / (name + ".adwt"), c.ZooDir() / (name + ".adwt"),
                  fs::copy_options::overwrite_existing);
  }
  return c;
}

Outcome LabelFlipGuard(const FederateRun& run) {
  std::size_t mal = 0, mal_out = 0, honest = 0, honest_out = 0;
  for (const federation::RoundReport& r : run.result.rounds) {
    for (const federation::ClientRecord& rec : r.clients) {
      if (!rec.label_check) continue;
      const bool excluded = !rec.label_check->verdict.accepted;
      if (rec.malicious) {
        ++mal;
        mal_out += excluded;
      } else {
        ++honest;
        honest_out += excluded;
      }
    }
  }
  const double caught = mal ? static_cast<double>(mal_out) / static_cast<double>(mal) : 0.0;
  const double wrong = honest ? static_cast<double>(honest_out) / static_cast<double>(honest) : 1.0;
  return {mal > 0 && caught >= 0.9 && wrong <= 0.05,
          "flipped clients excluded in " + std::to_string(mal_out) + "/" + std::to_string(mal) +
              " rounds, honest in " + std::to_string(honest_out) + "/" + std::to_string(honest)};
}

struct NanResult {
  Outcome outcome;
  bool bases_intact = true;
};

NanResult NanFallback(const harness::ExperimentConfig& c) {
  const Dataset server = LoadDataset(c.DataDir() / "server.adfp");
  const zoo::Zoo models = harness::LoadZoo(c, server.registry);
  std::vector<federation::ClientData> clients;
  for (std::size_t i = 0; i < c.clients; ++i) {
    clients.push_back(harness::PseudoLabelClient(
        LoadDataset(c.DataDir() / ("client_" + std::to_string(i) + ".adfp")), models));
  }
  federation::FederationConfig fc = c.Federation();
  fc.guards_enabled = false;
  fc.attack = {};
  federation::Simulation sim(harness::CollaborativeKinds(models), server, std::move(clients), fc);
  sim.RunRound();
  const std::map<std::string, federation::WeightVector> before = sim.broadcast();
  sim.set_update_interceptor([](federation::ClientUpdate& u) {
    std::fill(u.weights.begin(), u.weights.end(), std::numeric_limits<double>::quiet_NaN());
  });
  const federation::RoundReport r = sim.RunRound();
  bool pass = !before.empty();
  for (const auto& [kind, w] : before) {
    const auto& after = sim.broadcast().at(kind);
    const auto& k = r.kinds.at(kind);
    pass &= k.used_fallback && !k.aggregate_finite && after.size() == w.size() &&
            std::memcmp(after.data(), w.data(), w.size() * sizeof(double)) == 0;
  }
  NanResult out;
  out.outcome = {pass, std::to_string(before.size()) +
                           " kinds re-broadcast the previous aggregate bit for bit"};
  for (const federation::ClientState& cs : sim.clients()) {
    for (const auto& [kind, m] : cs.models) {
      out.bases_intact &= m.BaseHash() == sim.initial_base_hashes().at(kind);
    }
  }
  for (const auto& [kind, g] : sim.guards()) {
    out.bases_intact &= g.model.BaseHash() == sim.initial_base_hashes().at(kind);
  }
  return out;
}

Outcome CaseStudyVotes() {
  const consensus::ConsensusResult r1 = consensus::ConsensusOf(testing::AuthenticatorRow());
  const consensus::ConsensusResult r2 = consensus::ConsensusOf(testing::ShopFrontRow());
  return {r1.label == Label::kBenign && r2.label == Label::kMalware,
          std::string("row 1 -> ") + LabelName(r1.label) + " (" + std::to_string(r1.votes_for) +
              "/7), row 2 -> " + LabelName(r2.label) + " (" + std::to_string(r2.votes_for) +
              "/7)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fedguard acceptance run"};
  std::string out = "acceptance_out";
  app.add_option("--out", out, "working directory for pipeline outputs");
  CLI11_PARSE(app, argc, argv);

  const fs::path root(out);
  fs::remove_all(root);
  fs::create_directories(root);
  Reporter rep(root / "report.txt");

  harness::ExperimentConfig zoo_config;
  zoo_config.out_dir = (root / "zoo_run").string();

  rep.Run(1, "analytic gradients match central differences", 120, GradientCorrectness);
  rep.Run(2, "majority vote equals brute-force counting up to N=15", 10, MajorityVoteSweep);
  rep.Run(3, "weighted-mean aggregation algebra", 0, AggregationAlgebra);
  rep.Run(4, "attack multiplier symmetry, slice density and locality", 0, AttackFidelity);

  bool zoo_ready = false;
  rep.Run(5, "every model reaches 0.95 test accuracy on desk-scale data", 900, [&] {
    Outcome o = ScaledDownLearning(zoo_config);
    zoo_ready = true;
    return o;
  });

  std::vector<std::pair<std::string, bool>> base_checks;
  FederateRun weight_run;
  rep.Run(6, "guards exclude weight-manipulating clients", 600, [&] {
    if (!zoo_ready) return Outcome{false, "zoo unavailable"};
    weight_run = Federate(WeightAttackConfig(zoo_config));
    base_checks.push_back({"weight attack", weight_run.result.summary.bases_intact});
    return WeightAttackGuard(weight_run, zoo_config.clients);
  });

  rep.Run(7, "label check excludes label-flipping clients", 0, [&] {
    if (!zoo_ready) return Outcome{false, "zoo unavailable"};
    const FederateRun run = Federate(LabelFlipConfig(zoo_config, root / "label_flip_run"));
    base_checks.push_back({"label flip", run.result.summary.bases_intact});
    return LabelFlipGuard(run);
  });

  rep.Run(8, "an all-NaN round re-broadcasts the last usable weights", 0, [&] {
    if (!zoo_ready) return Outcome{false, "zoo unavailable"};
    NanResult r = NanFallback(zoo_config);
    base_checks.push_back({"NaN fallback", r.bases_intact});
    return r.outcome;
  });

  rep.Run(9, "consensus on the two case-study vote patterns", 0, CaseStudyVotes);

  rep.Run(10, "frozen base hashes unchanged after federated runs", 0, [&] {
    bool pass = base_checks.size() == 3;
    std::string detail;
    for (const auto& [name, ok] : base_checks) {
      pass &= ok;
      detail += (detail.empty() ? "" : ", ") + name + (ok ? " intact" : " changed");
    }
    return Outcome{pass, detail.empty() ? "no federated runs completed" : detail};
  });

  rep.Run(11, "repeated federate runs write identical round logs", 0, [&] {
    if (weight_run.log.empty()) return Outcome{false, "no reference run"};
    const FederateRun again = Federate(WeightAttackConfig(zoo_config));
    return Outcome{again.log == weight_run.log,
                   std::to_string(again.log.size()) + " bytes, " +
                       (again.log == weight_run.log ? "identical" : "different")};
  });

  return rep.failures() == 0 ? 0 : 1;
}
