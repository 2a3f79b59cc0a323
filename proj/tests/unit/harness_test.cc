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


#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "../support/fed_fixture.h"
#include "fedguard/error.h"
#include "fedguard/harness.h"
#include "json.hpp"

namespace fedguard::harness {
namespace {

namespace fs = std::filesystem;
using testing::SharedFixture;

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::vector<std::string> ReadLines(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
  return out;
}

fs::path FreshDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() /
                       ("fedguard_harness_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(dir);
  return dir;
}

template <typename F>
std::string ErrorCode(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "none";
}

ExperimentConfig TinyConfig(const fs::path& out) {
  ExperimentConfig c;
  c.out_dir = out.string();
  c.seed = 5;
  c.n_benign = 60;
  c.n_malware = 60;
  c.server_system = 30;
  c.server_benign_extra = 10;
  c.server_malware = 40;
  c.client_labeled = 10;
  c.client_unlabeled = 10;
  return c;
}

TEST(Config, TextRoundTrip) {
  ExperimentConfig c;
  c.seed = 99;
  c.signal_strength = 0.75;
  c.lr_grid = {0.001, 0.3};
  c.scale = zoo::Scale::kPaper;
  c.asynchronous = true;
  c.attack = attacks::AttackKind::kCombined;
  c.malicious_fraction = 0.4;
  c.weight_lb = 3;
  c.weight_ub = 9;
  c.delta_max = 0.1 + 0.2;
  const ExperimentConfig back = ParseConfig(c.ToText());
  EXPECT_EQ(back.ToText(), c.ToText());
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.lr_grid, c.lr_grid);
  EXPECT_EQ(back.delta_max, c.delta_max);
  EXPECT_EQ(back.weight_ub, std::optional<std::size_t>(9));
  EXPECT_FALSE(back.feature_lb.has_value());
  EXPECT_EQ(back.attack, attacks::AttackKind::kCombined);
}

TEST(Config, CommentsAndBlankLines) {
  const ExperimentConfig c = ParseConfig("# experiment\n\nseed = 12  # trailing\n  rounds=3\n");
  EXPECT_EQ(c.seed, 12u);
  EXPECT_EQ(c.rounds, 3u);
  EXPECT_EQ(c.clients, ExperimentConfig{}.clients);
}

TEST(Config, RejectsBadText) {
  EXPECT_EQ(ErrorCode([] { ParseConfig("sed = 3\n"); }), "config");
  EXPECT_EQ(ErrorCode([] { ParseConfig("seed 3\n"); }), "config");
  EXPECT_EQ(ErrorCode([] { ParseConfig("seed = three\n"); }), "config");
  EXPECT_EQ(ErrorCode([] { ParseConfig("label_check = maybe\n"); }), "config");
  EXPECT_EQ(ErrorCode([] { ParseConfig("attack = ddos\n"); }), "config");
  EXPECT_EQ(ErrorCode([] { LoadConfig("/nonexistent/fedguard.conf"); }), "io");
}

TEST(Config, ValidateRejectsInconsistency) {
  auto invalid = [](auto mutate) {
    ExperimentConfig c;
    mutate(c);
    return ErrorCode([&] { c.Validate(); });
  };
  EXPECT_EQ(invalid([](ExperimentConfig&) {}), "none");
  EXPECT_EQ(invalid([](ExperimentConfig& c) { c.signal_strength = 0.3; }), "config");
  EXPECT_EQ(invalid([](ExperimentConfig& c) { c.lr_grid.clear(); }), "config");
  EXPECT_EQ(invalid([](ExperimentConfig& c) { c.weight_lb = 2; }), "config");
  EXPECT_EQ(invalid([](ExperimentConfig& c) {
              c.feature_lb = 8;
              c.feature_ub = 8;
            }),
            "config");
  EXPECT_EQ(invalid([](ExperimentConfig& c) { c.attack = attacks::AttackKind::kLabelFlip; }),
            "config");
  EXPECT_EQ(invalid([](ExperimentConfig& c) { c.clients_per_round = c.clients + 1; }), "config");
}

TEST(GenData, SameSeedGivesIdenticalFiles) {
  const ExperimentConfig a = TinyConfig(FreshDir("gen_a"));
  const ExperimentConfig b = TinyConfig(FreshDir("gen_b"));
  const GeneratedFiles fa = CmdGenData(a);
  const GeneratedFiles fb = CmdGenData(b);
  ASSERT_EQ(fa.clients.size(), 7u);
  ASSERT_EQ(fb.clients.size(), 7u);
  EXPECT_EQ(ReadFile(fa.zoo), ReadFile(fb.zoo));
  EXPECT_EQ(ReadFile(fa.server), ReadFile(fb.server));
  for (std::size_t i = 0; i < fa.clients.size(); ++i) {
    EXPECT_EQ(ReadFile(fa.clients[i]), ReadFile(fb.clients[i])) << i;
  }
  ExperimentConfig c = TinyConfig(FreshDir("gen_c"));
  c.seed = 6;
  EXPECT_NE(ReadFile(CmdGenData(c).zoo), ReadFile(fa.zoo));
}

TEST(GenData, ShardsCarryUserProvenanceAndHiddenTruth) {
  const ExperimentConfig c = TinyConfig(FreshDir("gen_shards"));
  const GeneratedFiles files = CmdGenData(c);
  const Dataset server = LoadDataset(files.server);
  EXPECT_EQ(server.samples.size(), c.server_system + c.server_benign_extra + c.server_malware);
  const Dataset shard = LoadDataset(files.clients[0]);
  std::size_t unlabeled = 0;
  for (const LabeledSample& s : shard.samples) {
    EXPECT_EQ(s.provenance, Provenance::kUser);
    if (s.label == Label::kUnlabeled) {
      ++unlabeled;
      EXPECT_TRUE(s.hidden_truth.has_value());
    }
  }
  EXPECT_EQ(unlabeled, c.client_unlabeled);
}

TEST(Commands, MissingInputsAreReported) {
  const ExperimentConfig empty = TinyConfig(FreshDir("missing"));
  EXPECT_EQ(ErrorCode([&] { CmdTrainZoo(empty); }), "missing_dataset");
  EXPECT_EQ(ErrorCode([&] { CmdFederate(empty); }), "missing_dataset");
  CmdGenData(empty);
  EXPECT_EQ(ErrorCode([&] { CmdPseudoEval(empty); }), "missing_checkpoint");
  EXPECT_EQ(ErrorCode([&] { CmdTrainGuards(empty); }), "missing_checkpoint");
}

TEST(TrainZoo, HistoryHasOneRowPerEpoch) {
  const ExperimentConfig& c = SharedFixture().config;
  for (const std::string& name : zoo::ModelNames()) {
    const auto lines = ReadLines(c.ZooDir() / (name + "_history.csv"));
    EXPECT_EQ(lines.size(), c.epochs + 1) << name;
    const auto sweep = ReadLines(c.ZooDir() / (name + "_sweep.csv"));
    EXPECT_EQ(sweep.size(), c.lr_grid.size() + 1) << name;
  }
}

TEST(TrainZoo, ReloadedCheckpointsReproduceTestMetrics) {
  const ExperimentConfig& c = SharedFixture().config;
  const Dataset data = LoadDataset(c.DataDir() / "zoo.adfp");
  const zoo::Zoo models = LoadZoo(c, data.registry);
  const auto rows = ReadLines(c.ZooDir() / "summary.csv");
  ASSERT_EQ(rows.size(), 8u);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto cells = SplitCsv(rows[r]);
    const zoo::ZooModel& m = models.at(cells[0]);
    std::vector<nn::Sample> test;
    for (const LabeledSample* s : data.WithSplit(Split::kTest)) {
      test.push_back({m.Input(s->fingerprint), s->label});
    }
    const nn::Metrics metrics = nn::Evaluate(m.network, test);
    EXPECT_EQ(metrics.loss, std::stod(cells[3])) << cells[0];
    EXPECT_EQ(metrics.accuracy, std::stod(cells[4])) << cells[0];
    EXPECT_GE(metrics.accuracy, 0.95) << cells[0];
  }
}

TEST(TrainZoo, WrongTemplatesAreRejected) {
  const ExperimentConfig& c = SharedFixture().config;
  const ExperimentConfig copy = [&] {
    ExperimentConfig out = c;
    out.out_dir = FreshDir("mismatch").string();
    return out;
  }();
  fs::create_directories(copy.ZooDir());
  for (const std::string& name : zoo::ModelNames()) {
    fs::copy_file(c.ZooDir() / (name + ".adwt"), copy.ZooDir() / (name + ".adwt"));
  }
  fs::copy_file(c.ZooDir() / "HM1.adwt", copy.ZooDir() / "HM2.adwt",
                fs::copy_options::overwrite_existing);
  const Dataset data = LoadDataset(c.DataDir() / "zoo.adfp");
  const std::string code = ErrorCode([&] { LoadZoo(copy, data.registry); });
  EXPECT_TRUE(code == "checkpoint_mismatch" || code == "shape_mismatch") << code;
}

TEST(PseudoEval, MatricesCoverModelsAndClients) {
  const ExperimentConfig& c = SharedFixture().config;
  const PseudoEvalReport rep = CmdPseudoEval(c);
  ASSERT_EQ(rep.models.size(), 7u);
  ASSERT_EQ(rep.truth_match.size(), 7u);
  ASSERT_EQ(rep.consensus_match.size(), 7u);
  for (std::size_t m = 0; m < 7; ++m) {
    ASSERT_EQ(rep.truth_match[m].size(), c.clients);
    for (std::size_t k = 0; k < c.clients; ++k) {
      EXPECT_GE(rep.truth_match[m][k], 0.95) << rep.models[m] << " client " << k;
      EXPECT_GE(rep.consensus_match[m][k], 0.95) << rep.models[m] << " client " << k;
    }
  }
  for (double v : rep.consensus_truth_match) EXPECT_GE(v, 0.95);
  EXPECT_TRUE(fs::exists(c.PseudoDir() / "truth_match.csv"));
  EXPECT_TRUE(fs::exists(c.PseudoDir() / "consensus_match.csv"));
  EXPECT_TRUE(fs::exists(c.PseudoDir() / "audit_client_0.csv"));
}

TEST(TrainGuards, OneGuardPerCollaborativeKind) {
  const ExperimentConfig& c = SharedFixture().config;
  const auto guards = CmdTrainGuards(c);
  EXPECT_EQ(guards.size(), zoo::CollaborativeModelNames().size());
  for (const GuardSummary& g : guards) {
    EXPECT_GE(g.baseline_accuracy, 0.9) << g.kind;
    EXPECT_NEAR(g.threshold, g.baseline_accuracy - c.theta_margin, 1e-12) << g.kind;
    EXPECT_TRUE(fs::exists(c.GuardDir() / (g.kind + ".adwt")));
  }
}

TEST(Federate, HonestRunExcludesNobody) {
  const ExperimentConfig& c = SharedFixture().config;
  const FederateResult res = CmdFederate(c);
  ASSERT_EQ(res.rounds.size(), c.rounds);
  for (std::size_t n : res.summary.excluded_per_round) EXPECT_EQ(n, 0u);
  EXPECT_EQ(res.summary.false_positives, 0u);
  EXPECT_TRUE(res.summary.bases_intact);
  EXPECT_EQ(ReadLines(res.round_log).size(), c.rounds);
  const auto summary = nlohmann::json::parse(ReadFile(c.FederateDir() / "summary.json"));
  EXPECT_EQ(summary["rounds"], c.rounds);
  EXPECT_TRUE(summary["bases_intact"].get<bool>());
  EXPECT_EQ(summary["accuracy_trajectory"].size(), zoo::CollaborativeModelNames().size());
}

TEST(Federate, LabelFlipWithFeatureManipulationReportsMatchTable) {
  ExperimentConfig c = SharedFixture().config;
  c.attack = attacks::AttackKind::kCombined;
  c.malicious_fraction = 0.4;
  c.label_check = true;
  c.rounds = 4;
  const FederateResult res = CmdFederate(c);
  const FederateSummary& s = res.summary;
  ASSERT_FALSE(s.honest_match.empty());
  ASSERT_FALSE(s.malicious_match.empty());
  for (const auto& [kind, honest] : s.honest_match) {
    EXPECT_GE(honest, 0.9) << kind;
    EXPECT_LT(s.malicious_match.at(kind), honest) << kind;
  }
  const auto summary = nlohmann::json::parse(ReadFile(c.FederateDir() / "summary.json"));
  EXPECT_EQ(summary["match_accuracy"]["honest"].size(), s.honest_match.size());
  EXPECT_EQ(summary["match_accuracy"]["malicious"].size(), s.malicious_match.size());
}

TEST(Federate, RepeatedRunsWriteIdenticalLogs) {
  ExperimentConfig c = SharedFixture().config;
  c.rounds = 3;
  c.attack = attacks::AttackKind::kWeightManipulation;
  c.malicious_fraction = 0.4;
  const std::string first = ReadFile(CmdFederate(c).round_log);
  const std::string second = ReadFile(CmdFederate(c).round_log);
  EXPECT_FALSE(first.empty());
  EXPECT_EQ(first, second);
}

TEST(AttackBench, StatisticsMatchTheAttackModel) {
  ExperimentConfig c;
  const AttackBenchReport r = CmdAttackBench(c);
  EXPECT_LT(std::abs(r.weight_multiplier_mean), 0.02 * r.weight_span);
  EXPECT_NEAR(r.feature_density, 0.5, 0.01);
  EXPECT_TRUE(r.weight_locality);
  EXPECT_TRUE(r.feature_locality);
}

struct CliRun {
  int status = -1;
  std::vector<std::string> stderr_lines;
};

CliRun RunCli(const std::string& args, const std::string& tag) {
  const fs::path err = FreshDir("cli_" + tag + ".err");
  const std::string cmd = std::string(FEDGUARD_CLI) + " " + args + " >/dev/null 2>" + err.string();
  const int raw = std::system(cmd.c_str());
  CliRun run;
  run.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  run.stderr_lines = ReadLines(err);
  return run;
}

void ExpectJsonError(const CliRun& run, const std::string& code) {
  EXPECT_NE(run.status, 0);
  ASSERT_EQ(run.stderr_lines.size(), 1u);
  const auto j = nlohmann::json::parse(run.stderr_lines[0]);
  EXPECT_EQ(j["error"], code);
  EXPECT_TRUE(j["message"].is_string());
}

TEST(Cli, FailuresPrintOneJsonLine) {
  const fs::path out = FreshDir("cli_out");
  ExpectJsonError(RunCli("federate --out " + out.string(), "noseed"), "usage");
  ExpectJsonError(RunCli("train-zoo --out " + out.string(), "nodata"), "missing_dataset");
  ExpectJsonError(RunCli("frobnicate", "badsub"), "usage");

  const fs::path conf = FreshDir("cli_bad.conf");
  std::ofstream(conf) << "seed = 1\nunknown_key = 2\n";
  ExpectJsonError(RunCli("gen-data --config " + conf.string(), "badkey"), "config");
}

TEST(Cli, GenDataHonoursConfigAndFlags) {
  const fs::path out = FreshDir("cli_gen");
  const fs::path conf = FreshDir("cli_gen.conf");
  std::ofstream(conf) << TinyConfig(out).ToText();
  const CliRun run = RunCli("gen-data --config " + conf.string() + " --clients 3", "gen");
  EXPECT_EQ(run.status, 0);
  EXPECT_TRUE(run.stderr_lines.empty());
  EXPECT_TRUE(fs::exists(out / "data" / "client_2.adfp"));
  EXPECT_FALSE(fs::exists(out / "data" / "client_3.adfp"));
}

}  // namespace
}  // namespace fedguard::harness
