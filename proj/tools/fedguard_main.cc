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

// Command-line entry point: one subcommand per pipeline stage.

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fedguard/error.h"
#include "fedguard/harness.h"
#include "json.hpp"

namespace {

using fedguard::harness::ExperimentConfig;

struct Flags {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> rounds;
  std::optional<std::size_t> clients;
  std::optional<double> malicious_fraction;
  std::optional<double> theta_margin;
  std::optional<std::string> attack;
  bool async = false;
};

ExperimentConfig Resolve(const Flags& f) {
  ExperimentConfig c;
  if (!f.config_path.empty()) c = fedguard::harness::LoadConfig(f.config_path);
  if (f.out) c.out_dir = *f.out;
  if (f.seed) c.seed = *f.seed;
  if (f.rounds) c.rounds = *f.rounds;
  if (f.clients) c.clients = *f.clients;
  if (f.malicious_fraction) c.malicious_fraction = *f.malicious_fraction;
  if (f.theta_margin) c.theta_margin = *f.theta_margin;
  if (f.attack) c.Set("attack", *f.attack);
  if (f.async) c.asynchronous = true;
  return c;
}

void PrintError(const std::string& code, const std::string& message) {
  std::cerr << nlohmann::json{{"error", code}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fedguard: guarded federated malware detection experiments"};
  app.require_subcommand(1);
  Flags flags;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config_path, "key = value configuration file");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--seed", flags.seed, "master seed");
  };

  CLI::App* gen = app.add_subcommand("gen-data", "generate synthetic corpora");
  add_common(gen);
  gen->add_option("--clients", flags.clients, "number of client shards");

  CLI::App* train = app.add_subcommand("train-zoo", "train the seven feature-specific models");
  add_common(train);

  CLI::App* pseudo = app.add_subcommand("pseudo-eval", "consensus pseudo-label agreement");
  add_common(pseudo);
  pseudo->add_option("--clients", flags.clients, "number of client shards");

  CLI::App* guards = app.add_subcommand("train-guards", "train server guard models");
  add_common(guards);
  guards->add_option("--theta-margin", flags.theta_margin, "threshold below guard baseline");

  CLI::App* fed = app.add_subcommand("federate", "run the guarded federation");
  fed->add_option("--config", flags.config_path, "key = value configuration file");
  fed->add_option("--out", flags.out, "output directory");
  fed->add_option("--seed", flags.seed, "master seed")->required();
  fed->add_option("--rounds", flags.rounds, "federation rounds");
  fed->add_option("--clients", flags.clients, "number of clients");
  fed->add_option("--malicious-fraction", flags.malicious_fraction, "adversary probability");
  fed->add_option("--theta-margin", flags.theta_margin, "threshold below guard baseline");
  fed->add_option("--attack", flags.attack, "none|weight_manipulation|feature_manipulation|label_flip|combined");
  fed->add_flag("--async", flags.async, "asynchronous rounds with a deadline");

  CLI::App* bench = app.add_subcommand("attack-bench", "Monte-Carlo attack statistics");
  add_common(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    PrintError("usage", e.what());
    return 2;
  }

  try {
    const ExperimentConfig config = Resolve(flags);
    if (gen->parsed()) {
      const auto files = fedguard::harness::CmdGenData(config);
      std::cout << "wrote " << files.zoo.string() << ", " << files.server.string() << " and "
                << files.clients.size() << " client shards\n";
    } else if (train->parsed()) {
      for (const auto& r : fedguard::harness::CmdTrainZoo(config)) {
        std::cout << r.name << ": lr=" << r.learning_rate << " best_epoch=" << r.best_epoch
                  << " test_accuracy=" << r.test.accuracy << " test_f1=" << r.test.f1 << '\n';
      }
    } else if (pseudo->parsed()) {
      const auto rep = fedguard::harness::CmdPseudoEval(config);
      for (std::size_t c = 0; c < rep.consensus_truth_match.size(); ++c) {
        std::cout << "client " << c << ": consensus vs truth " << rep.consensus_truth_match[c]
                  << '\n';
      }
    } else if (guards->parsed()) {
      for (const auto& g : fedguard::harness::CmdTrainGuards(config)) {
        std::cout << g.kind << ": baseline=" << g.baseline_accuracy << " theta=" << g.threshold
                  << '\n';
      }
    } else if (fed->parsed()) {
      const auto res = fedguard::harness::CmdFederate(config);
      const auto& s = res.summary;
      std::cout << "rounds=" << res.rounds.size() << " precision=" << s.exclusion_precision
                << " recall=" << s.exclusion_recall
                << " bases_intact=" << (s.bases_intact ? "true" : "false")
                << " log=" << res.round_log.string() << '\n';
    } else if (bench->parsed()) {
      const auto r = fedguard::harness::CmdAttackBench(config);
      std::cout << "weight multiplier mean=" << r.weight_multiplier_mean
                << " span=" << r.weight_span << " feature density=" << r.feature_density
                << " locality=" << (r.weight_locality && r.feature_locality ? "ok" : "violated")
                << '\n';
    }
  } catch (const fedguard::Error& e) {
    PrintError(e.code(), e.what());
    return 1;
  } catch (const std::exception& e) {
    PrintError("internal", e.what());
    return 1;
  }
  return 0;
}
