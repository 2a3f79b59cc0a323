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

#include "fedguard/federation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "fedguard/error.h"
#include "fedguard/random.h"
#include "json.hpp"

namespace fedguard::federation {
namespace {

// Stream tags for DeriveSeed.
constexpr std::uint64_t kSelectTag = 0x73656c;
constexpr std::uint64_t kRoleTag = 0x726f6c65;
constexpr std::uint64_t kLatencyTag = 0x6c6174;
constexpr std::uint64_t kAttackTag = 0x61746b;
constexpr std::uint64_t kLocalTag = 0x6c6f63;
constexpr std::uint64_t kGuardTag = 0x67756172;

std::vector<nn::Sample> EmbedSplit(const Dataset& data, Split split, const GuardModel& guard) {
  std::vector<nn::Sample> out;
  for (const LabeledSample* s : data.WithSplit(split)) {
    if (s->label == Label::kUnlabeled) continue;
    out.push_back({guard.Embed(s->fingerprint), s->label});
  }
  return out;
}

bool HasBothClasses(std::span<const nn::Sample> samples) {
  bool benign = false, malware = false;
  for (const nn::Sample& s : samples) {
    benign |= s.label == Label::kBenign;
    malware |= s.label == Label::kMalware;
  }
  return benign && malware;
}

bool AllFinite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::uint64_t HashWeights(const WeightVector& w) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(w.data());
  for (std::size_t i = 0; i < w.size() * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

nlohmann::json BoundsJson(const std::optional<attacks::Bounds>& b) {
  if (!b) return "full";
  return nlohmann::json::array({b->lb, b->ub});
}

}  // namespace

const char* ExclusionName(Exclusion reason) {
  switch (reason) {
    case Exclusion::kNone:
      return "none";
    case Exclusion::kBelowThreshold:
      return "below_threshold";
    case Exclusion::kNonFinite:
      return "non_finite";
    case Exclusion::kLabelMismatch:
      return "label_mismatch";
    case Exclusion::kStraggler:
      return "straggler";
  }
  return "?";
}

std::vector<double> GuardModel::Embed(const Fingerprint& fp) const {
  return model.Embed(zoo::GatherInput(fp, projection));
}

std::map<std::string, GuardModel> TrainGuards(const Dataset& server_data,
                                              const std::map<std::string, KindContext>& kinds,
                                              const GuardConfig& config) {
  std::map<std::string, GuardModel> guards;
  std::uint64_t salt = 0;
  for (const auto& [name, ctx] : kinds) {
    ++salt;
    GuardModel g;
    g.kind = name;
    g.projection = ctx.projection;
    g.model = transfer::AttachHead(ctx.base, config.head,
                                   DeriveSeed(config.training.seed, {kGuardTag, salt}));
    std::vector<nn::Sample> train = EmbedSplit(server_data, Split::kTrain, g);
    g.validation = EmbedSplit(server_data, Split::kValidation, g);
    if (!HasBothClasses(train) || !HasBothClasses(g.validation)) {
      throw Error("empty_classes", "guard data for " + name +
                                       " must contain benign and malware samples in "
                                       "train and validation splits");
    }
    nn::TrainingConfig tc = config.training;
    tc.seed = DeriveSeed(config.training.seed, {kGuardTag, salt, 1});
    nn::TrainResult r = nn::Train(g.model.head(), train, g.validation, tc);
    g.model.ImportHead(r.best.FlatParameters(false));
    g.baseline_accuracy = nn::Evaluate(g.model.head(), g.validation).accuracy;
    g.threshold = config.theta.value_or(g.baseline_accuracy - config.theta_margin);
    g.threshold = std::clamp(g.threshold, 0.0, 1.0);
    guards.emplace(name, std::move(g));
  }
  return guards;
}

Verdict GuardCheckWeights(const GuardModel& guard, std::span<const double> head_weights) {
  if (head_weights.size() != guard.model.head_parameter_count()) {
    throw Error("length_mismatch", guard.kind + ": update has " +
                                       std::to_string(head_weights.size()) +
                                       " weights, head has " +
                                       std::to_string(guard.model.head_parameter_count()));
  }
  Verdict v;
  if (!AllFinite(head_weights)) {
    v.accepted = false;
    v.reason = Exclusion::kNonFinite;
    v.accuracy = 0.0;
    v.loss = std::numeric_limits<double>::quiet_NaN();
    return v;
  }
  nn::Network head = guard.model.head();
  head.AssignFlatParameters(head_weights, false);
  nn::Metrics m = nn::Evaluate(head, guard.validation);
  v.accuracy = m.accuracy;
  v.loss = m.loss;
  if (!std::isfinite(m.loss)) {
    v.accepted = false;
    v.reason = Exclusion::kNonFinite;
  } else if (m.accuracy < guard.threshold) {
    v.accepted = false;
    v.reason = Exclusion::kBelowThreshold;
  }
  return v;
}

LabelCheck GuardCheckLabels(
    const std::map<std::string, GuardModel>& guards,
    const std::map<std::string, WeightVector>& client_heads,
    std::span<const Fingerprint> fingerprints, double match_threshold,
    const std::map<std::string, std::vector<std::vector<double>>>* embeddings) {
  if (fingerprints.empty()) throw Error("empty_batch", "label check without fingerprints");
  if (guards.empty()) throw Error("empty_batch", "label check without guards");

  std::map<std::string, nn::Network> loaded;
  for (const auto& [kind, guard] : guards) {
    auto it = client_heads.find(kind);
    if (it == client_heads.end()) {
      throw Error("length_mismatch", "client sent no head for " + kind);
    }
    nn::Network head = guard.model.head();
    head.AssignFlatParameters(it->second, false);
    loaded.emplace(kind, std::move(head));
  }

  LabelCheck out;
  out.fingerprints = fingerprints.size();
  std::map<std::string, std::size_t> matches;
  std::size_t total_matches = 0;
  std::vector<Label> votes;
  std::map<std::string, Label> client_labels;
  for (std::size_t i = 0; i < fingerprints.size(); ++i) {
    votes.clear();
    for (const auto& [kind, guard] : guards) {
      std::vector<double> local;
      const std::vector<double>* emb = nullptr;
      if (embeddings != nullptr) {
        emb = &embeddings->at(kind).at(i);
      } else {
        local = guard.Embed(fingerprints[i]);
        emb = &local;
      }
      auto g = guard.model.head().Predict(*emb);
      votes.push_back(DecideLabel(g[0], g[1]));
      auto c = loaded.at(kind).Predict(*emb);
      client_labels[kind] = DecideLabel(c[0], c[1]);
    }
    const Label agreed = consensus::MajorityVote(votes).label;
    for (const auto& [kind, label] : client_labels) {
      if (label == agreed) {
        ++matches[kind];
        ++total_matches;
      }
    }
  }
  const auto n = static_cast<double>(fingerprints.size());
  for (const auto& [kind, guard] : guards) {
    out.per_kind_match[kind] = static_cast<double>(matches[kind]) / n;
  }
  out.match_rate = static_cast<double>(total_matches) / (n * static_cast<double>(guards.size()));
  out.verdict.accuracy = out.match_rate;
  if (out.match_rate < match_threshold) {
    out.verdict.accepted = false;
    out.verdict.reason = Exclusion::kLabelMismatch;
  }
  return out;
}

Aggregate AggregateUpdates(std::span<const WeightedUpdate> updates) {
  if (updates.empty()) throw Error("empty_batch", "aggregation over no updates");
  const std::size_t len = updates.front().weights.size();
  Aggregate out;
  out.weights.assign(len, 0.0);
  double total = 0.0;
  for (const WeightedUpdate& u : updates) {
    if (u.weights.size() != len) {
      throw Error("length_mismatch", "updates of different lengths in one aggregation");
    }
    if (u.samples == 0) continue;
    total += static_cast<double>(u.samples);
    const double share = static_cast<double>(u.samples) / total;
    for (std::size_t i = 0; i < len; ++i) {
      out.weights[i] += share * (u.weights[i] - out.weights[i]);
    }
  }
  if (total == 0.0) throw Error("empty_batch", "aggregation over zero samples");
  out.finite = AllFinite(out.weights);
  return out;
}

std::vector<std::size_t> RoundReport::Excluded() const {
  std::vector<std::size_t> out;
  for (const ClientRecord& c : clients) {
    if (!c.verdict.accepted) out.push_back(c.client_id);
  }
  return out;
}

std::vector<std::size_t> RoundReport::Malicious() const {
  std::vector<std::size_t> out;
  for (const ClientRecord& c : clients) {
    if (c.malicious) out.push_back(c.client_id);
  }
  return out;
}

std::string RoundReportJson(const RoundReport& report) {
  using nlohmann::json;
  json j;
  j["round"] = report.round;
  j["participants"] = report.participants;
  json clients = json::array();
  for (const ClientRecord& c : report.clients) {
    json cj;
    cj["client_id"] = c.client_id;
    cj["malicious"] = c.malicious;
    if (c.malicious) {
      cj["attack"] = {{"kind", attacks::AttackKindName(c.attack)},
                      {"weight_bounds", BoundsJson(c.weight_bounds)},
                      {"feature_bounds", BoundsJson(c.feature_bounds)}};
    }
    cj["latency_s"] = c.latency_s;
    cj["samples"] = c.samples;
    cj["verdict"] = c.verdict.accepted ? "accepted" : "excluded";
    cj["reason"] = ExclusionName(c.verdict.reason);
    json wv = json::object();
    for (const auto& [kind, v] : c.weight_verdicts) {
      wv[kind] = {{"accepted", v.accepted},
                  {"reason", ExclusionName(v.reason)},
                  {"accuracy", v.accuracy},
                  {"loss", v.loss}};
    }
    cj["weight_check"] = wv;
    if (c.label_check) {
      cj["label_check"] = {{"accepted", c.label_check->verdict.accepted},
                           {"match_rate", c.label_check->match_rate},
                           {"per_kind_match", c.label_check->per_kind_match},
                           {"fingerprints", c.label_check->fingerprints}};
    }
    cj["loss_share"] = c.loss_share;
    clients.push_back(std::move(cj));
  }
  j["clients"] = std::move(clients);
  json kinds = json::object();
  for (const auto& [kind, k] : report.kinds) {
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(k.broadcast_hash));
    kinds[kind] = {{"accepted", k.accepted},
                   {"aggregate_finite", k.aggregate_finite},
                   {"fallback", k.used_fallback},
                   {"validation_accuracy", k.validation_accuracy},
                   {"broadcast_hash", hash}};
  }
  j["kinds"] = std::move(kinds);
  return j.dump();
}

Simulation::Simulation(std::map<std::string, KindContext> kinds, const Dataset& server_data,
                       std::vector<ClientData> clients, FederationConfig config)
    : kinds_(std::move(kinds)), config_(std::move(config)) {
  if (kinds_.empty()) throw Error("config", "federation needs at least one model kind");
  if (clients.empty()) throw Error("config", "federation needs at least one client");
  for (auto& [name, ctx] : kinds_) {
    ctx.base.SetTrainable(0, ctx.base.layer_count(), false);
    initial_base_hashes_[name] = ctx.base.ParameterHash(0, ctx.base.layer_count());
  }
  GuardConfig gc = config_.guard;
  gc.training.seed = DeriveSeed(config_.seed, {kGuardTag});
  guards_ = TrainGuards(server_data, kinds_, gc);
  for (const auto& [name, guard] : guards_) broadcast_[name] = guard.model.ExportHead();

  if (config_.attack.TouchesWeights() && config_.attack.weight_bounds) {
    for (const auto& [name, w] : broadcast_) {
      attacks::ValidateBounds(config_.attack.weight_bounds->lb, config_.attack.weight_bounds->ub,
                              w.size());
    }
  }

  for (std::size_t id = 0; id < clients.size(); ++id) {
    if (clients[id].samples.empty()) {
      throw Error("config", "client " + std::to_string(id) + " holds no samples");
    }
    if (clients[id].pseudo.size() != clients[id].samples.size()) {
      clients[id].pseudo.resize(clients[id].samples.size(), false);
    }
    ClientState state;
    state.client_id = id;
    state.data = std::move(clients[id]);
    std::map<std::string, Embedded> cache;
    for (const auto& [name, guard] : guards_) {
      transfer::CollaborativeModel m(kinds_.at(name).base, guard.model.head(), name);
      m.ImportHead(broadcast_.at(name));
      Embedded e;
      for (const LabeledSample& s : state.data.samples) {
        e.inputs.push_back(m.Embed(zoo::GatherInput(s.fingerprint, kinds_.at(name).projection)));
      }
      cache.emplace(name, std::move(e));
      state.models.emplace(name, std::move(m));
    }
    client_cache_.push_back(std::move(cache));
    clients_.push_back(std::move(state));
  }
}

std::size_t Simulation::head_length(const std::string& kind) const {
  return broadcast_.at(kind).size();
}

std::vector<Fingerprint> Simulation::LabelCheckFingerprints(
    const std::vector<LabeledSample>& samples) const {
  std::vector<Fingerprint> out;
  for (const LabeledSample& s : samples) {
    if (out.size() >= config_.fingerprint_cap) break;
    if (s.provenance == Provenance::kSystem) continue;
    out.push_back(s.fingerprint);
  }
  return out;
}

std::map<std::string, WeightVector> Simulation::TrainLocally(
    ClientState& client, std::size_t round, const std::vector<LabeledSample>& samples,
    const std::map<std::string, Embedded>& cache) {
  std::map<std::string, WeightVector> heads;
  std::uint64_t salt = 0;
  for (auto& [kind, model] : client.models) {
    ++salt;
    nn::Network head = model.head();
    const Embedded& emb = cache.at(kind);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<nn::Example> labeled, pseudo;
    for (std::size_t e = 0; e < config_.local_epochs; ++e) {
      Rng rng = MakeRng(config_.seed, {kLocalTag, round, client.client_id, salt, e});
      Shuffle(order.begin(), order.end(), rng);
      const double delta = config_.delta.At(static_cast<double>((round - 1) * config_.local_epochs + e));
      for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
        const std::size_t end = std::min(order.size(), start + config_.batch_size);
        labeled.clear();
        pseudo.clear();
        for (std::size_t k = start; k < end; ++k) {
          const std::size_t i = order[k];
          if (samples[i].label == Label::kUnlabeled) continue;
          nn::Example ex{emb.inputs[i], samples[i].label, 1.0};
          (client.data.pseudo[i] ? pseudo : labeled).push_back(ex);
        }
        if (labeled.empty() && pseudo.empty()) continue;
        std::vector<nn::Example> batch = consensus::CombinedBatch(labeled, pseudo, delta);
        nn::SgdStep(head, batch, config_.local_learning_rate);
      }
    }
    heads[kind] = head.FlatParameters(false);
  }
  return heads;
}

RoundReport Simulation::RunRound() {
  const std::size_t round = ++round_;
  RoundReport report;
  report.round = round;

  std::vector<std::size_t> ids(clients_.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  if (config_.clients_per_round > 0 && config_.clients_per_round < ids.size()) {
    Rng rng = MakeRng(config_.seed, {kSelectTag, round});
    Shuffle(ids.begin(), ids.end(), rng);
    ids.resize(config_.clients_per_round);
    std::sort(ids.begin(), ids.end());
  }
  report.participants = ids;

  std::map<std::string, std::vector<std::pair<WeightVector, std::size_t>>> accepted;
  for (std::size_t id : ids) {
    ClientState& client = clients_[id];
    ClientRecord rec;
    rec.client_id = id;
    rec.samples = client.sample_count();

    const attacks::AttackConfig& atk = config_.attack;
    Rng role_rng = MakeRng(config_.seed, {kRoleTag, round, id});
    client.malicious = atk.kind != attacks::AttackKind::kNone &&
                       Uniform01(role_rng) < atk.malicious_fraction;
    rec.malicious = client.malicious;
    if (client.malicious) {
      rec.attack = atk.kind;
      rec.weight_bounds = atk.weight_bounds;
      rec.feature_bounds = atk.feature_bounds;
    }
    Rng latency_rng = MakeRng(config_.seed, {kLatencyTag, round, id});
    rec.latency_s = std::max(0.0, Normal(latency_rng, config_.latency_mean_s, config_.latency_stddev_s));

    for (auto& [kind, model] : client.models) model.ImportHead(broadcast_.at(kind));

    Rng attack_rng = MakeRng(atk.seed ^ config_.seed, {kAttackTag, round, id});
    const std::vector<LabeledSample>* samples = &client.data.samples;
    const std::map<std::string, Embedded>* cache = &client_cache_[id];
    std::vector<LabeledSample> tampered;
    std::map<std::string, Embedded> tampered_cache;
    const bool data_attack = client.malicious && (atk.TouchesFeatures() || atk.TouchesLabels());
    if (data_attack) {
      tampered = client.data.samples;
      attacks::TamperTrainingData(tampered, atk, attack_rng);
      samples = &tampered;
      if (atk.TouchesFeatures()) {
        for (const auto& [kind, model] : client.models) {
          Embedded e;
          for (const LabeledSample& s : tampered) {
            e.inputs.push_back(model.Embed(zoo::GatherInput(s.fingerprint, kinds_.at(kind).projection)));
          }
          tampered_cache.emplace(kind, std::move(e));
        }
        cache = &tampered_cache;
      }
    }

    std::map<std::string, WeightVector> heads = TrainLocally(client, round, *samples, *cache);
    for (auto& [kind, w] : heads) {
      if (client.malicious) attacks::TamperWeights(w, atk, attack_rng);
      ClientUpdate update{id, kind, std::move(w), client.sample_count()};
      if (interceptor_) interceptor_(update);
      w = std::move(update.weights);
      client.models.at(kind).ImportHead(w);
    }

    Verdict final_verdict;
    if (config_.asynchronous && rec.latency_s > config_.deadline_s) {
      final_verdict.accepted = false;
      final_verdict.reason = Exclusion::kStraggler;
    }
    if (config_.guards_enabled) {
      double loss_sum = 0.0;
      for (const auto& [kind, w] : heads) {
        Verdict v = GuardCheckWeights(guards_.at(kind), w);
        loss_sum += v.loss;
        rec.weight_verdicts[kind] = v;
      }
      rec.verdict.loss = loss_sum / static_cast<double>(heads.size());
      if (final_verdict.accepted) {
        for (Exclusion reason : {Exclusion::kNonFinite, Exclusion::kBelowThreshold}) {
          for (const auto& [kind, v] : rec.weight_verdicts) {
            if (final_verdict.accepted && v.reason == reason) {
              final_verdict.accepted = false;
              final_verdict.reason = reason;
            }
          }
        }
      }
      if (config_.label_check) {
        std::vector<Fingerprint> fps = LabelCheckFingerprints(*samples);
        if (!fps.empty()) {
          rec.label_check = GuardCheckLabels(guards_, heads, fps, config_.match_threshold);
          if (final_verdict.accepted && !rec.label_check->verdict.accepted) {
            final_verdict.accepted = false;
            final_verdict.reason = Exclusion::kLabelMismatch;
          }
        }
      }
    }
    final_verdict.loss = rec.verdict.loss;
    double acc = 0.0;
    for (const auto& [kind, v] : rec.weight_verdicts) acc += v.accuracy;
    final_verdict.accuracy =
        rec.weight_verdicts.empty() ? 0.0 : acc / static_cast<double>(rec.weight_verdicts.size());
    rec.verdict = final_verdict;

    if (rec.verdict.accepted) {
      for (auto& [kind, w] : heads) accepted[kind].emplace_back(std::move(w), client.sample_count());
    }
    report.clients.push_back(std::move(rec));
  }

  double loss_total = 0.0;
  for (const ClientRecord& c : report.clients) {
    if (std::isfinite(c.verdict.loss)) loss_total += c.verdict.loss;
  }
  for (ClientRecord& c : report.clients) {
    c.loss_share = loss_total > 0.0 && std::isfinite(c.verdict.loss) ? c.verdict.loss / loss_total : 0.0;
  }

  for (auto& [kind, weights] : broadcast_) {
    KindSummary summary;
    auto it = accepted.find(kind);
    if (it == accepted.end() || it->second.empty()) {
      summary.used_fallback = true;
    } else {
      std::vector<WeightedUpdate> updates;
      for (const auto& [w, t] : it->second) updates.push_back({w, t});
      summary.accepted = updates.size();
      Aggregate agg = AggregateUpdates(updates);
      summary.aggregate_finite = agg.finite;
      if (agg.finite) {
        weights = std::move(agg.weights);
      } else {
        summary.used_fallback = true;
      }
    }
    const GuardModel& guard = guards_.at(kind);
    nn::Network head = guard.model.head();
    head.AssignFlatParameters(weights, false);
    summary.validation_accuracy = nn::Evaluate(head, guard.validation).accuracy;
    summary.broadcast_hash = HashWeights(weights);
    report.kinds[kind] = summary;
  }
  for (ClientState& c : clients_) {
    for (auto& [kind, model] : c.models) model.ImportHead(broadcast_.at(kind));
  }
  return report;
}

std::vector<RoundReport> Simulation::Run() {
  std::vector<RoundReport> out;
  for (std::size_t r = 0; r < config_.rounds; ++r) out.push_back(RunRound());
  return out;
}

}  // namespace fedguard::federation
