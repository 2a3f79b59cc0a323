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

#include "fedguard/consensus.h"

#include <algorithm>
#include <cmath>

#include "fedguard/error.h"

namespace fedguard::consensus {

Label Classify(const ClassProbabilities& probs) {
  if (!std::isfinite(probs.p_benign) || !std::isfinite(probs.p_malware)) {
    throw Error("non_finite", "non-finite class probability from " + probs.model_name);
  }
  if (probs.p_benign < 0.0 || probs.p_benign > 1.0 || probs.p_malware < 0.0 ||
      probs.p_malware > 1.0) {
    throw Error("domain_violation", "class probability outside [0, 1]");
  }
  return DecideLabel(probs.p_benign, probs.p_malware);
}

Vote MajorityVote(std::span<const Label> labels) {
  if (labels.empty()) throw Error("empty_batch", "majority vote over no labels");
  Label candidate = labels.front();
  std::size_t counter = 0;
  for (Label l : labels) {
    if (counter == 0) {
      candidate = l;
      counter = 1;
    } else if (l == candidate) {
      ++counter;
    } else {
      --counter;
    }
  }
  const auto count = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), candidate));
  if (2 * count > labels.size()) return {candidate, count};
  const auto malware =
      static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::kMalware));
  return {Label::kMalware, malware};
}

ConsensusResult ConsensusOf(std::vector<ClassProbabilities> per_model) {
  ConsensusResult r;
  r.voters = per_model.size();
  for (const ClassProbabilities& p : per_model) r.per_model_label.push_back(Classify(p));
  Vote v = MajorityVote(r.per_model_label);
  r.label = v.label;
  r.votes_for = v.count;
  r.per_model = std::move(per_model);
  return r;
}

ConsensusResult PseudoLabel(const Fingerprint& fp, const zoo::Zoo& models) {
  std::vector<ClassProbabilities> probs;
  probs.reserve(models.size());
  for (const std::string& name : zoo::ModelNames()) {
    auto it = models.find(name);
    if (it == models.end()) continue;
    auto p = it->second.network.Predict(it->second.Input(fp));
    probs.push_back({p[0], p[1], name});
  }
  return ConsensusOf(std::move(probs));
}

double DeltaSchedule::At(double epoch) const {
  if (epoch < start_epoch) return 0.0;
  if (epoch >= end_epoch) return delta_max;
  return delta_max * (epoch - start_epoch) / (end_epoch - start_epoch);
}

double CombineLosses(std::span<const double> labeled_losses,
                     std::span<const double> pseudo_losses, double delta) {
  if (labeled_losses.empty() && pseudo_losses.empty()) {
    throw Error("empty_batch", "combined loss over two empty batches");
  }
  auto mean = [](std::span<const double> v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  return mean(labeled_losses) + delta * mean(pseudo_losses);
}

std::vector<nn::Example> CombinedBatch(std::span<const nn::Example> labeled,
                                       std::span<const nn::Example> pseudo, double delta) {
  if (labeled.empty() && pseudo.empty()) {
    throw Error("empty_batch", "combined loss over two empty batches");
  }
  std::vector<nn::Example> out;
  out.reserve(labeled.size() + pseudo.size());
  for (const nn::Example& e : labeled) {
    out.push_back({e.input, e.label, 1.0 / static_cast<double>(labeled.size())});
  }
  for (const nn::Example& e : pseudo) {
    out.push_back({e.input, e.label, delta / static_cast<double>(pseudo.size())});
  }
  return out;
}

double CombinedLoss(const nn::Network& net, std::span<const nn::Example> labeled,
                    std::span<const nn::Example> pseudo, double epoch,
                    const DeltaSchedule& schedule) {
  std::vector<double> l, p;
  for (const nn::Example& e : labeled) l.push_back(nn::SampleLoss(net, e.input, e.label));
  for (const nn::Example& e : pseudo) p.push_back(nn::SampleLoss(net, e.input, e.label));
  return CombineLosses(l, p, schedule.At(epoch));
}

void WriteAuditHeader(const std::vector<std::string>& model_names, std::ostream& out) {
  out << "app_id";
  for (const std::string& m : model_names) {
    out << ',' << m << "_label," << m << "_p_benign," << m << "_p_malware";
  }
  out << ",consensus,votes\n";
}

void WriteAuditRow(const std::string& app_id, const ConsensusResult& result,
                   std::ostream& out) {
  out << app_id;
  for (std::size_t i = 0; i < result.per_model.size(); ++i) {
    out << ',' << LabelName(result.per_model_label[i]) << ',' << result.per_model[i].p_benign
        << ',' << result.per_model[i].p_malware;
  }
  out << ',' << LabelName(result.label) << ',' << result.votes_for << '\n';
}

}  // namespace fedguard::consensus
