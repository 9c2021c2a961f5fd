// Copyright 2026 The Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "consel/selection.h"

#include <algorithm>
#include <map>

#include "consel/error.h"
#include "consel/eval_metrics.h"
#include "consel/rng.h"

namespace consel {
namespace {

void RequireSamePool(const ScoredPool& pool, const ThresholdSet& t) {
  if (t.pool_digest != PoolDigest(pool)) {
    ThrowInvalid("pool-mismatch",
                 "thresholds were computed on a different candidate pool");
  }
}

void SortByUtt(std::vector<SelectionEntry>& entries) {
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) {
                     return a.utt_id < b.utt_id;
                   });
}

// Per utterance, the accepted hypothesis with the largest `key` delta; ties
// go to the smallest hyp_id (perturbed lists are sorted by hyp_id).
template <typename Accept>
std::vector<SelectionEntry> PickPerUtterance(const ScoredPool& pool,
                                             Metric key, Accept accept) {
  std::vector<SelectionEntry> entries;
  for (const ScoredUtterance& u : pool.utterances) {
    const ScoredHypothesis* best = nullptr;
    double best_delta = 0.0;
    for (const ScoredHypothesis& h : u.perturbed) {
      ImprovementRecord r{u.utt_id, h.hyp_id, u.baseline.pred_wer - h.pred_wer,
                          h.cos - u.baseline.cos, u.baseline.euc - h.euc};
      if (!accept(r)) continue;
      if (best == nullptr || r.delta(key) > best_delta) {
        best = &h;
        best_delta = r.delta(key);
      }
    }
    if (best != nullptr) entries.push_back({u.utt_id, best->hyp_id, best->text, 1});
  }
  return entries;
}

std::map<std::string, const HypothesisRecord*> Baselines(
    const std::vector<HypothesisRecord>& hyps, const char* what) {
  std::map<std::string, const HypothesisRecord*> out;
  for (const HypothesisRecord& h : hyps) {
    if (!h.perturbation.IsBaseline()) continue;
    if (!out.emplace(h.utt_id, &h).second) {
      ThrowInvalid("duplicate-baseline", std::string(what) +
                                             ": two baselines for '" +
                                             h.utt_id + "'");
    }
  }
  return out;
}

}  // namespace

const char* MetricName(Metric m) {
  switch (m) {
    case Metric::kPred: return "pred_wer";
    case Metric::kCos: return "cos";
    case Metric::kEuc: return "euc";
  }
  return "?";
}

double ImprovementRecord::delta(Metric m) const {
  switch (m) {
    case Metric::kPred: return delta_w;
    case Metric::kCos: return delta_c;
    case Metric::kEuc: return delta_d;
  }
  return 0.0;
}

double ThresholdSet::tau(Metric m) const {
  switch (m) {
    case Metric::kPred: return tau_w;
    case Metric::kCos: return tau_c;
    case Metric::kEuc: return tau_d;
  }
  return 0.0;
}

std::vector<ImprovementRecord> Deltas(const ScoredPool& pool) {
  std::vector<ImprovementRecord> out;
  for (const ScoredUtterance& u : pool.utterances) {
    for (const ScoredHypothesis& h : u.perturbed) {
      out.push_back({u.utt_id, h.hyp_id, u.baseline.pred_wer - h.pred_wer,
                     h.cos - u.baseline.cos, u.baseline.euc - h.euc});
    }
  }
  return out;
}

void ValidatePercentile(int p) {
  if (p < 1 || p > 100) {
    throw Error(ErrorKind::kUsage, "bad-percentile",
                "percentile must be in [1, 100], got " + std::to_string(p));
  }
}

size_t NearestRank(size_t count, int p) {
  const size_t rank = (static_cast<size_t>(p) * count + 99) / 100;
  return std::max<size_t>(rank, 1);
}

double NearestRankPercentile(std::vector<double> values, int p,
                             const std::string& metric) {
  if (values.empty()) {
    ThrowInvalid("empty-distribution",
                 "no values to threshold for metric '" + metric + "'");
  }
  const size_t k = NearestRank(values.size(), p) - 1;
  std::nth_element(values.begin(), values.begin() + k, values.end());
  return values[k];
}

ThresholdSet PercentileThresholds(const ScoredPool& pool, int p) {
  ValidatePercentile(p);
  std::vector<double> pos[3];
  for (const ImprovementRecord& r : Deltas(pool)) {
    if (r.delta_w > 0) pos[0].push_back(r.delta_w);
    if (r.delta_c > 0) pos[1].push_back(r.delta_c);
    if (r.delta_d > 0) pos[2].push_back(r.delta_d);
  }
  ThresholdSet t;
  t.p = p;
  t.tau_w = NearestRankPercentile(std::move(pos[0]), p, "pred_wer");
  t.tau_c = NearestRankPercentile(std::move(pos[1]), p, "cos");
  t.tau_d = NearestRankPercentile(std::move(pos[2]), p, "euc");
  t.pool_digest = PoolDigest(pool);
  return t;
}

SelectionResult SelectConf(const ScoredPool& pool, const ThresholdSet& t) {
  RequireSamePool(pool, t);
  SelectionResult r;
  r.rule = Rule::kConf;
  r.p = t.p;
  r.thresholds = {{"pred_wer", t.tau_w}, {"cos", t.tau_c}, {"euc", t.tau_d}};
  r.entries = PickPerUtterance(pool, Metric::kPred, [&](const auto& d) {
    return d.delta_w >= t.tau_w &&
           (d.delta_c >= t.tau_c || d.delta_d >= t.tau_d);
  });
  return r;
}

SelectionResult SelectSingleMetric(const ScoredPool& pool,
                                   const ThresholdSet& t, Metric metric) {
  RequireSamePool(pool, t);
  SelectionResult r;
  r.rule = metric == Metric::kPred  ? Rule::kPredOnly
           : metric == Metric::kCos ? Rule::kCosOnly
                                    : Rule::kEucOnly;
  r.p = t.p;
  r.thresholds = {{MetricName(metric), t.tau(metric)}};
  r.entries = PickPerUtterance(pool, metric, [&](const auto& d) {
    return d.delta(metric) >= t.tau(metric);
  });
  return r;
}

SelectionResult SelectStableBase(const ScoredPool& pool, int p) {
  ValidatePercentile(p);
  if (pool.utterances.empty()) {
    ThrowInvalid("empty-pool", "stable-base needs a nonempty pool");
  }
  std::vector<double> w, c, d;
  for (const ScoredUtterance& u : pool.utterances) {
    w.push_back(u.baseline.pred_wer);
    c.push_back(u.baseline.cos);
    d.push_back(u.baseline.euc);
  }
  const double tau_w = NearestRankPercentile(std::move(w), 100 - p, "pred_wer");
  const double tau_c = NearestRankPercentile(std::move(c), p, "cos");
  const double tau_d = NearestRankPercentile(std::move(d), 100 - p, "euc");
  SelectionResult r;
  r.rule = Rule::kStableBase;
  r.p = p;
  r.thresholds = {{"pred_wer", tau_w}, {"cos", tau_c}, {"euc", tau_d}};
  for (const ScoredUtterance& u : pool.utterances) {
    const ScoredHypothesis& b = u.baseline;
    if (b.pred_wer <= tau_w && (b.cos >= tau_c || b.euc <= tau_d)) {
      r.entries.push_back({u.utt_id, b.hyp_id, b.text, 1});
    }
  }
  return r;
}

SelectionResult SelectConfStable(const ScoredPool& pool, int p1, int p2) {
  const SelectionResult conf = SelectConf(pool, PercentileThresholds(pool, p1));
  const SelectionResult stable = SelectStableBase(pool, p2);
  SelectionResult r;
  r.rule = Rule::kConfStable;
  r.p = p1;
  r.p2 = p2;
  for (const auto& [k, v] : conf.thresholds) r.thresholds["conf." + k] = v;
  for (const auto& [k, v] : stable.thresholds) r.thresholds["stable." + k] = v;
  r.entries = conf.entries;
  r.entries.insert(r.entries.end(), stable.entries.begin(),
                   stable.entries.end());
  SortByUtt(r.entries);
  return r;
}

SelectionResult SelectPpl(const std::vector<HypothesisRecord>& hyps,
                          std::optional<int> p,
                          std::optional<size_t> size_matched) {
  if (p.has_value() == size_matched.has_value()) {
    throw Error(ErrorKind::kUsage, "bad-config",
                "ppl selection needs exactly one of a percentile or a size");
  }
  const auto base = Baselines(hyps, "ppl");
  std::vector<std::pair<double, const HypothesisRecord*>> ranked;
  for (const auto& [utt, h] : base) {
    if (!h->ppl) {
      ThrowInvalid("missing-ppl", "baseline of '" + utt + "' has no ppl");
    }
    ranked.emplace_back(*h->ppl, h);
  }
  // Ascending ppl, ties by utt_id (map order is already by utt_id).
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  SelectionResult r;
  r.rule = Rule::kPpl;
  size_t keep = 0;
  if (p) {
    ValidatePercentile(*p);
    r.p = *p;
    std::vector<double> values;
    for (const auto& e : ranked) values.push_back(e.first);
    const double tau = NearestRankPercentile(values, 100 - *p, "ppl");
    r.thresholds["ppl"] = tau;
    while (keep < ranked.size() && ranked[keep].first <= tau) ++keep;
  } else {
    if (*size_matched > ranked.size()) {
      ThrowInvalid("size-too-large",
                   "size-matched count " + std::to_string(*size_matched) +
                       " exceeds the " + std::to_string(ranked.size()) +
                       " utterances");
    }
    keep = *size_matched;
    r.thresholds["size_matched"] = static_cast<double>(keep);
  }
  for (size_t i = 0; i < keep; ++i) {
    const HypothesisRecord* h = ranked[i].second;
    r.entries.push_back({h->utt_id, h->hyp_id, h->text, 1});
  }
  SortByUtt(r.entries);
  return r;
}

SelectionResult SelectRandomHours(const std::vector<UtteranceRecord>& manifest,
                                  const std::vector<HypothesisRecord>& hyps,
                                  double target_hours, uint64_t seed) {
  if (!(target_hours >= 0.0)) {
    throw Error(ErrorKind::kUsage, "bad-config", "target hours must be >= 0");
  }
  const auto base = Baselines(hyps, "random");
  std::vector<const UtteranceRecord*> order;
  double total = 0.0;
  for (const UtteranceRecord& u : manifest) {
    order.push_back(&u);
    total += u.duration_sec;
  }
  const double target = target_hours * 3600.0;
  if (target > total) {
    ThrowInvalid("target-exceeds-pool",
                 "target of " + std::to_string(target_hours) +
                     " h exceeds the pool's " + std::to_string(total / 3600.0) +
                     " h");
  }
  // Shuffle from a canonical order so manifest order does not matter.
  std::sort(order.begin(), order.end(),
            [](const auto* a, const auto* b) { return a->utt_id < b->utt_id; });
  Rng rng(seed, "random-hours");
  rng.Shuffle(order);

  SelectionResult r;
  r.rule = Rule::kRandom;
  r.thresholds["target_hours"] = target_hours;
  double acc = 0.0;
  for (const UtteranceRecord* u : order) {
    if (acc >= target) break;
    auto it = base.find(u->utt_id);
    if (it == base.end()) {
      ThrowInvalid("missing-baseline",
                   "no baseline hypothesis for '" + u->utt_id + "'");
    }
    r.entries.push_back({u->utt_id, it->second->hyp_id, it->second->text, 1});
    acc += u->duration_sec;
  }
  return r;
}

SelectionResult SelectCerConsistency(
    const std::vector<UtteranceRecord>& manifest,
    const std::vector<HypothesisRecord>& sys_p,
    const std::vector<HypothesisRecord>& sys_z,
    const std::vector<HypothesisRecord>& sys_k, double tau) {
  const auto p = Baselines(sys_p, "system 1");
  const auto z = Baselines(sys_z, "system 2");
  const auto k = Baselines(sys_k, "system 3");
  SelectionResult r;
  r.rule = Rule::kCerConsistency;
  r.thresholds["tau"] = tau;
  for (const UtteranceRecord& u : manifest) {
    auto ip = p.find(u.utt_id), iz = z.find(u.utt_id), ik = k.find(u.utt_id);
    if (ip == p.end() || iz == z.end() || ik == k.end()) {
      ThrowInvalid("coverage-mismatch",
                   "not every system has a hypothesis for '" + u.utt_id + "'");
    }
    const std::string& tp = ip->second->text;
    const std::string& tz = iz->second->text;
    const std::string& tk = ik->second->text;
    const auto pz = Cer(tp, tz), pk = Cer(tp, tk), zk = Cer(tz, tk);
    if (!pz.rate || !pk.rate || !zk.rate) continue;
    const double avg = (*pz.rate + *pk.rate + *zk.rate) / 3.0;
    if (avg < tau) r.entries.push_back({u.utt_id, ip->second->hyp_id, tp, 1});
  }
  if (p.size() != manifest.size() || z.size() != manifest.size() ||
      k.size() != manifest.size()) {
    ThrowInvalid("coverage-mismatch",
                 "a system has hypotheses for utterances outside the manifest");
  }
  SortByUtt(r.entries);
  return r;
}

SelectionResult SelectWerBinary(const ScoredPool& pool) {
  SelectionResult r;
  r.rule = Rule::kWerBinary;
  r.thresholds["pred_wer"] = 0.5;
  for (const ScoredUtterance& u : pool.utterances) {
    if (u.baseline.pred_wer < 0.5) {
      r.entries.push_back({u.utt_id, u.baseline.hyp_id, u.baseline.text, 1});
    }
  }
  return r;
}

}  // namespace consel
