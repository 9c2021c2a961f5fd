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

#ifndef CONSEL_SELECTION_H_
#define CONSEL_SELECTION_H_

// Percentile-threshold selection rules over a scored perturbation pool, and
// the comparison baselines.
//
// Improvement deltas are oriented so that positive means better:
//   dw = w0 - wk,  dc = ck - c0,  dd = d0 - dk.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "consel/alignment.h"
#include "consel/types.h"

namespace consel {

enum class Metric { kPred, kCos, kEuc };

const char* MetricName(Metric m);

struct ImprovementRecord {
  std::string utt_id;
  std::string hyp_id;
  double delta_w = 0.0;
  double delta_c = 0.0;
  double delta_d = 0.0;

  double delta(Metric m) const;
};

// One record per perturbed hypothesis, in pool order.
std::vector<ImprovementRecord> Deltas(const ScoredPool& pool);

// Throws bad-percentile unless 1 <= p <= 100.
void ValidatePercentile(int p);

// 1-based nearest-rank index ceil(p * count / 100), at least 1.
size_t NearestRank(size_t count, int p);

// Nearest-rank percentile of `values` (any order). Throws
// empty-distribution naming `metric` when `values` is empty.
double NearestRankPercentile(std::vector<double> values, int p,
                             const std::string& metric);

struct ThresholdSet {
  int p = 0;
  double tau_w = 0.0;
  double tau_c = 0.0;
  double tau_d = 0.0;
  std::string pool_digest;

  double tau(Metric m) const;
};

// Per metric, the nearest-rank p-th percentile of the strictly positive
// improvements over the pool.
ThresholdSet PercentileThresholds(const ScoredPool& pool, int p);

// dw >= tau_w and (dc >= tau_c or dd >= tau_d); per utterance the accepted
// hypothesis with the largest dw (ties: smallest hyp_id). Throws
// pool-mismatch if `t` was computed on another pool.
SelectionResult SelectConf(const ScoredPool& pool, const ThresholdSet& t);

// Accepts on one metric's delta and keeps the largest delta per utterance.
SelectionResult SelectSingleMetric(const ScoredPool& pool,
                                   const ThresholdSet& t, Metric metric);

// Thresholds on the baseline distribution:
//   w0 <= tau_w^(100-p)  and  (c0 >= tau_c^p  or  d0 <= tau_d^(100-p)).
// Larger p is stricter. Selected transcript is the baseline text.
SelectionResult SelectStableBase(const ScoredPool& pool, int p);

// Concatenation of SelectConf at p1 and SelectStableBase at p2. An
// utterance chosen by both appears twice: its conf hypothesis and its
// baseline.
SelectionResult SelectConfStable(const ScoredPool& pool, int p1, int p2);

// Lowest baseline perplexity. Percentile mode keeps ppl <= the
// (100 - p)-th percentile; size-matched mode keeps exactly `size_matched`
// utterances (ties by utt_id). Throws missing-ppl.
SelectionResult SelectPpl(const std::vector<HypothesisRecord>& hyps,
                          std::optional<int> p,
                          std::optional<size_t> size_matched);

// Seeded shuffle of the manifest, then the shortest prefix whose duration
// reaches `target_hours`. Entries keep the shuffled order. Transcripts are
// the baseline texts from `hyps`.
SelectionResult SelectRandomHours(const std::vector<UtteranceRecord>& manifest,
                                  const std::vector<HypothesisRecord>& hyps,
                                  double target_hours, uint64_t seed);

// Average of CER(p, z), CER(p, k), CER(z, k) over the baseline texts of three
// systems; keeps utterances with average < tau. Utterances whose CER is
// undefined (empty reference text) are not kept.
SelectionResult SelectCerConsistency(
    const std::vector<UtteranceRecord>& manifest,
    const std::vector<HypothesisRecord>& sys_p,
    const std::vector<HypothesisRecord>& sys_z,
    const std::vector<HypothesisRecord>& sys_k, double tau);

// Baselines with predicted WER strictly below 0.5.
SelectionResult SelectWerBinary(const ScoredPool& pool);

}  // namespace consel

#endif  // CONSEL_SELECTION_H_
