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

#ifndef CONSEL_ALIGNMENT_H_
#define CONSEL_ALIGNMENT_H_

// Cross-modal alignment scores and the de-duplicated perturbation pool.

#include <span>
#include <string>
#include <vector>

#include "consel/kernels.h"
#include "consel/predictor.h"
#include "consel/types.h"

namespace consel {

// <a, b> / (|a| |b|). Throws dim-mismatch or zero-norm.
double Cosine(std::span<const double> a, std::span<const double> b);
// |a - b|_2. Throws dim-mismatch.
double Euclidean(std::span<const double> a, std::span<const double> b);

struct UtterancePool {
  std::string utt_id;
  HypothesisRecord baseline;
  std::vector<HypothesisRecord> perturbed;  // sorted by hyp_id
  int dropped_baseline_equal = 0;
  int dropped_duplicate = 0;

  int K() const { return static_cast<int>(perturbed.size()); }
};

struct PoolSkeleton {
  std::vector<UtterancePool> utterances;  // sorted by utt_id

  size_t num_hypotheses() const;
  // Baselines and retained perturbed hypotheses, ordered by (utt_id, hyp_id).
  std::vector<HypothesisRecord> Flatten() const;
};

// Groups hypotheses by utterance and drops perturbed texts that repeat the
// baseline or another perturbed text (after whitespace normalization). Among
// duplicates the smallest (alpha, |pitch|, |1 - atempo|, hyp_id) survives.
// Throws missing-baseline, duplicate-baseline or too-many-hypotheses (> 28).
PoolSkeleton DedupPool(const std::vector<HypothesisRecord>& hyps);

// Quality vector of every hypothesis in the pool, baselines included,
// ordered by (utt_id, hyp_id). Speech embeddings are keyed by utt_id and text
// embeddings by hyp_id; the predictor sees [speech || text].
std::vector<QualityVector> ScorePool(const PoolSkeleton& pool,
                                     const EmbeddingMatrix& speech,
                                     const EmbeddingMatrix& text,
                                     const PredictorNet& net,
                                     kernels::Exec exec = kernels::Exec::kParallel);

// A scored hypothesis as consumed by the selection rules.
struct ScoredHypothesis {
  std::string hyp_id;
  std::string text;
  double pred_wer = 0.0;
  double cos = 0.0;
  double euc = 0.0;
};

struct ScoredUtterance {
  std::string utt_id;
  ScoredHypothesis baseline;
  std::vector<ScoredHypothesis> perturbed;  // sorted by hyp_id
};

struct ScoredPool {
  std::vector<ScoredUtterance> utterances;  // sorted by utt_id
};

// Joins score rows with their hypothesis texts. The pool is the set of
// utterances that have scores; each must include its baseline score. Throws
// unknown-hypothesis for a score without a hypothesis record.
ScoredPool AssemblePool(const std::vector<HypothesisRecord>& hyps,
                        const std::vector<QualityVector>& scores);

// SHA-256 over a canonical rendering of every score in the pool.
std::string PoolDigest(const ScoredPool& pool);

}  // namespace consel

#endif  // CONSEL_ALIGNMENT_H_
