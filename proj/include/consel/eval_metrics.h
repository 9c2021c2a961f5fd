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

#ifndef CONSEL_EVAL_METRICS_H_
#define CONSEL_EVAL_METRICS_H_

// Word and character error rates, hour accounting, perturbation sweep
// reports and subset evaluation.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "consel/types.h"

namespace consel {

struct ErrorRateBreakdown {
  size_t substitutions = 0;
  size_t deletions = 0;
  size_t insertions = 0;
  size_t ref_len = 0;
  // (S + D + I) / ref_len; nullopt when the reference is empty.
  std::optional<double> rate;

  size_t errors() const { return substitutions + deletions + insertions; }
  bool operator==(const ErrorRateBreakdown&) const = default;
};

// Unit-cost Levenshtein alignment. On equal cost the traceback prefers
// substitution (or match), then deletion, then insertion.
ErrorRateBreakdown EditDistanceUnits(const std::vector<std::string>& ref,
                                     const std::vector<std::string>& hyp);
ErrorRateBreakdown EditDistanceUnits(const std::u32string& ref,
                                     const std::u32string& hyp);

ErrorRateBreakdown Wer(std::string_view ref, std::string_view hyp,
                       bool normalize = false);
// Characters are Unicode scalar values after whitespace collapsing; spaces
// count.
ErrorRateBreakdown Cer(std::string_view ref, std::string_view hyp,
                       bool normalize = false);

// Sum of weight * duration / 3600. Throws missing-duration.
double Hours(const SelectionResult& subset,
             const std::vector<UtteranceRecord>& manifest);

struct SweepEntry {
  std::string tag;
  PerturbationDescriptor perturbation;
  size_t utterances = 0;
  size_t improved = 0;
  double improvement_rate = 0.0;
  // Mean of (baseline WER - perturbed WER) over improved utterances.
  std::optional<double> mean_reduction;
  bool retained = false;  // improvement_rate >= 0.20
};

struct SweepReport {
  std::vector<SweepEntry> configs;  // ordered by descriptor
};

// Compares each perturbed configuration with the baseline decode against
// the manifest references. Throws missing-reference.
SweepReport MakeSweepReport(const std::vector<UtteranceRecord>& manifest,
                            const std::vector<HypothesisRecord>& hyps,
                            bool normalize = false);

struct UtteranceScore {
  std::string utt_id;
  std::string hyp_id;
  int weight = 1;
  ErrorRateBreakdown wer;
};

struct SubsetEvaluation {
  std::vector<UtteranceScore> utterances;  // subset entry order
  ErrorRateBreakdown pooled;  // summed counts, pooled rate
  double hours = 0.0;
};

// Pooled WER of the subset transcripts against the manifest references.
// Throws coverage-mismatch.
SubsetEvaluation EvaluateSubset(const SelectionResult& subset,
                                const std::vector<UtteranceRecord>& manifest,
                                bool normalize = false);

}  // namespace consel

#endif  // CONSEL_EVAL_METRICS_H_
