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

#ifndef CONSEL_SYNTH_H_
#define CONSEL_SYNTH_H_

// Deterministic synthetic pools with planted true-WER structure. Each
// hypothesis gets a planted WER w ~ U[0, 1]; its text carries round(w * L)
// word substitutions of the reference, its text embedding sits at angle
// (pi / 2) * w' from the utterance's speech embedding, and its predicted WER
// is w' = clamp(w + (1 - rho) * sigma * N(0, 1)). With rho = 1 every signal
// is a monotone function of the planted WER.

#include <cstdint>
#include <string>
#include <vector>

#include "consel/types.h"
#include "consel/wire_format.h"

namespace consel {

struct SynthConfig {
  size_t n_utts = 100;
  size_t n_query = 0;  // query-set utterances (manifest + audio only)
  uint64_t seed = 0;
  double rho = 0.8;
  double noise_sigma = 0.2;
  double min_duration_sec = 2.0;
  double max_duration_sec = 10.0;
  uint32_t emb_dim = 32;
  double duplicate_rate = 0.25;
  int min_words = 5;
  int max_words = 15;

  // Throws bad-config; rho outside [0, 1] is invalid-data.
  void Validate() const;
};

struct SynthData {
  std::vector<UtteranceRecord> manifest;        // pool, with ref_text
  std::vector<UtteranceRecord> query_manifest;  // may be empty
  std::vector<HypothesisRecord> hyps;           // 28 per utterance
  std::vector<QualityVector> scores;            // de-duplicated pool
  EmbeddingMatrix speech;                       // keyed by utt_id
  EmbeddingMatrix text;                         // keyed by hyp_id
  std::vector<TruthRow> truth;                  // every hypothesis
  std::vector<HypothesisRecord> systems[3];     // baselines of 3 systems
  EmbeddingMatrix pair_speech;                  // speech rows keyed by hyp_id
  std::vector<IdValue> pair_targets;            // hyp_id -> planted WER
};

SynthData GenerateSynth(const SynthConfig& cfg);

// Deterministic test tone for an utterance (16 kHz samples).
std::vector<double> SynthAudio(const std::string& utt_id, double duration_sec,
                               uint64_t seed, bool query);

// Writes every artifact under `dir` (created if needed) and returns the
// written paths in a fixed order. With `audio`, also writes audio/<id>.wav
// for pool and query utterances and sets their audio_path.
std::vector<std::string> WriteSynth(SynthData data, const std::string& dir,
                                    uint64_t seed, bool audio);

}  // namespace consel

#endif  // CONSEL_SYNTH_H_
