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

#ifndef CONSEL_WIRE_FORMAT_H_
#define CONSEL_WIRE_FORMAT_H_

#include <string>
#include <vector>

#include "consel/types.h"

namespace consel {

// JSON-lines files: UTF-8, one object per line, blank lines skipped,
// unknown keys ignored on read and never written.

// Manifest keys: utt_id, duration_sec, audio_path?, ref_text?, split?
std::vector<UtteranceRecord> ReadManifest(const std::string& path);
void WriteManifest(const std::vector<UtteranceRecord>& records,
                   const std::string& path);

// Hypothesis keys: utt_id, hyp_id, text, alpha, pitch_semitones, atempo, ppl?
// Strict mode rejects descriptors outside the 28 admissible combinations.
// Every utterance must carry exactly one baseline hypothesis.
std::vector<HypothesisRecord> ReadHypotheses(const std::string& path,
                                             bool lenient = false);
void WriteHypotheses(const std::vector<HypothesisRecord>& records,
                     const std::string& path);

// Score keys: utt_id, hyp_id, pred_wer, cos, euc
std::vector<QualityVector> ReadScores(const std::string& path);
void WriteScores(const std::vector<QualityVector>& scores,
                 const std::string& path);

// Subset keys: utt_id, hyp_id, text, weight, rule, p, [p2], thresholds
SelectionResult ReadSelection(const std::string& path);
void WriteSelection(const SelectionResult& result, const std::string& path);

// {id, <value_key>} rows, used for predictor targets (target_wer) and
// planted truth (true_wer, keyed by utt_id + hyp_id).
struct IdValue {
  std::string id;
  double value = 0.0;
};
std::vector<IdValue> ReadTargets(const std::string& path);
void WriteTargets(const std::vector<IdValue>& targets, const std::string& path);

struct TruthRow {
  std::string utt_id;
  std::string hyp_id;
  double true_wer = 0.0;
};
std::vector<TruthRow> ReadTruth(const std::string& path);
void WriteTruth(const std::vector<TruthRow>& rows, const std::string& path);

// Plain text, one id per line. Lines starting with '#' are headers.
std::vector<std::string> ReadIdList(const std::string& path);
void WriteIdList(const std::vector<std::string>& ids, const std::string& path,
                 const std::string& header = "");

// EMB1: "EMB1", u32 dim, u64 rows, then per row u16 id length, id bytes,
// dim float32. All integers and floats little-endian.
EmbeddingMatrix ReadEmbeddings(const std::string& path);
void WriteEmbeddings(const EmbeddingMatrix& matrix, const std::string& path);

// Whole-file helpers shared by the CLI and tests.
std::string ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, const std::string& bytes);

}  // namespace consel

#endif  // CONSEL_WIRE_FORMAT_H_
