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

#ifndef CONSEL_TYPES_H_
#define CONSEL_TYPES_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace consel {

enum class Split { kPool, kQuery, kDev, kTest };

const char* SplitName(Split split);
Split ParseSplit(std::string_view name);

struct UtteranceRecord {
  std::string utt_id;
  double duration_sec = 0.0;
  std::optional<std::string> audio_path;
  // Evaluation only. No selection path reads this field.
  std::optional<std::string> ref_text;
  std::optional<Split> split;

  bool operator==(const UtteranceRecord&) const = default;
};

// Model-noise scale and input-perturbation settings used to decode one
// hypothesis. See perturbation.h for the admissible combinations.
struct PerturbationDescriptor {
  double alpha = 0.0;
  int pitch_semitones = 0;
  double atempo = 1.0;

  bool IsBaseline() const;
  bool operator==(const PerturbationDescriptor&) const = default;
};

struct HypothesisRecord {
  std::string utt_id;
  std::string hyp_id;
  std::string text;
  PerturbationDescriptor perturbation;
  std::optional<double> ppl;

  bool operator==(const HypothesisRecord&) const = default;
};

// Id-indexed matrix of fixed-width float vectors, stored row-major.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  explicit EmbeddingMatrix(uint32_t dim);

  uint32_t dim() const { return dim_; }
  size_t rows() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  // Appends a row. Rejects wrong width, non-finite entries and duplicate ids.
  void AddRow(std::string id, std::span<const float> values);
  void AddRow(std::string id, std::span<const double> values);

  const std::string& id(size_t row) const { return ids_[row]; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::span<const float> row(size_t row) const {
    return {data_.data() + row * dim_, dim_};
  }
  std::optional<size_t> Find(std::string_view id) const;
  // Like Find but throws a missing-row error naming `what`.
  size_t RowOf(std::string_view id, std::string_view what) const;

  const std::vector<float>& data() const { return data_; }

  bool operator==(const EmbeddingMatrix& other) const;

 private:
  uint32_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> data_;
  std::unordered_map<std::string, size_t> index_;
};

struct QualityVector {
  std::string utt_id;
  std::string hyp_id;
  double pred_wer = 0.0;
  double cos = 0.0;
  double euc = 0.0;

  bool operator==(const QualityVector&) const = default;
};

enum class Rule {
  kConf,
  kPredOnly,
  kCosOnly,
  kEucOnly,
  kStableBase,
  kConfStable,
  kPpl,
  kRandom,
  kCerConsistency,
  kWerBinary,
};

const char* RuleName(Rule rule);

struct SelectionEntry {
  std::string utt_id;
  std::string hyp_id;
  std::string text;
  int weight = 1;

  bool operator==(const SelectionEntry&) const = default;
};

struct SelectionResult {
  Rule rule = Rule::kConf;
  std::optional<int> p;
  std::optional<int> p2;
  // Metric name -> threshold actually applied. Ordered for stable output.
  std::map<std::string, double> thresholds;
  std::vector<SelectionEntry> entries;

  bool operator==(const SelectionResult&) const = default;
};

}  // namespace consel

#endif  // CONSEL_TYPES_H_
