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

#include "consel/types.h"

#include <cmath>
#include <cstring>

#include "consel/error.h"

namespace consel {

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage:
      return "usage";
    case ErrorKind::kMissingInput:
      return "missing_input";
    case ErrorKind::kInvalidData:
      return "invalid_data";
    case ErrorKind::kNumeric:
      return "numeric_failure";
  }
  return "unknown";
}

const char* SplitName(Split split) {
  switch (split) {
    case Split::kPool:
      return "pool";
    case Split::kQuery:
      return "query";
    case Split::kDev:
      return "dev";
    case Split::kTest:
      return "test";
  }
  return "pool";
}

Split ParseSplit(std::string_view name) {
  if (name == "pool") return Split::kPool;
  if (name == "query") return Split::kQuery;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  ThrowInvalid("bad-split", "unknown split '" + std::string(name) + "'");
}

const char* RuleName(Rule rule) {
  switch (rule) {
    case Rule::kConf:
      return "conf";
    case Rule::kPredOnly:
      return "pred_only";
    case Rule::kCosOnly:
      return "cos_only";
    case Rule::kEucOnly:
      return "euc_only";
    case Rule::kStableBase:
      return "stable_base";
    case Rule::kConfStable:
      return "conf_stable";
    case Rule::kPpl:
      return "ppl";
    case Rule::kRandom:
      return "random";
    case Rule::kCerConsistency:
      return "cer_consistency";
    case Rule::kWerBinary:
      return "wer_binary";
  }
  return "unknown";
}

bool PerturbationDescriptor::IsBaseline() const {
  return alpha == 0.0 && pitch_semitones == 0 && atempo == 1.0;
}

EmbeddingMatrix::EmbeddingMatrix(uint32_t dim) : dim_(dim) {
  if (dim == 0) ThrowInvalid("invalid-dim", "embedding dim must be positive");
}

void EmbeddingMatrix::AddRow(std::string id, std::span<const float> values) {
  if (dim_ == 0) ThrowInvalid("invalid-dim", "embedding dim must be positive");
  if (values.size() != dim_) {
    ThrowInvalid("dim-mismatch", "row '" + id + "' has " +
                                     std::to_string(values.size()) +
                                     " values, expected " +
                                     std::to_string(dim_));
  }
  for (float v : values) {
    if (!std::isfinite(v)) {
      ThrowInvalid("non-finite", "non-finite value in row '" + id + "'");
    }
  }
  if (index_.count(id) != 0) {
    ThrowInvalid("duplicate-id", "duplicate embedding id '" + id + "'");
  }
  index_.emplace(id, ids_.size());
  ids_.push_back(std::move(id));
  data_.insert(data_.end(), values.begin(), values.end());
}

void EmbeddingMatrix::AddRow(std::string id, std::span<const double> values) {
  std::vector<float> narrowed(values.begin(), values.end());
  AddRow(std::move(id), std::span<const float>(narrowed));
}

std::optional<size_t> EmbeddingMatrix::Find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

size_t EmbeddingMatrix::RowOf(std::string_view id,
                              std::string_view what) const {
  auto row = Find(id);
  if (!row) {
    ThrowInvalid("missing-row", "no " + std::string(what) +
                                    " embedding row for id '" +
                                    std::string(id) + "'");
  }
  return *row;
}

bool EmbeddingMatrix::operator==(const EmbeddingMatrix& other) const {
  if (dim_ != other.dim_ || ids_ != other.ids_) return false;
  if (data_.size() != other.data_.size()) return false;
  // Bitwise, so that -0.0 vs 0.0 counts as a difference.
  return data_.empty() || std::memcmp(data_.data(), other.data_.data(),
                                      data_.size() * sizeof(float)) == 0;
}

}  // namespace consel
