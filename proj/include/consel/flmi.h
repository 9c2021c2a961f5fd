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

#ifndef CONSEL_FLMI_H_
#define CONSEL_FLMI_H_

// Facility Location Mutual Information between a candidate subset S and a
// query set T:
//
//   I(S; T) = sum_{q in T} max_{c in S} s_cq + sum_{c in S} max_{q in T} s_cq
//
// with max over an empty set defined as 0. Maximized under a cardinality
// budget by greedy selection, optionally with lazy (stale upper bound)
// evaluation.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "consel/kernels.h"
#include "consel/types.h"

namespace consel {

// Source of candidate-by-query similarity rows.
class SimilaritySource {
 public:
  virtual ~SimilaritySource() = default;
  virtual size_t num_candidates() const = 0;
  virtual size_t num_queries() const = 0;
  virtual const std::string& candidate_id(size_t c) const = 0;
  // Writes rows [begin, end) into `out`, row-major (end - begin) x m.
  virtual void Rows(size_t begin, size_t end, std::span<double> out,
                    kernels::Exec exec) const = 0;
};

// Fully materialized n x m kernel. Used for in-memory selection and as the
// oracle for the streaming path.
class SimilarityKernel : public SimilaritySource {
 public:
  // `sims` is row-major candidates x queries.
  SimilarityKernel(std::vector<std::string> candidate_ids,
                   std::vector<std::string> query_ids,
                   std::vector<double> sims);
  // Cosine similarities between every candidate and query row.
  static SimilarityKernel FromEmbeddings(const EmbeddingMatrix& candidates,
                                         const EmbeddingMatrix& queries);

  size_t num_candidates() const override { return candidate_ids_.size(); }
  size_t num_queries() const override { return query_ids_.size(); }
  const std::string& candidate_id(size_t c) const override {
    return candidate_ids_[c];
  }
  void Rows(size_t begin, size_t end, std::span<double> out,
            kernels::Exec exec) const override;

  double at(size_t c, size_t q) const { return sims_[c * num_queries() + q]; }
  const std::vector<std::string>& candidate_ids() const {
    return candidate_ids_;
  }
  // Index of a candidate id; throws unknown-id.
  size_t IndexOf(const std::string& id) const;

 private:
  std::vector<std::string> candidate_ids_;
  std::vector<std::string> query_ids_;
  std::vector<double> sims_;
};

// Computes similarity rows on demand from unit-normalized features, keeping
// only the feature matrices resident.
class StreamingKernel : public SimilaritySource {
 public:
  StreamingKernel(std::vector<std::string> candidate_ids,
                  const EmbeddingMatrix& candidate_features,
                  const EmbeddingMatrix& queries);

  size_t num_candidates() const override { return candidate_ids_.size(); }
  size_t num_queries() const override { return num_queries_; }
  const std::string& candidate_id(size_t c) const override {
    return candidate_ids_[c];
  }
  void Rows(size_t begin, size_t end, std::span<double> out,
            kernels::Exec exec) const override;

 private:
  std::vector<std::string> candidate_ids_;
  size_t dim_ = 0;
  size_t num_queries_ = 0;
  std::vector<double> candidates_;  // n x dim, unit rows
  std::vector<double> queries_;     // m x dim, unit rows
};

// Scratch evaluation of I(S; T) on a dense kernel. Throws unknown-id.
double FlmiValue(const std::vector<std::string>& selected,
                 const SimilarityKernel& kernel);
double FlmiValueByIndex(std::span<const size_t> selected,
                        const SimilarityKernel& kernel);

enum class GreedyMode { kExact, kLazy };

struct GreedyOptions {
  GreedyMode mode = GreedyMode::kLazy;
  size_t chunk = 4096;  // candidate rows per streamed block
  kernels::Exec exec = kernels::Exec::kParallel;
};

struct GreedyResult {
  std::vector<size_t> order;        // candidate indices in selection order
  std::vector<std::string> ids;     // same, as ids
  std::vector<double> gains;        // marginal gain at each insertion
  std::vector<double> values;       // incrementally maintained I(S; T)
  size_t gain_evaluations = 0;
};

// Incremental greedy state: selection, per-query coverage and value.
class GreedyState {
 public:
  explicit GreedyState(size_t num_queries);

  bool empty() const { return selected_.empty(); }
  const std::vector<size_t>& selected() const { return selected_; }
  std::span<const double> best_to_query() const { return best_; }
  double value() const { return value_; }

  // Adds candidate `c` whose similarity row is `sims` and whose marginal gain
  // (as returned by FlmiRowGain) is `gain`.
  void Insert(size_t c, std::span<const double> sims, double gain);

 private:
  std::vector<size_t> selected_;
  std::vector<double> best_;
  double value_ = 0.0;
};

// Greedy maximization of I(S; T) with |S| = budget. Ties on gain go to the
// lexicographically smallest candidate id. Exact and lazy modes return the
// same sequence. Throws budget-too-large when budget > n.
GreedyResult GreedySelect(const SimilaritySource& source, size_t budget,
                          const GreedyOptions& options = {});

// FLMI preselection of `budget` manifest utterances towards the query set.
// Every manifest id must have a row in `pool_features`.
std::vector<std::string> Preselect(const std::vector<UtteranceRecord>& manifest,
                                   const EmbeddingMatrix& pool_features,
                                   const EmbeddingMatrix& query_features,
                                   size_t budget,
                                   const GreedyOptions& options = {});

}  // namespace consel

#endif  // CONSEL_FLMI_H_
