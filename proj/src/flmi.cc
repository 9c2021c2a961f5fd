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

#include "consel/flmi.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <unordered_map>

#include "consel/error.h"

namespace consel {
namespace {

using kernels::Exec;
using kernels::RowsView;

// Copies `row` of `m` into `out` scaled to unit L2 norm.
void AppendUnitRow(const EmbeddingMatrix& m, size_t row, std::vector<double>& out) {
  std::span<const float> v = m.row(row);
  double norm2 = 0.0;
  for (float x : v) norm2 += static_cast<double>(x) * x;
  if (!(norm2 > 0.0)) {
    ThrowInvalid("zero-norm",
                 "feature row '" + m.id(row) + "' has zero norm; cosine "
                 "similarity is undefined");
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (float x : v) out.push_back(x * inv);
}

std::vector<double> UnitRows(const EmbeddingMatrix& m) {
  std::vector<double> out;
  out.reserve(m.rows() * m.dim());
  for (size_t r = 0; r < m.rows(); ++r) AppendUnitRow(m, r, out);
  return out;
}

}  // namespace

SimilarityKernel::SimilarityKernel(std::vector<std::string> candidate_ids,
                                   std::vector<std::string> query_ids,
                                   std::vector<double> sims)
    : candidate_ids_(std::move(candidate_ids)),
      query_ids_(std::move(query_ids)),
      sims_(std::move(sims)) {
  if (sims_.size() != candidate_ids_.size() * query_ids_.size()) {
    ThrowInvalid("shape-mismatch", "similarity matrix size does not match ids");
  }
  for (double s : sims_) {
    if (!std::isfinite(s) || std::fabs(s) > 1.0 + 1e-6) {
      ThrowInvalid("out-of-range", "similarity outside [-1, 1]");
    }
  }
}

SimilarityKernel SimilarityKernel::FromEmbeddings(
    const EmbeddingMatrix& candidates, const EmbeddingMatrix& queries) {
  if (candidates.dim() != queries.dim()) {
    ThrowInvalid("dim-mismatch", "candidate and query features differ in dim");
  }
  const std::vector<double> cu = UnitRows(candidates);
  const std::vector<double> qu = UnitRows(queries);
  std::vector<double> sims(candidates.rows() * queries.rows());
  kernels::DotBlock(Exec::kParallel,
                    RowsView{cu, candidates.rows(), candidates.dim()},
                    RowsView{qu, queries.rows(), queries.dim()}, sims);
  return SimilarityKernel(candidates.ids(), queries.ids(), std::move(sims));
}

void SimilarityKernel::Rows(size_t begin, size_t end, std::span<double> out,
                            Exec) const {
  const size_t m = num_queries();
  std::copy(sims_.begin() + begin * m, sims_.begin() + end * m, out.begin());
}

size_t SimilarityKernel::IndexOf(const std::string& id) const {
  auto it = std::find(candidate_ids_.begin(), candidate_ids_.end(), id);
  if (it == candidate_ids_.end()) {
    ThrowInvalid("unknown-id", "'" + id + "' is not a candidate");
  }
  return static_cast<size_t>(it - candidate_ids_.begin());
}

StreamingKernel::StreamingKernel(std::vector<std::string> candidate_ids,
                                 const EmbeddingMatrix& candidate_features,
                                 const EmbeddingMatrix& queries)
    : candidate_ids_(std::move(candidate_ids)),
      dim_(queries.dim()),
      num_queries_(queries.rows()),
      queries_(UnitRows(queries)) {
  if (candidate_features.dim() != queries.dim()) {
    ThrowInvalid("dim-mismatch", "candidate and query features differ in dim");
  }
  candidates_.reserve(candidate_ids_.size() * dim_);
  for (const std::string& id : candidate_ids_) {
    AppendUnitRow(candidate_features, candidate_features.RowOf(id, "feature"),
                  candidates_);
  }
}

void StreamingKernel::Rows(size_t begin, size_t end, std::span<double> out,
                           Exec exec) const {
  std::span<const double> block(candidates_.data() + begin * dim_,
                                (end - begin) * dim_);
  kernels::DotBlock(exec, RowsView{block, end - begin, dim_},
                    RowsView{queries_, num_queries_, dim_}, out);
}

double FlmiValueByIndex(std::span<const size_t> selected,
                        const SimilarityKernel& kernel) {
  if (selected.empty()) return 0.0;
  const size_t m = kernel.num_queries();
  double query_term = 0.0;
  for (size_t q = 0; q < m; ++q) {
    double best = -std::numeric_limits<double>::infinity();
    for (size_t c : selected) best = std::max(best, kernel.at(c, q));
    query_term += best;
  }
  double cand_term = 0.0;
  if (m > 0) {
    for (size_t c : selected) {
      double best = -std::numeric_limits<double>::infinity();
      for (size_t q = 0; q < m; ++q) best = std::max(best, kernel.at(c, q));
      cand_term += best;
    }
  }
  return query_term + cand_term;
}

double FlmiValue(const std::vector<std::string>& selected,
                 const SimilarityKernel& kernel) {
  std::vector<size_t> idx;
  idx.reserve(selected.size());
  for (const std::string& id : selected) idx.push_back(kernel.IndexOf(id));
  return FlmiValueByIndex(idx, kernel);
}

GreedyState::GreedyState(size_t num_queries) : best_(num_queries, 0.0) {}

void GreedyState::Insert(size_t c, std::span<const double> sims, double gain) {
  const bool first = selected_.empty();
  for (size_t q = 0; q < best_.size(); ++q) {
    best_[q] = first ? sims[q] : std::max(best_[q], sims[q]);
  }
  selected_.push_back(c);
  value_ += gain;
}

GreedyResult GreedySelect(const SimilaritySource& source, size_t budget,
                          const GreedyOptions& options) {
  const size_t n = source.num_candidates();
  const size_t m = source.num_queries();
  if (budget > n) {
    ThrowInvalid("budget-too-large", "budget " + std::to_string(budget) +
                                         " exceeds the " + std::to_string(n) +
                                         " candidates");
  }
  const size_t chunk = std::max<size_t>(1, options.chunk);

  // rank[c] orders candidates by id for tie-breaking.
  std::vector<size_t> by_id(n);
  std::iota(by_id.begin(), by_id.end(), 0);
  std::sort(by_id.begin(), by_id.end(), [&](size_t a, size_t b) {
    return source.candidate_id(a) < source.candidate_id(b);
  });
  std::vector<size_t> rank(n);
  for (size_t r = 0; r < n; ++r) rank[by_id[r]] = r;
  auto better = [&](double ga, size_t a, double gb, size_t b) {
    return ga > gb || (ga == gb && rank[a] < rank[b]);
  };

  GreedyResult result;
  GreedyState state(m);
  std::vector<char> taken(n, 0);
  std::vector<double> block(chunk * m), row(m), gains(n);

  // Gains of every candidate against the current state, streamed in chunks.
  auto full_pass = [&]() {
    for (size_t begin = 0; begin < n; begin += chunk) {
      const size_t end = std::min(n, begin + chunk);
      std::span<double> sims(block.data(), (end - begin) * m);
      source.Rows(begin, end, sims, options.exec);
      kernels::FlmiGains(options.exec, RowsView{sims, end - begin, m},
                         state.best_to_query(), state.empty(),
                         std::span<double>(gains.data() + begin, end - begin));
    }
    result.gain_evaluations += n - state.selected().size();
  };
  auto best_untaken = [&]() {
    size_t pick = n;
    for (size_t c = 0; c < n; ++c) {
      if (taken[c]) continue;
      if (pick == n || better(gains[c], c, gains[pick], pick)) pick = c;
    }
    return pick;
  };
  auto insert = [&](size_t c, double gain) {
    source.Rows(c, c + 1, row, options.exec);
    state.Insert(c, row, gain);
    taken[c] = 1;
    result.order.push_back(c);
    result.ids.push_back(source.candidate_id(c));
    result.gains.push_back(gain);
    result.values.push_back(state.value());
  };

  // Stale gains are upper bounds only once every query has a defined
  // coverage, i.e. after the first insertion. Lazy mode therefore evaluates
  // the first two rounds exhaustively.
  const size_t exhaustive_rounds =
      options.mode == GreedyMode::kExact ? budget : std::min<size_t>(budget, 2);
  for (size_t round = 0; round < exhaustive_rounds; ++round) {
    full_pass();
    const size_t pick = best_untaken();
    insert(pick, gains[pick]);
  }
  if (exhaustive_rounds == budget) return result;

  struct Entry {
    double gain;
    size_t c;
    size_t stamp;  // round in which `gain` was computed
  };
  auto lower = [&](const Entry& a, const Entry& b) {
    return better(b.gain, b.c, a.gain, a.c);
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(lower)> heap(lower);
  // The last full pass ran in round exhaustive_rounds - 1, before that
  // round's insertion, so these bounds are stale for round exhaustive_rounds.
  for (size_t c = 0; c < n; ++c) {
    if (!taken[c]) heap.push({gains[c], c, exhaustive_rounds - 1});
  }
  for (size_t round = exhaustive_rounds; round < budget; ++round) {
    while (true) {
      Entry top = heap.top();
      heap.pop();
      if (top.stamp == round) {
        insert(top.c, top.gain);
        break;
      }
      source.Rows(top.c, top.c + 1, row, options.exec);
      const double g =
          kernels::FlmiRowGain(row.data(), state.best_to_query().data(), m,
                               state.empty());
      ++result.gain_evaluations;
      heap.push({g, top.c, round});
    }
  }
  return result;
}

std::vector<std::string> Preselect(const std::vector<UtteranceRecord>& manifest,
                                   const EmbeddingMatrix& pool_features,
                                   const EmbeddingMatrix& query_features,
                                   size_t budget,
                                   const GreedyOptions& options) {
  std::vector<std::string> ids;
  ids.reserve(manifest.size());
  for (const UtteranceRecord& u : manifest) ids.push_back(u.utt_id);
  StreamingKernel kernel(std::move(ids), pool_features, query_features);
  if (budget == 0) return {};
  return GreedySelect(kernel, budget, options).ids;
}

}  // namespace consel
