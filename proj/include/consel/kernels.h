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

#ifndef CONSEL_KERNELS_H_
#define CONSEL_KERNELS_H_

// Data-parallel inner loops. Each kernel has a plain serial reference in
// consel::kernels::serial and an OpenMP version in consel::kernels::omp.
// Both produce bit-identical results: parallelism only splits independent
// output elements, never a reduction.

#include <cstddef>
#include <span>

namespace consel::kernels {

enum class Exec { kSerial, kParallel };

// Sets the OpenMP thread count (no-op when built without OpenMP).
void SetNumThreads(int threads);
int MaxThreads();

// A flat row-major matrix view.
struct RowsView {
  std::span<const double> data;
  size_t rows = 0;
  size_t cols = 0;
  const double* row(size_t r) const { return data.data() + r * cols; }
};

struct PairIndex {
  size_t a;
  size_t b;
};

// DotBlock: out[r * queries.rows + q] = <cand_r, query_q>. Rows are expected
// to be unit-normalized, so this is the cosine similarity block.
//
// FlmiGains: FLMI marginal gain of every row of an r x m similarity block
// against the per-query coverage `best`; gains[r] = sum_q term + max_q s_rq,
// where term = s_rq when `empty` (nothing selected yet) and
// max(0, s_rq - best_q) otherwise.
//
// PairAlignment: cosine and Euclidean distance between a.row(p.a) and
// b.row(p.b) for every pair. Zero-norm rows yield NaN cosines; callers
// validate norms first.
namespace serial {
void DotBlock(const RowsView& cand, const RowsView& queries,
              std::span<double> out);
void FlmiGains(const RowsView& sims, std::span<const double> best, bool empty,
               std::span<double> gains);
void PairAlignment(const RowsView& a, const RowsView& b,
                   std::span<const PairIndex> pairs, std::span<double> cos,
                   std::span<double> euc);
}  // namespace serial

namespace omp {
void DotBlock(const RowsView& cand, const RowsView& queries,
              std::span<double> out);
void FlmiGains(const RowsView& sims, std::span<const double> best, bool empty,
               std::span<double> gains);
void PairAlignment(const RowsView& a, const RowsView& b,
                   std::span<const PairIndex> pairs, std::span<double> cos,
                   std::span<double> euc);
}  // namespace omp

// Dispatching entry points.
void DotBlock(Exec exec, const RowsView& cand, const RowsView& queries,
              std::span<double> out);
void FlmiGains(Exec exec, const RowsView& sims, std::span<const double> best,
               bool empty, std::span<double> gains);
void PairAlignment(Exec exec, const RowsView& a, const RowsView& b,
                   std::span<const PairIndex> pairs, std::span<double> cos,
                   std::span<double> euc);

// Shared scalar helpers, used by both implementations.
double Dot(const double* a, const double* b, size_t n);
double CosineOf(const double* a, const double* b, size_t n);
double EuclideanOf(const double* a, const double* b, size_t n);
double FlmiRowGain(const double* sims, const double* best, size_t m,
                   bool empty);

}  // namespace consel::kernels

#endif  // CONSEL_KERNELS_H_
