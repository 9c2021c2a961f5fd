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

#include <algorithm>
#include <cmath>
#include <limits>

#include "consel/kernels.h"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace consel::kernels {

void SetNumThreads(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

int MaxThreads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

double Dot(const double* a, const double* b, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double CosineOf(const double* a, const double* b, size_t n) {
  return Dot(a, b, n) / (std::sqrt(Dot(a, a, n)) * std::sqrt(Dot(b, b, n)));
}

double EuclideanOf(const double* a, const double* b, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double FlmiRowGain(const double* sims, const double* best, size_t m,
                   bool empty) {
  double coverage = 0.0;
  double row_max = -std::numeric_limits<double>::infinity();
  for (size_t q = 0; q < m; ++q) {
    const double s = sims[q];
    coverage += empty ? s : std::max(0.0, s - best[q]);
    row_max = std::max(row_max, s);
  }
  return coverage + (m == 0 ? 0.0 : row_max);
}

void DotBlock(Exec exec, const RowsView& cand, const RowsView& queries,
              std::span<double> out) {
  exec == Exec::kParallel ? omp::DotBlock(cand, queries, out)
                          : serial::DotBlock(cand, queries, out);
}

void FlmiGains(Exec exec, const RowsView& sims, std::span<const double> best,
               bool empty, std::span<double> gains) {
  exec == Exec::kParallel ? omp::FlmiGains(sims, best, empty, gains)
                          : serial::FlmiGains(sims, best, empty, gains);
}

void PairAlignment(Exec exec, const RowsView& a, const RowsView& b,
                   std::span<const PairIndex> pairs, std::span<double> cos,
                   std::span<double> euc) {
  exec == Exec::kParallel ? omp::PairAlignment(a, b, pairs, cos, euc)
                          : serial::PairAlignment(a, b, pairs, cos, euc);
}

}  // namespace consel::kernels
