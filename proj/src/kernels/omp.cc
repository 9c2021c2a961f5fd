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

#include <cstdint>

#include "consel/kernels.h"

namespace consel::kernels::omp {

void DotBlock(const RowsView& cand, const RowsView& queries,
              std::span<double> out) {
  const int64_t n = static_cast<int64_t>(cand.rows);
  const size_t m = queries.rows;
#pragma omp parallel for schedule(static)
  for (int64_t r = 0; r < n; ++r) {
    for (size_t q = 0; q < m; ++q) {
      out[r * m + q] = Dot(cand.row(r), queries.row(q), cand.cols);
    }
  }
}

void FlmiGains(const RowsView& sims, std::span<const double> best, bool empty,
               std::span<double> gains) {
  const int64_t n = static_cast<int64_t>(sims.rows);
#pragma omp parallel for schedule(static)
  for (int64_t r = 0; r < n; ++r) {
    gains[r] = FlmiRowGain(sims.row(r), best.data(), sims.cols, empty);
  }
}

void PairAlignment(const RowsView& a, const RowsView& b,
                   std::span<const PairIndex> pairs, std::span<double> cos,
                   std::span<double> euc) {
  const int64_t n = static_cast<int64_t>(pairs.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    cos[i] = CosineOf(a.row(pairs[i].a), b.row(pairs[i].b), a.cols);
    euc[i] = EuclideanOf(a.row(pairs[i].a), b.row(pairs[i].b), a.cols);
  }
}

}  // namespace consel::kernels::omp
