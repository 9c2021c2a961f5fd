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

#ifndef CONSEL_TESTS_ACCEPTANCE_BRUTE_FORCE_H_
#define CONSEL_TESTS_ACCEPTANCE_BRUTE_FORCE_H_

// Deliberately naive reference implementations. They share only the plain
// record types and the seeded generator with the library, and are written
// directly from the definitions so they can serve as oracles.

#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "consel/types.h"
#include "consel/wire_format.h"

namespace consel::brute {

// FLMI of the candidate rows in `set` against every query column.
double Flmi(const std::vector<std::vector<double>>& s,
            const std::vector<size_t>& set);
// Best FLMI over all subsets of exactly `budget` candidates.
double FlmiOptimum(const std::vector<std::vector<double>>& s, size_t budget);

// Edit distance by plain recursion without memoization.
size_t RecursiveEditDistance(const std::vector<std::string>& a,
                             const std::vector<std::string>& b);

// Correlation and error formulas written out term by term.
std::optional<double> Pearson(const std::vector<double>& x,
                              const std::vector<double>& y);
std::optional<double> Spearman(const std::vector<double>& x,
                               const std::vector<double>& y);
double Mae(const std::vector<double>& x, const std::vector<double>& y);
double Rmse(const std::vector<double>& x, const std::vector<double>& y);

// (utt_id, hyp_id, text, weight)
using Entry = std::tuple<std::string, std::string, std::string, int>;

struct Pool {
  std::vector<HypothesisRecord> hyps;
  std::vector<QualityVector> scores;
};

size_t Rank(size_t count, int p);
double Percentile(std::vector<double> values, int p);

enum class Which { kPred, kCos, kEuc };

std::vector<Entry> Conf(const Pool& pool, int p);
std::vector<Entry> SingleMetric(const Pool& pool, int p, Which which);
std::vector<Entry> StableBase(const Pool& pool, int p);
std::vector<Entry> ConfStable(const Pool& pool, int p1, int p2);
std::vector<Entry> PplPercentile(const std::vector<HypothesisRecord>& hyps,
                                 int p);
std::vector<Entry> PplSize(const std::vector<HypothesisRecord>& hyps,
                           size_t size);
// Keeps shuffled order; compare as a sequence.
std::vector<Entry> RandomHours(const std::vector<UtteranceRecord>& manifest,
                               const std::vector<HypothesisRecord>& hyps,
                               double hours, uint64_t seed);
std::vector<Entry> CerConsistency(const std::vector<UtteranceRecord>& manifest,
                                  const std::vector<HypothesisRecord>& p,
                                  const std::vector<HypothesisRecord>& z,
                                  const std::vector<HypothesisRecord>& k,
                                  double tau);
std::vector<Entry> WerBinary(const Pool& pool);

std::vector<Entry> EntriesOf(const SelectionResult& r);

}  // namespace consel::brute

#endif  // CONSEL_TESTS_ACCEPTANCE_BRUTE_FORCE_H_
