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

#include "consel/eval_metrics.h"

#include <algorithm>
#include <map>
#include <tuple>
#include <unordered_map>

#include "consel/error.h"
#include "consel/perturbation.h"
#include "consel/text.h"

namespace consel {
namespace {

// Cost pair: total edits, then gaps (D + I). Minimizing gaps second makes
// the component split canonical, so swapping ref and hyp swaps D and I.
struct Cell {
  size_t cost;
  size_t gaps;
  bool operator==(const Cell&) const = default;
  bool operator<(const Cell& o) const {
    return std::tie(cost, gaps) < std::tie(o.cost, o.gaps);
  }
};

template <typename Seq>
ErrorRateBreakdown Align(const Seq& ref, const Seq& hyp) {
  const size_t n = ref.size(), m = hyp.size();
  std::vector<Cell> dp((n + 1) * (m + 1));
  auto at = [&](size_t i, size_t j) -> Cell& { return dp[i * (m + 1) + j]; };
  for (size_t i = 0; i <= n; ++i) at(i, 0) = {i, i};
  for (size_t j = 0; j <= m; ++j) at(0, j) = {j, j};
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      const Cell diag{at(i - 1, j - 1).cost + (ref[i - 1] == hyp[j - 1] ? 0 : 1),
                      at(i - 1, j - 1).gaps};
      const Cell del{at(i - 1, j).cost + 1, at(i - 1, j).gaps + 1};
      const Cell ins{at(i, j - 1).cost + 1, at(i, j - 1).gaps + 1};
      at(i, j) = std::min({diag, del, ins});
    }
  }
  ErrorRateBreakdown r;
  r.ref_len = n;
  size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const Cell here = at(i, j);
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      const Cell& d = at(i - 1, j - 1);
      if (Cell{d.cost + (same ? 0 : 1), d.gaps} == here) {
        if (!same) ++r.substitutions;
        --i, --j;
        continue;
      }
    }
    if (i > 0) {
      const Cell& d = at(i - 1, j);
      if (Cell{d.cost + 1, d.gaps + 1} == here) {
        ++r.deletions;
        --i;
        continue;
      }
    }
    ++r.insertions;
    --j;
  }
  if (n > 0) r.rate = static_cast<double>(r.errors()) / static_cast<double>(n);
  return r;
}

const UtteranceRecord* FindUtt(
    const std::unordered_map<std::string, const UtteranceRecord*>& index,
    const std::string& utt_id) {
  auto it = index.find(utt_id);
  return it == index.end() ? nullptr : it->second;
}

std::unordered_map<std::string, const UtteranceRecord*> IndexManifest(
    const std::vector<UtteranceRecord>& manifest) {
  std::unordered_map<std::string, const UtteranceRecord*> index;
  for (const UtteranceRecord& u : manifest) index.emplace(u.utt_id, &u);
  return index;
}

}  // namespace

ErrorRateBreakdown EditDistanceUnits(const std::vector<std::string>& ref,
                                     const std::vector<std::string>& hyp) {
  return Align(ref, hyp);
}

ErrorRateBreakdown EditDistanceUnits(const std::u32string& ref,
                                     const std::u32string& hyp) {
  return Align(ref, hyp);
}

ErrorRateBreakdown Wer(std::string_view ref, std::string_view hyp,
                       bool normalize) {
  if (normalize) {
    return Align(Tokenize(NormalizeForScoring(ref)),
                 Tokenize(NormalizeForScoring(hyp)));
  }
  return Align(Tokenize(ref), Tokenize(hyp));
}

ErrorRateBreakdown Cer(std::string_view ref, std::string_view hyp,
                       bool normalize) {
  auto prep = [normalize](std::string_view s) {
    return DecodeUtf8(normalize ? NormalizeForScoring(s)
                                : NormalizeWhitespace(s));
  };
  return Align(prep(ref), prep(hyp));
}

double Hours(const SelectionResult& subset,
             const std::vector<UtteranceRecord>& manifest) {
  const auto index = IndexManifest(manifest);
  double seconds = 0.0;
  for (const SelectionEntry& e : subset.entries) {
    const UtteranceRecord* u = FindUtt(index, e.utt_id);
    if (u == nullptr) {
      ThrowInvalid("missing-duration",
                   "no manifest duration for '" + e.utt_id + "'");
    }
    seconds += e.weight * u->duration_sec;
  }
  return seconds / 3600.0;
}

SweepReport MakeSweepReport(const std::vector<UtteranceRecord>& manifest,
                            const std::vector<HypothesisRecord>& hyps,
                            bool normalize) {
  const auto index = IndexManifest(manifest);
  auto reference = [&](const std::string& utt_id) -> const std::string& {
    const UtteranceRecord* u = FindUtt(index, utt_id);
    if (u == nullptr || !u->ref_text) {
      ThrowInvalid("missing-reference",
                   "no reference text for '" + utt_id + "'");
    }
    return *u->ref_text;
  };
  auto wer = [&](const HypothesisRecord& h) {
    ErrorRateBreakdown r = Wer(reference(h.utt_id), h.text, normalize);
    if (!r.rate) {
      ThrowInvalid("empty-reference",
                   "empty reference text for '" + h.utt_id + "'");
    }
    return r;
  };

  std::unordered_map<std::string, ErrorRateBreakdown> baseline;
  for (const HypothesisRecord& h : hyps) {
    if (h.perturbation.IsBaseline()) baseline.emplace(h.utt_id, wer(h));
  }

  using Key = std::tuple<double, int, double>;
  struct Acc {
    PerturbationDescriptor d;
    size_t n = 0, improved = 0;
    double reduction = 0.0;
  };
  std::map<Key, Acc> configs;
  for (const HypothesisRecord& h : hyps) {
    if (h.perturbation.IsBaseline()) continue;
    auto base = baseline.find(h.utt_id);
    if (base == baseline.end()) {
      ThrowInvalid("missing-baseline",
                   "no baseline hypothesis for '" + h.utt_id + "'");
    }
    const PerturbationDescriptor& d = h.perturbation;
    Acc& acc = configs[{d.alpha, d.pitch_semitones, d.atempo}];
    acc.d = d;
    const ErrorRateBreakdown r = wer(h);
    ++acc.n;
    if (r.errors() < base->second.errors()) {
      ++acc.improved;
      acc.reduction += *base->second.rate - *r.rate;
    }
  }

  SweepReport report;
  for (const auto& [key, acc] : configs) {
    SweepEntry e;
    e.tag = DescriptorTag(acc.d);
    e.perturbation = acc.d;
    e.utterances = acc.n;
    e.improved = acc.improved;
    e.improvement_rate =
        static_cast<double>(acc.improved) / static_cast<double>(acc.n);
    if (acc.improved > 0) {
      e.mean_reduction = acc.reduction / static_cast<double>(acc.improved);
    }
    // rate >= 1/5, in integers.
    e.retained = 5 * acc.improved >= acc.n;
    report.configs.push_back(std::move(e));
  }
  return report;
}

SubsetEvaluation EvaluateSubset(const SelectionResult& subset,
                                const std::vector<UtteranceRecord>& manifest,
                                bool normalize) {
  const auto index = IndexManifest(manifest);
  SubsetEvaluation ev;
  double seconds = 0.0;
  for (const SelectionEntry& e : subset.entries) {
    const UtteranceRecord* u = FindUtt(index, e.utt_id);
    if (u == nullptr || !u->ref_text) {
      ThrowInvalid("coverage-mismatch",
                   "subset entry '" + e.utt_id + "' has no reference text");
    }
    UtteranceScore s{e.utt_id, e.hyp_id, e.weight,
                     Wer(*u->ref_text, e.text, normalize)};
    ev.pooled.substitutions += s.wer.substitutions;
    ev.pooled.deletions += s.wer.deletions;
    ev.pooled.insertions += s.wer.insertions;
    ev.pooled.ref_len += s.wer.ref_len;
    seconds += e.weight * u->duration_sec;
    ev.utterances.push_back(std::move(s));
  }
  if (ev.pooled.ref_len > 0) {
    ev.pooled.rate = static_cast<double>(ev.pooled.errors()) /
                     static_cast<double>(ev.pooled.ref_len);
  }
  ev.hours = seconds / 3600.0;
  return ev;
}

}  // namespace consel
