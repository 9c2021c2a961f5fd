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

#include "consel/alignment.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <tuple>
#include <unordered_map>

#include "consel/digest.h"
#include "consel/error.h"
#include "consel/perturbation.h"
#include "consel/text.h"

namespace consel {
namespace {

void RequireSameDim(size_t a, size_t b) {
  if (a != b) {
    ThrowInvalid("dim-mismatch", "vectors of dim " + std::to_string(a) +
                                     " and " + std::to_string(b));
  }
}

auto KeepKey(const HypothesisRecord& h) {
  const PerturbationDescriptor& d = h.perturbation;
  return std::make_tuple(d.alpha, std::abs(d.pitch_semitones),
                         std::fabs(1.0 - d.atempo), h.hyp_id);
}

// Float rows of `m` for `ids`, widened to double, with a norm check.
std::vector<double> GatherRows(const EmbeddingMatrix& m,
                               const std::vector<std::string>& ids,
                               std::string_view what) {
  std::vector<double> out;
  out.reserve(ids.size() * m.dim());
  for (const std::string& id : ids) {
    std::span<const float> row = m.row(m.RowOf(id, what));
    double norm2 = 0.0;
    for (float x : row) {
      out.push_back(x);
      norm2 += static_cast<double>(x) * x;
    }
    if (!(norm2 > 0.0)) {
      ThrowInvalid("zero-norm", std::string(what) + " embedding '" + id +
                                    "' has zero norm");
    }
  }
  return out;
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double Cosine(std::span<const double> a, std::span<const double> b) {
  RequireSameDim(a.size(), b.size());
  const double na = kernels::Dot(a.data(), a.data(), a.size());
  const double nb = kernels::Dot(b.data(), b.data(), b.size());
  if (!(na > 0.0) || !(nb > 0.0)) {
    ThrowInvalid("zero-norm", "cosine of a zero-norm vector is undefined");
  }
  return kernels::CosineOf(a.data(), b.data(), a.size());
}

double Euclidean(std::span<const double> a, std::span<const double> b) {
  RequireSameDim(a.size(), b.size());
  return kernels::EuclideanOf(a.data(), b.data(), a.size());
}

size_t PoolSkeleton::num_hypotheses() const {
  size_t n = 0;
  for (const UtterancePool& u : utterances) n += 1 + u.perturbed.size();
  return n;
}

std::vector<HypothesisRecord> PoolSkeleton::Flatten() const {
  std::vector<HypothesisRecord> out;
  out.reserve(num_hypotheses());
  for (const UtterancePool& u : utterances) {
    std::vector<HypothesisRecord> group = u.perturbed;
    group.push_back(u.baseline);
    std::sort(group.begin(), group.end(),
              [](const auto& a, const auto& b) { return a.hyp_id < b.hyp_id; });
    out.insert(out.end(), group.begin(), group.end());
  }
  return out;
}

PoolSkeleton DedupPool(const std::vector<HypothesisRecord>& hyps) {
  std::map<std::string, std::vector<const HypothesisRecord*>> by_utt;
  for (const HypothesisRecord& h : hyps) by_utt[h.utt_id].push_back(&h);

  PoolSkeleton pool;
  pool.utterances.reserve(by_utt.size());
  for (auto& [utt_id, group] : by_utt) {
    if (group.size() > static_cast<size_t>(kHypothesesPerUtterance)) {
      ThrowInvalid("too-many-hypotheses",
                   "utterance '" + utt_id + "' has " +
                       std::to_string(group.size()) + " hypotheses (max " +
                       std::to_string(kHypothesesPerUtterance) + ")");
    }
    UtterancePool u;
    u.utt_id = utt_id;
    const HypothesisRecord* baseline = nullptr;
    std::vector<const HypothesisRecord*> perturbed;
    for (const HypothesisRecord* h : group) {
      if (!h->perturbation.IsBaseline()) {
        perturbed.push_back(h);
      } else if (baseline != nullptr) {
        ThrowInvalid("duplicate-baseline",
                     "utterance '" + utt_id + "' has two baselines");
      } else {
        baseline = h;
      }
    }
    if (baseline == nullptr) {
      ThrowInvalid("missing-baseline",
                   "utterance '" + utt_id + "' has no baseline hypothesis");
    }
    u.baseline = *baseline;

    std::sort(perturbed.begin(), perturbed.end(),
              [](const auto* a, const auto* b) {
                return KeepKey(*a) < KeepKey(*b);
              });
    const std::string base_text = NormalizeWhitespace(baseline->text);
    std::vector<std::string> seen;
    for (const HypothesisRecord* h : perturbed) {
      std::string text = NormalizeWhitespace(h->text);
      if (text == base_text) {
        ++u.dropped_baseline_equal;
      } else if (std::find(seen.begin(), seen.end(), text) != seen.end()) {
        ++u.dropped_duplicate;
      } else {
        seen.push_back(std::move(text));
        u.perturbed.push_back(*h);
      }
    }
    std::sort(u.perturbed.begin(), u.perturbed.end(),
              [](const auto& a, const auto& b) { return a.hyp_id < b.hyp_id; });
    pool.utterances.push_back(std::move(u));
  }
  return pool;
}

std::vector<QualityVector> ScorePool(const PoolSkeleton& pool,
                                     const EmbeddingMatrix& speech,
                                     const EmbeddingMatrix& text,
                                     const PredictorNet& net,
                                     kernels::Exec exec) {
  if (speech.dim() != text.dim()) {
    ThrowInvalid("dim-mismatch", "speech and text embeddings differ in dim");
  }
  const size_t d = speech.dim();
  if (static_cast<int>(2 * d) != net.arch().input_dim) {
    ThrowInvalid("dim-mismatch",
                 "embedding dim " + std::to_string(d) +
                     " does not match predictor input " +
                     std::to_string(net.arch().input_dim));
  }

  const std::vector<HypothesisRecord> flat = pool.Flatten();
  std::vector<std::string> utt_ids, hyp_ids;
  std::vector<kernels::PairIndex> pairs;
  utt_ids.reserve(pool.utterances.size());
  hyp_ids.reserve(flat.size());
  pairs.reserve(flat.size());
  for (const HypothesisRecord& h : flat) {
    if (utt_ids.empty() || utt_ids.back() != h.utt_id) {
      utt_ids.push_back(h.utt_id);
    }
    pairs.push_back({utt_ids.size() - 1, hyp_ids.size()});
    hyp_ids.push_back(h.hyp_id);
  }
  const std::vector<double> sp = GatherRows(speech, utt_ids, "speech");
  const std::vector<double> tx = GatherRows(text, hyp_ids, "text");
  const kernels::RowsView sp_view{sp, utt_ids.size(), d};
  const kernels::RowsView tx_view{tx, hyp_ids.size(), d};

  std::vector<double> cos(flat.size()), euc(flat.size());
  kernels::PairAlignment(exec, sp_view, tx_view, pairs, cos, euc);

  std::vector<QualityVector> out(flat.size());
  constexpr size_t kChunk = 4096;
  Eigen::MatrixXd inputs;
  for (size_t begin = 0; begin < flat.size(); begin += kChunk) {
    const size_t end = std::min(flat.size(), begin + kChunk);
    inputs.resize(static_cast<Eigen::Index>(2 * d),
                  static_cast<Eigen::Index>(end - begin));
    for (size_t i = begin; i < end; ++i) {
      const double* s = sp_view.row(pairs[i].a);
      const double* t = tx_view.row(pairs[i].b);
      auto col = inputs.col(static_cast<Eigen::Index>(i - begin));
      for (size_t k = 0; k < d; ++k) {
        col(k) = s[k];
        col(d + k) = t[k];
      }
    }
    const Eigen::VectorXd pred = net.PredictMany(inputs, exec);
    for (size_t i = begin; i < end; ++i) {
      out[i] = {flat[i].utt_id, flat[i].hyp_id,
                pred(static_cast<Eigen::Index>(i - begin)), cos[i], euc[i]};
    }
  }
  return out;
}

ScoredPool AssemblePool(const std::vector<HypothesisRecord>& hyps,
                        const std::vector<QualityVector>& scores) {
  std::unordered_map<std::string, const HypothesisRecord*> by_key;
  for (const HypothesisRecord& h : hyps) {
    by_key.emplace(h.utt_id + '\n' + h.hyp_id, &h);
  }
  std::map<std::string, ScoredUtterance> by_utt;
  std::map<std::string, bool> has_baseline;
  for (const QualityVector& q : scores) {
    auto it = by_key.find(q.utt_id + '\n' + q.hyp_id);
    if (it == by_key.end()) {
      ThrowInvalid("unknown-hypothesis", "score for '" + q.utt_id + "/" +
                                             q.hyp_id +
                                             "' has no hypothesis record");
    }
    const HypothesisRecord& h = *it->second;
    ScoredUtterance& u = by_utt[q.utt_id];
    u.utt_id = q.utt_id;
    ScoredHypothesis s{q.hyp_id, h.text, q.pred_wer, q.cos, q.euc};
    if (h.perturbation.IsBaseline()) {
      if (has_baseline[q.utt_id]) {
        ThrowInvalid("duplicate-baseline",
                     "two baseline scores for '" + q.utt_id + "'");
      }
      has_baseline[q.utt_id] = true;
      u.baseline = std::move(s);
    } else {
      u.perturbed.push_back(std::move(s));
    }
  }
  ScoredPool pool;
  pool.utterances.reserve(by_utt.size());
  for (auto& [utt_id, u] : by_utt) {
    if (!has_baseline[utt_id]) {
      ThrowInvalid("missing-baseline",
                   "no baseline score for utterance '" + utt_id + "'");
    }
    std::sort(u.perturbed.begin(), u.perturbed.end(),
              [](const auto& a, const auto& b) { return a.hyp_id < b.hyp_id; });
    for (size_t i = 1; i < u.perturbed.size(); ++i) {
      if (u.perturbed[i].hyp_id == u.perturbed[i - 1].hyp_id) {
        ThrowInvalid("duplicate-id", "two scores for '" + utt_id + "/" +
                                         u.perturbed[i].hyp_id + "'");
      }
    }
    pool.utterances.push_back(std::move(u));
  }
  return pool;
}

std::string PoolDigest(const ScoredPool& pool) {
  std::string canon;
  auto add = [&canon](const std::string& utt, const ScoredHypothesis& h) {
    canon += utt + '\t' + h.hyp_id + '\t' + FormatDouble(h.pred_wer) + '\t' +
             FormatDouble(h.cos) + '\t' + FormatDouble(h.euc) + '\n';
  };
  for (const ScoredUtterance& u : pool.utterances) {
    add(u.utt_id, u.baseline);
    for (const ScoredHypothesis& h : u.perturbed) add(u.utt_id, h);
  }
  return Sha256Hex(canon);
}

}  // namespace consel
