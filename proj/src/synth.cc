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

#include "consel/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <unordered_map>

#include "consel/alignment.h"
#include "consel/error.h"
#include "consel/mfcc.h"
#include "consel/perturbation.h"
#include "consel/rng.h"

namespace consel {
namespace {

constexpr int kSampleRate = 16000;

std::vector<std::string> Vocabulary() {
  static const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n",
                                  "p", "r", "s", "t", "v", "z"};
  static const char* kNuclei[] = {"a", "e", "i", "o", "u"};
  std::vector<std::string> words;
  for (const char* a : kOnsets) {
    for (const char* b : kNuclei) {
      for (const char* c : kOnsets) words.push_back(std::string(a) + b + c);
    }
  }
  return words;  // 980 words
}

std::string Join(const std::vector<std::string>& words) {
  std::string out;
  for (const std::string& w : words) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

// Replaces round(w * |ref|) distinct positions with different words.
std::string Corrupt(const std::vector<std::string>& ref, double w,
                    const std::vector<std::string>& vocab, Rng& rng) {
  std::vector<std::string> out = ref;
  const size_t k = static_cast<size_t>(std::lround(w * ref.size()));
  std::vector<size_t> pos(ref.size());
  for (size_t i = 0; i < pos.size(); ++i) pos[i] = i;
  for (size_t i = 0; i < k; ++i) {
    std::swap(pos[i], pos[i + rng.Below(pos.size() - i)]);
    std::string word;
    do {
      word = vocab[rng.Below(vocab.size())];
    } while (word == ref[pos[i]]);
    out[pos[i]] = word;
  }
  return Join(out);
}

std::vector<double> UnitGaussian(uint32_t dim, Rng& rng) {
  std::vector<double> v(dim);
  double n2 = 0.0;
  for (double& x : v) {
    x = rng.Normal();
    n2 += x * x;
  }
  const double inv = 1.0 / std::sqrt(n2);
  for (double& x : v) x *= inv;
  return v;
}

// Unit vector at angle `theta` from unit vector `s`.
std::vector<double> AtAngle(const std::vector<double>& s, double theta,
                            Rng& rng) {
  std::vector<double> r = UnitGaussian(static_cast<uint32_t>(s.size()), rng);
  double proj = 0.0;
  for (size_t i = 0; i < s.size(); ++i) proj += r[i] * s[i];
  double n2 = 0.0;
  for (size_t i = 0; i < s.size(); ++i) {
    r[i] -= proj * s[i];
    n2 += r[i] * r[i];
  }
  const double inv = 1.0 / std::sqrt(n2);
  std::vector<double> t(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    t[i] = std::cos(theta) * s[i] + std::sin(theta) * r[i] * inv;
  }
  return t;
}

std::vector<double> Widen(std::span<const float> v) {
  return std::vector<double>(v.begin(), v.end());
}

std::string UttId(char prefix, size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%05zu", prefix, i + 1);
  return buf;
}

}  // namespace

void SynthConfig::Validate() const {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    ThrowInvalid("invalid-rho", "rho must be in [0, 1], got " +
                                    std::to_string(rho));
  }
  auto bad = [](const std::string& what) {
    throw Error(ErrorKind::kUsage, "bad-config", what);
  };
  if (n_utts < 1) bad("n_utts must be >= 1");
  if (emb_dim < 2) bad("emb_dim must be >= 2");
  if (!(noise_sigma >= 0.0)) bad("noise_sigma must be >= 0");
  if (!(duplicate_rate >= 0.0 && duplicate_rate <= 1.0)) {
    bad("duplicate_rate must be in [0, 1]");
  }
  if (!(min_duration_sec > 0.03 && max_duration_sec >= min_duration_sec)) {
    bad("durations must satisfy 0.03 < min <= max");
  }
  if (min_words < 1 || max_words < min_words) {
    bad("word counts must satisfy 1 <= min <= max");
  }
}

SynthData GenerateSynth(const SynthConfig& cfg) {
  cfg.Validate();
  const std::vector<std::string> vocab = Vocabulary();
  const std::vector<PerturbationDescriptor> descriptors =
      EnumerateDescriptors();
  Rng manifest_rng(cfg.seed, "manifest");
  Rng text_rng(cfg.seed, "texts");
  Rng score_rng(cfg.seed, "scores");
  Rng emb_rng(cfg.seed, "embeddings");
  Rng sys_rng(cfg.seed, "systems");

  auto duration = [&]() {
    const double u = cfg.min_duration_sec +
                     (cfg.max_duration_sec - cfg.min_duration_sec) *
                         manifest_rng.Uniform();
    return std::round(u * kSampleRate) / kSampleRate;
  };

  SynthData data;
  data.speech = EmbeddingMatrix(cfg.emb_dim);
  data.text = EmbeddingMatrix(cfg.emb_dim);
  data.pair_speech = EmbeddingMatrix(cfg.emb_dim);
  const char* kSystemTags[] = {"p", "z", "k"};
  std::unordered_map<std::string, double> pred_of;

  for (size_t i = 0; i < cfg.n_utts; ++i) {
    UtteranceRecord u;
    u.utt_id = UttId('u', i);
    u.duration_sec = duration();
    u.split = Split::kPool;
    const int n_words =
        cfg.min_words +
        static_cast<int>(manifest_rng.Below(cfg.max_words - cfg.min_words + 1));
    std::vector<std::string> ref(n_words);
    for (std::string& w : ref) w = vocab[manifest_rng.Below(vocab.size())];
    u.ref_text = Join(ref);

    const std::vector<double> s = UnitGaussian(cfg.emb_dim, emb_rng);
    data.speech.AddRow(u.utt_id, std::span<const double>(s));

    struct Planted {
      double w;
      std::string text;
      std::vector<double> emb;
      double pred;
    };
    std::vector<Planted> planted;
    for (size_t k = 0; k < descriptors.size(); ++k) {
      Planted p;
      if (k > 0 && text_rng.Bernoulli(cfg.duplicate_rate)) {
        p = planted[text_rng.Below(k)];
      } else {
        p.w = text_rng.Uniform();
        p.text = Corrupt(ref, p.w, vocab, text_rng);
        const double noisy = std::clamp(
            p.w + (1.0 - cfg.rho) * cfg.noise_sigma * score_rng.Normal(), 0.0,
            1.0);
        p.pred = std::clamp(noisy, kPredMin, kPredMax);
        p.emb = AtAngle(s, 0.5 * std::numbers::pi * noisy, emb_rng);
      }
      char suffix[8];
      std::snprintf(suffix, sizeof(suffix), ".h%02zu", k);
      HypothesisRecord h;
      h.utt_id = u.utt_id;
      h.hyp_id = u.utt_id + suffix;
      h.text = p.text;
      h.perturbation = descriptors[k];
      h.ppl = std::exp(1.0 + 3.0 * p.w + 0.3 * score_rng.Normal());
      pred_of.emplace(h.hyp_id, p.pred);
      data.hyps.push_back(h);
      data.text.AddRow(h.hyp_id, std::span<const double>(p.emb));
      data.pair_speech.AddRow(h.hyp_id, std::span<const double>(s));
      data.truth.push_back({u.utt_id, h.hyp_id, p.w});
      data.pair_targets.push_back({h.hyp_id, p.w});
      planted.push_back(std::move(p));
    }

    for (int sys = 0; sys < 3; ++sys) {
      const double w =
          std::clamp(planted[0].w + 0.15 * sys_rng.Normal(), 0.0, 1.0);
      HypothesisRecord h;
      h.utt_id = u.utt_id;
      h.hyp_id = u.utt_id + "." + kSystemTags[sys];
      h.text = Corrupt(ref, w, vocab, sys_rng);
      data.systems[sys].push_back(std::move(h));
    }
    data.manifest.push_back(std::move(u));
  }

  // Scores of the de-duplicated pool, with cos/euc measured on the stored
  // float vectors exactly as the score stage does.
  const PoolSkeleton pool = DedupPool(data.hyps);
  for (const HypothesisRecord& h : pool.Flatten()) {
    const std::vector<double> s =
        Widen(data.speech.row(data.speech.RowOf(h.utt_id, "speech")));
    const std::vector<double> t =
        Widen(data.text.row(data.text.RowOf(h.hyp_id, "text")));
    data.scores.push_back({h.utt_id, h.hyp_id, pred_of.at(h.hyp_id),
                           Cosine(s, t), Euclidean(s, t)});
  }

  for (size_t i = 0; i < cfg.n_query; ++i) {
    UtteranceRecord q;
    q.utt_id = UttId('q', i);
    q.duration_sec = duration();
    q.split = Split::kQuery;
    data.query_manifest.push_back(std::move(q));
  }
  return data;
}

std::vector<double> SynthAudio(const std::string& utt_id, double duration_sec,
                               uint64_t seed, bool query) {
  Rng rng(seed, "audio/" + utt_id);
  // Queries draw their pitch from the lower part of the pool's range, so
  // the query set resembles a subset of the pool.
  const double f0 = query ? 120.0 + 120.0 * rng.Uniform()
                          : 100.0 + 400.0 * rng.Uniform();
  const double ratio = 1.5 + 2.0 * rng.Uniform();
  const double noise = 0.005 + 0.03 * rng.Uniform();
  const size_t n = static_cast<size_t>(std::lround(duration_sec * kSampleRate));
  std::vector<double> x(n);
  const double w = 2.0 * std::numbers::pi / kSampleRate;
  for (size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i);
    x[i] = 0.3 * std::sin(w * f0 * t) + 0.15 * std::sin(w * f0 * ratio * t) +
           noise * rng.Normal();
    x[i] = std::clamp(x[i], -1.0, 1.0);
  }
  return x;
}

std::vector<std::string> WriteSynth(SynthData data, const std::string& dir,
                                    uint64_t seed, bool audio) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorKind::kMissingInput, "io-failure",
                "cannot create directory: " + ec.message(), dir);
  }
  const fs::path root(dir);
  std::vector<std::string> written;
  auto path = [&](const std::string& name) {
    written.push_back((root / name).string());
    return written.back();
  };

  if (audio) {
    fs::create_directories(root / "audio", ec);
    if (ec) {
      throw Error(ErrorKind::kMissingInput, "io-failure",
                  "cannot create directory: " + ec.message(),
                  (root / "audio").string());
    }
    auto write_audio = [&](UtteranceRecord& u, bool query) {
      const std::string rel = "audio/" + u.utt_id + ".wav";
      WriteWavPcm16(path(rel), SynthAudio(u.utt_id, u.duration_sec, seed, query));
      u.audio_path = rel;
    };
    for (UtteranceRecord& u : data.manifest) write_audio(u, false);
    for (UtteranceRecord& u : data.query_manifest) write_audio(u, true);
  }

  WriteManifest(data.manifest, path("manifest.jsonl"));
  if (!data.query_manifest.empty()) {
    WriteManifest(data.query_manifest, path("query_manifest.jsonl"));
  }
  WriteHypotheses(data.hyps, path("hyps.jsonl"));
  WriteScores(data.scores, path("scores.jsonl"));
  WriteEmbeddings(data.speech, path("speech.emb"));
  WriteEmbeddings(data.text, path("text.emb"));
  WriteTruth(data.truth, path("truth.jsonl"));
  WriteHypotheses(data.systems[0], path("sys_p.jsonl"));
  WriteHypotheses(data.systems[1], path("sys_z.jsonl"));
  WriteHypotheses(data.systems[2], path("sys_k.jsonl"));
  WriteEmbeddings(data.pair_speech, path("pair_speech.emb"));
  WriteTargets(data.pair_targets, path("pair_targets.jsonl"));
  return written;
}

}  // namespace consel
