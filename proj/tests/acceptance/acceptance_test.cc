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

// Acceptance suite: one PASS/FAIL line per criterion with its runtime.
// Exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "acceptance/brute_force.h"
#include "consel/alignment.h"
#include "consel/eval_metrics.h"
#include "consel/flmi.h"
#include "consel/perturbation.h"
#include "consel/predictor.h"
#include "consel/rng.h"
#include "consel/selection.h"
#include "consel/synth.h"
#include "test_util.h"

namespace consel {
namespace {

// Collects failure messages for one criterion; only the first few are kept.
class Check {
 public:
  void Expect(bool ok, const std::string& what) {
    ++count_;
    if (ok) return;
    ++failures_;
    if (messages_.size() < 5) messages_.push_back(what);
  }
  void Note(const std::string& note) { note_ = note; }
  bool ok() const { return failures_ == 0 && count_ > 0; }
  std::string Summary() const {
    std::ostringstream s;
    s << count_ << " checks, " << failures_ << " failed";
    if (!note_.empty()) s << "; " << note_;
    for (const std::string& m : messages_) s << "\n      " << m;
    return s.str();
  }

 private:
  size_t count_ = 0;
  size_t failures_ = 0;
  std::string note_;
  std::vector<std::string> messages_;
};

struct Criterion {
  int number;
  std::string name;
  double budget_sec;
  std::function<void(Check&)> body;
};

std::string Str(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ------------------------------------------------------------------- FLMI

struct Instance {
  std::vector<std::vector<double>> s;
  SimilarityKernel kernel;
};

Instance RandomInstance(Rng& rng, size_t n, size_t m, double lo) {
  std::vector<std::vector<double>> s(n, std::vector<double>(m));
  std::vector<double> flat;
  for (auto& row : s) {
    for (double& v : row) {
      v = lo + (1.0 - lo) * rng.Uniform();
      flat.push_back(v);
    }
  }
  std::vector<std::string> cids, qids;
  for (size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "c%02zu", i);
    cids.push_back(id);
  }
  for (size_t j = 0; j < m; ++j) qids.push_back("q" + std::to_string(j));
  return {s, SimilarityKernel(cids, qids, flat)};
}

void Submodularity(Check& check) {
  Rng rng(1, "acceptance-submodularity");
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t n = 2 + rng.Below(7), m = 1 + rng.Below(4);
    const Instance inst = RandomInstance(rng, n, m, 0.0);
    // Random chain X subset of Y and an element j outside Y.
    std::vector<size_t> perm(n);
    for (size_t i = 0; i < n; ++i) perm[i] = i;
    rng.Shuffle(perm);
    const size_t y_size = rng.Below(n);
    const size_t x_size = rng.Below(y_size + 1);
    const std::vector<size_t> y(perm.begin(), perm.begin() + y_size);
    const std::vector<size_t> x(perm.begin(), perm.begin() + x_size);
    const size_t j = perm[y_size];
    auto value = [&inst](std::vector<size_t> set) {
      return FlmiValueByIndex(set, inst.kernel);
    };
    auto plus = [j](std::vector<size_t> set) {
      set.push_back(j);
      return set;
    };
    const double gx = value(plus(x)) - value(x);
    const double gy = value(plus(y)) - value(y);
    const std::string where = "trial " + std::to_string(trial);
    check.Expect(gx >= gy - 1e-9, where + ": diminishing returns " + Str(gx) +
                                      " < " + Str(gy));
    check.Expect(gy >= -1e-9, where + ": not monotone");
    check.Expect(std::fabs(value(y) - brute::Flmi(inst.s, y)) <= 1e-12,
                 where + ": value differs from definition");
  }
}

void LazyEqualsExact(Check& check) {
  Rng rng(2, "acceptance-lazy");
  for (int trial = 0; trial < 200; ++trial) {
    const size_t n = 1 + rng.Below(50), m = 1 + rng.Below(10);
    const size_t budget = std::min<size_t>(n, 1 + rng.Below(10));
    const Instance inst = RandomInstance(rng, n, m, trial % 2 ? -1.0 : 0.0);
    GreedyOptions exact, lazy;
    exact.mode = GreedyMode::kExact;
    lazy.mode = GreedyMode::kLazy;
    const GreedyResult a = GreedySelect(inst.kernel, budget, exact);
    const GreedyResult b = GreedySelect(inst.kernel, budget, lazy);
    check.Expect(a.ids == b.ids, "trial " + std::to_string(trial) +
                                     ": lazy order differs from exact");
  }
}

void NearOptimality(Check& check) {
  Rng rng(3, "acceptance-optimality");
  double worst = INFINITY;
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 2 + rng.Below(11), m = 1 + rng.Below(4);
    const size_t budget = 1 + rng.Below(std::min<size_t>(4, n));
    const Instance inst = RandomInstance(rng, n, m, 0.0);
    GreedyOptions opts;
    opts.mode = GreedyMode::kExact;
    const GreedyResult g = GreedySelect(inst.kernel, budget, opts);
    const double greedy = brute::Flmi(inst.s, g.order);
    const double opt = brute::FlmiOptimum(inst.s, budget);
    worst = std::min(worst, greedy / opt);
    check.Expect(greedy >= (1.0 - 1.0 / std::numbers::e) * opt,
                 "trial " + std::to_string(trial) + ": greedy " + Str(greedy) +
                     " vs opt " + Str(opt));
  }
  check.Note("worst greedy/OPT " + Str(worst));
}

// -------------------------------------------------------------- predictor

Eigen::MatrixXd RandomInputs(int dim, int n, Rng& rng) {
  Eigen::MatrixXd x(dim, n);
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < dim; ++r) x(r, c) = rng.Normal();
  }
  return x;
}

void GradientCheck(Check& check) {
  const Architecture arch{8, 6, 4};
  double worst_all = 0.0;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    PredictorNet net = PredictorNet::XavierInit(arch, seed, 0.0);
    Rng rng(seed, "acceptance-gradient");
    for (std::span<double> t : net.params().Tensors()) {
      for (double& v : t) v += 0.3 * rng.Normal();
    }
    const Eigen::MatrixXd x = RandomInputs(arch.input_dim, 6, rng);
    Eigen::VectorXd t(6);
    for (int i = 0; i < 6; ++i) t(i) = rng.Uniform();

    PredictorParams grad = PredictorParams::Zeros(arch);
    LossAndGradient(net, x, t, nullptr, &grad);
    auto analytic = grad.Tensors();
    auto params = net.params().Tensors();
    const double h = 1e-6;
    double worst = 0.0;
    for (size_t k = 0; k < params.size(); ++k) {
      for (size_t i = 0; i < params[k].size(); ++i) {
        const double saved = params[k][i];
        params[k][i] = saved + h;
        const double up = LossAndGradient(net, x, t, nullptr, nullptr);
        params[k][i] = saved - h;
        const double down = LossAndGradient(net, x, t, nullptr, nullptr);
        params[k][i] = saved;
        const double numeric = (up - down) / (2 * h);
        const double a = analytic[k][i];
        const double scale = std::max({std::fabs(a), std::fabs(numeric), 1e-6});
        worst = std::max(worst, std::fabs(a - numeric) / scale);
      }
    }
    worst_all = std::max(worst_all, worst);
    check.Expect(worst <= 1e-3, "net " + std::to_string(seed) +
                                    ": relative error " + Str(worst));
  }
  check.Note("max relative error " + Str(worst_all));
}

LabeledSet PlantedSet(int n, int dim, const Eigen::VectorXd& w, uint64_t seed) {
  Rng rng(seed, "acceptance-planted");
  LabeledSet set;
  set.inputs = RandomInputs(dim, n, rng);
  set.targets.resize(n);
  for (int i = 0; i < n; ++i) {
    set.ids.push_back("pair" + std::to_string(i));
    const double z = w.dot(set.inputs.col(i));
    set.targets(i) = 0.01 + 0.98 / (1.0 + std::exp(-z));
  }
  return set;
}

void PredictorLearning(Check& check) {
  // 32-d speech and 32-d text stand-ins; the default hidden widths.
  const int dim = 64;
  Rng wrng(5, "acceptance-planted-w");
  Eigen::VectorXd w(dim);
  for (int i = 0; i < dim; ++i) w(i) = 2.0 * wrng.Normal() / std::sqrt(dim);
  const LabeledSet train = PlantedSet(5000, dim, w, 1);
  const LabeledSet dev = PlantedSet(1000, dim, w, 2);
  TrainConfig cfg;  // defaults: 70 epochs, AdamW, cosine, dropout 0.3
  cfg.seed = 5;
  const TrainResult r = Train(train, dev, {dim, 600, 32}, cfg);
  const double start = r.history.front().dev_mse;
  double best = start;
  for (const EpochStats& s : r.history) best = std::min(best, s.dev_mse);
  check.Expect(r.history.size() <= 71, "more than 70 epochs ran");
  check.Expect(best <= 0.5 * start,
               "dev MSE " + Str(start) + " -> " + Str(best));
  check.Note("dev MSE " + Str(start) + " -> " + Str(best) + " (" +
             Str(100.0 * (1.0 - best / start)) + "% drop, best epoch " +
             std::to_string(r.best_epoch) + ")");
}

// ------------------------------------------------------------------- pool

void PoolAccounting(Check& check) {
  const auto desc = EnumerateDescriptors();
  check.Expect(desc.size() == 28, "descriptor count " + std::to_string(desc.size()));
  size_t base = 0, input_only = 0, noise = 0;
  std::set<std::string> tags;
  for (const PerturbationDescriptor& d : desc) {
    tags.insert(DescriptorTag(d));
    check.Expect(IsValidDescriptor(d), "invalid descriptor " + DescriptorTag(d));
    if (d.IsBaseline()) {
      ++base;
    } else if (d.alpha == 0.0) {
      ++input_only;
    } else {
      ++noise;
    }
  }
  check.Expect(base == 1 && input_only == 6 && noise == 21,
               "split " + std::to_string(base) + "+" + std::to_string(input_only) +
                   "+" + std::to_string(noise));
  check.Expect(tags.size() == 28, "duplicate descriptors");

  // Distinct texts everywhere: K = 27 per utterance.
  std::vector<HypothesisRecord> hyps;
  for (int u = 0; u < 50; ++u) {
    for (size_t k = 0; k < desc.size(); ++k) {
      hyps.push_back({"u" + std::to_string(u), "u" + std::to_string(u) + "." + std::to_string(k),
                      "text " + std::to_string(k), desc[k], std::nullopt});
    }
  }
  for (const UtterancePool& u : DedupPool(hyps).utterances) {
    check.Expect(u.K() == 27, u.utt_id + ": K = " + std::to_string(u.K()));
  }
  // Synthetic pool with duplicates: 28 before, K <= 27 after.
  SynthConfig cfg;
  cfg.n_utts = 200;
  const SynthData d = GenerateSynth(cfg);
  std::map<std::string, size_t> per_utt;
  for (const HypothesisRecord& h : d.hyps) ++per_utt[h.utt_id];
  for (const auto& [utt, n] : per_utt) check.Expect(n == 28, utt + ": " + std::to_string(n));
  for (const UtterancePool& u : DedupPool(d.hyps).utterances) {
    check.Expect(u.K() <= 27, u.utt_id + ": K = " + std::to_string(u.K()));
    check.Expect(u.K() + u.dropped_baseline_equal + u.dropped_duplicate == 27,
                 u.utt_id + ": dedup accounting");
  }
}

// -------------------------------------------------------------- selection

std::vector<brute::Entry> Sorted(std::vector<brute::Entry> v) {
  std::sort(v.begin(), v.end());
  return v;
}

void RuleOracles(Check& check) {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    SynthConfig cfg;
    cfg.n_utts = 1000;
    cfg.seed = seed;
    const SynthData d = GenerateSynth(cfg);
    const brute::Pool bp{d.hyps, d.scores};
    const ScoredPool pool = AssemblePool(d.hyps, d.scores);
    auto same = [&](const std::string& rule, const std::vector<brute::Entry>& got,
                    const std::vector<brute::Entry>& want) {
      check.Expect(Sorted(got) == Sorted(want),
                   "seed " + std::to_string(seed) + " " + rule + ": " +
                       std::to_string(got.size()) + " vs " + std::to_string(want.size()));
    };
    for (int p : {50, 70, 90, 95}) {
      const ThresholdSet t = PercentileThresholds(pool, p);
      const std::string at = "@" + std::to_string(p);
      same("conf" + at, brute::EntriesOf(SelectConf(pool, t)), brute::Conf(bp, p));
      same("pred" + at, brute::EntriesOf(SelectSingleMetric(pool, t, Metric::kPred)),
           brute::SingleMetric(bp, p, brute::Which::kPred));
      same("cos" + at, brute::EntriesOf(SelectSingleMetric(pool, t, Metric::kCos)),
           brute::SingleMetric(bp, p, brute::Which::kCos));
      same("euc" + at, brute::EntriesOf(SelectSingleMetric(pool, t, Metric::kEuc)),
           brute::SingleMetric(bp, p, brute::Which::kEuc));
      same("stable" + at, brute::EntriesOf(SelectStableBase(pool, p)),
           brute::StableBase(bp, p));
      same("conf-stable" + at, brute::EntriesOf(SelectConfStable(pool, p, 95)),
           brute::ConfStable(bp, p, 95));
      same("ppl" + at, brute::EntriesOf(SelectPpl(d.hyps, p, std::nullopt)),
           brute::PplPercentile(d.hyps, p));
    }
    for (size_t k : {1u, 250u, 1000u}) {
      same("ppl-size", brute::EntriesOf(SelectPpl(d.hyps, std::nullopt, k)),
           brute::PplSize(d.hyps, k));
    }
    // Random keeps shuffled order, so compare as sequences.
    const auto random = brute::EntriesOf(SelectRandomHours(d.manifest, d.hyps, 0.5, seed));
    check.Expect(random == brute::RandomHours(d.manifest, d.hyps, 0.5, seed),
                 "seed " + std::to_string(seed) + " random");
    for (double tau : {0.1, 0.3, 0.6}) {
      same("cer", brute::EntriesOf(SelectCerConsistency(d.manifest, d.systems[0],
                                                        d.systems[1], d.systems[2], tau)),
           brute::CerConsistency(d.manifest, d.systems[0], d.systems[1], d.systems[2], tau));
    }
    same("wer-binary", brute::EntriesOf(SelectWerBinary(pool)), brute::WerBinary(bp));
  }
}

void PercentileMonotonicity(Check& check) {
  SynthConfig cfg;
  cfg.n_utts = 2000;
  cfg.seed = 8;
  const SynthData d = GenerateSynth(cfg);
  const ScoredPool pool = AssemblePool(d.hyps, d.scores);
  size_t prev_conf = SIZE_MAX, prev_stable = SIZE_MAX;
  std::string sizes = "conf/stable sizes:";
  for (int p : {50, 60, 70, 80, 90, 95}) {
    const size_t conf = SelectConf(pool, PercentileThresholds(pool, p)).entries.size();
    const size_t stable = SelectStableBase(pool, p).entries.size();
    check.Expect(conf <= prev_conf, "conf grew at p=" + std::to_string(p));
    check.Expect(stable <= prev_stable, "stable grew at p=" + std::to_string(p));
    prev_conf = conf;
    prev_stable = stable;
    sizes += " p" + std::to_string(p) + "=" + std::to_string(conf) + "/" +
             std::to_string(stable);
  }
  check.Note(sizes);
}

// ------------------------------------------------------------------ text

std::vector<std::string> Units(const std::string& s) {
  std::vector<std::string> out;
  for (char c : s) out.emplace_back(1, c);
  return out;
}

void EditDistanceOracle(Check& check) {
  Rng rng(9, "acceptance-edit");
  auto draw = [&rng] {
    std::string s;
    for (size_t i = 0, n = rng.Below(8); i < n; ++i) s += static_cast<char>('a' + rng.Below(3));
    return s;
  };
  for (int trial = 0; trial < 500; ++trial) {
    const std::string a = draw(), b = draw();
    const ErrorRateBreakdown r = EditDistanceUnits(Units(a), Units(b));
    check.Expect(r.errors() == brute::RecursiveEditDistance(Units(a), Units(b)),
                 "'" + a + "' vs '" + b + "'");
  }
  auto pooled = [](std::vector<std::pair<std::string, std::string>> pairs) {
    std::vector<UtteranceRecord> manifest;
    SelectionResult s;
    for (size_t i = 0; i < pairs.size(); ++i) {
      UtteranceRecord u;
      u.utt_id = "u" + std::to_string(i);
      u.duration_sec = 1.0;
      u.ref_text = pairs[i].first;
      manifest.push_back(u);
      s.entries.push_back({u.utt_id, "h", pairs[i].second, 1});
    }
    return *EvaluateSubset(s, manifest).pooled.rate;
  };
  check.Expect(pooled({{"a b", "a c"}, {"d e", "d e"}}) == 0.25, "1/2 and 0/2");
  check.Expect(pooled({{"a", "b"}, {"c d e", "c d e"}}) == 0.25, "1/1 and 0/3");
  check.Expect(pooled({{"x y", "x y"}}) == 0.0, "identical");
  const ErrorRateBreakdown si = Wer("a", "b c");
  check.Expect(si.substitutions == 1 && si.insertions == 1 && si.rate == 2.0, "a vs b c");
  check.Expect(*Wer("the cat sat", "the cat").rate == 1.0 / 3.0, "one deletion");
  check.Expect(*Cer("abc", "abd").rate == 1.0 / 3.0, "abc vs abd");
}

// -------------------------------------------------------------------- CLI

void EndToEndDeterminism(Check& check) {
  testing::TempDir a, b;
  for (const testing::TempDir* dir : {&a, &b}) {
    for (const auto& args : testing::PipelineCommands(dir->path("run"), 21)) {
      const testing::CliRun r = testing::Cli(args);
      check.Expect(r.code == 0, args[0] + " " + args[2] + ": " + r.err);
    }
  }
  const auto ta = testing::ReadTree(a.path("run"));
  const auto tb = testing::ReadTree(b.path("run"));
  check.Expect(ta.size() == tb.size(), "file counts differ");
  size_t prov = 0;
  for (const auto& [name, bytes] : ta) {
    auto it = tb.find(name);
    check.Expect(it != tb.end() && it->second == bytes, name + " differs");
    prov += name.ends_with(".prov.json");
  }
  check.Expect(prov >= 7, "expected a provenance sidecar per stage");
  check.Expect(ta.count("subset.jsonl") && ta.count("report.json"), "missing outputs");
  check.Note(std::to_string(ta.size()) + " files, " + std::to_string(prov) +
             " provenance sidecars");
}

// ----------------------------------------------------------------- report

void ReportFormulas(Check& check) {
  Rng rng(11, "acceptance-report");
  auto close = [](std::optional<double> a, std::optional<double> b) {
    if (a.has_value() != b.has_value()) return false;
    return !a || std::fabs(*a - *b) <= 1e-12;
  };
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 2 + rng.Below(200);
    std::vector<double> x(n), y(n);
    // A third of the trials draw from few levels so ranks tie.
    const bool ties = trial % 3 == 0;
    for (size_t i = 0; i < n; ++i) {
      x[i] = ties ? static_cast<double>(rng.Below(5)) / 4 : rng.Uniform();
      y[i] = ties ? static_cast<double>(rng.Below(5)) / 4 : 0.5 * x[i] + 0.5 * rng.Uniform();
    }
    const PredictorReport r = ComputePredictorReport(x, y);
    const std::string where = "trial " + std::to_string(trial);
    check.Expect(close(r.pearson, brute::Pearson(x, y)), where + " pearson");
    check.Expect(close(r.spearman, brute::Spearman(x, y)), where + " spearman");
    check.Expect(std::fabs(r.mae - brute::Mae(x, y)) <= 1e-12, where + " mae");
    check.Expect(std::fabs(r.rmse - brute::Rmse(x, y)) <= 1e-12, where + " rmse");
  }
}

}  // namespace
}  // namespace consel

int main() {
  using consel::Criterion;
  const std::vector<Criterion> criteria = {
      {1, "submodularity and monotonicity, 1000 FLMI instances", 10, consel::Submodularity},
      {2, "lazy greedy equals exact greedy, 200 instances", 30, consel::LazyEqualsExact},
      {3, "greedy within 1-1/e of brute-force optimum, 100 instances", 60,
       consel::NearOptimality},
      {4, "predictor gradient check, 50 random nets", 60, consel::GradientCheck},
      {5, "predictor learns planted model, 5k pairs", 120, consel::PredictorLearning},
      {6, "pool accounting, 28 hypotheses and K <= 27", 1, consel::PoolAccounting},
      {7, "every rule equals brute-force filter, 1k utterances x 5 seeds", 120,
       consel::RuleOracles},
      {8, "subset size non-increasing in p for conf and stable-base", 30,
       consel::PercentileMonotonicity},
      {9, "edit distance and pooled WER oracles", 10, consel::EditDistanceOracle},
      {10, "end-to-end CLI determinism", 120, consel::EndToEndDeterminism},
      {11, "predictor report formulas, 100 random vectors", 10, consel::ReportFormulas},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    consel::Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.body(check);
    } catch (const std::exception& e) {
      check.Expect(false, std::string("exception: ") + e.what());
    }
    const double sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = sec < c.budget_sec;
    const bool pass = check.ok() && in_time;
    failed += !pass;
    std::printf("%s [%2d] %s (%.2f s, limit %.0f s%s)\n      %s\n",
                pass ? "PASS" : "FAIL", c.number, c.name.c_str(), sec, c.budget_sec,
                in_time ? "" : ", over time", check.Summary().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
