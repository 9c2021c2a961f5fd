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

#include "consel/cli.h"

#include <CLI11.hpp>
#include <algorithm>
#include <exception>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>

#include "consel/alignment.h"
#include "consel/error.h"
#include "consel/eval_metrics.h"
#include "consel/flmi.h"
#include "consel/kernels.h"
#include "consel/mfcc.h"
#include "consel/predictor.h"
#include "consel/provenance.h"
#include "consel/rng.h"
#include "consel/selection.h"
#include "consel/synth.h"
#include "consel/wire_format.h"

namespace consel {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct Globals {
  uint64_t seed = 0;
  int threads = 0;
  std::string log = "text";
};

class Logger {
 public:
  Logger(const Globals& g, std::ostream& err) : json_(g.log == "json"), err_(err) {}

  void Info(const std::string& stage, const std::string& msg,
            const Json& fields = Json::object()) {
    if (json_) {
      Json line = {{"level", "info"}, {"stage", stage}, {"msg", msg}};
      for (const auto& [k, v] : fields.items()) line[k] = v;
      err_ << line.dump() << '\n';
    } else {
      err_ << "consel " << stage << ": " << msg;
      for (const auto& [k, v] : fields.items()) err_ << ' ' << k << '=' << v.dump();
      err_ << '\n';
    }
  }

 private:
  bool json_;
  std::ostream& err_;
};

void RequireFiles(const std::vector<std::string>& paths) {
  for (const std::string& p : paths) {
    if (!fs::is_regular_file(p)) {
      throw Error(ErrorKind::kMissingInput, "missing-input",
                  "input file does not exist: " + p, p);
    }
  }
}

[[noreturn]] void Usage(const std::string& message) {
  throw Error(ErrorKind::kUsage, "usage", message);
}

std::string Sidecar(const std::string& out) { return out + ".prov.json"; }

Json BreakdownJson(const ErrorRateBreakdown& r) {
  return {{"rate", r.rate ? Json(*r.rate) : Json(nullptr)},
          {"substitutions", r.substitutions},
          {"deletions", r.deletions},
          {"insertions", r.insertions},
          {"ref_len", r.ref_len}};
}

Json OptionalJson(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

void WriteJsonReport(const Json& doc, const std::string& path) {
  WriteFileBytes(path, doc.dump(2) + "\n");
}

// ---------------------------------------------------------------- features

struct FeaturesOpts {
  std::string manifest, out, audio_root;
};

void RunFeatures(const FeaturesOpts& o, const Globals& g, Logger& log) {
  RequireFiles({o.manifest});
  const std::vector<UtteranceRecord> manifest = ReadManifest(o.manifest);
  const fs::path root =
      o.audio_root.empty() ? fs::path(o.manifest).parent_path() : fs::path(o.audio_root);
  std::vector<std::string> paths;
  for (const UtteranceRecord& u : manifest) {
    if (!u.audio_path) {
      ThrowInvalid("missing-audio-path",
                   "utterance '" + u.utt_id + "' has no audio_path", o.manifest);
    }
    const fs::path p(*u.audio_path);
    paths.push_back(p.is_absolute() ? p.string() : (root / p).string());
  }
  RequireFiles(paths);

  const MfccConfig cfg;
  const int64_t n = static_cast<int64_t>(manifest.size());
  std::vector<std::vector<double>> feats(manifest.size());
  std::vector<std::exception_ptr> errors(manifest.size());
#pragma omp parallel
  {
    MfccExtractor extractor(cfg);
#pragma omp for schedule(dynamic)
    for (int64_t i = 0; i < n; ++i) {
      try {
        const WavAudio wav = ReadWavPcm16(paths[i], cfg.sample_rate_hz);
        feats[i] = extractor.Mean(wav.samples);
      } catch (const Error& e) {
        errors[i] = std::make_exception_ptr(
            Error(e.kind(), e.code(), e.what(), paths[i]));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  EmbeddingMatrix m(static_cast<uint32_t>(cfg.feature_dim()));
  for (size_t i = 0; i < manifest.size(); ++i) {
    m.AddRow(manifest[i].utt_id, std::span<const double>(feats[i]));
  }
  WriteEmbeddings(m, o.out);

  Json config = {{"seed", g.seed},
                 {"sample_rate_hz", cfg.sample_rate_hz},
                 {"preemphasis", cfg.preemphasis},
                 {"window_ms", cfg.window_ms},
                 {"hop_ms", cfg.hop_ms},
                 {"fft_size", cfg.fft_size},
                 {"n_mels", cfg.n_mels},
                 {"n_ceps", cfg.n_ceps},
                 {"delta_window", cfg.delta_window},
                 {"log_floor", cfg.log_floor}};
  std::vector<std::string> inputs = {o.manifest};
  inputs.insert(inputs.end(), paths.begin(), paths.end());
  WriteProvenance(Sidecar(o.out), "features", config, inputs, {o.out});
  log.Info("features", "wrote MFCC means", {{"rows", m.rows()}, {"dim", m.dim()}});
}

// --------------------------------------------------------------- preselect

struct PreselectOpts {
  std::string pool_manifest, pool_features, query_features, out;
  size_t budget = 0;
  std::string mode = "lazy";
  size_t chunk = 4096;
};

void RunPreselect(const PreselectOpts& o, const Globals& g, Logger& log) {
  RequireFiles({o.pool_manifest, o.pool_features, o.query_features});
  if (o.chunk == 0) Usage("--chunk must be >= 1");
  const auto manifest = ReadManifest(o.pool_manifest);
  const auto pool = ReadEmbeddings(o.pool_features);
  const auto queries = ReadEmbeddings(o.query_features);
  GreedyOptions opts;
  opts.mode = o.mode == "exact" ? GreedyMode::kExact : GreedyMode::kLazy;
  opts.chunk = o.chunk;
  const std::vector<std::string> ids =
      Preselect(manifest, pool, queries, o.budget, opts);

  Json config = {{"seed", g.seed},
                 {"budget", o.budget},
                 {"mode", o.mode},
                 {"chunk", o.chunk}};
  const std::string hash = ConfigHash(config);
  WriteIdList(ids, o.out,
              "consel preselect v" + std::string(kToolVersion) +
                  " budget=" + std::to_string(o.budget) + " mode=" + o.mode +
                  " config_hash=" + hash);
  WriteProvenance(Sidecar(o.out), "preselect", config,
                  {o.pool_manifest, o.pool_features, o.query_features}, {o.out});
  log.Info("preselect", "selected pool",
           {{"candidates", manifest.size()}, {"queries", queries.rows()},
            {"selected", ids.size()}});
}

// ------------------------------------------------------------------- score

struct ScoreOpts {
  std::string hyps, speech, text, weights, ids, out;
};

void RunScore(const ScoreOpts& o, const Globals& g, Logger& log) {
  std::vector<std::string> inputs = {o.hyps, o.speech, o.text, o.weights};
  if (!o.ids.empty()) inputs.push_back(o.ids);
  RequireFiles(inputs);
  std::vector<HypothesisRecord> hyps = ReadHypotheses(o.hyps);
  if (!o.ids.empty()) {
    const std::vector<std::string> ids = ReadIdList(o.ids);
    const std::set<std::string> keep(ids.begin(), ids.end());
    std::set<std::string> present;
    std::vector<HypothesisRecord> kept;
    for (HypothesisRecord& h : hyps) {
      if (keep.count(h.utt_id)) {
        present.insert(h.utt_id);
        kept.push_back(std::move(h));
      }
    }
    for (const std::string& id : ids) {
      if (!present.count(id)) {
        ThrowInvalid("missing-hypotheses",
                     "no hypotheses for pool utterance '" + id + "'", o.hyps);
      }
    }
    hyps = std::move(kept);
  }
  const PoolSkeleton pool = DedupPool(hyps);
  const EmbeddingMatrix speech = ReadEmbeddings(o.speech);
  const EmbeddingMatrix text = ReadEmbeddings(o.text);
  const PredictorNet net = LoadWeights(o.weights);
  const std::vector<QualityVector> scores = ScorePool(pool, speech, text, net);
  WriteScores(scores, o.out);

  size_t retained = 0, max_k = 0, dropped_base = 0, dropped_dup = 0;
  for (const UtterancePool& u : pool.utterances) {
    retained += u.perturbed.size();
    max_k = std::max<size_t>(max_k, u.perturbed.size());
    dropped_base += u.dropped_baseline_equal;
    dropped_dup += u.dropped_duplicate;
  }
  Json stats = {{"utterances", pool.utterances.size()},
                {"hypotheses_in", hyps.size()},
                {"perturbed_retained", retained},
                {"max_k", max_k},
                {"dropped_baseline_equal", dropped_base},
                {"dropped_duplicate", dropped_dup}};
  Json config = {{"seed", g.seed},
                 {"architecture", net.arch().ToString()},
                 {"restricted_to_ids", !o.ids.empty()}};
  WriteProvenance(Sidecar(o.out), "score", config, inputs, {o.out}, stats);
  log.Info("score", "scored pool", stats);
}

// --------------------------------------------------------- train-predictor

struct TrainOpts {
  std::string speech, text, targets, dev_targets, out, history;
  double dev_fraction = 0.1;
  std::vector<int> hidden = {600, 32};
  TrainConfig cfg;
};

std::vector<std::pair<std::string, double>> Pairs(const std::vector<IdValue>& v) {
  std::vector<std::pair<std::string, double>> out;
  for (const IdValue& x : v) out.emplace_back(x.id, x.value);
  return out;
}

void RunTrain(TrainOpts o, const Globals& g, Logger& log) {
  std::vector<std::string> inputs = {o.speech, o.text, o.targets};
  if (!o.dev_targets.empty()) inputs.push_back(o.dev_targets);
  RequireFiles(inputs);
  if (!(o.dev_fraction > 0.0 && o.dev_fraction < 1.0)) {
    Usage("--dev-fraction must be in (0, 1)");
  }
  const EmbeddingMatrix speech = ReadEmbeddings(o.speech);
  const EmbeddingMatrix text = ReadEmbeddings(o.text);
  auto train = Pairs(ReadTargets(o.targets));
  std::vector<std::pair<std::string, double>> dev;
  if (!o.dev_targets.empty()) {
    dev = Pairs(ReadTargets(o.dev_targets));
  } else {
    Rng rng(g.seed, "dev-split");
    rng.Shuffle(train);
    const size_t n_dev = std::max<size_t>(
        1, static_cast<size_t>(o.dev_fraction * static_cast<double>(train.size()) + 0.5));
    if (n_dev >= train.size()) {
      ThrowInvalid("empty-set", "too few labeled pairs to split off a dev set",
                   o.targets);
    }
    dev.assign(train.begin(), train.begin() + n_dev);
    train.erase(train.begin(), train.begin() + n_dev);
  }
  const LabeledSet tr = MakeLabeledSet(speech, text, train);
  const LabeledSet dv = MakeLabeledSet(speech, text, dev);
  const Architecture arch{static_cast<int>(2 * speech.dim()), o.hidden[0],
                          o.hidden[1]};
  o.cfg.seed = g.seed;
  const TrainResult r = Train(tr, dv, arch, o.cfg);
  SaveWeights(r.net, o.out);

  std::vector<std::string> outputs = {o.out};
  if (!o.history.empty()) {
    Json hist = Json::array();
    for (const EpochStats& e : r.history) {
      hist.push_back({{"epoch", e.epoch},
                      {"lr", e.lr},
                      {"train_mse", e.train_mse},
                      {"dev_mse", e.dev_mse}});
    }
    WriteJsonReport({{"best_epoch", r.best_epoch}, {"history", hist}}, o.history);
    outputs.push_back(o.history);
  }
  Json config = {{"seed", g.seed},
                 {"architecture", arch.ToString()},
                 {"max_epochs", o.cfg.max_epochs},
                 {"patience", o.cfg.patience},
                 {"batch_size", o.cfg.batch_size},
                 {"lr", o.cfg.lr},
                 {"weight_decay", o.cfg.weight_decay},
                 {"dropout", o.cfg.dropout},
                 {"dev_fraction", o.dev_targets.empty() ? Json(o.dev_fraction)
                                                        : Json(nullptr)}};
  WriteProvenance(Sidecar(o.out), "train-predictor", config, inputs, outputs);
  log.Info("train-predictor", "trained",
           {{"train", tr.size()},
            {"dev", dv.size()},
            {"epochs", r.history.back().epoch},
            {"best_epoch", r.best_epoch},
            {"best_dev_mse", r.history[r.best_epoch].dev_mse}});
}

// ------------------------------------------------------------------ select

struct SelectOpts {
  std::string rule, scores, hyps, manifest, ids, out;
  std::vector<std::string> systems;
  int p = 0, p2 = 0;
  size_t size_matched = 0;
  double hours = 0.0, tau = 0.0;
  CLI::Option *p_opt = nullptr, *p2_opt = nullptr, *size_opt = nullptr,
              *hours_opt = nullptr, *tau_opt = nullptr;
};

std::vector<UtteranceRecord> RestrictManifest(std::vector<UtteranceRecord> manifest,
                                              const std::string& ids_path) {
  if (ids_path.empty()) return manifest;
  const std::vector<std::string> ids = ReadIdList(ids_path);
  std::unordered_map<std::string, UtteranceRecord*> by_id;
  for (UtteranceRecord& u : manifest) by_id.emplace(u.utt_id, &u);
  std::vector<UtteranceRecord> out;
  for (const std::string& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      ThrowInvalid("unknown-id", "id '" + id + "' is not in the manifest", ids_path);
    }
    out.push_back(*it->second);
  }
  return out;
}

void RunSelect(const SelectOpts& o, const Globals& g, Logger& log) {
  const std::string& rule = o.rule;
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) Usage("--rule " + rule + " requires " + what);
  };
  std::vector<std::string> inputs;
  SelectionResult result;
  Json config = {{"seed", g.seed}, {"rule", rule}};

  static const std::set<std::string> kPoolRules = {
      "conf", "pred", "cos", "euc", "stable", "conf-stable", "wer-binary"};
  if (kPoolRules.count(rule)) {
    need(!o.scores.empty() && !o.hyps.empty(), "--scores and --hyps");
    if (rule != "wer-binary") need(o.p_opt->count() > 0, "--p");
    if (rule == "conf-stable") need(o.p2_opt->count() > 0, "--p2");
    inputs = {o.scores, o.hyps};
    RequireFiles(inputs);
    const ScoredPool pool = AssemblePool(ReadHypotheses(o.hyps), ReadScores(o.scores));
    if (rule == "stable") {
      result = SelectStableBase(pool, o.p);
    } else if (rule == "conf-stable") {
      result = SelectConfStable(pool, o.p, o.p2);
    } else if (rule == "wer-binary") {
      result = SelectWerBinary(pool);
    } else {
      const ThresholdSet t = PercentileThresholds(pool, o.p);
      if (rule == "conf") {
        result = SelectConf(pool, t);
      } else {
        const Metric m = rule == "pred"  ? Metric::kPred
                         : rule == "cos" ? Metric::kCos
                                         : Metric::kEuc;
        result = SelectSingleMetric(pool, t, m);
      }
    }
    config["pool_digest"] = PoolDigest(pool);
  } else if (rule == "ppl") {
    need(!o.hyps.empty(), "--hyps");
    need((o.p_opt->count() > 0) != (o.size_opt->count() > 0),
         "exactly one of --p and --size-matched");
    inputs = {o.hyps};
    RequireFiles(inputs);
    result = SelectPpl(ReadHypotheses(o.hyps),
                       o.p_opt->count() ? std::optional<int>(o.p) : std::nullopt,
                       o.size_opt->count() ? std::optional<size_t>(o.size_matched)
                                           : std::nullopt);
  } else if (rule == "random") {
    need(!o.manifest.empty() && !o.hyps.empty() && o.hours_opt->count() > 0,
         "--manifest, --hyps and --hours");
    inputs = {o.manifest, o.hyps};
    if (!o.ids.empty()) inputs.push_back(o.ids);
    RequireFiles(inputs);
    const auto manifest = RestrictManifest(ReadManifest(o.manifest), o.ids);
    result = SelectRandomHours(manifest, ReadHypotheses(o.hyps), o.hours, g.seed);
    config["hours"] = o.hours;
  } else if (rule == "cer") {
    need(!o.manifest.empty() && o.systems.size() == 3 && o.tau_opt->count() > 0,
         "--manifest, three --systems files and --tau");
    inputs = {o.manifest, o.systems[0], o.systems[1], o.systems[2]};
    if (!o.ids.empty()) inputs.push_back(o.ids);
    RequireFiles(inputs);
    const auto manifest = RestrictManifest(ReadManifest(o.manifest), o.ids);
    result = SelectCerConsistency(manifest, ReadHypotheses(o.systems[0], true),
                                  ReadHypotheses(o.systems[1], true),
                                  ReadHypotheses(o.systems[2], true), o.tau);
    config["tau"] = o.tau;
  } else {
    Usage("unknown rule '" + rule + "'");
  }
  if (o.p_opt->count()) config["p"] = o.p;
  if (o.p2_opt->count()) config["p2"] = o.p2;
  if (o.size_opt->count()) config["size_matched"] = o.size_matched;

  WriteSelection(result, o.out);
  WriteProvenance(Sidecar(o.out), "select", config, inputs, {o.out},
                  {{"entries", result.entries.size()}});
  log.Info("select", "selected subset",
           {{"rule", RuleName(result.rule)}, {"entries", result.entries.size()}});
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOpts {
  std::string subset, manifest, scores, truth, out;
  bool normalize = false;
};

void RunEvaluate(const EvaluateOpts& o, const Globals& g, Logger& log) {
  std::vector<std::string> inputs = {o.subset, o.manifest};
  if (o.scores.empty() != o.truth.empty()) {
    Usage("--scores and --truth must be given together");
  }
  if (!o.scores.empty()) {
    inputs.push_back(o.scores);
    inputs.push_back(o.truth);
  }
  RequireFiles(inputs);
  const SelectionResult subset = ReadSelection(o.subset);
  const auto manifest = ReadManifest(o.manifest);
  const SubsetEvaluation ev = EvaluateSubset(subset, manifest, o.normalize);

  std::set<std::string> utts;
  Json rows = Json::array();
  for (const UtteranceScore& s : ev.utterances) {
    utts.insert(s.utt_id);
    Json row = {{"utt_id", s.utt_id}, {"hyp_id", s.hyp_id}, {"weight", s.weight}};
    row["wer"] = BreakdownJson(s.wer);
    rows.push_back(std::move(row));
  }
  Json report;
  report["rule"] = subset.entries.empty() ? Json(nullptr) : Json(RuleName(subset.rule));
  report["p"] = subset.p ? Json(*subset.p) : Json(nullptr);
  report["entries"] = subset.entries.size();
  report["utterances"] = utts.size();
  report["hours"] = ev.hours;
  report["pooled_wer"] = BreakdownJson(ev.pooled);
  report["per_utterance"] = rows;

  if (!o.scores.empty()) {
    std::map<std::pair<std::string, std::string>, double> truth;
    for (const TruthRow& t : ReadTruth(o.truth)) {
      truth[{t.utt_id, t.hyp_id}] = t.true_wer;
    }
    std::vector<double> preds, refs;
    for (const QualityVector& q : ReadScores(o.scores)) {
      auto it = truth.find({q.utt_id, q.hyp_id});
      if (it == truth.end()) {
        ThrowInvalid("coverage-mismatch",
                     "no truth row for '" + q.utt_id + "/" + q.hyp_id + "'", o.truth);
      }
      preds.push_back(q.pred_wer);
      refs.push_back(it->second);
    }
    const PredictorReport pr = ComputePredictorReport(preds, refs);
    report["predictor"] = {{"n", pr.n},
                           {"pearson", OptionalJson(pr.pearson)},
                           {"spearman", OptionalJson(pr.spearman)},
                           {"mae", pr.mae},
                           {"rmse", pr.rmse}};
  }
  WriteJsonReport(report, o.out);
  Json config = {{"seed", g.seed}, {"normalize", o.normalize}};
  WriteProvenance(Sidecar(o.out), "evaluate", config, inputs, {o.out});
  log.Info("evaluate", "evaluated subset",
           {{"entries", subset.entries.size()}, {"pooled_wer", report["pooled_wer"]["rate"]}});
}

// ------------------------------------------------------------------- sweep

struct SweepOpts {
  std::string manifest, hyps, out;
  bool normalize = false;
};

void RunSweep(const SweepOpts& o, const Globals& g, Logger& log) {
  RequireFiles({o.manifest, o.hyps});
  const SweepReport r = MakeSweepReport(ReadManifest(o.manifest),
                                        ReadHypotheses(o.hyps, true), o.normalize);
  Json configs = Json::array();
  size_t retained = 0;
  for (const SweepEntry& e : r.configs) {
    retained += e.retained;
    configs.push_back({{"tag", e.tag},
                       {"alpha", e.perturbation.alpha},
                       {"pitch_semitones", e.perturbation.pitch_semitones},
                       {"atempo", e.perturbation.atempo},
                       {"utterances", e.utterances},
                       {"improved", e.improved},
                       {"improvement_rate", e.improvement_rate},
                       {"mean_reduction", OptionalJson(e.mean_reduction)},
                       {"retained", e.retained}});
  }
  WriteJsonReport({{"retain_threshold", 0.2}, {"configs", configs}}, o.out);
  Json config = {{"seed", g.seed}, {"normalize", o.normalize}};
  WriteProvenance(Sidecar(o.out), "sweep", config, {o.manifest, o.hyps}, {o.out});
  log.Info("sweep", "perturbation sweep",
           {{"configs", r.configs.size()}, {"retained", retained}});
}

// ------------------------------------------------------------------- synth

struct SynthOpts {
  std::string out_dir;
  bool audio = false;
  SynthConfig cfg;
};

void RunSynth(SynthOpts o, const Globals& g, Logger& log) {
  o.cfg.seed = g.seed;
  const std::vector<std::string> written =
      WriteSynth(GenerateSynth(o.cfg), o.out_dir, g.seed, o.audio);
  Json config = {{"seed", g.seed},
                 {"n_utts", o.cfg.n_utts},
                 {"n_query", o.cfg.n_query},
                 {"rho", o.cfg.rho},
                 {"noise_sigma", o.cfg.noise_sigma},
                 {"emb_dim", o.cfg.emb_dim},
                 {"duplicate_rate", o.cfg.duplicate_rate},
                 {"audio", o.audio}};
  WriteProvenance((fs::path(o.out_dir) / "synth.prov.json").string(), "synth",
                  config, {}, written);
  log.Info("synth", "generated synthetic pool",
           {{"utterances", o.cfg.n_utts}, {"files", written.size()}});
}

int ReportError(std::ostream& err, ErrorKind kind, const std::string& code,
                const std::string& message, const std::string& path) {
  Json e = {{"kind", ErrorKindName(kind)}, {"code", code}, {"message", message}};
  if (!path.empty()) e["path"] = path;
  err << Json{{"error", e}, {"exit_code", static_cast<int>(kind)}}.dump() << '\n';
  return static_cast<int>(kind);
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Reference-free data selection for ASR pseudo-labels", "consel"};
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  app.require_subcommand(1);

  Globals g;
  app.add_option("--seed", g.seed, "Random seed for every stochastic stage")
      ->capture_default_str();
  app.add_option("--threads", g.threads, "OpenMP threads (0 = runtime default)")
      ->capture_default_str();
  app.add_option("--log", g.log, "Log format on stderr")
      ->check(CLI::IsMember({"json", "text"}))
      ->capture_default_str();

  FeaturesOpts fo;
  auto* features = app.add_subcommand("features", "Utterance-level 39-d mean MFCC features");
  features->add_option("--manifest", fo.manifest, "Manifest JSONL with audio_path")->required();
  features->add_option("--out", fo.out, "Output EMB1 file")->required();
  features->add_option("--audio-root", fo.audio_root,
                       "Base directory for relative audio paths (default: manifest dir)");

  PreselectOpts po;
  auto* preselect = app.add_subcommand("preselect", "FLMI preselection towards the query set");
  preselect->add_option("--pool-manifest", po.pool_manifest, "Candidate pool manifest")->required();
  preselect->add_option("--pool-features", po.pool_features, "Pool EMB1 features")->required();
  preselect->add_option("--query-features", po.query_features, "Query EMB1 features")->required();
  preselect->add_option("--budget", po.budget, "Number of utterances to select")->required();
  preselect->add_option("--mode", po.mode, "Greedy mode")
      ->check(CLI::IsMember({"exact", "lazy"}))
      ->capture_default_str();
  preselect->add_option("--chunk", po.chunk, "Candidate rows per streamed block")
      ->capture_default_str();
  preselect->add_option("--out", po.out, "Output id list")->required();

  ScoreOpts so;
  auto* score = app.add_subcommand("score", "Quality vectors for the de-duplicated pool");
  score->add_option("--hyps", so.hyps, "Hypothesis JSONL")->required();
  score->add_option("--speech", so.speech, "Speech EMB1 keyed by utt_id")->required();
  score->add_option("--text", so.text, "Text EMB1 keyed by hyp_id")->required();
  score->add_option("--weights", so.weights, "Predictor weights JSON")->required();
  score->add_option("--ids", so.ids, "Restrict to the utterances in this id list");
  score->add_option("--out", so.out, "Output score JSONL")->required();

  TrainOpts to;
  auto* train = app.add_subcommand("train-predictor", "Train the WER predictor");
  train->add_option("--speech", to.speech, "Speech EMB1 keyed by pair id")->required();
  train->add_option("--text", to.text, "Text EMB1 keyed by pair id")->required();
  train->add_option("--targets", to.targets, "JSONL of {id, target_wer}")->required();
  train->add_option("--dev-targets", to.dev_targets, "Held-out JSONL (default: split)");
  train->add_option("--dev-fraction", to.dev_fraction, "Dev split when no --dev-targets")
      ->capture_default_str();
  train->add_option("--hidden", to.hidden, "Hidden widths")->expected(2)->capture_default_str();
  train->add_option("--epochs", to.cfg.max_epochs, "Maximum epochs")->capture_default_str();
  train->add_option("--patience", to.cfg.patience, "Early-stop patience")->capture_default_str();
  train->add_option("--batch", to.cfg.batch_size, "Batch size")->capture_default_str();
  train->add_option("--lr", to.cfg.lr, "Peak learning rate")->capture_default_str();
  train->add_option("--weight-decay", to.cfg.weight_decay, "AdamW weight decay")
      ->capture_default_str();
  train->add_option("--dropout", to.cfg.dropout, "Dropout rate")->capture_default_str();
  train->add_option("--history", to.history, "Write per-epoch history JSON here");
  train->add_option("--out", to.out, "Output weights JSON")->required();

  SelectOpts se;
  auto* select = app.add_subcommand("select", "Apply a selection rule");
  select->add_option("--rule", se.rule, "Selection rule")
      ->required()
      ->check(CLI::IsMember({"conf", "pred", "cos", "euc", "stable", "conf-stable",
                             "ppl", "random", "cer", "wer-binary"}));
  select->add_option("--scores", se.scores, "Score JSONL");
  select->add_option("--hyps", se.hyps, "Hypothesis JSONL");
  select->add_option("--manifest", se.manifest, "Pool manifest (random, cer)");
  select->add_option("--ids", se.ids, "Restrict the manifest to this id list");
  select->add_option("--systems", se.systems, "Three system hypothesis files (cer)")
      ->expected(3);
  se.p_opt = select->add_option("--p", se.p, "Percentile");
  se.p2_opt = select->add_option("--p2", se.p2, "Stable-base percentile (conf-stable)");
  se.size_opt = select->add_option("--size-matched", se.size_matched,
                                   "Exact subset size (ppl)");
  se.hours_opt = select->add_option("--hours", se.hours, "Target hours (random)");
  se.tau_opt = select->add_option("--tau", se.tau, "CER threshold (cer)");
  select->add_option("--out", se.out, "Output subset JSONL")->required();

  EvaluateOpts eo;
  auto* evaluate = app.add_subcommand("evaluate", "WER and hours of a selected subset");
  evaluate->add_option("--subset", eo.subset, "Subset JSONL")->required();
  evaluate->add_option("--manifest", eo.manifest, "Manifest with ref_text")->required();
  evaluate->add_option("--scores", eo.scores, "Score JSONL for a predictor report");
  evaluate->add_option("--truth", eo.truth, "Truth JSONL for a predictor report");
  evaluate->add_flag("--normalize", eo.normalize, "Lowercase and strip punctuation");
  evaluate->add_option("--out", eo.out, "Output report JSON")->required();

  SweepOpts wo;
  auto* sweep = app.add_subcommand("sweep", "Perturbation improvement-rate report");
  sweep->add_option("--manifest", wo.manifest, "Manifest with ref_text")->required();
  sweep->add_option("--hyps", wo.hyps, "Hypotheses of every configuration")->required();
  sweep->add_flag("--normalize", wo.normalize, "Lowercase and strip punctuation");
  sweep->add_option("--out", wo.out, "Output report JSON")->required();

  SynthOpts yo;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic pool");
  synth->add_option("--out-dir", yo.out_dir, "Output directory")->required();
  synth->add_option("--n-utts", yo.cfg.n_utts, "Pool utterances")->capture_default_str();
  synth->add_option("--n-query", yo.cfg.n_query, "Query utterances")->capture_default_str();
  synth->add_option("--rho", yo.cfg.rho, "Signal quality in [0, 1]")->capture_default_str();
  synth->add_option("--noise-sigma", yo.cfg.noise_sigma, "Noise scale at rho = 0")
      ->capture_default_str();
  synth->add_option("--emb-dim", yo.cfg.emb_dim, "Embedding dimension")->capture_default_str();
  synth->add_option("--dup-rate", yo.cfg.duplicate_rate, "Duplicate text rate")
      ->capture_default_str();
  synth->add_flag("--audio", yo.audio, "Also write 16 kHz WAV files");

  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  std::vector<std::string> argv_store = {"consel"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    // Help and version requests surface as parse errors with exit code 0.
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    return ReportError(err, ErrorKind::kUsage, "usage", e.what(), "");
  }

  try {
    if (g.threads < 0) Usage("--threads must be >= 0");
    if (g.threads > 0) kernels::SetNumThreads(g.threads);
    Logger log(g, err);
    if (features->parsed()) RunFeatures(fo, g, log);
    else if (preselect->parsed()) RunPreselect(po, g, log);
    else if (score->parsed()) RunScore(so, g, log);
    else if (train->parsed()) RunTrain(to, g, log);
    else if (select->parsed()) RunSelect(se, g, log);
    else if (evaluate->parsed()) RunEvaluate(eo, g, log);
    else if (sweep->parsed()) RunSweep(wo, g, log);
    else if (synth->parsed()) RunSynth(yo, g, log);
    return 0;
  } catch (const Error& e) {
    return ReportError(err, e.kind(), e.code(), e.what(), e.path());
  } catch (const std::bad_alloc&) {
    return ReportError(err, ErrorKind::kNumeric, "out-of-memory", "allocation failed", "");
  } catch (const std::exception& e) {
    return ReportError(err, ErrorKind::kInvalidData, "internal", e.what(), "");
  }
}

}  // namespace consel
