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

#ifndef CONSEL_PREDICTOR_H_
#define CONSEL_PREDICTOR_H_

// Reference-free sentence-level WER predictor.
//
//   x = [speech_emb || text_emb]
//   h1 = Dropout(ReLU(W1 * BN0(x) + b1))
//   h2 = Dropout(ReLU(W2 * BN1(h1) + b2))
//   z  = w3 . h2 + b3
//   y  = 0.01 + 0.98 * sigmoid(z / beta),   beta = exp(log_beta)
//
// Blocks follow BatchNorm -> Linear -> ReLU -> Dropout order. All arithmetic
// is double precision.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "consel/kernels.h"
#include "consel/types.h"

namespace consel {

inline constexpr double kPredMin = 0.01;
inline constexpr double kPredMax = 0.99;
inline constexpr double kBatchNormEps = 1e-5;

struct Architecture {
  int input_dim = 2048;
  int hidden1 = 600;
  int hidden2 = 32;

  bool operator==(const Architecture&) const = default;
  std::string ToString() const;
};

// Learnable tensors. Also used as the gradient container.
struct PredictorParams {
  Eigen::VectorXd bn0_gamma, bn0_shift;
  Eigen::MatrixXd w1;  // hidden1 x input_dim
  Eigen::VectorXd b1;
  Eigen::VectorXd bn1_gamma, bn1_shift;
  Eigen::MatrixXd w2;  // hidden2 x hidden1
  Eigen::VectorXd b2;
  Eigen::VectorXd w3;  // hidden2
  Eigen::VectorXd b3;  // size 1
  Eigen::VectorXd log_beta;  // size 1

  static PredictorParams Zeros(const Architecture& arch);
  // Flat views of every tensor, in a fixed order.
  std::vector<std::span<double>> Tensors();
  std::vector<std::span<const double>> Tensors() const;
  size_t size() const;
};

enum class ForwardMode { kTrain, kEval };

class PredictorNet {
 public:
  PredictorNet() : PredictorNet(Architecture{}) {}
  // All-zero weights, BN gamma = 1, beta = 1, running var = 1.
  explicit PredictorNet(const Architecture& arch, double dropout = 0.3);

  // Xavier-uniform linear weights, zero biases, unit BN scale.
  static PredictorNet XavierInit(const Architecture& arch, uint64_t seed,
                                 double dropout = 0.3);

  const Architecture& arch() const { return arch_; }
  double dropout() const { return dropout_; }
  void set_dropout(double p) { dropout_ = p; }
  double beta() const;

  PredictorParams& params() { return params_; }
  const PredictorParams& params() const { return params_; }

  Eigen::VectorXd& bn0_mean() { return bn0_mean_; }
  Eigen::VectorXd& bn0_var() { return bn0_var_; }
  Eigen::VectorXd& bn1_mean() { return bn1_mean_; }
  Eigen::VectorXd& bn1_var() { return bn1_var_; }
  const Eigen::VectorXd& bn0_mean() const { return bn0_mean_; }
  const Eigen::VectorXd& bn0_var() const { return bn0_var_; }
  const Eigen::VectorXd& bn1_mean() const { return bn1_mean_; }
  const Eigen::VectorXd& bn1_var() const { return bn1_var_; }

  // Eval-mode prediction for one pair. Throws on dim mismatch or non-finite
  // input. Result is in [0.01, 0.99].
  double Predict(std::span<const double> speech,
                 std::span<const double> text) const;
  double PredictConcat(std::span<const double> input) const;
  // Eval-mode prediction for every column of `inputs` (input_dim x N).
  Eigen::VectorXd PredictMany(
      const Eigen::MatrixXd& inputs,
      kernels::Exec exec = kernels::Exec::kParallel) const;

  // Sets the BN running statistics to the population statistics of
  // `inputs` propagated in eval mode without dropout.
  void RecomputeBatchNormStats(const Eigen::MatrixXd& inputs);

  // Throws if any parameter or statistic is non-finite or a variance < 0.
  void Validate() const;

 private:
  Architecture arch_;
  double dropout_ = 0.3;
  PredictorParams params_;
  Eigen::VectorXd bn0_mean_, bn0_var_, bn1_mean_, bn1_var_;
};

class Rng;

// Batch forward. In train mode uses batch statistics and, if `dropout_rng`
// is non-null, inverted dropout with the net's rate. Eval mode ignores the
// rng. Returns predictions for every column of `inputs`.
Eigen::VectorXd ForwardBatch(const PredictorNet& net,
                             const Eigen::MatrixXd& inputs, ForwardMode mode,
                             Rng* dropout_rng = nullptr);

// Train-mode batch MSE and its exact gradient with respect to every entry
// of PredictorParams. Batch size must be >= 2.
double LossAndGradient(const PredictorNet& net, const Eigen::MatrixXd& inputs,
                       const Eigen::VectorXd& targets, Rng* dropout_rng,
                       PredictorParams* grad);

// Labeled training data: columns of `inputs` are [speech || text].
struct LabeledSet {
  std::vector<std::string> ids;
  Eigen::MatrixXd inputs;
  Eigen::VectorXd targets;  // clamped to [0, 1]

  size_t size() const { return ids.size(); }
};

// Joins speech/text EMB1 rows (aligned by id) with targets. Throws on any
// missing row or dim mismatch between the two embedding files.
LabeledSet MakeLabeledSet(const EmbeddingMatrix& speech,
                          const EmbeddingMatrix& text,
                          const std::vector<std::pair<std::string, double>>&
                              targets);

struct TrainConfig {
  int max_epochs = 70;
  int patience = 10;
  int batch_size = 64;
  double lr = 1e-3;
  double weight_decay = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double dropout = 0.3;
  uint64_t seed = 0;

  void Validate() const;
};

struct EpochStats {
  int epoch = 0;  // 0 = before the first update
  double lr = 0.0;
  double train_mse = 0.0;
  double dev_mse = 0.0;

  bool operator==(const EpochStats&) const = default;
};

struct TrainResult {
  PredictorNet net;  // best dev-MSE checkpoint
  std::vector<EpochStats> history;
  int best_epoch = 0;
};

// AdamW + cosine annealing on MSE. Deterministic given cfg.seed. Running
// BN statistics are recomputed over the whole training set after every
// epoch.
TrainResult Train(const LabeledSet& train, const LabeledSet& dev,
                  const Architecture& arch, const TrainConfig& cfg);

double MeanSquaredError(const PredictorNet& net, const LabeledSet& data);

// JSON weights. Load checks every array against the declared architecture
// and, when given, against `expected`.
void SaveWeights(const PredictorNet& net, const std::string& path);
PredictorNet LoadWeights(const std::string& path,
                         const std::optional<Architecture>& expected = {});

struct PredictorReport {
  std::optional<double> pearson;   // nullopt when a variance is zero
  std::optional<double> spearman;
  double mae = 0.0;
  double rmse = 0.0;
  size_t n = 0;
};

// Pearson, Spearman (Pearson on average ranks), MAE and RMSE.
PredictorReport ComputePredictorReport(std::span<const double> preds,
                                       std::span<const double> refs);

// Average ranks (1-based, ties share the mean rank).
std::vector<double> AverageRanks(std::span<const double> values);

}  // namespace consel

#endif  // CONSEL_PREDICTOR_H_
