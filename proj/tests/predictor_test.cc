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

#include "consel/predictor.h"

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <json.hpp>

#include "consel/error.h"
#include "consel/rng.h"
#include "consel/wire_format.h"
#include "test_util.h"

namespace consel {
namespace {

using testing::TempDir;

const Architecture kSmall{8, 6, 4};

Eigen::MatrixXd RandomInputs(int dim, int n, Rng& rng) {
  Eigen::MatrixXd x(dim, n);
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < dim; ++r) x(r, c) = rng.Normal();
  }
  return x;
}

// Xavier weights plus random BN affine, biases, temperature and running
// statistics, so that every parameter takes part in the check.
PredictorNet RandomNet(const Architecture& arch, uint64_t seed) {
  PredictorNet net = PredictorNet::XavierInit(arch, seed, 0.0);
  Rng rng(seed, "random-net");
  PredictorParams& p = net.params();
  for (std::span<double> t : p.Tensors()) {
    for (double& v : t) v += 0.3 * rng.Normal();
  }
  for (Eigen::Index i = 0; i < net.bn0_var().size(); ++i) {
    net.bn0_mean()(i) = 0.2 * rng.Normal();
    net.bn0_var()(i) = 0.5 + rng.Uniform();
  }
  for (Eigen::Index i = 0; i < net.bn1_var().size(); ++i) {
    net.bn1_mean()(i) = 0.2 * rng.Normal();
    net.bn1_var()(i) = 0.5 + rng.Uniform();
  }
  return net;
}

double Loss(const PredictorNet& net, const Eigen::MatrixXd& x,
            const Eigen::VectorXd& t) {
  return LossAndGradient(net, x, t, nullptr, nullptr);
}

// Largest relative deviation between the analytic gradient and central
// differences over every parameter.
double GradientCheck(uint64_t seed) {
  PredictorNet net = RandomNet(kSmall, seed);
  Rng rng(seed, "grad-data");
  const Eigen::MatrixXd x = RandomInputs(kSmall.input_dim, 5, rng);
  Eigen::VectorXd t(5);
  for (int i = 0; i < 5; ++i) t(i) = rng.Uniform();
  PredictorParams grad = PredictorParams::Zeros(kSmall);
  LossAndGradient(net, x, t, nullptr, &grad);
  auto analytic = grad.Tensors();
  auto params = net.params().Tensors();
  const double h = 1e-6;
  double worst = 0.0;
  for (size_t k = 0; k < params.size(); ++k) {
    for (size_t i = 0; i < params[k].size(); ++i) {
      const double saved = params[k][i];
      params[k][i] = saved + h;
      const double up = Loss(net, x, t);
      params[k][i] = saved - h;
      const double down = Loss(net, x, t);
      params[k][i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic[k][i];
      const double scale =
          std::max({std::fabs(a), std::fabs(numeric), 1e-6});
      worst = std::max(worst, std::fabs(a - numeric) / scale);
    }
  }
  return worst;
}

TEST(PredictorForwardTest, ZeroNetGivesOneHalf) {
  const PredictorNet net(kSmall);
  std::vector<double> s(4, 0.7), t(4, -0.2);
  EXPECT_DOUBLE_EQ(net.Predict(s, t), 0.5);
}

TEST(PredictorForwardTest, SaturatesAtUpperBound) {
  PredictorNet net(kSmall);
  net.params().b3(0) = 1e4;
  const double y = net.PredictConcat(std::vector<double>(8, 0.1));
  EXPECT_LE(y, kPredMax);
  EXPECT_NEAR(y, kPredMax, 1e-12);
  net.params().b3(0) = -1e4;
  EXPECT_NEAR(net.PredictConcat(std::vector<double>(8, 0.1)), kPredMin,
              1e-12);
}

TEST(PredictorForwardTest, TemperatureMovesTowardOneHalf) {
  PredictorNet net(kSmall);
  net.params().b3(0) = 2.0;
  const std::vector<double> x(8, 0.0);
  double prev = 1.0;
  for (double lb : {-2.0, -1.0, 0.0, 1.0, 2.0, 4.0}) {
    net.params().log_beta(0) = lb;
    const double y = net.PredictConcat(x);
    EXPECT_GT(y, 0.5);
    EXPECT_LT(y, prev);
    prev = y;
  }
}

TEST(PredictorForwardTest, OutputAlwaysInRange) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    PredictorNet net = RandomNet(kSmall, 100 + trial);
    for (std::span<double> t : net.params().Tensors()) {
      for (double& v : t) v *= 20.0;
    }
    const Eigen::MatrixXd x = 50.0 * RandomInputs(8, 20, rng);
    const Eigen::VectorXd y = net.PredictMany(x);
    EXPECT_GE(y.minCoeff(), kPredMin);
    EXPECT_LE(y.maxCoeff(), kPredMax);
  }
}

TEST(PredictorForwardTest, EvalIsPureAndExecIndependent) {
  const PredictorNet net = RandomNet(kSmall, 5);
  Rng rng(5);
  const Eigen::MatrixXd x = RandomInputs(8, 300, rng);
  const Eigen::VectorXd a = net.PredictMany(x, kernels::Exec::kSerial);
  const Eigen::VectorXd b = net.PredictMany(x, kernels::Exec::kParallel);
  for (int i = 0; i < 300; ++i) {
    const Eigen::VectorXd col = x.col(i);
    const double one = net.PredictConcat({col.data(), 8});
    EXPECT_EQ(std::bit_cast<uint64_t>(a(i)), std::bit_cast<uint64_t>(b(i)));
    EXPECT_EQ(std::bit_cast<uint64_t>(a(i)), std::bit_cast<uint64_t>(one));
  }
}

TEST(PredictorForwardTest, RejectsBadInput) {
  const PredictorNet net(kSmall);
  EXPECT_THROW(net.Predict(std::vector<double>(4, 0.0),
                           std::vector<double>(3, 0.0)),
               Error);
  std::vector<double> x(8, 0.0);
  x[2] = NAN;
  EXPECT_THROW(net.PredictConcat(x), Error);
}

TEST(PredictorGradientTest, ZeroNetOutputBias) {
  const PredictorNet net(kSmall);
  Rng rng(1);
  const Eigen::MatrixXd x = RandomInputs(8, 4, rng);
  const Eigen::VectorXd t = Eigen::VectorXd::Zero(4);
  PredictorParams grad = PredictorParams::Zeros(kSmall);
  const double loss = LossAndGradient(net, x, t, nullptr, &grad);
  EXPECT_DOUBLE_EQ(loss, 0.25);
  // dL/db3 = 2 * 0.5 * 0.98 * sigmoid'(0) = 0.245.
  EXPECT_NEAR(grad.b3(0), 0.245, 1e-15);
  PredictorNet shifted = net;
  shifted.params().b3(0) = 1e-3;
  const double up = Loss(shifted, x, t);
  shifted.params().b3(0) = -1e-3;
  const double down = Loss(shifted, x, t);
  EXPECT_NEAR((up - down) / 2e-3, grad.b3(0), 1e-3 * 0.245);
}

TEST(PredictorGradientTest, MatchesFiniteDifferences) {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    EXPECT_LE(GradientCheck(seed), 1e-3) << "seed " << seed;
  }
}

TEST(PredictorGradientTest, DuplicatedBatchHasSameGradient) {
  const PredictorNet net = RandomNet(kSmall, 7);
  Rng rng(7);
  const Eigen::MatrixXd x = RandomInputs(8, 3, rng);
  const Eigen::VectorXd t = Eigen::Vector3d(0.1, 0.6, 0.3);
  Eigen::MatrixXd x2(8, 6);
  x2 << x, x;
  Eigen::VectorXd t2(6);
  t2 << t, t;
  PredictorParams g1 = PredictorParams::Zeros(kSmall);
  PredictorParams g2 = PredictorParams::Zeros(kSmall);
  LossAndGradient(net, x, t, nullptr, &g1);
  LossAndGradient(net, x2, t2, nullptr, &g2);
  auto a = g1.Tensors();
  auto b = g2.Tensors();
  for (size_t k = 0; k < a.size(); ++k) {
    for (size_t i = 0; i < a[k].size(); ++i) {
      EXPECT_NEAR(a[k][i], b[k][i], 1e-9) << "tensor " << k << " entry " << i;
    }
  }
}

TEST(PredictorGradientTest, DeadUnitHasZeroGradient) {
  PredictorNet net = RandomNet(kSmall, 8);
  net.params().w1.row(0).setZero();
  net.params().b1(0) = -100.0;
  Rng rng(8);
  const Eigen::MatrixXd x = RandomInputs(8, 6, rng);
  const Eigen::VectorXd t = Eigen::VectorXd::Constant(6, 0.2);
  PredictorParams grad = PredictorParams::Zeros(kSmall);
  LossAndGradient(net, x, t, nullptr, &grad);
  EXPECT_EQ(grad.b1(0), 0.0);
  for (int c = 0; c < 8; ++c) EXPECT_EQ(grad.w1(0, c), 0.0);
}

TEST(PredictorGradientTest, BatchTooSmall) {
  const PredictorNet net(kSmall);
  try {
    Loss(net, Eigen::MatrixXd::Zero(8, 1), Eigen::VectorXd::Zero(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "batch-too-small");
  }
}

LabeledSet Planted(int n, int dim, uint64_t seed) {
  Rng rng(seed, "planted");
  Eigen::VectorXd w(dim);
  Rng wrng(99, "planted-w");
  for (int i = 0; i < dim; ++i) w(i) = wrng.Normal() / std::sqrt(dim);
  LabeledSet set;
  set.inputs = RandomInputs(dim, n, rng);
  set.targets.resize(n);
  for (int i = 0; i < n; ++i) {
    set.ids.push_back("p" + std::to_string(i));
    const double z = 2.0 * w.dot(set.inputs.col(i));
    set.targets(i) = 0.01 + 0.98 / (1.0 + std::exp(-z));
  }
  return set;
}

TEST(PredictorTrainTest, LearnsPlantedModel) {
  const LabeledSet train = Planted(800, 8, 1), dev = Planted(200, 8, 2);
  TrainConfig cfg;
  cfg.max_epochs = 40;
  cfg.lr = 3e-3;
  cfg.batch_size = 32;
  cfg.dropout = 0.0;
  const TrainResult r = Train(train, dev, {8, 16, 8}, cfg);
  ASSERT_GE(r.history.size(), 2u);
  EXPECT_EQ(r.history[0].epoch, 0);
  double best = r.history[0].dev_mse;
  for (const EpochStats& s : r.history) best = std::min(best, s.dev_mse);
  EXPECT_LE(best, 0.5 * r.history[0].dev_mse);
  EXPECT_DOUBLE_EQ(MeanSquaredError(r.net, dev),
                   r.history[r.best_epoch].dev_mse);
}

TEST(PredictorTrainTest, IdenticalSeedsGiveIdenticalHistory) {
  const LabeledSet train = Planted(100, 8, 3), dev = Planted(30, 8, 4);
  TrainConfig cfg;
  cfg.max_epochs = 5;
  cfg.batch_size = 16;
  cfg.seed = 42;
  const TrainResult a = Train(train, dev, kSmall, cfg);
  const TrainResult b = Train(train, dev, kSmall, cfg);
  EXPECT_EQ(a.history, b.history);
  cfg.seed = 43;
  EXPECT_NE(Train(train, dev, kSmall, cfg).history, a.history);
}

TEST(PredictorTrainTest, ZeroLearningRateLeavesParameters) {
  const LabeledSet train = Planted(100, 8, 5), dev = Planted(30, 8, 6);
  TrainConfig cfg;
  cfg.max_epochs = 4;
  cfg.patience = 10;
  cfg.lr = 0.0;
  cfg.batch_size = 16;
  const TrainResult r = Train(train, dev, kSmall, cfg);
  ASSERT_EQ(r.history.size(), 5u);
  for (const EpochStats& s : r.history) {
    EXPECT_EQ(s.train_mse, r.history[0].train_mse);
    EXPECT_EQ(s.dev_mse, r.history[0].dev_mse);
  }
  PredictorNet init = PredictorNet::XavierInit(kSmall, cfg.seed, cfg.dropout);
  auto a = init.params().Tensors();
  auto b = r.net.params().Tensors();
  for (size_t k = 0; k < a.size(); ++k) {
    for (size_t i = 0; i < a[k].size(); ++i) EXPECT_EQ(a[k][i], b[k][i]);
  }
}

TEST(PredictorTrainTest, EarlyStoppingHonorsPatience) {
  const LabeledSet train = Planted(100, 8, 7), dev = Planted(30, 8, 8);
  TrainConfig cfg;
  cfg.max_epochs = 50;
  cfg.patience = 2;
  cfg.lr = 0.0;
  const TrainResult r = Train(train, dev, kSmall, cfg);
  // No improvement after epoch 0, so training stops after `patience`
  // epochs.
  EXPECT_EQ(r.history.size(), 3u);
  EXPECT_EQ(r.best_epoch, 0);
}

TEST(PredictorTrainTest, Errors) {
  const LabeledSet train = Planted(10, 8, 9);
  LabeledSet empty;
  empty.inputs.resize(8, 0);
  try {
    Train(train, empty, kSmall, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "empty-set");
  }
  EXPECT_THROW(Train(train, train, {9, 6, 4}, {}), Error);
  TrainConfig bad;
  bad.patience = 0;
  EXPECT_THROW(Train(train, train, kSmall, bad), Error);

  TrainConfig explode;
  explode.lr = 1e300;
  try {
    Train(train, train, kSmall, explode);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumeric) << e.code() << ": " << e.what();
  }
}

TEST(PredictorTrainTest, MakeLabeledSetClampsTargets) {
  EmbeddingMatrix sp(2), tx(2);
  sp.AddRow("a", std::vector<float>{1, 2});
  tx.AddRow("a", std::vector<float>{3, 4});
  const LabeledSet set = MakeLabeledSet(sp, tx, {{"a", 1.7}});
  EXPECT_EQ(set.targets(0), 1.0);
  EXPECT_EQ(set.inputs.col(0), Eigen::Vector4d(1, 2, 3, 4));
  EXPECT_THROW(MakeLabeledSet(sp, tx, {{"b", 0.5}}), Error);
}

TEST(PredictorWeightsTest, RoundTripIsBitExact) {
  TempDir dir;
  const PredictorNet zero(kSmall);
  SaveWeights(zero, dir.path("z.json"));
  EXPECT_EQ(LoadWeights(dir.path("z.json")).PredictConcat(
                std::vector<double>(8, 0.3)),
            0.5);

  const PredictorNet net = RandomNet(kSmall, 11);
  SaveWeights(net, dir.path("w.json"));
  const PredictorNet back = LoadWeights(dir.path("w.json"), kSmall);
  Rng rng(11);
  const Eigen::MatrixXd x = RandomInputs(8, 50, rng);
  const Eigen::VectorXd a = net.PredictMany(x), b = back.PredictMany(x);
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(std::bit_cast<uint64_t>(a(i)), std::bit_cast<uint64_t>(b(i)));
  }
  SaveWeights(back, dir.path("w2.json"));
  EXPECT_EQ(ReadFileBytes(dir.path("w.json")),
            ReadFileBytes(dir.path("w2.json")));
}

std::string LoadCode(const std::string& path,
                     const std::optional<Architecture>& expected = {}) {
  try {
    LoadWeights(path, expected);
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

TEST(PredictorWeightsTest, ShapeAndMissingParameterErrors) {
  TempDir dir;
  SaveWeights(PredictorNet({16, 601, 4}), dir.path("wide.json"));
  EXPECT_EQ(LoadCode(dir.path("wide.json"), Architecture{16, 600, 4}),
            "shape-mismatch");

  SaveWeights(PredictorNet(kSmall), dir.path("w.json"));
  auto doc = nlohmann::json::parse(ReadFileBytes(dir.path("w.json")));
  auto wide = doc;
  wide["linear1"]["bias"].push_back(0.0);
  WriteFileBytes(dir.path("bias.json"), wide.dump());
  EXPECT_EQ(LoadCode(dir.path("bias.json")), "shape-mismatch");

  auto no_beta = doc;
  no_beta.erase("log_beta");
  WriteFileBytes(dir.path("nobeta.json"), no_beta.dump());
  EXPECT_EQ(LoadCode(dir.path("nobeta.json")), "missing-parameter");

  auto bad_var = doc;
  bad_var["bn0"]["running_var"][0] = -1.0;
  WriteFileBytes(dir.path("var.json"), bad_var.dump());
  EXPECT_EQ(LoadCode(dir.path("var.json")), "negative-variance");

  WriteFileBytes(dir.path("junk.json"), "{not json");
  EXPECT_EQ(LoadCode(dir.path("junk.json")), "bad-json");
}

TEST(PredictorReportTest, HandExamples) {
  const std::vector<double> refs = {0.2, 0.3, 0.5};
  const auto same = ComputePredictorReport(refs, refs);
  EXPECT_DOUBLE_EQ(*same.pearson, 1.0);
  EXPECT_DOUBLE_EQ(*same.spearman, 1.0);
  EXPECT_EQ(same.mae, 0.0);
  EXPECT_EQ(same.rmse, 0.0);

  const std::vector<double> centered = {-1.0, 0.5, 0.5};
  const std::vector<double> negated = {1.0, -0.5, -0.5};
  EXPECT_DOUBLE_EQ(*ComputePredictorReport(negated, centered).pearson, -1.0);

  const auto r = ComputePredictorReport(std::vector<double>{0.1, 0.2, 0.4},
                                        refs);
  EXPECT_NEAR(*r.pearson, 1.0, 1e-12);
  EXPECT_NEAR(r.mae, 0.1, 1e-12);
  EXPECT_NEAR(r.rmse, 0.1, 1e-12);
  EXPECT_EQ(r.n, 3u);
}

TEST(PredictorReportTest, ZeroVarianceIsUndefined) {
  const auto r = ComputePredictorReport(std::vector<double>{0.3, 0.3, 0.3},
                                        std::vector<double>{0.1, 0.2, 0.3});
  EXPECT_FALSE(r.pearson);
  EXPECT_FALSE(r.spearman);
  EXPECT_NEAR(r.mae, 0.1, 1e-12);
  EXPECT_THROW(ComputePredictorReport(std::vector<double>{0.1},
                                      std::vector<double>{0.1}),
               Error);
}

TEST(PredictorReportTest, AverageRanksShareTies) {
  EXPECT_EQ(AverageRanks(std::vector<double>{3.0, 1.0, 3.0, 2.0}),
            (std::vector<double>{3.5, 1.0, 3.5, 2.0}));
}

}  // namespace
}  // namespace consel
