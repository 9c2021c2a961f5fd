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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "consel/error.h"
#include "consel/rng.h"

namespace consel {
namespace {

using Eigen::ArrayXXd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double Sigmoid(double u) {
  if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

double BoundedOutput(double z, double beta) {
  return std::clamp(kPredMin + (kPredMax - kPredMin) * Sigmoid(z / beta),
                    kPredMin, kPredMax);
}

MatrixXd Relu(const MatrixXd& z) { return z.cwiseMax(0.0); }

// Per-row batch statistics over columns. Biased variance.
struct BatchNormCache {
  VectorXd mean, inv_std;
  MatrixXd normalized;
};

MatrixXd BatchNormTrain(const MatrixXd& x, const VectorXd& gamma,
                        const VectorXd& shift, BatchNormCache* cache) {
  const double n = static_cast<double>(x.cols());
  cache->mean = x.rowwise().sum() / n;
  MatrixXd centered = x.colwise() - cache->mean;
  VectorXd var = centered.array().square().rowwise().sum() / n;
  cache->inv_std = (var.array() + kBatchNormEps).rsqrt();
  cache->normalized = centered.array().colwise() * cache->inv_std.array();
  return (cache->normalized.array().colwise() * gamma.array()).colwise() +
         shift.array();
}

MatrixXd BatchNormEval(const MatrixXd& x, const VectorXd& gamma,
                       const VectorXd& shift, const VectorXd& mean,
                       const VectorXd& var) {
  VectorXd scale = gamma.array() * (var.array() + kBatchNormEps).rsqrt();
  return ((x.colwise() - mean).array().colwise() * scale.array()).colwise() +
         shift.array();
}

// Gradient of batch-norm input given the output gradient; accumulates
// gamma/shift gradients.
MatrixXd BatchNormBackward(const MatrixXd& dy, const BatchNormCache& cache,
                           const VectorXd& gamma, VectorXd* dgamma,
                           VectorXd* dshift) {
  const double n = static_cast<double>(dy.cols());
  *dgamma = (dy.array() * cache.normalized.array()).rowwise().sum();
  *dshift = dy.rowwise().sum();
  ArrayXXd dxhat = dy.array().colwise() * gamma.array();
  VectorXd sum_dxhat = dxhat.rowwise().sum();
  VectorXd sum_dxhat_xhat =
      (dxhat * cache.normalized.array()).rowwise().sum();
  ArrayXXd dx = (n * dxhat).colwise() - sum_dxhat.array();
  dx -= cache.normalized.array().colwise() * sum_dxhat_xhat.array();
  return (dx.colwise() * (cache.inv_std.array() / n)).matrix();
}

// Inverted-dropout mask: 0 or 1/(1-p).
MatrixXd DropoutMask(Eigen::Index rows, Eigen::Index cols, double p,
                     Rng* rng) {
  MatrixXd mask = MatrixXd::Constant(rows, cols, 1.0);
  if (rng == nullptr || p <= 0.0) return mask;
  const double keep = 1.0 / (1.0 - p);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      mask(r, c) = rng->Uniform() < p ? 0.0 : keep;
    }
  }
  return mask;
}

struct TrainCache {
  BatchNormCache bn0, bn1;
  MatrixXd y0, z1, mask1, h1, y1, z2, mask2, h2;
  Eigen::RowVectorXd z3, sig;
};

Eigen::RowVectorXd TrainForward(const PredictorNet& net, const MatrixXd& x,
                                Rng* rng, TrainCache* c) {
  const PredictorParams& p = net.params();
  c->y0 = BatchNormTrain(x, p.bn0_gamma, p.bn0_shift, &c->bn0);
  c->z1 = (p.w1 * c->y0).colwise() + p.b1;
  c->mask1 = DropoutMask(c->z1.rows(), c->z1.cols(), net.dropout(), rng);
  c->h1 = Relu(c->z1).cwiseProduct(c->mask1);
  c->y1 = BatchNormTrain(c->h1, p.bn1_gamma, p.bn1_shift, &c->bn1);
  c->z2 = (p.w2 * c->y1).colwise() + p.b2;
  c->mask2 = DropoutMask(c->z2.rows(), c->z2.cols(), net.dropout(), rng);
  c->h2 = Relu(c->z2).cwiseProduct(c->mask2);
  c->z3 = (p.w3.transpose() * c->h2).array() + p.b3(0);
  const double beta = net.beta();
  c->sig = c->z3.unaryExpr([beta](double z) { return Sigmoid(z / beta); });
  return c->z3.unaryExpr([beta](double z) { return BoundedOutput(z, beta); });
}

void RequireFinite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      ThrowInvalid("non-finite", std::string("non-finite value in ") + what);
    }
  }
}

double Mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::optional<double> Pearson(std::span<const double> a,
                              std::span<const double> b) {
  const double ma = Mean(a), mb = Mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

std::string Architecture::ToString() const {
  return std::to_string(input_dim) + "->" + std::to_string(hidden1) + "->" +
         std::to_string(hidden2) + "->1";
}

PredictorParams PredictorParams::Zeros(const Architecture& a) {
  PredictorParams p;
  p.bn0_gamma = VectorXd::Zero(a.input_dim);
  p.bn0_shift = VectorXd::Zero(a.input_dim);
  p.w1 = MatrixXd::Zero(a.hidden1, a.input_dim);
  p.b1 = VectorXd::Zero(a.hidden1);
  p.bn1_gamma = VectorXd::Zero(a.hidden1);
  p.bn1_shift = VectorXd::Zero(a.hidden1);
  p.w2 = MatrixXd::Zero(a.hidden2, a.hidden1);
  p.b2 = VectorXd::Zero(a.hidden2);
  p.w3 = VectorXd::Zero(a.hidden2);
  p.b3 = VectorXd::Zero(1);
  p.log_beta = VectorXd::Zero(1);
  return p;
}

std::vector<std::span<double>> PredictorParams::Tensors() {
  auto v = [](auto& t) { return std::span<double>(t.data(), t.size()); };
  return {v(bn0_gamma), v(bn0_shift), v(w1), v(b1),  v(bn1_gamma), v(bn1_shift),
          v(w2),        v(b2),        v(w3), v(b3), v(log_beta)};
}

std::vector<std::span<const double>> PredictorParams::Tensors() const {
  auto v = [](const auto& t) {
    return std::span<const double>(t.data(), t.size());
  };
  return {v(bn0_gamma), v(bn0_shift), v(w1), v(b1),  v(bn1_gamma), v(bn1_shift),
          v(w2),        v(b2),        v(w3), v(b3), v(log_beta)};
}

size_t PredictorParams::size() const {
  size_t n = 0;
  for (auto t : Tensors()) n += t.size();
  return n;
}

PredictorNet::PredictorNet(const Architecture& arch, double dropout)
    : arch_(arch), dropout_(dropout), params_(PredictorParams::Zeros(arch)) {
  if (arch.input_dim <= 0 || arch.hidden1 <= 0 || arch.hidden2 <= 0) {
    ThrowInvalid("shape-mismatch", "layer widths must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    ThrowInvalid("bad-config", "dropout must be in [0, 1)");
  }
  params_.bn0_gamma.setOnes();
  params_.bn1_gamma.setOnes();
  bn0_mean_ = VectorXd::Zero(arch.input_dim);
  bn0_var_ = VectorXd::Ones(arch.input_dim);
  bn1_mean_ = VectorXd::Zero(arch.hidden1);
  bn1_var_ = VectorXd::Ones(arch.hidden1);
}

PredictorNet PredictorNet::XavierInit(const Architecture& arch, uint64_t seed,
                                      double dropout) {
  PredictorNet net(arch, dropout);
  Rng rng(seed, "xavier");
  auto fill = [&rng](auto& w, int fan_in, int fan_out) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      w.data()[i] = (2.0 * rng.Uniform() - 1.0) * a;
    }
  };
  fill(net.params_.w1, arch.input_dim, arch.hidden1);
  fill(net.params_.w2, arch.hidden1, arch.hidden2);
  fill(net.params_.w3, arch.hidden2, 1);
  return net;
}

double PredictorNet::beta() const { return std::exp(params_.log_beta(0)); }

double PredictorNet::PredictConcat(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != arch_.input_dim) {
    ThrowInvalid("dim-mismatch", "predictor input has " +
                                     std::to_string(input.size()) +
                                     " values, expected " +
                                     std::to_string(arch_.input_dim));
  }
  RequireFinite(input, "predictor input");
  const PredictorParams& p = params_;
  Eigen::Map<const VectorXd> x(input.data(), arch_.input_dim);
  VectorXd y0 = (x - bn0_mean_).cwiseProduct(
                    ((bn0_var_.array() + kBatchNormEps).rsqrt() *
                     p.bn0_gamma.array())
                        .matrix()) +
                p.bn0_shift;
  VectorXd h1 = (p.w1 * y0 + p.b1).cwiseMax(0.0);
  VectorXd y1 = (h1 - bn1_mean_).cwiseProduct(
                    ((bn1_var_.array() + kBatchNormEps).rsqrt() *
                     p.bn1_gamma.array())
                        .matrix()) +
                p.bn1_shift;
  VectorXd h2 = (p.w2 * y1 + p.b2).cwiseMax(0.0);
  const double z = p.w3.dot(h2) + p.b3(0);
  return BoundedOutput(z, beta());
}

double PredictorNet::Predict(std::span<const double> speech,
                             std::span<const double> text) const {
  if (speech.size() != text.size() ||
      static_cast<int>(speech.size() + text.size()) != arch_.input_dim) {
    ThrowInvalid("dim-mismatch",
                 "speech/text embeddings of width " +
                     std::to_string(speech.size()) + "/" +
                     std::to_string(text.size()) + " do not match input " +
                     std::to_string(arch_.input_dim));
  }
  std::vector<double> x(speech.begin(), speech.end());
  x.insert(x.end(), text.begin(), text.end());
  return PredictConcat(x);
}

VectorXd PredictorNet::PredictMany(const MatrixXd& inputs,
                                   kernels::Exec exec) const {
  const int64_t n = inputs.cols();
  VectorXd out(n);
  auto one = [&](int64_t i) {
    out(i) = PredictConcat(
        std::span<const double>(inputs.col(i).data(), inputs.rows()));
  };
  if (exec == kernels::Exec::kParallel) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) one(i);
  } else {
    for (int64_t i = 0; i < n; ++i) one(i);
  }
  return out;
}

void PredictorNet::RecomputeBatchNormStats(const MatrixXd& inputs) {
  const double n = static_cast<double>(inputs.cols());
  bn0_mean_ = inputs.rowwise().sum() / n;
  bn0_var_ = (inputs.colwise() - bn0_mean_).array().square().rowwise().sum() / n;
  MatrixXd y0 = BatchNormEval(inputs, params_.bn0_gamma, params_.bn0_shift,
                              bn0_mean_, bn0_var_);
  MatrixXd h1 = Relu((params_.w1 * y0).colwise() + params_.b1);
  bn1_mean_ = h1.rowwise().sum() / n;
  bn1_var_ = (h1.colwise() - bn1_mean_).array().square().rowwise().sum() / n;
}

void PredictorNet::Validate() const {
  for (auto t : params_.Tensors()) RequireFinite(t, "predictor parameters");
  for (const VectorXd* v : {&bn0_mean_, &bn0_var_, &bn1_mean_, &bn1_var_}) {
    RequireFinite(std::span<const double>(v->data(), v->size()),
                  "batch-norm statistics");
  }
  if ((bn0_var_.array() < 0).any() || (bn1_var_.array() < 0).any()) {
    ThrowInvalid("negative-variance", "negative batch-norm running variance");
  }
}

VectorXd ForwardBatch(const PredictorNet& net, const MatrixXd& inputs,
                      ForwardMode mode, Rng* dropout_rng) {
  if (inputs.rows() != net.arch().input_dim) {
    ThrowInvalid("dim-mismatch", "batch rows do not match predictor input");
  }
  if (mode == ForwardMode::kEval) {
    return net.PredictMany(inputs, kernels::Exec::kSerial);
  }
  if (inputs.cols() < 2) {
    ThrowInvalid("batch-too-small", "train-mode batch needs >= 2 samples");
  }
  TrainCache cache;
  return TrainForward(net, inputs, dropout_rng, &cache).transpose();
}

double LossAndGradient(const PredictorNet& net, const MatrixXd& inputs,
                       const VectorXd& targets, Rng* dropout_rng,
                       PredictorParams* grad) {
  const Eigen::Index n = inputs.cols();
  if (n < 2) {
    ThrowInvalid("batch-too-small",
                 "gradient needs a batch of at least 2 samples");
  }
  if (targets.size() != n || inputs.rows() != net.arch().input_dim) {
    ThrowInvalid("dim-mismatch", "batch shape does not match predictor");
  }
  const PredictorParams& p = net.params();
  TrainCache c;
  Eigen::RowVectorXd out = TrainForward(net, inputs, dropout_rng, &c);
  Eigen::RowVectorXd err = out - targets.transpose();
  const double loss = err.squaredNorm() / static_cast<double>(n);
  if (grad == nullptr) return loss;

  const double beta = net.beta();
  // d loss / d z3 through the bounded sigmoid of z3 / beta.
  Eigen::RowVectorXd du = (2.0 / n) * (kPredMax - kPredMin) *
                          err.cwiseProduct(c.sig.cwiseProduct(
                              (1.0 - c.sig.array()).matrix()));
  Eigen::RowVectorXd dz3 = du / beta;
  grad->log_beta = VectorXd::Constant(1, -(du.cwiseProduct(c.z3)).sum() / beta);
  grad->w3 = c.h2 * dz3.transpose();
  grad->b3 = VectorXd::Constant(1, dz3.sum());

  MatrixXd dz2 = (p.w3 * dz3).cwiseProduct(c.mask2);
  dz2 = (c.z2.array() > 0.0).select(dz2, 0.0);
  grad->w2 = dz2 * c.y1.transpose();
  grad->b2 = dz2.rowwise().sum();
  MatrixXd dh1 = BatchNormBackward(p.w2.transpose() * dz2, c.bn1, p.bn1_gamma,
                                   &grad->bn1_gamma, &grad->bn1_shift);

  MatrixXd dz1 = dh1.cwiseProduct(c.mask1);
  dz1 = (c.z1.array() > 0.0).select(dz1, 0.0);
  grad->w1 = dz1 * c.y0.transpose();
  grad->b1 = dz1.rowwise().sum();
  BatchNormBackward(p.w1.transpose() * dz1, c.bn0, p.bn0_gamma,
                    &grad->bn0_gamma, &grad->bn0_shift);
  return loss;
}

LabeledSet MakeLabeledSet(
    const EmbeddingMatrix& speech, const EmbeddingMatrix& text,
    const std::vector<std::pair<std::string, double>>& targets) {
  if (speech.dim() != text.dim()) {
    ThrowInvalid("dim-mismatch", "speech and text embeddings differ in dim");
  }
  const Eigen::Index d = speech.dim();
  LabeledSet set;
  set.inputs.resize(2 * d, static_cast<Eigen::Index>(targets.size()));
  set.targets.resize(static_cast<Eigen::Index>(targets.size()));
  for (size_t i = 0; i < targets.size(); ++i) {
    const auto& [id, target] = targets[i];
    if (!std::isfinite(target)) {
      ThrowInvalid("non-finite", "non-finite target for '" + id + "'");
    }
    std::span<const float> s = speech.row(speech.RowOf(id, "speech"));
    std::span<const float> t = text.row(text.RowOf(id, "text"));
    for (Eigen::Index k = 0; k < d; ++k) {
      set.inputs(k, i) = s[k];
      set.inputs(d + k, i) = t[k];
    }
    set.targets(i) = std::clamp(target, 0.0, 1.0);
    set.ids.push_back(id);
  }
  return set;
}

void TrainConfig::Validate() const {
  if (max_epochs < 1) ThrowInvalid("bad-config", "max_epochs must be >= 1");
  if (patience < 1) ThrowInvalid("bad-config", "patience must be >= 1");
  if (batch_size < 2) ThrowInvalid("bad-config", "batch_size must be >= 2");
  if (!(lr >= 0.0) || !(weight_decay >= 0.0)) {
    ThrowInvalid("bad-config", "lr and weight_decay must be >= 0");
  }
}

double MeanSquaredError(const PredictorNet& net, const LabeledSet& data) {
  VectorXd pred = net.PredictMany(data.inputs);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double e = pred(i) - data.targets(i);
    sum += e * e;
  }
  return sum / static_cast<double>(pred.size());
}

TrainResult Train(const LabeledSet& train, const LabeledSet& dev,
                  const Architecture& arch, const TrainConfig& cfg) {
  cfg.Validate();
  if (train.size() < 2 || dev.size() == 0) {
    ThrowInvalid("empty-set",
                 "training needs >= 2 train pairs and >= 1 dev pair");
  }
  if (train.inputs.rows() != arch.input_dim ||
      dev.inputs.rows() != arch.input_dim) {
    ThrowInvalid("dim-mismatch", "labeled pairs do not match architecture " +
                                     arch.ToString());
  }

  PredictorNet net = PredictorNet::XavierInit(arch, cfg.seed, cfg.dropout);
  net.RecomputeBatchNormStats(train.inputs);

  TrainResult result{net, {}, 0};
  auto record = [&](int epoch, double lr) {
    EpochStats s{epoch, lr, MeanSquaredError(net, train),
                 MeanSquaredError(net, dev)};
    if (!std::isfinite(s.train_mse) || !std::isfinite(s.dev_mse)) {
      throw Error(ErrorKind::kNumeric, "non-finite-loss",
                  "non-finite MSE after epoch " + std::to_string(epoch));
    }
    result.history.push_back(s);
    return s.dev_mse;
  };
  double best_dev = record(0, cfg.lr);

  std::vector<PredictorParams> moments = {PredictorParams::Zeros(arch),
                                          PredictorParams::Zeros(arch)};
  PredictorParams grad = PredictorParams::Zeros(arch);
  Rng shuffle_rng(cfg.seed, "shuffle");
  Rng dropout_rng(cfg.seed, "dropout");
  std::vector<Eigen::Index> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  int64_t step = 0;
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double lr =
        0.5 * cfg.lr *
        (1.0 + std::cos(std::numbers::pi * (epoch - 1) / cfg.max_epochs));
    shuffle_rng.Shuffle(order);
    for (size_t begin = 0; begin + 2 <= order.size();
         begin += cfg.batch_size) {
      const size_t end = std::min(order.size(), begin + cfg.batch_size);
      if (end - begin < 2) break;
      MatrixXd x(arch.input_dim, static_cast<Eigen::Index>(end - begin));
      VectorXd t(static_cast<Eigen::Index>(end - begin));
      for (size_t i = begin; i < end; ++i) {
        x.col(i - begin) = train.inputs.col(order[i]);
        t(i - begin) = train.targets(order[i]);
      }
      const double loss = LossAndGradient(net, x, t, &dropout_rng, &grad);
      if (!std::isfinite(loss)) {
        throw Error(ErrorKind::kNumeric, "non-finite-loss",
                    "non-finite training loss in epoch " +
                        std::to_string(epoch));
      }
      ++step;
      const double bc1 = 1.0 - std::pow(cfg.adam_beta1, step);
      const double bc2 = 1.0 - std::pow(cfg.adam_beta2, step);
      auto params = net.params().Tensors();
      auto grads = grad.Tensors();
      auto m1 = moments[0].Tensors();
      auto m2 = moments[1].Tensors();
      for (size_t k = 0; k < params.size(); ++k) {
        for (size_t i = 0; i < params[k].size(); ++i) {
          const double g = grads[k][i];
          m1[k][i] = cfg.adam_beta1 * m1[k][i] + (1.0 - cfg.adam_beta1) * g;
          m2[k][i] = cfg.adam_beta2 * m2[k][i] + (1.0 - cfg.adam_beta2) * g * g;
          const double update = (m1[k][i] / bc1) /
                                (std::sqrt(m2[k][i] / bc2) + cfg.adam_eps);
          params[k][i] -= lr * (update + cfg.weight_decay * params[k][i]);
        }
      }
    }
    net.RecomputeBatchNormStats(train.inputs);
    const double dev_mse = record(epoch, lr);
    if (dev_mse < best_dev) {
      best_dev = dev_mse;
      result.net = net;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

PredictorReport ComputePredictorReport(std::span<const double> preds,
                                       std::span<const double> refs) {
  if (preds.size() != refs.size() || preds.size() < 2) {
    ThrowInvalid("bad-length",
                 "report needs equal-length vectors with >= 2 entries");
  }
  PredictorReport r;
  r.n = preds.size();
  double abs_sum = 0.0, sq_sum = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) {
    const double e = preds[i] - refs[i];
    abs_sum += std::fabs(e);
    sq_sum += e * e;
  }
  r.mae = abs_sum / static_cast<double>(r.n);
  r.rmse = std::sqrt(sq_sum / static_cast<double>(r.n));
  r.pearson = Pearson(preds, refs);
  const std::vector<double> rp = AverageRanks(preds);
  const std::vector<double> rr = AverageRanks(refs);
  r.spearman = Pearson(rp, rr);
  return r;
}

std::vector<double> AverageRanks(std::span<const double> values) {
  std::vector<size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  size_t i = 0;
  while (i < idx.size()) {
    size_t j = i;
    while (j + 1 < idx.size() && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double avg = (static_cast<double>(i + j) / 2.0) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace consel
