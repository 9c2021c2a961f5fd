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

// JSON weights for PredictorNet. Doubles are written with 17 significant
// digits, so a save/load round trip is bit-exact.

#include <fstream>
#include <json.hpp>

#include "consel/error.h"
#include "consel/predictor.h"
#include "consel/wire_format.h"

namespace consel {
namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kFormat = "consel-wer-predictor";
constexpr int kVersion = 1;

Json VectorJson(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

// Row-major nested arrays: one inner array per output unit.
Json MatrixJson(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

class Reader {
 public:
  explicit Reader(std::string path) : path_(std::move(path)) {}

  const Json& Field(const Json& obj, const std::string& key,
                    const std::string& where) const {
    if (!obj.is_object() || !obj.contains(key)) {
      throw Error(ErrorKind::kInvalidData, "missing-parameter",
                  "weights file lacks '" + where + key + "'", path_);
    }
    return obj.at(key);
  }

  double Number(const Json& j, const std::string& what) const {
    if (!j.is_number()) {
      throw Error(ErrorKind::kInvalidData, "bad-weights",
                  "'" + what + "' is not a number", path_);
    }
    return j.get<double>();
  }

  Eigen::VectorXd Vector(const Json& obj, const std::string& key,
                         Eigen::Index expected, const std::string& where) const {
    const Json& a = Field(obj, key, where);
    if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != expected) {
      ShapeMismatch(where + key, std::to_string(expected),
                    a.is_array() ? std::to_string(a.size()) : "non-array");
    }
    Eigen::VectorXd v(expected);
    for (Eigen::Index i = 0; i < expected; ++i) {
      v(i) = Number(a[static_cast<size_t>(i)], where + key);
    }
    return v;
  }

  Eigen::MatrixXd Matrix(const Json& obj, const std::string& key,
                         Eigen::Index rows, Eigen::Index cols,
                         const std::string& where) const {
    const Json& a = Field(obj, key, where);
    if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != rows) {
      ShapeMismatch(where + key, std::to_string(rows) + " rows",
                    a.is_array() ? std::to_string(a.size()) : "non-array");
    }
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Json& row = a[static_cast<size_t>(r)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
        ShapeMismatch(where + key, std::to_string(cols) + " columns",
                      row.is_array() ? std::to_string(row.size())
                                     : "non-array");
      }
      for (Eigen::Index c = 0; c < cols; ++c) {
        m(r, c) = Number(row[static_cast<size_t>(c)], where + key);
      }
    }
    return m;
  }

  [[noreturn]] void ShapeMismatch(const std::string& what,
                                  const std::string& expected,
                                  const std::string& got) const {
    throw Error(ErrorKind::kInvalidData, "shape-mismatch",
                "'" + what + "' has " + got + ", architecture needs " +
                    expected,
                path_);
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace

void SaveWeights(const PredictorNet& net, const std::string& path) {
  const PredictorParams& p = net.params();
  const Architecture& a = net.arch();
  Json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["architecture"] = {{"input_dim", a.input_dim},
                         {"hidden", {a.hidden1, a.hidden2}}};
  doc["dropout"] = net.dropout();
  doc["bn_eps"] = kBatchNormEps;
  doc["bn0"] = {{"gamma", VectorJson(p.bn0_gamma)},
                {"shift", VectorJson(p.bn0_shift)},
                {"running_mean", VectorJson(net.bn0_mean())},
                {"running_var", VectorJson(net.bn0_var())}};
  doc["linear1"] = {{"weight", MatrixJson(p.w1)}, {"bias", VectorJson(p.b1)}};
  doc["bn1"] = {{"gamma", VectorJson(p.bn1_gamma)},
                {"shift", VectorJson(p.bn1_shift)},
                {"running_mean", VectorJson(net.bn1_mean())},
                {"running_var", VectorJson(net.bn1_var())}};
  doc["linear2"] = {{"weight", MatrixJson(p.w2)}, {"bias", VectorJson(p.b2)}};
  doc["output"] = {{"weight", VectorJson(p.w3)}, {"bias", p.b3(0)}};
  doc["log_beta"] = p.log_beta(0);
  WriteFileBytes(path, doc.dump() + "\n");
}

PredictorNet LoadWeights(const std::string& path,
                         const std::optional<Architecture>& expected) {
  const std::string bytes = ReadFileBytes(path);
  Json doc = Json::parse(bytes, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorKind::kInvalidData, "bad-json",
                "weights file is not a JSON object", path);
  }
  Reader rd(path);
  if (!doc.contains("format") || doc["format"] != kFormat) {
    throw Error(ErrorKind::kInvalidData, "bad-format",
                "not a WER predictor weights file", path);
  }
  const Json& arch_json = rd.Field(doc, "architecture", "");
  const Json& hidden = rd.Field(arch_json, "hidden", "architecture.");
  const Json& input_dim = rd.Field(arch_json, "input_dim", "architecture.");
  if (!hidden.is_array() || hidden.size() != 2 ||
      !input_dim.is_number_integer() || !hidden[0].is_number_integer() ||
      !hidden[1].is_number_integer()) {
    throw Error(ErrorKind::kInvalidData, "shape-mismatch",
                "architecture must be input_dim plus two hidden widths", path);
  }
  Architecture arch{input_dim.get<int>(), hidden[0].get<int>(),
                    hidden[1].get<int>()};
  if (expected && !(*expected == arch)) {
    throw Error(ErrorKind::kInvalidData, "shape-mismatch",
                "weights declare " + arch.ToString() + ", expected " +
                    expected->ToString(),
                path);
  }
  const double dropout =
      doc.contains("dropout") ? rd.Number(doc["dropout"], "dropout") : 0.3;
  PredictorNet net(arch, dropout);
  PredictorParams& p = net.params();

  const Json& bn0 = rd.Field(doc, "bn0", "");
  p.bn0_gamma = rd.Vector(bn0, "gamma", arch.input_dim, "bn0.");
  p.bn0_shift = rd.Vector(bn0, "shift", arch.input_dim, "bn0.");
  net.bn0_mean() = rd.Vector(bn0, "running_mean", arch.input_dim, "bn0.");
  net.bn0_var() = rd.Vector(bn0, "running_var", arch.input_dim, "bn0.");

  const Json& l1 = rd.Field(doc, "linear1", "");
  p.w1 = rd.Matrix(l1, "weight", arch.hidden1, arch.input_dim, "linear1.");
  p.b1 = rd.Vector(l1, "bias", arch.hidden1, "linear1.");

  const Json& bn1 = rd.Field(doc, "bn1", "");
  p.bn1_gamma = rd.Vector(bn1, "gamma", arch.hidden1, "bn1.");
  p.bn1_shift = rd.Vector(bn1, "shift", arch.hidden1, "bn1.");
  net.bn1_mean() = rd.Vector(bn1, "running_mean", arch.hidden1, "bn1.");
  net.bn1_var() = rd.Vector(bn1, "running_var", arch.hidden1, "bn1.");

  const Json& l2 = rd.Field(doc, "linear2", "");
  p.w2 = rd.Matrix(l2, "weight", arch.hidden2, arch.hidden1, "linear2.");
  p.b2 = rd.Vector(l2, "bias", arch.hidden2, "linear2.");

  const Json& out = rd.Field(doc, "output", "");
  p.w3 = rd.Vector(out, "weight", arch.hidden2, "output.");
  p.b3(0) = rd.Number(rd.Field(out, "bias", "output."), "output.bias");
  p.log_beta(0) = rd.Number(rd.Field(doc, "log_beta", ""), "log_beta");

  try {
    net.Validate();
  } catch (const Error& e) {
    throw Error(e.kind(), e.code(), e.what(), path);
  }
  return net;
}

}  // namespace consel
