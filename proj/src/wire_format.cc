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

#include "consel/wire_format.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "consel/error.h"
#include "consel/perturbation.h"
#include "json.hpp"

namespace consel {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr char kEmbMagic[4] = {'E', 'M', 'B', '1'};

std::ifstream OpenForRead(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) {
    throw Error(ErrorKind::kMissingInput, "missing-input",
                "cannot open '" + path + "'", path);
  }
  return in;
}

std::ofstream OpenForWrite(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc
                                 : std::ios::out | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::kMissingInput, "io-failure",
                "cannot write '" + path + "'", path);
  }
  return out;
}

void CheckWritten(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) {
    throw Error(ErrorKind::kMissingInput, "io-failure",
                "write failed for '" + path + "'", path);
  }
}

// Calls `fn(object, line_number)` for every non-blank line.
template <typename Fn>
void ForEachJsonLine(const std::string& path, Fn&& fn) {
  std::ifstream in = OpenForRead(path);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      ThrowInvalid("malformed-json",
                   path + ":" + std::to_string(line_no) +
                       ": malformed JSON: " + e.what(),
                   path);
    }
    if (!obj.is_object()) {
      ThrowInvalid("malformed-json",
                   path + ":" + std::to_string(line_no) +
                       ": expected a JSON object",
                   path);
    }
    try {
      fn(obj, line_no);
    } catch (const nlohmann::json::exception& e) {
      ThrowInvalid("malformed-json",
                   path + ":" + std::to_string(line_no) + ": " + e.what(),
                   path);
    }
  }
}

std::string Where(const std::string& path, size_t line_no) {
  return path + ":" + std::to_string(line_no) + ": ";
}

std::string RequireString(const nlohmann::json& obj, const char* key,
                          const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    ThrowInvalid("missing-field",
                 where + "missing string field '" + key + "'");
  }
  return it->get<std::string>();
}

double RequireNumber(const nlohmann::json& obj, const char* key,
                     const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    ThrowInvalid("missing-field",
                 where + "missing numeric field '" + key + "'");
  }
  double v = it->get<double>();
  if (!std::isfinite(v)) {
    ThrowInvalid("non-finite", where + "non-finite '" + key + "'");
  }
  return v;
}

template <typename T>
void WriteLines(const std::vector<T>& rows, const std::string& path,
                ordered_json (*to_json)(const T&)) {
  std::ofstream out = OpenForWrite(path);
  for (const T& row : rows) out << to_json(row).dump() << '\n';
  CheckWritten(out, path);
}

// Little-endian scalar encoding independent of host byte order.
template <typename UInt>
void PutLe(std::string& buf, UInt v) {
  for (size_t i = 0; i < sizeof(UInt); ++i) {
    buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
}

template <typename UInt>
UInt GetLe(const unsigned char* p) {
  UInt v = 0;
  for (size_t i = 0; i < sizeof(UInt); ++i) {
    v |= static_cast<UInt>(p[i]) << (8 * i);
  }
  return v;
}

}  // namespace

std::vector<UtteranceRecord> ReadManifest(const std::string& path) {
  std::vector<UtteranceRecord> out;
  std::set<std::string> seen;
  ForEachJsonLine(path, [&](const nlohmann::json& obj, size_t line_no) {
    const std::string where = Where(path, line_no);
    UtteranceRecord rec;
    rec.utt_id = RequireString(obj, "utt_id", where);
    if (rec.utt_id.empty()) ThrowInvalid("empty-id", where + "empty utt_id");
    rec.duration_sec = RequireNumber(obj, "duration_sec", where);
    if (rec.duration_sec < 0) {
      ThrowInvalid("negative-duration",
                   where + "negative duration for '" + rec.utt_id + "'", path);
    }
    if (auto it = obj.find("audio_path"); it != obj.end() && it->is_string()) {
      rec.audio_path = it->get<std::string>();
    }
    if (auto it = obj.find("ref_text"); it != obj.end() && it->is_string()) {
      rec.ref_text = it->get<std::string>();
    }
    if (auto it = obj.find("split"); it != obj.end() && it->is_string()) {
      rec.split = ParseSplit(it->get<std::string>());
    }
    if (!seen.insert(rec.utt_id).second) {
      ThrowInvalid("duplicate-id",
                   where + "duplicate utt_id '" + rec.utt_id + "'", path);
    }
    out.push_back(std::move(rec));
  });
  return out;
}

void WriteManifest(const std::vector<UtteranceRecord>& records,
                   const std::string& path) {
  WriteLines<UtteranceRecord>(records, path, [](const UtteranceRecord& r) {
    ordered_json j;
    j["utt_id"] = r.utt_id;
    j["duration_sec"] = r.duration_sec;
    if (r.audio_path) j["audio_path"] = *r.audio_path;
    if (r.ref_text) j["ref_text"] = *r.ref_text;
    if (r.split) j["split"] = SplitName(*r.split);
    return j;
  });
}

std::vector<HypothesisRecord> ReadHypotheses(const std::string& path,
                                             bool lenient) {
  std::vector<HypothesisRecord> out;
  std::set<std::pair<std::string, std::string>> seen;
  std::map<std::string, int> baselines;
  ForEachJsonLine(path, [&](const nlohmann::json& obj, size_t line_no) {
    const std::string where = Where(path, line_no);
    HypothesisRecord rec;
    rec.utt_id = RequireString(obj, "utt_id", where);
    rec.hyp_id = RequireString(obj, "hyp_id", where);
    rec.text = RequireString(obj, "text", where);
    PerturbationDescriptor d;
    d.alpha = RequireNumber(obj, "alpha", where);
    double pitch = RequireNumber(obj, "pitch_semitones", where);
    if (pitch != std::floor(pitch)) {
      ThrowInvalid("invalid-perturbation", where + "non-integer pitch");
    }
    d.pitch_semitones = static_cast<int>(pitch);
    d.atempo = RequireNumber(obj, "atempo", where);
    try {
      rec.perturbation = CanonicalizeDescriptor(d, lenient);
    } catch (const Error& e) {
      ThrowInvalid(e.code(), where + e.what(), path);
    }
    if (auto it = obj.find("ppl"); it != obj.end() && !it->is_null()) {
      double ppl = RequireNumber(obj, "ppl", where);
      if (ppl < 0) ThrowInvalid("negative-ppl", where + "negative ppl");
      rec.ppl = ppl;
    }
    if (!seen.emplace(rec.utt_id, rec.hyp_id).second) {
      ThrowInvalid("duplicate-id",
                   where + "duplicate hypothesis (" + rec.utt_id + ", " +
                       rec.hyp_id + ")",
                   path);
    }
    int& count = baselines[rec.utt_id];
    if (rec.perturbation.IsBaseline() && ++count > 1) {
      ThrowInvalid("duplicate-baseline",
                   where + "second baseline hypothesis for '" + rec.utt_id +
                       "'",
                   path);
    }
    out.push_back(std::move(rec));
  });
  for (const auto& [utt, count] : baselines) {
    if (count == 0) {
      ThrowInvalid("missing-baseline",
                   path + ": utterance '" + utt + "' has no baseline", path);
    }
  }
  return out;
}

void WriteHypotheses(const std::vector<HypothesisRecord>& records,
                     const std::string& path) {
  WriteLines<HypothesisRecord>(records, path, [](const HypothesisRecord& r) {
    ordered_json j;
    j["utt_id"] = r.utt_id;
    j["hyp_id"] = r.hyp_id;
    j["text"] = r.text;
    j["alpha"] = r.perturbation.alpha;
    j["pitch_semitones"] = r.perturbation.pitch_semitones;
    j["atempo"] = r.perturbation.atempo;
    if (r.ppl) j["ppl"] = *r.ppl;
    return j;
  });
}

std::vector<QualityVector> ReadScores(const std::string& path) {
  std::vector<QualityVector> out;
  std::set<std::pair<std::string, std::string>> seen;
  ForEachJsonLine(path, [&](const nlohmann::json& obj, size_t line_no) {
    const std::string where = Where(path, line_no);
    QualityVector q;
    q.utt_id = RequireString(obj, "utt_id", where);
    q.hyp_id = RequireString(obj, "hyp_id", where);
    q.pred_wer = RequireNumber(obj, "pred_wer", where);
    q.cos = RequireNumber(obj, "cos", where);
    q.euc = RequireNumber(obj, "euc", where);
    if (q.pred_wer < 0.01 || q.pred_wer > 0.99) {
      ThrowInvalid("out-of-range", where + "pred_wer outside [0.01, 0.99]");
    }
    if (q.euc < 0) ThrowInvalid("out-of-range", where + "negative euc");
    if (std::fabs(q.cos) > 1.0 + 1e-6) {
      ThrowInvalid("out-of-range", where + "cos outside [-1, 1]");
    }
    if (!seen.emplace(q.utt_id, q.hyp_id).second) {
      ThrowInvalid("duplicate-id", where + "duplicate score row");
    }
    out.push_back(std::move(q));
  });
  return out;
}

void WriteScores(const std::vector<QualityVector>& scores,
                 const std::string& path) {
  WriteLines<QualityVector>(scores, path, [](const QualityVector& q) {
    ordered_json j;
    j["utt_id"] = q.utt_id;
    j["hyp_id"] = q.hyp_id;
    j["pred_wer"] = q.pred_wer;
    j["cos"] = q.cos;
    j["euc"] = q.euc;
    return j;
  });
}

SelectionResult ReadSelection(const std::string& path) {
  SelectionResult result;
  bool first = true;
  ForEachJsonLine(path, [&](const nlohmann::json& obj, size_t line_no) {
    const std::string where = Where(path, line_no);
    SelectionEntry e;
    e.utt_id = RequireString(obj, "utt_id", where);
    e.hyp_id = RequireString(obj, "hyp_id", where);
    e.text = RequireString(obj, "text", where);
    e.weight = static_cast<int>(RequireNumber(obj, "weight", where));
    if (e.weight < 1) ThrowInvalid("bad-weight", where + "weight must be >= 1");
    if (first) {
      std::string rule = RequireString(obj, "rule", where);
      bool known = false;
      for (int r = 0; r <= static_cast<int>(Rule::kWerBinary); ++r) {
        if (rule == RuleName(static_cast<Rule>(r))) {
          result.rule = static_cast<Rule>(r);
          known = true;
        }
      }
      if (!known) ThrowInvalid("bad-rule", where + "unknown rule " + rule);
      if (auto it = obj.find("p"); it != obj.end() && it->is_number()) {
        result.p = it->get<int>();
      }
      if (auto it = obj.find("p2"); it != obj.end() && it->is_number()) {
        result.p2 = it->get<int>();
      }
      if (auto it = obj.find("thresholds"); it != obj.end()) {
        for (auto& [k, v] : it->items()) result.thresholds[k] = v.get<double>();
      }
      first = false;
    }
    result.entries.push_back(std::move(e));
  });
  return result;
}

void WriteSelection(const SelectionResult& result, const std::string& path) {
  std::ofstream out = OpenForWrite(path);
  ordered_json thresholds = ordered_json::object();
  for (const auto& [k, v] : result.thresholds) thresholds[k] = v;
  for (const SelectionEntry& e : result.entries) {
    ordered_json j;
    j["utt_id"] = e.utt_id;
    j["hyp_id"] = e.hyp_id;
    j["text"] = e.text;
    j["weight"] = e.weight;
    j["rule"] = RuleName(result.rule);
    j["p"] = result.p ? ordered_json(*result.p) : ordered_json(nullptr);
    if (result.p2) j["p2"] = *result.p2;
    j["thresholds"] = thresholds;
    out << j.dump() << '\n';
  }
  CheckWritten(out, path);
}

std::vector<IdValue> ReadTargets(const std::string& path) {
  std::vector<IdValue> out;
  std::set<std::string> seen;
  ForEachJsonLine(path, [&](const nlohmann::json& obj, size_t line_no) {
    const std::string where = Where(path, line_no);
    IdValue row{RequireString(obj, "id", where),
                RequireNumber(obj, "target_wer", where)};
    if (!seen.insert(row.id).second) {
      ThrowInvalid("duplicate-id", where + "duplicate id '" + row.id + "'");
    }
    out.push_back(std::move(row));
  });
  return out;
}

void WriteTargets(const std::vector<IdValue>& targets,
                  const std::string& path) {
  WriteLines<IdValue>(targets, path, [](const IdValue& r) {
    ordered_json j;
    j["id"] = r.id;
    j["target_wer"] = r.value;
    return j;
  });
}

std::vector<TruthRow> ReadTruth(const std::string& path) {
  std::vector<TruthRow> out;
  ForEachJsonLine(path, [&](const nlohmann::json& obj, size_t line_no) {
    const std::string where = Where(path, line_no);
    out.push_back({RequireString(obj, "utt_id", where),
                   RequireString(obj, "hyp_id", where),
                   RequireNumber(obj, "true_wer", where)});
  });
  return out;
}

void WriteTruth(const std::vector<TruthRow>& rows, const std::string& path) {
  WriteLines<TruthRow>(rows, path, [](const TruthRow& r) {
    ordered_json j;
    j["utt_id"] = r.utt_id;
    j["hyp_id"] = r.hyp_id;
    j["true_wer"] = r.true_wer;
    return j;
  });
}

std::vector<std::string> ReadIdList(const std::string& path) {
  std::ifstream in = OpenForRead(path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    ids.push_back(line);
  }
  return ids;
}

void WriteIdList(const std::vector<std::string>& ids, const std::string& path,
                 const std::string& header) {
  std::ofstream out = OpenForWrite(path);
  if (!header.empty()) out << "# " << header << '\n';
  for (const std::string& id : ids) out << id << '\n';
  CheckWritten(out, path);
}

EmbeddingMatrix ReadEmbeddings(const std::string& path) {
  const std::string bytes = ReadFileBytes(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const size_t size = bytes.size();
  auto truncated = [&]() {
    ThrowInvalid("truncated", "truncated EMB1 file '" + path + "'", path);
  };
  if (size < 4 || std::memcmp(p, kEmbMagic, 4) != 0) {
    ThrowInvalid("bad-magic", "'" + path + "' is not an EMB1 file", path);
  }
  if (size < 16) truncated();
  const uint32_t dim = GetLe<uint32_t>(p + 4);
  const uint64_t rows = GetLe<uint64_t>(p + 8);
  if (dim == 0) ThrowInvalid("invalid-dim", "EMB1 dim is 0 in '" + path + "'");
  EmbeddingMatrix m(dim);
  size_t off = 16;
  std::vector<float> values(dim);
  for (uint64_t r = 0; r < rows; ++r) {
    if (off + 2 > size) truncated();
    const uint16_t len = GetLe<uint16_t>(p + off);
    off += 2;
    if (off + len + size_t{4} * dim > size) truncated();
    std::string id(reinterpret_cast<const char*>(p + off), len);
    off += len;
    for (uint32_t k = 0; k < dim; ++k, off += 4) {
      values[k] = std::bit_cast<float>(GetLe<uint32_t>(p + off));
    }
    try {
      m.AddRow(std::move(id), std::span<const float>(values));
    } catch (const Error& e) {
      ThrowInvalid(e.code(), path + ": " + e.what(), path);
    }
  }
  if (off != size) {
    ThrowInvalid("trailing-bytes", "trailing bytes after EMB1 rows in '" +
                                       path + "'",
                 path);
  }
  return m;
}

void WriteEmbeddings(const EmbeddingMatrix& matrix, const std::string& path) {
  if (matrix.dim() == 0) {
    ThrowInvalid("invalid-dim", "cannot write EMB1 with dim 0", path);
  }
  std::string buf(kEmbMagic, 4);
  PutLe<uint32_t>(buf, matrix.dim());
  PutLe<uint64_t>(buf, matrix.rows());
  for (size_t r = 0; r < matrix.rows(); ++r) {
    const std::string& id = matrix.id(r);
    if (id.size() > 0xFFFF) {
      ThrowInvalid("id-too-long", "embedding id longer than 65535 bytes");
    }
    PutLe<uint16_t>(buf, static_cast<uint16_t>(id.size()));
    buf += id;
    for (float v : matrix.row(r)) PutLe<uint32_t>(buf, std::bit_cast<uint32_t>(v));
  }
  WriteFileBytes(path, buf);
}

std::string ReadFileBytes(const std::string& path) {
  std::ifstream in = OpenForRead(path, /*binary=*/true);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFileBytes(const std::string& path, const std::string& bytes) {
  std::ofstream out = OpenForWrite(path, /*binary=*/true);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  CheckWritten(out, path);
}

}  // namespace consel
