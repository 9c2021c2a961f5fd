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

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>

#include "consel/error.h"
#include "test_util.h"

namespace consel {
namespace {

using testing::ReadText;
using testing::TempDir;
using testing::WriteText;

std::string ErrorCode(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

TEST(ManifestTest, ReadsFields) {
  TempDir dir;
  const std::string path = dir.path("m.jsonl");
  WriteText(path,
            "{\"utt_id\":\"a\",\"duration_sec\":2.5}\n"
            "\n"
            "{\"utt_id\":\"b\",\"duration_sec\":1,\"ref_text\":\"hi\","
            "\"split\":\"query\",\"extra\":7}\n");
  const auto recs = ReadManifest(path);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].utt_id, "a");
  EXPECT_EQ(recs[0].duration_sec, 2.5);
  EXPECT_FALSE(recs[0].ref_text);
  EXPECT_EQ(*recs[1].ref_text, "hi");
  EXPECT_EQ(*recs[1].split, Split::kQuery);
}

TEST(ManifestTest, RejectsDuplicateId) {
  TempDir dir;
  const std::string path = dir.path("m.jsonl");
  WriteText(path,
            "{\"utt_id\":\"a\",\"duration_sec\":1}\n"
            "{\"utt_id\":\"a\",\"duration_sec\":2}\n");
  EXPECT_EQ(ErrorCode([&] { ReadManifest(path); }), "duplicate-id");
}

TEST(ManifestTest, RejectsNegativeDuration) {
  TempDir dir;
  const std::string path = dir.path("m.jsonl");
  WriteText(path, "{\"utt_id\":\"a\",\"duration_sec\":-1}\n");
  EXPECT_EQ(ErrorCode([&] { ReadManifest(path); }), "negative-duration");
}

TEST(ManifestTest, MalformedLineNamesLine) {
  TempDir dir;
  const std::string path = dir.path("m.jsonl");
  WriteText(path, "{\"utt_id\":\"a\",\"duration_sec\":1}\n{oops\n");
  try {
    ReadManifest(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidData);
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos)
        << e.what();
  }
}

TEST(ManifestTest, MissingFileIsMissingInput) {
  try {
    ReadManifest("/nonexistent/m.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMissingInput);
    EXPECT_EQ(e.path(), "/nonexistent/m.jsonl");
  }
}

TEST(ManifestTest, RoundTrip) {
  TempDir dir;
  std::vector<UtteranceRecord> recs(2);
  recs[0] = {"u1", 3.25, "audio/u1.wav", "the cat", Split::kPool};
  recs[1] = {"u2", 0.0, std::nullopt, std::nullopt, std::nullopt};
  WriteManifest(recs, dir.path("m.jsonl"));
  EXPECT_EQ(ReadManifest(dir.path("m.jsonl")), recs);
  WriteManifest(ReadManifest(dir.path("m.jsonl")), dir.path("m2.jsonl"));
  EXPECT_EQ(ReadText(dir.path("m.jsonl")), ReadText(dir.path("m2.jsonl")));
}

TEST(HypothesesTest, RoundTripWithPpl) {
  TempDir dir;
  std::vector<HypothesisRecord> hyps = {
      {"u1", "u1.h00", "a b", {0.0, 0, 1.0}, 12.5},
      {"u1", "u1.h01", "a c", {0.01, -1, 0.95}, std::nullopt},
  };
  WriteHypotheses(hyps, dir.path("h.jsonl"));
  EXPECT_EQ(ReadHypotheses(dir.path("h.jsonl")), hyps);
}

TEST(HypothesesTest, RejectsInvalidDescriptor) {
  TempDir dir;
  const std::string path = dir.path("h.jsonl");
  WriteText(path,
            "{\"utt_id\":\"u\",\"hyp_id\":\"b\",\"text\":\"x\",\"alpha\":0,"
            "\"pitch_semitones\":0,\"atempo\":1}\n"
            "{\"utt_id\":\"u\",\"hyp_id\":\"h\",\"text\":\"x\",\"alpha\":0,"
            "\"pitch_semitones\":-1,\"atempo\":1}\n");
  EXPECT_EQ(ErrorCode([&] { ReadHypotheses(path); }), "invalid-perturbation");
  EXPECT_EQ(ReadHypotheses(path, /*lenient=*/true).size(), 2u);
}

TEST(HypothesesTest, RejectsMissingAndDuplicateBaseline) {
  TempDir dir;
  const std::string none = dir.path("none.jsonl");
  WriteText(none,
            "{\"utt_id\":\"u\",\"hyp_id\":\"h\",\"text\":\"x\",\"alpha\":0.01,"
            "\"pitch_semitones\":0,\"atempo\":1}\n");
  EXPECT_EQ(ErrorCode([&] { ReadHypotheses(none); }), "missing-baseline");
  const std::string two = dir.path("two.jsonl");
  WriteText(two,
            "{\"utt_id\":\"u\",\"hyp_id\":\"a\",\"text\":\"x\",\"alpha\":0,"
            "\"pitch_semitones\":0,\"atempo\":1}\n"
            "{\"utt_id\":\"u\",\"hyp_id\":\"b\",\"text\":\"y\",\"alpha\":0,"
            "\"pitch_semitones\":0,\"atempo\":1}\n");
  EXPECT_EQ(ErrorCode([&] { ReadHypotheses(two); }), "duplicate-baseline");
}

TEST(ScoresTest, RoundTripIsBitExact) {
  TempDir dir;
  std::vector<QualityVector> scores = {
      {"u", "h1", 0.1234567890123456789, 0.3, 1.0 / 3.0},
      {"u", "h2", 0.99, -1.0, 0.0},
  };
  WriteScores(scores, dir.path("s.jsonl"));
  EXPECT_EQ(ReadScores(dir.path("s.jsonl")), scores);
}

TEST(ScoresTest, RejectsOutOfRange) {
  TempDir dir;
  const std::string path = dir.path("s.jsonl");
  WriteText(path,
            "{\"utt_id\":\"u\",\"hyp_id\":\"h\",\"pred_wer\":0.995,\"cos\":0,"
            "\"euc\":0}\n");
  EXPECT_EQ(ErrorCode([&] { ReadScores(path); }), "out-of-range");
}

TEST(SelectionFileTest, RoundTrip) {
  TempDir dir;
  SelectionResult r;
  r.rule = Rule::kConfStable;
  r.p = 70;
  r.p2 = 50;
  r.thresholds = {{"conf.pred_wer", 0.25}, {"stable.cos", 0.5}};
  r.entries = {{"u1", "u1.h03", "a b", 1}, {"u1", "u1.h00", "a c", 1},
               {"u2", "u2.h00", "x", 1}};
  WriteSelection(r, dir.path("sel.jsonl"));
  EXPECT_EQ(ReadSelection(dir.path("sel.jsonl")), r);
}

TEST(IdListTest, HeaderIsSkipped) {
  TempDir dir;
  WriteIdList({"b", "a"}, dir.path("ids.txt"), "consel preselect");
  EXPECT_EQ(ReadText(dir.path("ids.txt")), "# consel preselect\nb\na\n");
  EXPECT_EQ(ReadIdList(dir.path("ids.txt")),
            (std::vector<std::string>{"b", "a"}));
}

TEST(EmbeddingsTest, OneRowExample) {
  TempDir dir;
  EmbeddingMatrix m(2);
  m.AddRow("a", std::vector<float>{1.0f, 0.0f});
  WriteEmbeddings(m, dir.path("e.emb"));
  const EmbeddingMatrix back = ReadEmbeddings(dir.path("e.emb"));
  EXPECT_EQ(back.dim(), 2u);
  EXPECT_EQ(back.rows(), 1u);
  EXPECT_EQ(back, m);
}

TEST(EmbeddingsTest, EmptyMatrixIsHeaderOnly) {
  TempDir dir;
  WriteEmbeddings(EmbeddingMatrix(39), dir.path("e.emb"));
  const std::string bytes = ReadFileBytes(dir.path("e.emb"));
  ASSERT_EQ(bytes.size(), 16u);
  EXPECT_EQ(bytes.substr(0, 4), "EMB1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 39);
  for (size_t i = 5; i < 16; ++i) EXPECT_EQ(bytes[i], '\0') << i;
  EXPECT_EQ(ReadEmbeddings(dir.path("e.emb")).rows(), 0u);
}

TEST(EmbeddingsTest, ExactByteLayout) {
  TempDir dir;
  EmbeddingMatrix m(1);
  m.AddRow("xy", std::vector<float>{1.0f});
  WriteEmbeddings(m, dir.path("e.emb"));
  const std::string expected("EMB1\x01\x00\x00\x00\x01\x00\x00\x00\x00\x00"
                             "\x00\x00\x02\x00xy\x00\x00\x80\x3f",
                             24);
  EXPECT_EQ(ReadFileBytes(dir.path("e.emb")), expected);
}

TEST(EmbeddingsTest, RoundTripPreservesBits) {
  TempDir dir;
  EmbeddingMatrix m(3);
  m.AddRow("a", std::vector<float>{std::numeric_limits<float>::denorm_min(),
                                   -0.0f, 3.4e38f});
  m.AddRow("b", std::vector<float>{0.1f, -0.2f, 1e-30f});
  WriteEmbeddings(m, dir.path("e.emb"));
  const EmbeddingMatrix back = ReadEmbeddings(dir.path("e.emb"));
  ASSERT_EQ(back.rows(), 2u);
  for (size_t r = 0; r < 2; ++r) {
    for (size_t k = 0; k < 3; ++k) {
      EXPECT_EQ(std::bit_cast<uint32_t>(back.row(r)[k]),
                std::bit_cast<uint32_t>(m.row(r)[k]));
    }
  }
}

TEST(EmbeddingsTest, Errors) {
  TempDir dir;
  WriteFileBytes(dir.path("bad.emb"), std::string("XXXX\x02\0\0\0", 8));
  EXPECT_EQ(ErrorCode([&] { ReadEmbeddings(dir.path("bad.emb")); }),
            "bad-magic");

  EmbeddingMatrix m(2);
  m.AddRow("a", std::vector<float>{1.0f, 2.0f});
  WriteEmbeddings(m, dir.path("ok.emb"));
  std::string bytes = ReadFileBytes(dir.path("ok.emb"));
  WriteFileBytes(dir.path("trunc.emb"), bytes.substr(0, bytes.size() - 1));
  EXPECT_EQ(ErrorCode([&] { ReadEmbeddings(dir.path("trunc.emb")); }),
            "truncated");
  WriteFileBytes(dir.path("trail.emb"), bytes + "z");
  EXPECT_EQ(ErrorCode([&] { ReadEmbeddings(dir.path("trail.emb")); }),
            "trailing-bytes");

  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::string nan_bytes = bytes;
  std::memcpy(nan_bytes.data() + bytes.size() - 4, &nan, 4);
  WriteFileBytes(dir.path("nan.emb"), nan_bytes);
  try {
    ReadEmbeddings(dir.path("nan.emb"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "non-finite");
    EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos)
        << e.what();
  }

  EXPECT_EQ(ErrorCode([&] { WriteEmbeddings(EmbeddingMatrix(0), "x"); }),
            "invalid-dim");
}

TEST(EmbeddingMatrixTest, RejectsBadRows) {
  EmbeddingMatrix m(2);
  m.AddRow("a", std::vector<float>{1.0f, 2.0f});
  EXPECT_EQ(ErrorCode([&] { m.AddRow("a", std::vector<float>{0.f, 1.f}); }),
            "duplicate-id");
  EXPECT_EQ(ErrorCode([&] { m.AddRow("b", std::vector<float>{0.f}); }),
            "dim-mismatch");
  EXPECT_EQ(m.RowOf("a", "test"), 0u);
  EXPECT_EQ(ErrorCode([&] { m.RowOf("zz", "test"); }), "missing-row");
}

}  // namespace
}  // namespace consel
