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

#ifndef CONSEL_MFCC_H_
#define CONSEL_MFCC_H_

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace consel {

// Utterance-level MFCC recipe: 13 cepstra (c0 kept) + deltas + delta-deltas,
// averaged over frames.
struct MfccConfig {
  int sample_rate_hz = 16000;
  double preemphasis = 0.97;
  int window_ms = 25;
  int hop_ms = 10;
  int fft_size = 512;
  int n_mels = 26;
  int n_ceps = 13;
  int delta_window = 2;
  double log_floor = 1e-10;

  int window_samples() const { return sample_rate_hz * window_ms / 1000; }
  int hop_samples() const { return sample_rate_hz * hop_ms / 1000; }
  int feature_dim() const { return 3 * n_ceps; }
  void Validate() const;
};

struct WavAudio {
  std::vector<double> samples;  // scaled by 1/32768
  int sample_rate_hz = 0;
};

// RIFF/WAVE PCM 16-bit mono at `expected_rate_hz`. No resampling.
WavAudio ReadWavPcm16(const std::string& path, int expected_rate_hz = 16000);
void WriteWavPcm16(const std::string& path, std::span<const double> samples,
                   int sample_rate_hz = 16000);

// Reusable extractor: owns the mel filterbank, DCT table and FFT plan.
// Not thread-safe; create one per thread.
class MfccExtractor {
 public:
  explicit MfccExtractor(const MfccConfig& cfg = {});
  ~MfccExtractor();
  MfccExtractor(const MfccExtractor&) = delete;
  MfccExtractor& operator=(const MfccExtractor&) = delete;

  const MfccConfig& config() const { return cfg_; }

  // Per-frame features, row-major frames x (3 * n_ceps).
  std::vector<double> Frames(std::span<const double> samples) const;
  // Mean over frames of Frames().
  std::vector<double> Mean(std::span<const double> samples) const;

  int NumFrames(size_t num_samples) const;

 private:
  struct FftState;

  MfccConfig cfg_;
  std::vector<double> window_;
  std::vector<double> mel_weights_;  // n_mels x (fft_size / 2 + 1)
  std::vector<double> dct_;          // n_ceps x n_mels
  std::unique_ptr<FftState> fft_;
};

// Convenience wrapper: MfccExtractor(cfg).Mean(samples).
std::vector<double> Mfcc39(std::span<const double> samples,
                           const MfccConfig& cfg = {});

double HzToMel(double hz);
double MelToHz(double mel);

}  // namespace consel

#endif  // CONSEL_MFCC_H_
