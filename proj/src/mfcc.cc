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

#include "consel/mfcc.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>

#include "consel/error.h"
#include "consel/wire_format.h"

namespace consel {
namespace {

// fftw planner calls are not thread-safe.
std::mutex& PlannerMutex() {
  static std::mutex mu;
  return mu;
}

uint32_t Le32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (uint32_t{p[3]} << 24);
}
uint16_t Le16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void Unsupported(const std::string& code, const std::string& what,
                 const std::string& path) {
  ThrowInvalid(code, "'" + path + "': " + what, path);
}

}  // namespace

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

void MfccConfig::Validate() const {
  if (sample_rate_hz <= 0 || window_samples() <= 0 || hop_samples() <= 0) {
    ThrowInvalid("bad-config", "MFCC window and hop must be positive");
  }
  if (n_ceps <= 0 || n_ceps > n_mels) {
    ThrowInvalid("bad-config", "MFCC requires 0 < n_ceps <= n_mels");
  }
  if (fft_size < window_samples()) {
    ThrowInvalid("bad-config", "fft_size smaller than the analysis window");
  }
  if (!(log_floor > 0)) ThrowInvalid("bad-config", "log_floor must be > 0");
  if (delta_window < 1) ThrowInvalid("bad-config", "delta_window must be >= 1");
}

WavAudio ReadWavPcm16(const std::string& path, int expected_rate_hz) {
  const std::string bytes = ReadFileBytes(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const size_t size = bytes.size();
  if (size < 12 || std::memcmp(p, "RIFF", 4) != 0 ||
      std::memcmp(p + 8, "WAVE", 4) != 0) {
    Unsupported("unsupported-encoding", "not a RIFF/WAVE file", path);
  }
  bool have_fmt = false;
  WavAudio audio;
  size_t off = 12;
  while (off + 8 <= size) {
    const uint32_t chunk_size = Le32(p + off + 4);
    const unsigned char* body = p + off + 8;
    const size_t avail = size - off - 8;
    if (std::memcmp(p + off, "fmt ", 4) == 0) {
      if (chunk_size < 16 || avail < 16) {
        Unsupported("truncated", "short fmt chunk", path);
      }
      const uint16_t format = Le16(body);
      const uint16_t channels = Le16(body + 2);
      const uint32_t rate = Le32(body + 4);
      const uint16_t bits = Le16(body + 14);
      if (format != 1 || bits != 16) {
        Unsupported("unsupported-encoding", "only PCM 16-bit is supported",
                    path);
      }
      if (channels != 1) {
        Unsupported("unsupported-channels",
                    std::to_string(channels) + " channels, expected mono",
                    path);
      }
      if (static_cast<int>(rate) != expected_rate_hz) {
        Unsupported("unsupported-rate",
                    std::to_string(rate) + " Hz, expected " +
                        std::to_string(expected_rate_hz),
                    path);
      }
      audio.sample_rate_hz = static_cast<int>(rate);
      have_fmt = true;
    } else if (std::memcmp(p + off, "data", 4) == 0) {
      if (!have_fmt) Unsupported("unsupported-encoding", "data before fmt", path);
      const size_t n = std::min<size_t>(chunk_size, avail) / 2;
      audio.samples.resize(n);
      for (size_t i = 0; i < n; ++i) {
        audio.samples[i] =
            static_cast<int16_t>(Le16(body + 2 * i)) / 32768.0;
      }
      return audio;
    }
    off += 8 + chunk_size + (chunk_size & 1);
  }
  Unsupported("truncated", "no data chunk", path);
  return audio;
}

void WriteWavPcm16(const std::string& path, std::span<const double> samples,
                   int sample_rate_hz) {
  std::string buf;
  auto put32 = [&](uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>(v >> (8 * i)));
  };
  auto put16 = [&](uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xFF));
    buf.push_back(static_cast<char>(v >> 8));
  };
  const uint32_t data_bytes = static_cast<uint32_t>(samples.size() * 2);
  buf += "RIFF";
  put32(36 + data_bytes);
  buf += "WAVEfmt ";
  put32(16);
  put16(1);
  put16(1);
  put32(static_cast<uint32_t>(sample_rate_hz));
  put32(static_cast<uint32_t>(sample_rate_hz) * 2);
  put16(2);
  put16(16);
  buf += "data";
  put32(data_bytes);
  for (double s : samples) {
    const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    put16(static_cast<uint16_t>(
        static_cast<int16_t>(std::clamp(scaled, -32768.0, 32767.0))));
  }
  WriteFileBytes(path, buf);
}

struct MfccExtractor::FftState {
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;
};

MfccExtractor::MfccExtractor(const MfccConfig& cfg)
    : cfg_(cfg), fft_(std::make_unique<FftState>()) {
  cfg_.Validate();
  const int win = cfg_.window_samples();
  const int nfft = cfg_.fft_size;
  const int nbins = nfft / 2 + 1;

  window_.resize(win);
  for (int n = 0; n < win; ++n) {
    window_[n] =
        0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (win - 1));
  }

  // Triangular filters with edges equally spaced on the HTK mel scale,
  // evaluated at each bin's exact centre frequency.
  const double mel_max = HzToMel(cfg_.sample_rate_hz / 2.0);
  std::vector<double> edges(cfg_.n_mels + 2);
  for (int i = 0; i < cfg_.n_mels + 2; ++i) {
    edges[i] = MelToHz(mel_max * i / (cfg_.n_mels + 1));
  }
  mel_weights_.assign(static_cast<size_t>(cfg_.n_mels) * nbins, 0.0);
  for (int m = 0; m < cfg_.n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < nbins; ++k) {
      const double f = static_cast<double>(k) * cfg_.sample_rate_hz / nfft;
      const double w = std::min((f - lo) / (mid - lo), (hi - f) / (hi - mid));
      mel_weights_[static_cast<size_t>(m) * nbins + k] = std::max(0.0, w);
    }
  }

  // Orthonormal DCT-II rows 0..n_ceps-1.
  const int M = cfg_.n_mels;
  dct_.resize(static_cast<size_t>(cfg_.n_ceps) * M);
  for (int k = 0; k < cfg_.n_ceps; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / M);
    for (int n = 0; n < M; ++n) {
      dct_[static_cast<size_t>(k) * M + n] =
          scale * std::cos(std::numbers::pi * k * (2 * n + 1) / (2.0 * M));
    }
  }

  fft_->in = fftw_alloc_real(nfft);
  fft_->out = fftw_alloc_complex(nbins);
  std::lock_guard<std::mutex> lock(PlannerMutex());
  fft_->plan = fftw_plan_dft_r2c_1d(nfft, fft_->in, fft_->out, FFTW_ESTIMATE);
}

MfccExtractor::~MfccExtractor() {
  if (!fft_) return;
  {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    if (fft_->plan) fftw_destroy_plan(fft_->plan);
  }
  fftw_free(fft_->in);
  fftw_free(fft_->out);
}

int MfccExtractor::NumFrames(size_t num_samples) const {
  const size_t win = cfg_.window_samples();
  if (num_samples < win) return 0;
  return static_cast<int>(1 + (num_samples - win) / cfg_.hop_samples());
}

std::vector<double> MfccExtractor::Frames(
    std::span<const double> samples) const {
  const int frames = NumFrames(samples.size());
  if (frames == 0) {
    ThrowInvalid("too-short", "input has " + std::to_string(samples.size()) +
                                  " samples, need at least one window of " +
                                  std::to_string(cfg_.window_samples()));
  }
  const int win = cfg_.window_samples();
  const int hop = cfg_.hop_samples();
  const int nfft = cfg_.fft_size;
  const int nbins = nfft / 2 + 1;
  const int C = cfg_.n_ceps;
  const int D = cfg_.feature_dim();

  std::vector<double> emph(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    emph[i] = samples[i] - (i > 0 ? cfg_.preemphasis * samples[i - 1] : 0.0);
  }

  std::vector<double> out(static_cast<size_t>(frames) * D, 0.0);
  std::vector<double> power(nbins), logmel(cfg_.n_mels);
  for (int t = 0; t < frames; ++t) {
    const double* x = emph.data() + static_cast<size_t>(t) * hop;
    for (int n = 0; n < nfft; ++n) fft_->in[n] = n < win ? x[n] * window_[n] : 0.0;
    fftw_execute(fft_->plan);
    for (int k = 0; k < nbins; ++k) {
      power[k] = fft_->out[k][0] * fft_->out[k][0] +
                 fft_->out[k][1] * fft_->out[k][1];
    }
    for (int m = 0; m < cfg_.n_mels; ++m) {
      const double* w = mel_weights_.data() + static_cast<size_t>(m) * nbins;
      double e = 0.0;
      for (int k = 0; k < nbins; ++k) e += w[k] * power[k];
      logmel[m] = std::log(std::max(e, cfg_.log_floor));
    }
    double* row = out.data() + static_cast<size_t>(t) * D;
    for (int k = 0; k < C; ++k) {
      const double* d = dct_.data() + static_cast<size_t>(k) * cfg_.n_mels;
      double c = 0.0;
      for (int m = 0; m < cfg_.n_mels; ++m) c += d[m] * logmel[m];
      row[k] = c;
    }
  }

  // Regression deltas over +-delta_window frames, edges replicated.
  const int N = cfg_.delta_window;
  double denom = 0.0;
  for (int n = 1; n <= N; ++n) denom += 2.0 * n * n;
  auto delta = [&](int src, int dst) {
    for (int t = 0; t < frames; ++t) {
      for (int k = 0; k < C; ++k) {
        double acc = 0.0;
        for (int n = 1; n <= N; ++n) {
          const int fwd = std::min(t + n, frames - 1);
          const int back = std::max(t - n, 0);
          acc += n * (out[static_cast<size_t>(fwd) * D + src + k] -
                      out[static_cast<size_t>(back) * D + src + k]);
        }
        out[static_cast<size_t>(t) * D + dst + k] = acc / denom;
      }
    }
  };
  delta(0, C);
  delta(C, 2 * C);
  return out;
}

std::vector<double> MfccExtractor::Mean(std::span<const double> samples) const {
  const std::vector<double> frames = Frames(samples);
  const int D = cfg_.feature_dim();
  const size_t T = frames.size() / D;
  std::vector<double> mean(D, 0.0);
  for (size_t t = 0; t < T; ++t) {
    for (int k = 0; k < D; ++k) mean[k] += frames[t * D + k];
  }
  for (double& v : mean) v /= static_cast<double>(T);
  return mean;
}

std::vector<double> Mfcc39(std::span<const double> samples,
                           const MfccConfig& cfg) {
  return MfccExtractor(cfg).Mean(samples);
}

}  // namespace consel
