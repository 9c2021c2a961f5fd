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

#ifndef CONSEL_RNG_H_
#define CONSEL_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace consel {

// SplitMix64 finalizer (Steele, Lea & Flood 2014).
uint64_t SplitMix64(uint64_t x);

// Deterministic generator: std::mt19937_64 (fully specified by the standard)
// seeded from SplitMix64(seed ^ hash(stream)). Distribution code is our own
// because the std:: distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed, std::string_view stream = "");

  uint64_t NextU64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double Uniform();
  // Uniform integer in [0, bound), rejection sampled. bound > 0.
  uint64_t Below(uint64_t bound);
  // Standard normal via Box-Muller (one draw per call, no caching).
  double Normal();
  bool Bernoulli(double p) { return Uniform() < p; }

  // Fisher-Yates, last index first.
  template <typename T>
  void Shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(Below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace consel

#endif  // CONSEL_RNG_H_
