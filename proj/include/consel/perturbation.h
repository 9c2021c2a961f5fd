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

#ifndef CONSEL_PERTURBATION_H_
#define CONSEL_PERTURBATION_H_

#include <string>
#include <vector>

#include "consel/types.h"

namespace consel {

// Model-noise scales applied on top of every input variant.
inline constexpr double kNoiseScales[] = {0.01, 0.02, 0.03};

// The six input variants kept after the improvement-rate sweep, as
// (atempo, pitch) pairs.
struct InputVariant {
  double atempo;
  int pitch_semitones;
};
inline constexpr InputVariant kInputVariants[] = {
    {1.00, -2}, {1.00, +1}, {1.00, +2},
    {0.90, -1}, {0.95, -2}, {0.95, -1},
};

inline constexpr int kHypothesesPerUtterance = 28;
inline constexpr int kMaxPerturbed = kHypothesesPerUtterance - 1;

// All admissible descriptors in canonical decoding order: the baseline, the
// six input variants at alpha 0, then each alpha over original + variants.
std::vector<PerturbationDescriptor> EnumerateDescriptors();

bool IsValidDescriptor(const PerturbationDescriptor& d);

// Snaps alpha/atempo to the canonical decimal when within 1e-9 of one and
// throws invalid-perturbation if the result is not admissible. With
// `lenient`, only numeric sanity is checked (finite, atempo > 0).
PerturbationDescriptor CanonicalizeDescriptor(const PerturbationDescriptor& d,
                                              bool lenient = false);

// Short stable label such as "a0.01_p-1_t0.95".
std::string DescriptorTag(const PerturbationDescriptor& d);

}  // namespace consel

#endif  // CONSEL_PERTURBATION_H_
