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

#include "consel/perturbation.h"

#include <cmath>
#include <cstdio>

#include "consel/error.h"

namespace consel {
namespace {

constexpr double kSnap = 1e-9;

double SnapTo(double value, std::initializer_list<double> canon) {
  for (double c : canon) {
    if (std::fabs(value - c) <= kSnap) return c;
  }
  return value;
}

}  // namespace

std::vector<PerturbationDescriptor> EnumerateDescriptors() {
  std::vector<PerturbationDescriptor> out;
  out.reserve(kHypothesesPerUtterance);
  out.push_back({0.0, 0, 1.0});
  for (const InputVariant& v : kInputVariants) {
    out.push_back({0.0, v.pitch_semitones, v.atempo});
  }
  for (double alpha : kNoiseScales) {
    out.push_back({alpha, 0, 1.0});
    for (const InputVariant& v : kInputVariants) {
      out.push_back({alpha, v.pitch_semitones, v.atempo});
    }
  }
  return out;
}

bool IsValidDescriptor(const PerturbationDescriptor& d) {
  if (d.alpha != 0.0 && d.alpha != 0.01 && d.alpha != 0.02 &&
      d.alpha != 0.03) {
    return false;
  }
  if (d.pitch_semitones == 0 && d.atempo == 1.0) return true;
  for (const InputVariant& v : kInputVariants) {
    if (d.pitch_semitones == v.pitch_semitones && d.atempo == v.atempo) {
      return true;
    }
  }
  return false;
}

PerturbationDescriptor CanonicalizeDescriptor(const PerturbationDescriptor& d,
                                              bool lenient) {
  PerturbationDescriptor out = d;
  out.alpha = SnapTo(d.alpha, {0.0, 0.01, 0.02, 0.03});
  out.atempo = SnapTo(d.atempo, {0.90, 0.95, 1.00});
  if (lenient) {
    if (!std::isfinite(out.alpha) || !std::isfinite(out.atempo) ||
        out.atempo <= 0.0 || out.alpha < 0.0) {
      ThrowInvalid("invalid-perturbation",
                   "perturbation " + DescriptorTag(d) + " is not finite");
    }
    return out;
  }
  if (!IsValidDescriptor(out)) {
    ThrowInvalid("invalid-perturbation",
                 "perturbation " + DescriptorTag(d) +
                     " is not one of the 28 admissible combinations");
  }
  return out;
}

std::string DescriptorTag(const PerturbationDescriptor& d) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "a%.2f_p%+d_t%.2f", d.alpha,
                d.pitch_semitones, d.atempo);
  return buf;
}

}  // namespace consel
