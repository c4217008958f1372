// Copyright 2026 The nlidebias Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nlidebias/prob.h"

#include <algorithm>
#include <cmath>

#include "nlidebias/error.h"

namespace nlidebias {
namespace {

LabelArray ClampAndNormalize(LabelArray p) {
  double sum = 0.0;
  for (auto& v : p) {
    v = std::clamp(v, kProbFloor, 1.0);
    sum += v;
  }
  // Renormalizing can push a clamped component a hair below the floor.
  for (auto& v : p) v = std::max(v / sum, kProbFloor);
  return p;
}

}  // namespace

ProbDist ProbDist::FromWeights(const LabelArray& w) {
  double sum = 0.0;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InvalidArgument("probability weights must be finite and >= 0");
    }
    sum += v;
  }
  if (sum == 0.0) return Uniform();
  LabelArray p;
  for (std::size_t k = 0; k < kNumLabels; ++k) p[k] = w[k] / sum;
  return ProbDist(ClampAndNormalize(p));
}

ProbDist ProbDist::FromLogits(const LabelArray& z) {
  const double m = *std::max_element(z.begin(), z.end());
  LabelArray p;
  double sum = 0.0;
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    p[k] = std::exp(z[k] - m);
    sum += p[k];
  }
  for (auto& v : p) v /= sum;
  return ProbDist(ClampAndNormalize(p));
}

LabelArray ProbDist::Log() const {
  LabelArray out;
  for (std::size_t k = 0; k < kNumLabels; ++k) out[k] = std::log(p_[k]);
  return out;
}

Label ProbDist::Argmax() const {
  std::size_t best = 0;
  for (std::size_t k = 1; k < kNumLabels; ++k) {
    if (p_[k] > p_[best]) best = k;
  }
  return LabelAt(best);
}

}  // namespace nlidebias
