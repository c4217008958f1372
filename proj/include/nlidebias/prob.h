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

#ifndef NLIDEBIAS_PROB_H_
#define NLIDEBIAS_PROB_H_

#include <array>
#include <functional>

#include "nlidebias/corpus.h"

namespace nlidebias {

// Every probability is clamped to at least this before it is logged.
inline constexpr double kProbFloor = 1e-12;

using LabelArray = std::array<double, kNumLabels>;

// Normalized three-way label distribution in E, N, C order. Components are
// clamped to [kProbFloor, 1] and renormalized on construction.
class ProbDist {
 public:
  ProbDist() : p_{1.0 / 3, 1.0 / 3, 1.0 / 3} {}

  static ProbDist Uniform() { return ProbDist(); }
  // Normalizes non-negative weights. An all-zero input yields uniform.
  static ProbDist FromWeights(const LabelArray& w);
  // Softmax of logits, computed with the max-shift for stability.
  static ProbDist FromLogits(const LabelArray& z);

  double operator[](Label l) const { return p_[Index(l)]; }
  double operator[](std::size_t i) const { return p_[i]; }
  const LabelArray& values() const { return p_; }

  LabelArray Log() const;
  // Lowest index wins ties.
  Label Argmax() const;

  friend bool operator==(const ProbDist&, const ProbDist&) = default;

 private:
  explicit ProbDist(const LabelArray& p) : p_(p) {}

  LabelArray p_;
};

// Anything that maps an instance to a label distribution: trained models,
// ensembles, teachers, judges.
using Predictor = std::function<ProbDist(const NliInstance&)>;

}  // namespace nlidebias

#endif  // NLIDEBIAS_PROB_H_
