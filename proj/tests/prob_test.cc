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


#include <gtest/gtest.h>

#include <cmath>

#include "nlidebias/prob.h"
#include "test_util.h"

namespace nlidebias {
namespace {

TEST(ProbDist, DefaultIsUniform) {
  const ProbDist p;
  for (std::size_t k = 0; k < kNumLabels; ++k) EXPECT_DOUBLE_EQ(p[k], 1.0 / 3);
  EXPECT_EQ(ProbDist::FromWeights({0, 0, 0}), ProbDist::Uniform());
}

TEST(ProbDist, HandSoftmax) {
  const auto p = ProbDist::FromLogits({std::log(2.0), 0.0, 0.0});
  EXPECT_NEAR(p[0], 0.5, 1e-15);
  EXPECT_NEAR(p[1], 0.25, 1e-15);
  EXPECT_NEAR(p[2], 0.25, 1e-15);
}

TEST(ProbDist, LargeLogitsStayFinite) {
  const auto p = ProbDist::FromLogits({1000.0, 999.0, -1000.0});
  EXPECT_NEAR(p[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
  EXPECT_GE(p[2], kProbFloor);
}

TEST(ProbDist, TiesGoToLowestIndex) {
  EXPECT_EQ(ProbDist::FromWeights({1, 1, 0}).Argmax(), Label::kEntailment);
  EXPECT_EQ(ProbDist::FromWeights({0, 1, 1}).Argmax(), Label::kNeutral);
  EXPECT_EQ(ProbDist::Uniform().Argmax(), Label::kEntailment);
}

TEST(ProbDist, InvariantsOnRandomInputs) {
  Rng rng(21);
  for (int trial = 0; trial < 5000; ++trial) {
    LabelArray z;
    for (auto& v : z) v = (rng.Uniform() - 0.5) * 80.0;
    const auto p = rng.Bernoulli(0.5) ? ProbDist::FromLogits(z)
                                      : testing::RandomProbDist(rng);
    double sum = 0.0;
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      EXPECT_GE(p[k], kProbFloor);
      EXPECT_LE(p[k], 1.0);
      sum += p[k];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    const auto lg = p.Log();
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      EXPECT_TRUE(std::isfinite(lg[k]));
    }
  }
}

}  // namespace
}  // namespace nlidebias
