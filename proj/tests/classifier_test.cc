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
#include <numeric>
#include <sstream>

#include "nlidebias/classifier.h"
#include "nlidebias/error.h"
#include "nlidebias/synthetic.h"
#include "test_util.h"

namespace nlidebias {
namespace {

// A model over `dim` free feature rows (length feature space has 1 + 4 rows,
// the first being the OOV bucket). Rows are addressed directly through
// hand-built IndexedFeatures.
SoftmaxModel SmallModel() {
  return SoftmaxModel(FeatureSpace(FeatureSet::kLength, {}));
}

IndexedFeatures RandomFeatures(Rng& rng, std::size_t dim, std::size_t nnz) {
  std::vector<std::uint32_t> idx(dim);
  std::iota(idx.begin(), idx.end(), 0u);
  rng.Shuffle(idx);
  idx.resize(nnz);
  std::sort(idx.begin(), idx.end());
  IndexedFeatures f;
  for (auto i : idx) {
    f.index.push_back(i);
    f.value.push_back((rng.Uniform() - 0.5) * 4.0);
  }
  return f;
}

void Randomize(SoftmaxModel& m, Rng& rng, double scale = 1.0) {
  for (auto& w : m.weights()) w = (rng.Uniform() - 0.5) * scale;
  for (auto& b : m.bias()) b = (rng.Uniform() - 0.5) * scale;
}

// Independent central differences of BatchObjective over every parameter.
double IndependentGradError(const SoftmaxModel& model,
                            std::span<const TrainingExample> batch,
                            double l2) {
  const Gradient g = ObjectiveGradient(model, batch, l2);
  SoftmaxModel probe = model;
  const double h = 1e-6;
  double worst = 0.0;
  auto check = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = BatchObjective(probe, batch, l2);
    param = saved - h;
    const double down = BatchObjective(probe, batch, l2);
    param = saved;
    const double numeric = (up - down) / (2 * h);
    worst = std::max(worst, std::fabs(numeric - analytic) /
                                std::max({std::fabs(numeric),
                                          std::fabs(analytic), 1e-6}));
  };
  for (std::size_t i = 0; i < probe.weights().size(); ++i) {
    check(probe.weights()[i], g.weights[i]);
  }
  for (std::size_t k = 0; k < kNumLabels; ++k) check(probe.bias()[k], g.bias[k]);
  return worst;
}

TEST(SoftmaxModel, ZeroModelIsUniform) {
  const SoftmaxModel m = SmallModel();
  Rng rng(1);
  const auto p = m.Predict(RandomFeatures(rng, m.dimension(), 3));
  EXPECT_EQ(p, ProbDist::Uniform());
}

TEST(WeightedBatchLoss, HandValues) {
  const std::vector<double> l2v = {0.5, 1.5};
  EXPECT_DOUBLE_EQ(weighted_batch_loss(l2v, std::vector<double>{1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(weighted_batch_loss(l2v, std::vector<double>{1, 0}), 0.5);
  EXPECT_NEAR(weighted_batch_loss(std::vector<double>{1, 2, 3},
                                  std::vector<double>{1, 2, 3}),
              14.0 / 6.0, 1e-15);
}

TEST(WeightedBatchLoss, Errors) {
  const std::vector<double> l = {1.0, 2.0};
  EXPECT_THROW(weighted_batch_loss(l, std::vector<double>{0, 0}),
               InvalidArgument);
  EXPECT_THROW(weighted_batch_loss(l, std::vector<double>{1, -1}),
               InvalidArgument);
  EXPECT_THROW(weighted_batch_loss(l, std::vector<double>{1}), InvalidArgument);
}

TEST(WeightedBatchLoss, UniformScalingInvariance) {
  Rng rng(4);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.Index(20);
    std::vector<double> l(n), a(n), ca(n);
    const double c = std::exp((rng.Uniform() - 0.5) * 20.0);
    for (std::size_t i = 0; i < n; ++i) {
      l[i] = rng.Uniform() * 5.0;
      a[i] = rng.Bernoulli(0.2) ? 0.0 : rng.Uniform();
      ca[i] = c * a[i];
    }
    a[0] += 0.1;
    ca[0] = c * a[0];
    const double base = weighted_batch_loss(l, a);
    EXPECT_NEAR(weighted_batch_loss(l, ca), base, 1e-12 * (1.0 + base));
  }
}

TEST(Gradient, MatchesFiniteDifferences) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    SoftmaxModel m = SmallModel();
    Randomize(m, rng);
    const std::size_t n = 1 + rng.Index(8);
    std::vector<IndexedFeatures> feats;
    for (std::size_t i = 0; i < n; ++i) {
      feats.push_back(RandomFeatures(rng, m.dimension(), 1 + rng.Index(5)));
    }
    std::vector<TrainingExample> batch(n);
    for (std::size_t i = 0; i < n; ++i) {
      batch[i].features = &feats[i];
      batch[i].gold = testing::RandomLabel(rng);
      batch[i].weight = rng.Uniform() + (i == 0 ? 0.1 : 0.0);
      if (trial % 2 == 1) batch[i].log_bias = testing::RandomProbDist(rng).Log();
    }
    const double l2 = trial % 3 == 0 ? 0.0 : 0.01;
    EXPECT_LT(gradient_check(m, batch, l2), 1e-4);
    EXPECT_LT(IndependentGradError(m, batch, l2), 1e-4);
  }
}

TEST(Gradient, ConfidentCorrectExpertSilencesInstance) {
  // A reweighted instance whose expert is sure and right has weight ~0; its
  // share of the gradient vanishes.
  Rng rng(2);
  SoftmaxModel m = SmallModel();
  Randomize(m, rng);
  const auto f1 = RandomFeatures(rng, m.dimension(), 3);
  const auto f2 = RandomFeatures(rng, m.dimension(), 3);
  std::vector<TrainingExample> both(2), alone(1);
  both[0] = {&f1, Label::kNeutral, 1.0 - (1.0 - 2 * kProbFloor), {}};
  both[1] = {&f2, Label::kContradiction, 0.7, {}};
  alone[0] = both[1];
  const auto a = ObjectiveGradient(m, both, 0.0);
  const auto b = ObjectiveGradient(m, alone, 0.0);
  for (std::size_t i = 0; i < a.weights.size(); ++i) {
    EXPECT_NEAR(a.weights[i], b.weights[i], 1e-9);
  }
}

// Plain dense SGD written out from the objective's definition, used as the
// reference for the lazily regularized trainer.
std::vector<double> ReferenceSgd(const SoftmaxModel& init,
                                 std::span<const TrainingExample> ex,
                                 const TrainingConfig& cfg) {
  std::vector<double> w = init.weights();
  LabelArray b = init.bias();
  std::vector<std::size_t> order(ex.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(cfg.seed);
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    rng.Shuffle(order);
    for (std::size_t s = 0; s < order.size(); s += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), s + cfg.batch_size);
      double total = 0.0;
      for (std::size_t j = s; j < end; ++j) total += ex[order[j]].weight;
      if (total == 0.0) continue;
      std::vector<double> gw(w.size(), 0.0);
      LabelArray gb{};
      for (std::size_t j = s; j < end; ++j) {
        const auto& x = ex[order[j]];
        LabelArray z = b;
        for (std::size_t n = 0; n < x.features->index.size(); ++n) {
          for (std::size_t k = 0; k < kNumLabels; ++k) {
            z[k] += w[x.features->index[n] * kNumLabels + k] *
                    x.features->value[n];
          }
        }
        double mx = -1e300;
        for (std::size_t k = 0; k < kNumLabels; ++k) {
          z[k] += x.log_bias[k];
          mx = std::max(mx, z[k]);
        }
        double den = 0.0;
        for (double v : z) den += std::exp(v - mx);
        for (std::size_t k = 0; k < kNumLabels; ++k) {
          const double g = x.weight / total *
                           (std::exp(z[k] - mx) / den -
                            (k == Index(x.gold) ? 1.0 : 0.0));
          gb[k] += g;
          for (std::size_t n = 0; n < x.features->index.size(); ++n) {
            gw[x.features->index[n] * kNumLabels + k] +=
                g * x.features->value[n];
          }
        }
      }
      for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] -= cfg.learning_rate * (gw[i] + 2.0 * cfg.l2 * w[i]);
      }
      for (std::size_t k = 0; k < kNumLabels; ++k) {
        b[k] -= cfg.learning_rate * gb[k];
      }
    }
  }
  return w;
}

TEST(Train, LazyRegularizationMatchesDenseSgd) {
  Rng rng(31);
  SoftmaxModel init = SmallModel();
  std::vector<IndexedFeatures> feats;
  for (int i = 0; i < 50; ++i) feats.push_back(RandomFeatures(rng, 5, 2));
  std::vector<TrainingExample> ex(feats.size());
  for (std::size_t i = 0; i < ex.size(); ++i) {
    ex[i] = {&feats[i], testing::RandomLabel(rng),
             i % 7 == 0 ? 0.0 : rng.Uniform(), {}};
  }
  TrainingConfig cfg;
  cfg.epochs = 7;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.3;
  cfg.l2 = 0.05;  // strong enough to fold the scale several times
  cfg.seed = 5;
  const auto got = train_examples(init, ex, cfg).model.weights();
  const auto want = ReferenceSgd(init, ex, cfg);
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_NEAR(got[i], want[i], 1e-9);
  }
}

TEST(Train, ScaledWeightsGiveIdenticalTrajectory) {
  Rng rng(13);
  const auto s = generate_synthetic([] {
    SyntheticBiasSpec spec;
    spec.instances_per_split = 400;
    return spec;
  }());
  std::vector<double> a(s.train.size()), ten_a(s.train.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.Uniform();
    ten_a[i] = 10.0 * a[i];
  }
  TrainingConfig cfg;
  cfg.epochs = 4;
  const auto init = InitModel(FeatureSet::kPair, s.train, cfg.features);
  const auto r1 = train(init, s.train, a, cfg);
  const auto r2 = train(init, s.train, ten_a, cfg);
  ASSERT_EQ(r1.model.weights().size(), r2.model.weights().size());
  for (std::size_t i = 0; i < r1.model.weights().size(); ++i) {
    ASSERT_NEAR(r1.model.weights()[i], r2.model.weights()[i], 1e-9);
  }
  for (std::size_t e = 0; e < r1.epoch_objective.size(); ++e) {
    EXPECT_NEAR(r1.epoch_objective[e], r2.epoch_objective[e], 1e-9);
  }
}

TEST(Train, SeparableToySetReachesFullAccuracy) {
  // Three classes on rays at 0, 120 and 240 degrees, two dense features.
  std::vector<IndexedFeatures> feats;
  std::vector<TrainingExample> ex;
  feats.reserve(30);
  for (int i = 0; i < 30; ++i) {
    const int y = i % 3;
    const double r = 1.0 + (i / 3) * 0.2;
    const double ang = y * 2.0943951023931953;
    feats.push_back({{1, 2}, {r * std::cos(ang), r * std::sin(ang)}});
  }
  for (int i = 0; i < 30; ++i) {
    ex.push_back({&feats[i], LabelAt(i % 3), 1.0, {}});
  }
  TrainingConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 8;
  const auto r = train_examples(SmallModel(), ex, cfg);
  for (const auto& x : ex) EXPECT_EQ(r.model.Predict(*x.features).Argmax(), x.gold);
}

TEST(Train, AllWeightOnOneInstance) {
  Rng rng(17);
  std::vector<IndexedFeatures> feats;
  for (int i = 0; i < 20; ++i) feats.push_back(RandomFeatures(rng, 5, 3));
  std::vector<TrainingExample> ex;
  for (int i = 0; i < 20; ++i) {
    ex.push_back({&feats[i], testing::RandomLabel(rng), i == 6 ? 1.0 : 0.0, {}});
  }
  TrainingConfig cfg;
  cfg.epochs = 100;
  const auto r = train_examples(SmallModel(), ex, cfg);
  EXPECT_GT(r.model.Predict(feats[6])[ex[6].gold], 0.9);
}

TEST(Train, FixedSeedIsDeterministic) {
  const auto s = generate_synthetic([] {
    SyntheticBiasSpec spec;
    spec.instances_per_split = 300;
    return spec;
  }());
  TrainingConfig cfg;
  cfg.epochs = 3;
  const auto init = InitModel(FeatureSet::kPairOverlap, s.train, cfg.features);
  EXPECT_EQ(train(init, s.train, {}, cfg).model,
            train(init, s.train, {}, cfg).model);
}

TEST(Train, FullBatchObjectiveIsNonIncreasingAtSmallRate) {
  Rng rng(23);
  const Dataset d = testing::RandomDataset(rng, 60);
  TrainingConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = d.size();
  cfg.epochs = 50;
  const auto init = InitModel(FeatureSet::kPair, d, cfg.features);
  const auto r = train(init, d, {}, cfg);
  for (std::size_t e = 1; e < r.epoch_objective.size(); ++e) {
    EXPECT_LE(r.epoch_objective[e], r.epoch_objective[e - 1] + 1e-15);
  }
}

TEST(Train, DivergenceNamesEpoch) {
  Rng rng(1);
  std::vector<IndexedFeatures> feats;
  for (int i = 0; i < 10; ++i) {
    feats.push_back({{1}, {1e200 * (i % 2 ? 1 : -1)}});
  }
  std::vector<TrainingExample> ex;
  for (int i = 0; i < 10; ++i) ex.push_back({&feats[i], LabelAt(i % 3), 1.0, {}});
  TrainingConfig cfg;
  cfg.learning_rate = 1e10;
  try {
    train_examples(SmallModel(), ex, cfg);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos);
  }
}

TEST(Train, RejectsBadInputs) {
  IndexedFeatures f{{1}, {1.0}};
  std::vector<TrainingExample> ex = {{&f, Label::kNeutral, 0.0, {}}};
  TrainingConfig cfg;
  EXPECT_THROW(train_examples(SmallModel(), ex, cfg), InvalidArgument);
  ex[0].weight = 1.0;
  cfg.batch_size = 0;
  EXPECT_THROW(train_examples(SmallModel(), ex, cfg), InvalidArgument);
}

TEST(Train, PredictionsAreDistributions) {
  Rng rng(41);
  const Dataset d = testing::RandomDataset(rng, 80);
  TrainingConfig cfg;
  cfg.epochs = 5;
  const auto m = train(InitModel(FeatureSet::kPair, d, cfg.features), d, {}, cfg)
                     .model;
  for (int i = 0; i < 200; ++i) {
    const auto p = m.Predict(testing::RandomInstance(rng, i, 20));
    EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-12);
    for (std::size_t k = 0; k < kNumLabels; ++k) EXPECT_GE(p[k], kProbFloor);
  }
}

TEST(Checkpoint, SaveLoadRoundTrip) {
  testing::ScratchDir dir("ckpt");
  Rng rng(6);
  const Dataset d = testing::RandomDataset(rng, 50);
  TrainingConfig cfg;
  cfg.epochs = 3;
  for (auto set : {FeatureSet::kPair, FeatureSet::kWordOverlap}) {
    const auto m = train(InitModel(set, d, cfg.features), d, {}, cfg).model;
    SaveModel(m, dir / "m.ckpt");
    const auto back = LoadModel(dir / "m.ckpt");
    EXPECT_EQ(back, m);
    SaveModel(back, dir / "m2.ckpt");
    EXPECT_EQ(ReadFile(dir / "m.ckpt"), ReadFile(dir / "m2.ckpt"));
  }
  const BiasExpert e = train_expert(ExpertKind::kSentenceLength, d, cfg);
  SaveExpert(e, dir / "e.expert");
  const BiasExpert e2 = LoadExpert(dir / "e.expert");
  EXPECT_EQ(e2.kind(), e.kind());
  EXPECT_EQ(e2.model(), e.model());
  WriteFile(dir / "bad.ckpt", "nlidebias-model 1\nfeatures pair\n");
  EXPECT_THROW(LoadModel(dir / "bad.ckpt"), Error);
}

TEST(Expert, NamesAndFeatureSets) {
  for (auto k : kAllExperts) EXPECT_EQ(ParseExpert(ExpertName(k)), k);
  EXPECT_EQ(ExpertFeatures(ExpertKind::kPartialInput), FeatureSet::kHypothesisOnly);
  try {
    ParseExpert("lexical");
    FAIL();
  } catch (const InvalidArgument& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("wordOverlap"), std::string::npos);
    EXPECT_NE(what.find("partialInput"), std::string::npos);
    EXPECT_NE(what.find("sentenceLength"), std::string::npos);
  }
}

TEST(Expert, PartialInputBeatsMajorityOnBiasedTest) {
  SyntheticBiasSpec spec;
  spec.cue_strength = 0.8;
  spec.instances_per_split = 10000;
  spec.eval_instances = 2000;
  const auto s = generate_synthetic(spec);
  const BiasExpert e = train_expert(ExpertKind::kPartialInput, s.train, {});
  std::array<std::size_t, kNumLabels> counts{};
  for (const auto& x : s.test_biased) ++counts[Index(GoldLabel(x))];
  const double majority =
      static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
      s.test_biased.size();
  const double acc =
      static_cast<double>(CountCorrect(
          [&](const NliInstance& x) { return e.Predict(x); }, s.test_biased)) /
      s.test_biased.size();
  EXPECT_GE(acc, majority + 0.20);
}

}  // namespace
}  // namespace nlidebias
