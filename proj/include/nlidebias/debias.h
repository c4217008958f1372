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

// Debiasing strategies built on frozen bias experts:
//   ReW       alpha_i = 1 - b_i[y_i]
//   MixW      alpha_i = prod_j (1 - b^j_i[y_i])
//   BiasProd  train on softmax(log p + log b), predict with p alone
//   AddProd   as BiasProd with sum_j log b^j
//   BestEn    mean of the single-expert ReW models

#ifndef NLIDEBIAS_DEBIAS_H_
#define NLIDEBIAS_DEBIAS_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nlidebias/classifier.h"
#include "nlidebias/corpus.h"
#include "nlidebias/prob.h"

namespace nlidebias {

enum class Strategy : std::uint8_t {
  kBaseline,
  kReW,
  kBiasProd,
  kMixW,
  kAddProd,
  kBestEn,
};

std::string_view StrategyName(Strategy s);
// Throws InvalidArgument listing the valid names.
Strategy ParseStrategy(std::string_view name);

enum class EnsembleRule : std::uint8_t { kMean, kVote };

std::string_view EnsembleRuleName(EnsembleRule r);
EnsembleRule ParseEnsembleRule(std::string_view name);

struct DebiasPlan {
  Strategy strategy = Strategy::kBaseline;
  // Non-owning; must outlive training.
  std::vector<const BiasExpert*> experts;
  TrainingConfig config;
  FeatureSet prime_features = FeatureSet::kPair;
  EnsembleRule ensemble_rule = EnsembleRule::kMean;
};

// Throws InvalidArgument when the expert count does not fit the strategy:
// Baseline takes none, ReW and BiasProd exactly one, the rest at least one.
void ValidateExpertCount(Strategy strategy, std::size_t m);
// ValidateExpertCount plus null checks.
void ValidatePlan(const DebiasPlan& plan);

// b_i for every instance of `data`.
std::vector<ProbDist> ExpertOutputs(const BiasExpert& expert,
                                    const Dataset& data);

// alpha_i = 1 - b_i[y_i].
std::vector<double> reweight_weights(std::span<const ProbDist> b,
                                     std::span<const Label> golds);

// alpha_i = prod_j (1 - b^j_i[y_i]); `b[j]` holds expert j's outputs.
std::vector<double> mixweight_weights(
    std::span<const std::vector<ProbDist>> b, std::span<const Label> golds);

// softmax(log p + sum_j log b^j).
ProbDist bias_product(const ProbDist& p, std::span<const ProbDist> experts);

// Mean (or argmax-vote share) of member predictions. Needs >= 2 members.
ProbDist best_ensemble(std::span<const ProbDist> members,
                       EnsembleRule rule = EnsembleRule::kMean);

// The trained result. Inference uses the member models only; experts are
// recorded by name for bookkeeping.
class DebiasedModel {
 public:
  DebiasedModel() = default;
  DebiasedModel(Strategy strategy, std::vector<std::string> experts,
                std::vector<SoftmaxModel> members,
                EnsembleRule rule = EnsembleRule::kMean);

  Strategy strategy() const { return strategy_; }
  const std::vector<std::string>& experts() const { return experts_; }
  const std::vector<SoftmaxModel>& members() const { return members_; }
  EnsembleRule ensemble_rule() const { return rule_; }

  ProbDist Predict(const NliInstance& x) const;
  Predictor AsPredictor() const;

  void Save(std::ostream& out) const;
  static DebiasedModel Load(std::istream& in);

  friend bool operator==(const DebiasedModel&, const DebiasedModel&) = default;

 private:
  Strategy strategy_ = Strategy::kBaseline;
  std::vector<std::string> experts_;
  std::vector<SoftmaxModel> members_;
  EnsembleRule rule_ = EnsembleRule::kMean;
};

// Trains the prime model(s) for `plan` on `train_data`. BestEn trains one ReW
// model per expert, member j seeded with config.seed + j. `dev` drives
// checkpoint selection when given.
DebiasedModel train_debiased(const DebiasPlan& plan, const Dataset& train_data,
                             const DevSets* dev = nullptr);

void SaveDebiased(const DebiasedModel& model,
                  const std::filesystem::path& path);
DebiasedModel LoadDebiased(const std::filesystem::path& path);

// Instances whose argmax under `expert` differs from the gold label, in
// order. Needs a three-way dataset.
Dataset extract_hard_subset(const Dataset& data, const BiasExpert& expert);
Dataset extract_hard_subset(const Dataset& data, const Predictor& expert);

}  // namespace nlidebias

#endif  // NLIDEBIAS_DEBIAS_H_
