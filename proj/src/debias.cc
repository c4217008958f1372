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

#include "nlidebias/debias.h"

#include <sstream>

#include "nlidebias/error.h"
#include "nlidebias/text_io.h"

namespace nlidebias {
namespace {

constexpr std::string_view kDebiasedMagic = "nlidebias-debiased 1";

constexpr std::array<Strategy, 6> kAllStrategies = {
    Strategy::kBaseline, Strategy::kReW,     Strategy::kBiasProd,
    Strategy::kMixW,     Strategy::kAddProd, Strategy::kBestEn};

std::vector<Label> Golds(const Dataset& data) {
  std::vector<Label> out;
  out.reserve(data.size());
  for (const auto& x : data) out.push_back(GoldLabel(x));
  return out;
}

std::vector<std::string> ExpertNames(const DebiasPlan& plan) {
  std::vector<std::string> out;
  for (const BiasExpert* e : plan.experts) out.emplace_back(e->name());
  return out;
}

SoftmaxModel TrainWeighted(const DebiasPlan& plan, const Dataset& data,
                           std::span<const double> weights,
                           const TrainingConfig& cfg, const DevSets* dev) {
  auto init = InitModel(plan.prime_features, data, cfg.features);
  return train(std::move(init), data, weights, cfg, dev).model;
}

SoftmaxModel TrainProduct(const DebiasPlan& plan, const Dataset& data,
                          const DevSets* dev) {
  auto init = InitModel(plan.prime_features, data, plan.config.features);
  const auto features = init.space().IndexAll(data);
  std::vector<TrainingExample> examples(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    examples[i].features = &features[i];
    examples[i].gold = GoldLabel(data[i]);
  }
  for (const BiasExpert* e : plan.experts) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      const LabelArray log_b = e->Predict(data[i]).Log();
      for (std::size_t k = 0; k < kNumLabels; ++k) {
        examples[i].log_bias[k] += log_b[k];
      }
    }
  }
  return train_examples(std::move(init), examples, plan.config, dev).model;
}

}  // namespace

std::string_view StrategyName(Strategy s) {
  switch (s) {
    case Strategy::kBaseline:
      return "Baseline";
    case Strategy::kReW:
      return "ReW";
    case Strategy::kBiasProd:
      return "BiasProd";
    case Strategy::kMixW:
      return "MixW";
    case Strategy::kAddProd:
      return "AddProd";
    case Strategy::kBestEn:
      return "BestEn";
  }
  return "?";
}

Strategy ParseStrategy(std::string_view name) {
  for (Strategy s : kAllStrategies) {
    if (StrategyName(s) == name) return s;
  }
  throw InvalidArgument(
      "unknown strategy '" + std::string(name) +
      "' (valid: Baseline, ReW, BiasProd, MixW, AddProd, BestEn)");
}

std::string_view EnsembleRuleName(EnsembleRule r) {
  return r == EnsembleRule::kMean ? "mean" : "vote";
}

EnsembleRule ParseEnsembleRule(std::string_view name) {
  if (name == "mean") return EnsembleRule::kMean;
  if (name == "vote") return EnsembleRule::kVote;
  throw InvalidArgument("unknown ensemble rule '" + std::string(name) +
                        "' (valid: mean, vote)");
}

void ValidateExpertCount(Strategy strategy, std::size_t m) {
  const std::string name(StrategyName(strategy));
  switch (strategy) {
    case Strategy::kBaseline:
      if (m != 0) throw InvalidArgument("Baseline takes no experts");
      break;
    case Strategy::kReW:
    case Strategy::kBiasProd:
      if (m != 1) {
        throw InvalidArgument(name + " needs exactly one expert, got " +
                              std::to_string(m));
      }
      break;
    case Strategy::kMixW:
    case Strategy::kAddProd:
    case Strategy::kBestEn:
      if (m < 1) throw InvalidArgument(name + " needs at least one expert");
      break;
  }
}

void ValidatePlan(const DebiasPlan& plan) {
  for (const BiasExpert* e : plan.experts) {
    if (e == nullptr) {
      throw InvalidArgument(std::string(StrategyName(plan.strategy)) +
                            ": null expert");
    }
  }
  ValidateExpertCount(plan.strategy, plan.experts.size());
}

std::vector<ProbDist> ExpertOutputs(const BiasExpert& expert,
                                    const Dataset& data) {
  std::vector<ProbDist> out;
  out.reserve(data.size());
  for (const auto& x : data) out.push_back(expert.Predict(x));
  return out;
}

std::vector<double> reweight_weights(std::span<const ProbDist> b,
                                     std::span<const Label> golds) {
  if (b.size() != golds.size()) {
    throw InvalidArgument("expert outputs and golds differ in length");
  }
  std::vector<double> out(b.size());
  // Summing the other components avoids cancellation when b[y] is near 1.
  for (std::size_t i = 0; i < b.size(); ++i) {
    double rest = 0.0;
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      if (LabelAt(k) != golds[i]) rest += b[i][k];
    }
    out[i] = rest;
  }
  return out;
}

std::vector<double> mixweight_weights(
    std::span<const std::vector<ProbDist>> b, std::span<const Label> golds) {
  if (b.empty()) throw InvalidArgument("MixW needs at least one expert");
  std::vector<double> out(golds.size(), 1.0);
  for (const auto& expert : b) {
    const auto w = reweight_weights(expert, golds);
    for (std::size_t i = 0; i < w.size(); ++i) out[i] *= w[i];
  }
  return out;
}

ProbDist bias_product(const ProbDist& p, std::span<const ProbDist> experts) {
  LabelArray z = p.Log();
  for (const ProbDist& b : experts) {
    const LabelArray log_b = b.Log();
    for (std::size_t k = 0; k < kNumLabels; ++k) z[k] += log_b[k];
  }
  return ProbDist::FromLogits(z);
}

ProbDist best_ensemble(std::span<const ProbDist> members, EnsembleRule rule) {
  if (members.size() < 2) {
    throw InvalidArgument("an ensemble needs at least two members");
  }
  LabelArray acc{};
  for (const ProbDist& m : members) {
    if (rule == EnsembleRule::kMean) {
      for (std::size_t k = 0; k < kNumLabels; ++k) acc[k] += m[LabelAt(k)];
    } else {
      acc[Index(m.Argmax())] += 1.0;
    }
  }
  return ProbDist::FromWeights(acc);
}

DebiasedModel::DebiasedModel(Strategy strategy,
                             std::vector<std::string> experts,
                             std::vector<SoftmaxModel> members,
                             EnsembleRule rule)
    : strategy_(strategy),
      experts_(std::move(experts)),
      members_(std::move(members)),
      rule_(rule) {
  if (members_.empty()) throw InvalidArgument("a model needs a member");
}

ProbDist DebiasedModel::Predict(const NliInstance& x) const {
  if (members_.size() == 1) return members_.front().Predict(x);
  std::vector<ProbDist> preds;
  preds.reserve(members_.size());
  for (const auto& m : members_) preds.push_back(m.Predict(x));
  return best_ensemble(preds, rule_);
}

Predictor DebiasedModel::AsPredictor() const {
  return [this](const NliInstance& x) { return Predict(x); };
}

void DebiasedModel::Save(std::ostream& out) const {
  out << kDebiasedMagic << '\n';
  out << "strategy " << StrategyName(strategy_) << '\n';
  out << "experts";
  for (const auto& e : experts_) out << ' ' << e;
  out << '\n';
  out << "rule " << EnsembleRuleName(rule_) << '\n';
  out << "members " << members_.size() << '\n';
  for (const auto& m : members_) m.Save(out);
}

DebiasedModel DebiasedModel::Load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kDebiasedMagic) {
    throw Error("not a debiased model checkpoint");
  }
  const Strategy strategy = ParseStrategy(ExpectLine(in, "strategy"));
  std::vector<std::string> experts;
  const std::string names = ExpectLine(in, "experts");
  if (!names.empty()) {
    for (auto e : SplitView(names, ' ')) experts.emplace_back(e);
  }
  const EnsembleRule rule = ParseEnsembleRule(ExpectLine(in, "rule"));
  const auto n = ParseUint(ExpectLine(in, "members"));
  std::vector<SoftmaxModel> members;
  for (std::uint64_t i = 0; i < n; ++i) members.push_back(SoftmaxModel::Load(in));
  return DebiasedModel(strategy, std::move(experts), std::move(members), rule);
}

DebiasedModel train_debiased(const DebiasPlan& plan, const Dataset& train_data,
                             const DevSets* dev) {
  ValidatePlan(plan);
  const auto golds = Golds(train_data);
  std::vector<SoftmaxModel> members;
  switch (plan.strategy) {
    case Strategy::kBaseline:
      members.push_back(TrainWeighted(plan, train_data, {}, plan.config, dev));
      break;
    case Strategy::kReW: {
      const auto b = ExpertOutputs(*plan.experts.front(), train_data);
      const auto w = reweight_weights(b, golds);
      members.push_back(TrainWeighted(plan, train_data, w, plan.config, dev));
      break;
    }
    case Strategy::kMixW: {
      std::vector<std::vector<ProbDist>> b;
      for (const BiasExpert* e : plan.experts) {
        b.push_back(ExpertOutputs(*e, train_data));
      }
      const auto w = mixweight_weights(b, golds);
      members.push_back(TrainWeighted(plan, train_data, w, plan.config, dev));
      break;
    }
    case Strategy::kBiasProd:
    case Strategy::kAddProd:
      members.push_back(TrainProduct(plan, train_data, dev));
      break;
    case Strategy::kBestEn:
      for (std::size_t j = 0; j < plan.experts.size(); ++j) {
        TrainingConfig cfg = plan.config;
        cfg.seed = plan.config.seed + j;
        const auto b = ExpertOutputs(*plan.experts[j], train_data);
        const auto w = reweight_weights(b, golds);
        members.push_back(TrainWeighted(plan, train_data, w, cfg, dev));
      }
      break;
  }
  return DebiasedModel(plan.strategy, ExpertNames(plan), std::move(members),
                       plan.ensemble_rule);
}

void SaveDebiased(const DebiasedModel& model,
                  const std::filesystem::path& path) {
  std::ostringstream out;
  model.Save(out);
  WriteFile(path, out.str());
}

DebiasedModel LoadDebiased(const std::filesystem::path& path) {
  std::istringstream in(ReadFile(path));
  try {
    return DebiasedModel::Load(in);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

Dataset extract_hard_subset(const Dataset& data, const BiasExpert& expert) {
  return extract_hard_subset(
      data, [&](const NliInstance& x) { return expert.Predict(x); });
}

Dataset extract_hard_subset(const Dataset& data, const Predictor& expert) {
  if (data.scheme() != LabelScheme::kThreeWay) {
    throw InvalidArgument("hard subsets need a three-way dataset");
  }
  std::vector<NliInstance> hard;
  for (const auto& x : data) {
    if (expert(x).Argmax() != GoldLabel(x)) hard.push_back(x);
  }
  return Dataset(data.name() + "-hard", data.split(), data.scheme(),
                 std::move(hard));
}

}  // namespace nlidebias
