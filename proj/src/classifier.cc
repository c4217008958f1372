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

#include "nlidebias/classifier.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "nlidebias/error.h"
#include "nlidebias/rng.h"
#include "nlidebias/text_io.h"

namespace nlidebias {
namespace {

constexpr std::string_view kModelMagic = "nlidebias-model 1";
constexpr std::string_view kExpertMagic = "nlidebias-expert 1";

double LogSumExp(const LabelArray& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

// -log softmax(z)[gold]. When gold is the argmax this is
// log1p(sum_{k != gold} exp(z_k - z_gold)), which keeps its precision for
// confident predictions.
double CrossEntropy(const LabelArray& z, std::size_t gold) {
  const double m = *std::max_element(z.begin(), z.end());
  if (z[gold] != m) return LogSumExp(z) - z[gold];
  double rest = 0.0;
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    if (k != gold) rest += std::exp(z[k] - m);
  }
  return std::log1p(rest);
}

LabelArray Shifted(LabelArray z, const LabelArray& offset) {
  for (std::size_t k = 0; k < kNumLabels; ++k) z[k] += offset[k];
  return z;
}

// CrossEntropy(z + d e_k) - CrossEntropy(z - d e_k) without subtracting the
// two losses.
double LossShiftDifference(const LabelArray& z, std::size_t gold,
                           std::size_t k, double d) {
  const double m = *std::max_element(z.begin(), z.end());
  if (k == gold && z[gold] == m) {
    double rest = 0.0;
    for (std::size_t j = 0; j < kNumLabels; ++j) {
      if (j != gold) rest += std::exp(z[j] - m);
    }
    return std::log1p(-2.0 * rest * std::sinh(d) / (1.0 + rest * std::exp(d)));
  }
  double s = 0.0;
  for (std::size_t j = 0; j < kNumLabels; ++j) s += std::exp(z[j] - m);
  const double a = std::exp(z[k] - m);
  const double lse = std::log1p(2.0 * a * std::sinh(d) / (s + a * std::expm1(-d)));
  return k == gold ? lse - 2.0 * d : lse;
}

double WeightSum(std::span<const TrainingExample> batch) {
  double s = 0.0;
  for (const auto& x : batch) {
    if (!(x.weight >= 0.0) || !std::isfinite(x.weight)) {
      throw InvalidArgument("instance weights must be finite and >= 0");
    }
    s += x.weight;
  }
  return s;
}

double SquaredNorm(const std::vector<double>& w) {
  double s = 0.0;
  for (double v : w) s += v * v;
  return s;
}

// SGD state with the weights stored as scale * v, so the L2 shrinkage of all
// weights is a single multiplication per step.
class ScaledSgd {
 public:
  explicit ScaledSgd(const SoftmaxModel& init)
      : v_(init.weights()),
        bias_(init.bias()),
        grad_(v_.size(), 0.0),
        touched_mark_(init.dimension(), 0) {}

  LabelArray Logits(const IndexedFeatures& x) const {
    LabelArray z{};
    for (std::size_t n = 0; n < x.index.size(); ++n) {
      const double* row = &v_[std::size_t{x.index[n]} * kNumLabels];
      for (std::size_t k = 0; k < kNumLabels; ++k) z[k] += row[k] * x.value[n];
    }
    for (std::size_t k = 0; k < kNumLabels; ++k) z[k] = scale_ * z[k] + bias_[k];
    return z;
  }

  // Accumulates alpha/S * (softmax(z + log_bias) - onehot(gold)).
  void Accumulate(const TrainingExample& x, double coef) {
    const LabelArray z = Shifted(Logits(*x.features), x.log_bias);
    const double lse = LogSumExp(z);
    LabelArray g;
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      g[k] = coef * (std::exp(z[k] - lse) - (k == Index(x.gold) ? 1.0 : 0.0));
      bias_grad_[k] += g[k];
    }
    const auto& f = *x.features;
    for (std::size_t n = 0; n < f.index.size(); ++n) {
      const std::uint32_t i = f.index[n];
      if (!touched_mark_[i]) {
        touched_mark_[i] = 1;
        touched_.push_back(i);
      }
      double* row = &grad_[std::size_t{i} * kNumLabels];
      for (std::size_t k = 0; k < kNumLabels; ++k) row[k] += g[k] * f.value[n];
    }
  }

  void Step(double lr, double l2) {
    scale_ *= 1.0 - 2.0 * lr * l2;
    for (std::uint32_t i : touched_) {
      double* row = &v_[std::size_t{i} * kNumLabels];
      double* g = &grad_[std::size_t{i} * kNumLabels];
      for (std::size_t k = 0; k < kNumLabels; ++k) {
        row[k] -= lr * g[k] / scale_;
        g[k] = 0.0;
      }
      touched_mark_[i] = 0;
    }
    touched_.clear();
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      bias_[k] -= lr * bias_grad_[k];
      bias_grad_[k] = 0.0;
    }
    if (scale_ < 1e-6) Fold();
  }

  void WriteTo(SoftmaxModel& model) const {
    auto& w = model.weights();
    for (std::size_t i = 0; i < v_.size(); ++i) w[i] = scale_ * v_[i];
    model.bias() = bias_;
  }

 private:
  void Fold() {
    for (double& x : v_) x *= scale_;
    scale_ = 1.0;
  }

  std::vector<double> v_;
  double scale_ = 1.0;
  LabelArray bias_;
  std::vector<double> grad_;
  LabelArray bias_grad_{};
  std::vector<std::uint32_t> touched_;
  std::vector<char> touched_mark_;
};

// Caches indexed dev sets so checkpoints can be scored repeatedly.
class DevScorer {
 public:
  DevScorer(const FeatureSpace& space, const DevSets& dev) {
    auto add = [&](const Dataset* d) {
      if (d && !cache_.count(d)) cache_.emplace(d, space.IndexAll(*d));
    };
    add(dev.in_domain);
    for (const Dataset* d : dev.targets) add(d);
  }

  std::size_t Correct(const SoftmaxModel& model, const Dataset& d) const {
    const auto& xs = cache_.at(&d);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (IsCorrect(model.Predict(xs[i]), d[i].gold, d.scheme())) ++correct;
    }
    return correct;
  }

 private:
  std::map<const Dataset*, std::vector<IndexedFeatures>> cache_;
};

}  // namespace

SoftmaxModel::SoftmaxModel(FeatureSpace space)
    : space_(std::move(space)),
      weights_(space_.dimension() * kNumLabels, 0.0) {}

LabelArray SoftmaxModel::Logits(const IndexedFeatures& x) const {
  LabelArray z = bias_;
  for (std::size_t n = 0; n < x.index.size(); ++n) {
    const double* row = &weights_[std::size_t{x.index[n]} * kNumLabels];
    for (std::size_t k = 0; k < kNumLabels; ++k) z[k] += row[k] * x.value[n];
  }
  return z;
}

ProbDist SoftmaxModel::Predict(const IndexedFeatures& x) const {
  return ProbDist::FromLogits(Logits(x));
}

ProbDist SoftmaxModel::Predict(const FeatureVector& x) const {
  return Predict(space_.Index(x));
}

ProbDist SoftmaxModel::Predict(const NliInstance& x) const {
  return Predict(space_.Index(x));
}

Predictor SoftmaxModel::AsPredictor() const {
  return [this](const NliInstance& x) { return Predict(x); };
}

bool SoftmaxModel::IsFinite() const {
  return std::all_of(weights_.begin(), weights_.end(),
                     [](double v) { return std::isfinite(v); }) &&
         std::all_of(bias_.begin(), bias_.end(),
                     [](double v) { return std::isfinite(v); });
}

void SoftmaxModel::Save(std::ostream& out) const {
  out << kModelMagic << '\n';
  space_.Save(out);
  out << "bias " << FormatDouble(bias_[0]) << ' ' << FormatDouble(bias_[1])
      << ' ' << FormatDouble(bias_[2]) << '\n';
  std::size_t rows = 0;
  const std::size_t dim = space_.dimension();
  auto nonzero = [&](std::size_t f) {
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      if (weights_[f * kNumLabels + k] != 0.0) return true;
    }
    return false;
  };
  for (std::size_t f = 0; f < dim; ++f) rows += nonzero(f);
  out << "rows " << rows << '\n';
  for (std::size_t f = 0; f < dim; ++f) {
    if (!nonzero(f)) continue;
    out << f;
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      out << ' ' << FormatDouble(weights_[f * kNumLabels + k]);
    }
    out << '\n';
  }
}

SoftmaxModel SoftmaxModel::Load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kModelMagic) {
    throw Error("not a model checkpoint (expected '" +
                std::string(kModelMagic) + "')");
  }
  SoftmaxModel model(FeatureSpace::Load(in));
  const std::string bias_line = ExpectLine(in, "bias");
  const auto bias = SplitView(bias_line, ' ');
  if (bias.size() != kNumLabels) throw Error("malformed bias line");
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    model.bias_[k] = ParseDouble(bias[k]);
  }
  const auto rows = ParseUint(ExpectLine(in, "rows"));
  for (std::uint64_t r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) throw Error("truncated weight rows");
    const auto parts = SplitView(line, ' ');
    if (parts.size() != kNumLabels + 1) throw Error("malformed weight row");
    const auto f = ParseUint(parts[0]);
    if (f >= model.dimension()) throw Error("weight row index out of range");
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      model.weights_[f * kNumLabels + k] = ParseDouble(parts[k + 1]);
    }
  }
  return model;
}

ProbDist predict(const SoftmaxModel& model, const FeatureVector& x) {
  return model.Predict(x);
}

double weighted_batch_loss(std::span<const double> losses,
                           std::span<const double> weights) {
  if (losses.size() != weights.size()) {
    throw InvalidArgument("losses and weights differ in length");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (!(weights[i] >= 0.0)) throw InvalidArgument("negative instance weight");
    num += weights[i] * losses[i];
    den += weights[i];
  }
  if (den == 0.0) throw InvalidArgument("instance weights sum to zero");
  return num / den;
}

double InstanceLoss(const SoftmaxModel& model, const TrainingExample& x) {
  const LabelArray z = Shifted(model.Logits(*x.features), x.log_bias);
  return CrossEntropy(z, Index(x.gold));
}

double BatchObjective(const SoftmaxModel& model,
                      std::span<const TrainingExample> batch, double l2) {
  std::vector<double> losses;
  std::vector<double> weights;
  losses.reserve(batch.size());
  weights.reserve(batch.size());
  for (const auto& x : batch) {
    losses.push_back(x.weight > 0.0 ? InstanceLoss(model, x) : 0.0);
    weights.push_back(x.weight);
  }
  const double reg = l2 != 0.0 ? l2 * SquaredNorm(model.weights()) : 0.0;
  return weighted_batch_loss(losses, weights) + reg;
}

Gradient ObjectiveGradient(const SoftmaxModel& model,
                           std::span<const TrainingExample> batch, double l2) {
  Gradient g;
  g.objective = BatchObjective(model, batch, l2);
  g.weights.assign(model.weights().size(), 0.0);
  const double total = WeightSum(batch);
  for (const auto& x : batch) {
    if (x.weight == 0.0) continue;
    const LabelArray z = Shifted(model.Logits(*x.features), x.log_bias);
    const double lse = LogSumExp(z);
    LabelArray d;
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      d[k] = x.weight / total *
             (std::exp(z[k] - lse) - (k == Index(x.gold) ? 1.0 : 0.0));
      g.bias[k] += d[k];
    }
    const auto& f = *x.features;
    for (std::size_t n = 0; n < f.index.size(); ++n) {
      for (std::size_t k = 0; k < kNumLabels; ++k) {
        g.weights[std::size_t{f.index[n]} * kNumLabels + k] += d[k] * f.value[n];
      }
    }
  }
  if (l2 != 0.0) {
    const auto& w = model.weights();
    for (std::size_t i = 0; i < w.size(); ++i) g.weights[i] += 2.0 * l2 * w[i];
  }
  return g;
}

double gradient_check(const SoftmaxModel& model,
                      std::span<const TrainingExample> batch, double l2) {
  constexpr double kStep = 1e-5;
  const Gradient analytic = ObjectiveGradient(model, batch, l2);
  double worst = 0.0;
  auto compare = [&](double a, double numeric) {
    const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
    worst = std::max(worst, std::fabs(a - numeric) / denom);
  };
  // Each term is the exact change of one instance loss under z_k +/- d,
  // written with expm1/log1p. Subtracting two rounded losses instead leaves
  // noise near 1e-11 per instance, comparable to small gradient entries.
  const double total = WeightSum(batch);
  std::vector<LabelArray> logits;
  logits.reserve(batch.size());
  for (const auto& x : batch) {
    logits.push_back(Shifted(model.Logits(*x.features), x.log_bias));
  }
  auto central = [&](std::size_t k, auto&& shift, double param,
                     bool penalized) {
    double diff = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto& x = batch[i];
      if (x.weight == 0.0) continue;
      const double d = kStep * shift(x);
      if (d == 0.0) continue;
      diff += x.weight / total *
              LossShiftDifference(logits[i], Index(x.gold), k, d);
    }
    if (penalized && l2 != 0.0) diff += l2 * 4.0 * param * kStep;
    return diff / (2.0 * kStep);
  };

  for (std::size_t k = 0; k < kNumLabels; ++k) {
    compare(analytic.bias[k],
            central(k, [](const TrainingExample&) { return 1.0; }, 0.0,
                    false));
  }
  std::set<std::size_t> rows;
  if (model.dimension() <= 256) {
    for (std::size_t f = 0; f < model.dimension(); ++f) rows.insert(f);
  } else {
    for (const auto& x : batch) {
      rows.insert(x.features->index.begin(), x.features->index.end());
    }
  }
  for (std::size_t f : rows) {
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      const std::size_t i = f * kNumLabels + k;
      auto value = [f](const TrainingExample& x) {
        double v = 0.0;
        const auto& fv = *x.features;
        for (std::size_t n = 0; n < fv.index.size(); ++n) {
          if (fv.index[n] == f) v += fv.value[n];
        }
        return v;
      };
      compare(analytic.weights[i],
              central(k, value, model.weights()[i], true));
    }
  }
  return worst;
}

TrainResult train_examples(SoftmaxModel init,
                           std::span<const TrainingExample> examples,
                           const TrainingConfig& cfg, const DevSets* dev) {
  if (cfg.batch_size == 0) throw InvalidArgument("batch_size must be >= 1");
  if (cfg.epochs == 0) throw InvalidArgument("epochs must be >= 1");
  if (examples.empty()) throw InvalidArgument("no training examples");
  if (WeightSum(examples) <= 0.0) {
    throw InvalidArgument("instance weights sum to zero");
  }

  TrainResult result;
  SoftmaxModel current = std::move(init);
  ScaledSgd sgd(current);
  std::optional<DevScorer> scorer;
  if (dev) scorer.emplace(current.space(), *dev);

  // Patience tracks the set the strategy selects on (in-domain, or the merged
  // set for mixed).
  std::vector<const Dataset*> patience_sets;
  if (dev && dev->in_domain) {
    patience_sets.push_back(dev->in_domain);
    if (cfg.selection == SelectionStrategy::kMixed) {
      patience_sets.insert(patience_sets.end(), dev->targets.begin(),
                           dev->targets.end());
    }
  }
  std::size_t best_dev = 0;
  std::size_t since_best = 0;

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(cfg.seed);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.Shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      double total = 0.0;
      for (std::size_t j = start; j < end; ++j) total += examples[order[j]].weight;
      if (total == 0.0) continue;
      for (std::size_t j = start; j < end; ++j) {
        const auto& x = examples[order[j]];
        if (x.weight != 0.0) sgd.Accumulate(x, x.weight / total);
      }
      sgd.Step(cfg.learning_rate, cfg.l2);
    }
    sgd.WriteTo(current);
    const double objective = BatchObjective(current, examples, cfg.l2);
    if (!std::isfinite(objective) || !current.IsFinite()) {
      throw Error("training diverged at epoch " + std::to_string(epoch) +
                  " (non-finite loss)");
    }
    result.epoch_objective.push_back(objective);
    result.epochs_run = epoch;

    if (!dev) continue;
    result.checkpoints.push_back(current);
    if (cfg.patience == 0 || patience_sets.empty()) continue;
    std::size_t score = 0;
    for (const Dataset* d : patience_sets) score += scorer->Correct(current, *d);
    if (epoch == 1 || score > best_dev) {
      best_dev = score;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }

  if (!dev) {
    result.model = std::move(current);
    result.selected_epoch = result.epochs_run;
    return result;
  }
  const Selection sel = select_model(
      result.checkpoints.size(), cfg.selection, *dev,
      [&](std::size_t c, const Dataset& d) {
        return scorer->Correct(result.checkpoints[c], d);
      });
  result.model = result.checkpoints[sel.chosen];
  result.selected_epoch = sel.chosen + 1;
  result.per_target = sel.per_target;
  return result;
}

TrainResult train(SoftmaxModel init, const Dataset& data,
                  std::span<const double> weights, const TrainingConfig& cfg,
                  const DevSets* dev) {
  if (data.scheme() != LabelScheme::kThreeWay) {
    throw InvalidArgument("training data must use the three-way scheme");
  }
  if (!weights.empty() && weights.size() != data.size()) {
    throw InvalidArgument("expected one weight per training instance");
  }
  const auto features = init.space().IndexAll(data);
  std::vector<TrainingExample> examples(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    examples[i].features = &features[i];
    examples[i].gold = GoldLabel(data[i]);
    examples[i].weight = weights.empty() ? 1.0 : weights[i];
  }
  return train_examples(std::move(init), examples, cfg, dev);
}

SoftmaxModel InitModel(FeatureSet set, const Dataset& data,
                       const FeatureOptions& options) {
  return SoftmaxModel(FeatureSpace::Fit(set, options, data));
}

std::string_view ExpertName(ExpertKind k) {
  switch (k) {
    case ExpertKind::kWordOverlap:
      return "wordOverlap";
    case ExpertKind::kPartialInput:
      return "partialInput";
    case ExpertKind::kSentenceLength:
      return "sentenceLength";
  }
  return "?";
}

ExpertKind ParseExpert(std::string_view name) {
  for (auto k : kAllExperts) {
    if (ExpertName(k) == name) return k;
  }
  throw InvalidArgument("unknown bias expert '" + std::string(name) +
                        "' (valid: wordOverlap, partialInput, sentenceLength)");
}

FeatureSet ExpertFeatures(ExpertKind k) {
  switch (k) {
    case ExpertKind::kWordOverlap:
      return FeatureSet::kWordOverlap;
    case ExpertKind::kPartialInput:
      return FeatureSet::kHypothesisOnly;
    case ExpertKind::kSentenceLength:
      return FeatureSet::kLength;
  }
  return FeatureSet::kPair;
}

BiasExpert::BiasExpert(ExpertKind kind, SoftmaxModel model)
    : kind_(kind), model_(std::move(model)) {
  if (model_.space().set() != ExpertFeatures(kind_)) {
    throw InvalidArgument(std::string(ExpertName(kind_)) +
                          " expert needs feature set " +
                          std::string(FeatureSetName(ExpertFeatures(kind_))));
  }
}

BiasExpert train_expert(ExpertKind kind, const Dataset& data,
                        const TrainingConfig& cfg) {
  auto init = InitModel(ExpertFeatures(kind), data, cfg.features);
  return BiasExpert(kind, train(std::move(init), data, {}, cfg).model);
}

void SaveModel(const SoftmaxModel& model, const std::filesystem::path& path) {
  std::ostringstream out;
  model.Save(out);
  WriteFile(path, out.str());
}

SoftmaxModel LoadModel(const std::filesystem::path& path) {
  std::istringstream in(ReadFile(path));
  try {
    return SoftmaxModel::Load(in);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void SaveExpert(const BiasExpert& expert, const std::filesystem::path& path) {
  std::ostringstream out;
  out << kExpertMagic << '\n' << "expert " << expert.name() << '\n';
  expert.model().Save(out);
  WriteFile(path, out.str());
}

BiasExpert LoadExpert(const std::filesystem::path& path) {
  std::istringstream in(ReadFile(path));
  try {
    std::string line;
    if (!std::getline(in, line) || line != kExpertMagic) {
      throw Error("not an expert checkpoint");
    }
    const auto kind = ParseExpert(ExpectLine(in, "expert"));
    return BiasExpert(kind, SoftmaxModel::Load(in));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace nlidebias
