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

// Multinomial softmax regression trained with weighted cross-entropy. Serves
// both as the prime model and as the bias-only experts.

#ifndef NLIDEBIAS_CLASSIFIER_H_
#define NLIDEBIAS_CLASSIFIER_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nlidebias/corpus.h"
#include "nlidebias/evalharness.h"
#include "nlidebias/features.h"
#include "nlidebias/prob.h"

namespace nlidebias {

class SoftmaxModel {
 public:
  SoftmaxModel() = default;
  // Zero-initialized weights over `space`.
  explicit SoftmaxModel(FeatureSpace space);

  LabelArray Logits(const IndexedFeatures& x) const;
  ProbDist Predict(const IndexedFeatures& x) const;
  ProbDist Predict(const FeatureVector& x) const;
  ProbDist Predict(const NliInstance& x) const;
  Predictor AsPredictor() const;

  const FeatureSpace& space() const { return space_; }
  std::size_t dimension() const { return space_.dimension(); }

  // Row-major by feature: weight(f, k) = weights()[f * kNumLabels + k].
  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }
  LabelArray& bias() { return bias_; }
  const LabelArray& bias() const { return bias_; }

  bool IsFinite() const;

  void Save(std::ostream& out) const;
  static SoftmaxModel Load(std::istream& in);

  friend bool operator==(const SoftmaxModel&, const SoftmaxModel&) = default;

 private:
  FeatureSpace space_;
  std::vector<double> weights_;
  LabelArray bias_{};
};

// softmax(Wx + c), clamped and renormalized.
ProbDist predict(const SoftmaxModel& model, const FeatureVector& x);

struct TrainingConfig {
  double learning_rate = 0.5;
  std::size_t epochs = 20;
  // k, the mini-batch size.
  std::size_t batch_size = 32;
  // Coefficient of ||W||^2 (bias excluded).
  double l2 = 1e-5;
  std::uint64_t seed = 1;
  // Stop after this many epochs without dev improvement; 0 disables.
  std::size_t patience = 0;
  SelectionStrategy selection = SelectionStrategy::kOrigin;
  FeatureOptions features;

  friend bool operator==(const TrainingConfig&,
                         const TrainingConfig&) = default;
};

// One training instance after feature indexing.
struct TrainingExample {
  const IndexedFeatures* features = nullptr;
  Label gold = Label::kEntailment;
  // alpha_i >= 0.
  double weight = 1.0;
  // Sum of frozen expert log-probabilities added to the prime's logits
  // (product-of-experts training). Zero for plain training.
  LabelArray log_bias{};
};

// sum_i alpha_i l_i / sum_i alpha_i. Throws InvalidArgument on length mismatch,
// negative weights or a zero weight sum.
double weighted_batch_loss(std::span<const double> losses,
                           std::span<const double> weights);

// -log softmax(Wx + c + log_bias)[gold]. With zero log_bias this is the plain
// cross-entropy of the model's own prediction.
double InstanceLoss(const SoftmaxModel& model, const TrainingExample& x);

// Weighted batch loss plus l2 * ||W||^2.
double BatchObjective(const SoftmaxModel& model,
                      std::span<const TrainingExample> batch, double l2);

struct Gradient {
  double objective = 0.0;
  std::vector<double> weights;  // same layout as SoftmaxModel::weights()
  LabelArray bias{};
};

// Analytic gradient of BatchObjective. The expert term is constant, so the
// gradient flows through the prime's logits only.
Gradient ObjectiveGradient(const SoftmaxModel& model,
                           std::span<const TrainingExample> batch, double l2);

// Max relative error between ObjectiveGradient and central differences
// (h = 1e-5), over the bias and every weight row touched by the batch (all
// rows when the model is small). Relative error is |a - n| / max(|a|, |n|,
// 1e-8).
double gradient_check(const SoftmaxModel& model,
                      std::span<const TrainingExample> batch, double l2 = 0.0);

struct TrainResult {
  SoftmaxModel model;
  // 1-based epoch of `model`.
  std::size_t selected_epoch = 0;
  std::size_t epochs_run = 0;
  // Full-data objective after each epoch.
  std::vector<double> epoch_objective;
  // Populated when dev sets are given: one model per epoch.
  std::vector<SoftmaxModel> checkpoints;
  // Oracle selection: (target dataset, checkpoint index).
  std::vector<std::pair<std::string, std::size_t>> per_target;
};

// Mini-batch SGD over `examples` (shuffled each epoch with cfg.seed). Batches
// whose weights sum to zero are skipped; the total weight must be positive.
// When `dev` is given, per-epoch checkpoints are kept and the returned model is
// chosen with cfg.selection; otherwise the last epoch is returned. Throws
// Error naming the epoch when the objective becomes non-finite.
TrainResult train_examples(SoftmaxModel init,
                           std::span<const TrainingExample> examples,
                           const TrainingConfig& cfg,
                           const DevSets* dev = nullptr);

// Convenience wrapper: indexes `data` with the model's feature space.
// `weights` must have one entry per instance (empty means uniform).
TrainResult train(SoftmaxModel init, const Dataset& data,
                  std::span<const double> weights, const TrainingConfig& cfg,
                  const DevSets* dev = nullptr);

// Fits a feature space of `set` on `data` and returns a zero model over it.
SoftmaxModel InitModel(FeatureSet set, const Dataset& data,
                       const FeatureOptions& options);

enum class ExpertKind : std::uint8_t { kWordOverlap, kPartialInput, kSentenceLength };

std::string_view ExpertName(ExpertKind k);
// Throws InvalidArgument listing the valid names.
ExpertKind ParseExpert(std::string_view name);
FeatureSet ExpertFeatures(ExpertKind k);
inline constexpr std::array<ExpertKind, 3> kAllExperts = {
    ExpertKind::kWordOverlap, ExpertKind::kPartialInput,
    ExpertKind::kSentenceLength};

// A frozen bias-only model.
class BiasExpert {
 public:
  BiasExpert(ExpertKind kind, SoftmaxModel model);

  ExpertKind kind() const { return kind_; }
  std::string_view name() const { return ExpertName(kind_); }
  const SoftmaxModel& model() const { return model_; }
  ProbDist Predict(const NliInstance& x) const { return model_.Predict(x); }

 private:
  ExpertKind kind_;
  SoftmaxModel model_;
};

// Trains a bias-only model on `data` with uniform weights.
BiasExpert train_expert(ExpertKind kind, const Dataset& data,
                        const TrainingConfig& cfg);

// Versioned text checkpoints; doubles use shortest round-trip form so a
// save/load cycle is exact.
void SaveModel(const SoftmaxModel& model, const std::filesystem::path& path);
SoftmaxModel LoadModel(const std::filesystem::path& path);
void SaveExpert(const BiasExpert& expert, const std::filesystem::path& path);
BiasExpert LoadExpert(const std::filesystem::path& path);

}  // namespace nlidebias

#endif  // NLIDEBIAS_CLASSIFIER_H_
