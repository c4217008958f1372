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

// Merging heterogeneous training sets with per-source instance weights, and
// ensembles of independently trained prime models.

#ifndef NLIDEBIAS_MERGE_H_
#define NLIDEBIAS_MERGE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nlidebias/classifier.h"
#include "nlidebias/corpus.h"
#include "nlidebias/prob.h"

namespace nlidebias {

enum class MergeMode : std::uint8_t {
  kPlain,  // alpha = 1
  kSR,     // alpha = (sum_k n_k) / n_j
  kPR,     // alpha = p_j / sum_k p_k
};

std::string_view MergeModeName(MergeMode m);
MergeMode ParseMergeMode(std::string_view name);

struct MergeSource {
  // Non-owning.
  const Dataset* train = nullptr;
  const Dataset* dev = nullptr;
  std::optional<double> performance;
};

struct MergePlan {
  std::vector<MergeSource> sources;
  MergeMode mode = MergeMode::kPlain;
};

// One weight per instance, sources concatenated in plan order. Throw
// InvalidArgument on an empty source (SR) or a missing / non-positive
// performance (PR).
std::vector<double> size_weights(const MergePlan& plan);
std::vector<double> performance_weights(const MergePlan& plan);

struct MergedData {
  Dataset train;
  std::vector<double> weights;
  // Present when every source has a dev set.
  std::optional<Dataset> dev;
};

// Concatenates the sources. Instances without a source tag get their
// dataset's name. Throws InvalidArgument unless every source is three-way.
MergedData merge_datasets(const MergePlan& plan,
                          const std::string& name = "merged");

// Reads "source<TAB>p" lines.
std::map<std::string, double> load_performance_table(
    const std::filesystem::path& path);

enum class EnsembleMode : std::uint8_t { kMixed, kSingle };

std::string_view EnsembleModeName(EnsembleMode m);
EnsembleMode ParseEnsembleMode(std::string_view name);

struct MemberSpec {
  FeatureSet features = FeatureSet::kPair;
  TrainingConfig config;
};

// Mixed: at least two distinct configurations (seed aside). Single: one
// configuration, pairwise distinct seeds. Throws InvalidArgument otherwise.
void ValidateEnsemble(EnsembleMode mode, std::span<const MemberSpec> members);

// Mean of the member distributions.
ProbDist ensemble_predict(std::span<const ProbDist> members);
ProbDist ensemble_predict(std::span<const SoftmaxModel> members,
                          const NliInstance& x);

// Trains one prime model per member spec on `data` with `weights`.
std::vector<SoftmaxModel> train_ensemble(EnsembleMode mode,
                                         std::span<const MemberSpec> members,
                                         const Dataset& data,
                                         std::span<const double> weights,
                                         const DevSets* dev = nullptr);

}  // namespace nlidebias

#endif  // NLIDEBIAS_MERGE_H_
