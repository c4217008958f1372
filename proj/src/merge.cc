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

#include "nlidebias/merge.h"

#include <cmath>
#include <set>

#include "nlidebias/error.h"
#include "nlidebias/text_io.h"

namespace nlidebias {
namespace {

void CheckSources(const MergePlan& plan) {
  if (plan.sources.empty()) throw InvalidArgument("merge plan has no sources");
  for (const auto& s : plan.sources) {
    if (s.train == nullptr) throw InvalidArgument("merge source without data");
  }
}

// Repeats each source's weight over its instances.
std::vector<double> Expand(const MergePlan& plan,
                           const std::vector<double>& per_source) {
  std::vector<double> out;
  for (std::size_t j = 0; j < plan.sources.size(); ++j) {
    out.insert(out.end(), plan.sources[j].train->size(), per_source[j]);
  }
  return out;
}

std::vector<NliInstance> Tagged(const Dataset& d) {
  std::vector<NliInstance> out(d.begin(), d.end());
  for (auto& x : out) {
    if (x.source.empty()) x.source = d.name();
  }
  return out;
}

}  // namespace

std::string_view MergeModeName(MergeMode m) {
  switch (m) {
    case MergeMode::kPlain:
      return "plain";
    case MergeMode::kSR:
      return "SR";
    case MergeMode::kPR:
      return "PR";
  }
  return "?";
}

MergeMode ParseMergeMode(std::string_view name) {
  if (name == "plain" || name == "Plain") return MergeMode::kPlain;
  if (name == "SR" || name == "sr") return MergeMode::kSR;
  if (name == "PR" || name == "pr") return MergeMode::kPR;
  throw InvalidArgument("unknown merge mode '" + std::string(name) +
                        "' (valid: plain, SR, PR)");
}

std::vector<double> size_weights(const MergePlan& plan) {
  CheckSources(plan);
  double total = 0.0;
  for (const auto& s : plan.sources) {
    if (s.train->empty()) {
      throw InvalidArgument("empty merge source '" + s.train->name() + "'");
    }
    total += static_cast<double>(s.train->size());
  }
  std::vector<double> per_source;
  for (const auto& s : plan.sources) {
    per_source.push_back(total / static_cast<double>(s.train->size()));
  }
  return Expand(plan, per_source);
}

std::vector<double> performance_weights(const MergePlan& plan) {
  CheckSources(plan);
  double total = 0.0;
  for (const auto& s : plan.sources) {
    if (!s.performance || !(*s.performance > 0.0) ||
        !std::isfinite(*s.performance)) {
      throw InvalidArgument("PR needs a positive performance for source '" +
                            s.train->name() + "'");
    }
    total += *s.performance;
  }
  std::vector<double> per_source;
  for (const auto& s : plan.sources) per_source.push_back(*s.performance / total);
  return Expand(plan, per_source);
}

MergedData merge_datasets(const MergePlan& plan, const std::string& name) {
  CheckSources(plan);
  std::vector<NliInstance> train;
  std::vector<NliInstance> dev;
  bool all_dev = true;
  for (const auto& s : plan.sources) {
    if (s.train->scheme() != LabelScheme::kThreeWay ||
        (s.dev && s.dev->scheme() != LabelScheme::kThreeWay)) {
      throw InvalidArgument("merge source '" + s.train->name() +
                            "' is not three-way");
    }
    const auto part = Tagged(*s.train);
    train.insert(train.end(), part.begin(), part.end());
    if (s.dev) {
      const auto dpart = Tagged(*s.dev);
      dev.insert(dev.end(), dpart.begin(), dpart.end());
    } else {
      all_dev = false;
    }
  }
  std::vector<double> weights;
  switch (plan.mode) {
    case MergeMode::kPlain:
      weights.assign(train.size(), 1.0);
      break;
    case MergeMode::kSR:
      weights = size_weights(plan);
      break;
    case MergeMode::kPR:
      weights = performance_weights(plan);
      break;
  }
  MergedData out{Dataset(name, Split::kTrain, LabelScheme::kThreeWay,
                         std::move(train)),
                 std::move(weights), std::nullopt};
  if (all_dev) {
    out.dev.emplace(name + "-dev", Split::kDev, LabelScheme::kThreeWay,
                    std::move(dev));
  }
  return out;
}

std::map<std::string, double> load_performance_table(
    const std::filesystem::path& path) {
  const std::string content = ReadFile(path);
  std::map<std::string, double> out;
  std::size_t line_no = 0;
  for (auto line : SplitView(content, '\n')) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const auto cols = SplitView(line, '\t');
    if (cols.size() != 2) {
      throw ParseError(path.string(), line_no, "expected 'source<TAB>p'");
    }
    try {
      out[std::string(cols[0])] = ParseDouble(Trim(cols[1]));
    } catch (const InvalidArgument& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
  return out;
}

std::string_view EnsembleModeName(EnsembleMode m) {
  return m == EnsembleMode::kMixed ? "mixed" : "single";
}

EnsembleMode ParseEnsembleMode(std::string_view name) {
  if (name == "mixed") return EnsembleMode::kMixed;
  if (name == "single") return EnsembleMode::kSingle;
  throw InvalidArgument("unknown ensemble mode '" + std::string(name) +
                        "' (valid: mixed, single)");
}

void ValidateEnsemble(EnsembleMode mode, std::span<const MemberSpec> members) {
  if (members.empty()) throw InvalidArgument("ensemble has no members");
  auto same_config = [](const MemberSpec& a, const MemberSpec& b) {
    TrainingConfig ca = a.config;
    TrainingConfig cb = b.config;
    ca.seed = cb.seed = 0;
    return a.features == b.features && ca == cb;
  };
  if (mode == EnsembleMode::kMixed) {
    for (std::size_t i = 1; i < members.size(); ++i) {
      if (!same_config(members[0], members[i])) return;
    }
    throw InvalidArgument(
        "mixed ensemble needs at least two distinct member configurations");
  }
  std::set<std::uint64_t> seeds;
  for (const auto& m : members) {
    if (!same_config(members[0], m)) {
      throw InvalidArgument("single ensemble members must share a configuration");
    }
    if (!seeds.insert(m.config.seed).second) {
      throw InvalidArgument("single ensemble members need distinct seeds");
    }
  }
}

ProbDist ensemble_predict(std::span<const ProbDist> members) {
  if (members.empty()) throw InvalidArgument("ensemble has no members");
  LabelArray acc{};
  for (const auto& p : members) {
    for (std::size_t k = 0; k < kNumLabels; ++k) acc[k] += p[k];
  }
  return ProbDist::FromWeights(acc);
}

ProbDist ensemble_predict(std::span<const SoftmaxModel> members,
                          const NliInstance& x) {
  std::vector<ProbDist> preds;
  preds.reserve(members.size());
  for (const auto& m : members) preds.push_back(m.Predict(x));
  return ensemble_predict(preds);
}

std::vector<SoftmaxModel> train_ensemble(EnsembleMode mode,
                                         std::span<const MemberSpec> members,
                                         const Dataset& data,
                                         std::span<const double> weights,
                                         const DevSets* dev) {
  ValidateEnsemble(mode, members);
  std::vector<SoftmaxModel> out;
  for (const auto& m : members) {
    auto init = InitModel(m.features, data, m.config.features);
    out.push_back(train(std::move(init), data, weights, m.config, dev).model);
  }
  return out;
}

}  // namespace nlidebias
