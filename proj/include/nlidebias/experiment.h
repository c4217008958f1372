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

// Config-driven experiments behind the command-line tool.

#ifndef NLIDEBIAS_EXPERIMENT_H_
#define NLIDEBIAS_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nlidebias/augment.h"
#include "nlidebias/classifier.h"
#include "nlidebias/debias.h"
#include "nlidebias/merge.h"
#include "nlidebias/report.h"
#include "nlidebias/synthetic.h"

namespace nlidebias {

// One evaluation dataset. `ref` is a file path, "synthetic:<split>" (train,
// dev, test_biased, test_anti_biased) or "hard:<expert>:<ref>".
struct DatasetSpec {
  std::string name;
  std::string ref;
  LabelScheme scheme = LabelScheme::kThreeWay;
  Metric metric = Metric::kAccuracy;
  std::string group;
};

// A strategy with its experts, written "ReW:partialInput" or
// "MixW:wordOverlap+partialInput".
struct PlanSpec {
  Strategy strategy = Strategy::kBaseline;
  std::vector<ExpertKind> experts;
  std::string label;
};

PlanSpec ParsePlanSpec(std::string_view text);

struct ExperimentConfig {
  // Directory relative paths are resolved against.
  std::filesystem::path base_dir;

  // [run]
  std::string name = "run";
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 1;

  // [data]
  std::string train = "synthetic";
  std::string dev;
  std::vector<std::string> target_devs;

  // [synthetic]
  SyntheticBiasSpec synthetic;

  // [training]
  TrainingConfig training;
  FeatureSet prime_features = FeatureSet::kPair;

  // [debias]
  PlanSpec plan;
  EnsembleRule ensemble_rule = EnsembleRule::kMean;
  std::string expert_dir;

  // [merge]
  std::vector<std::string> merge_sources;
  std::vector<std::string> merge_dev_sources;
  MergeMode merge_mode = MergeMode::kPlain;
  std::string performance_table;
  std::optional<EnsembleMode> ensemble;
  std::vector<FeatureSet> ensemble_features;
  std::vector<std::uint64_t> ensemble_seeds;

  // [augment]
  AugmentMethod augment_method = AugmentMethod::kTextSwap;
  std::string augment_input;
  std::string teacher;
  std::string judge;
  std::string lexicon;
  std::string embeddings;
  std::vector<std::string> transform_command;
  int timeout_ms = 10000;
  std::size_t max_in_flight = 16;
  TransformParams transform;
  SynonymParams synonym;

  // [eval] and [suite]
  std::vector<DatasetSpec> suite;
  std::vector<ReportFormat> formats = {ReportFormat::kTsv,
                                       ReportFormat::kMarkdown};
  std::string eval_model;

  // [sweep]
  std::vector<PlanSpec> sweep_plans;
  std::vector<std::uint64_t> sweep_seeds;
  std::string correlation_group;

  // Canonical "section.key=value" lines (output_dir excluded) and their
  // FNV-1a digest.
  std::map<std::string, std::string> canonical;
  std::string hash;
};

// Parses a sectioned key=value file. Every problem found is collected and
// reported together as a ConfigError. `overrides` are "section.key=value"
// strings applied on top of the file.
ExperimentConfig ParseConfig(std::string_view content,
                             const std::filesystem::path& base_dir,
                             const std::vector<std::string>& overrides = {});
ExperimentConfig LoadConfig(const std::filesystem::path& path,
                            const std::vector<std::string>& overrides = {});

struct CommandResult {
  std::vector<std::filesystem::path> artifacts;
  std::optional<EvalReport> report;
};

CommandResult cmd_gen_synthetic(const ExperimentConfig& cfg);
CommandResult cmd_train_expert(const ExperimentConfig& cfg);
CommandResult cmd_train(const ExperimentConfig& cfg);
CommandResult cmd_augment(const ExperimentConfig& cfg);
CommandResult cmd_merge(const ExperimentConfig& cfg);
CommandResult cmd_eval(const ExperimentConfig& cfg);
CommandResult cmd_sweep(const ExperimentConfig& cfg);
// Combines report TSVs column-wise and writes them to `output_dir`.
CommandResult cmd_report(const std::vector<std::filesystem::path>& inputs,
                         const std::filesystem::path& output_dir,
                         const std::vector<ReportFormat>& formats);

// Command-line entry point; returns the process exit code (0 success,
// 1 validation error, 2 runtime error).
int RunCli(int argc, char** argv);

}  // namespace nlidebias

#endif  // NLIDEBIAS_EXPERIMENT_H_
