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


#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlidebias/error.h"
#include "nlidebias/experiment.h"

namespace nlidebias {
namespace {

using Command = CommandResult (*)(const ExperimentConfig&);

struct ConfigCommand {
  const char* name;
  const char* help;
  Command run;
};

constexpr ConfigCommand kCommands[] = {
    {"gen-synthetic", "Write the synthetic planted-bias splits",
     cmd_gen_synthetic},
    {"train-expert", "Train and save bias-only experts", cmd_train_expert},
    {"train", "Train the debiasing plan and evaluate it", cmd_train},
    {"augment", "Augment a training set", cmd_augment},
    {"merge", "Train on merged, reweighted sources", cmd_merge},
    {"eval", "Evaluate a saved model on the suite", cmd_eval},
    {"sweep", "Run plans x seeds and correlate the results", cmd_sweep},
};

void PrintArtifacts(const CommandResult& result) {
  for (const auto& a : result.artifacts) std::cout << a.string() << '\n';
}

}  // namespace

int RunCli(int argc, char** argv) {
  CLI::App app{"Bias-mitigation experiments for NLI classifiers"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  const ConfigCommand* chosen = nullptr;
  for (const auto& c : kCommands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("config", config_path, "Experiment config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--set", overrides, "Override as section.key=value");
    sub->callback([&chosen, &c] { chosen = &c; });
  }

  std::vector<std::string> report_inputs;
  std::string report_out = ".";
  std::vector<std::string> report_formats = {"tsv", "markdown"};
  bool report_chosen = false;
  CLI::App* report = app.add_subcommand("report", "Combine report TSV files");
  report->add_option("inputs", report_inputs, "Report TSV files")
      ->required()
      ->check(CLI::ExistingFile);
  report->add_option("-o,--out", report_out, "Output directory");
  report->add_option("--format", report_formats, "tsv and/or markdown");
  report->callback([&report_chosen] { report_chosen = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (report_chosen) {
      std::vector<std::filesystem::path> inputs(report_inputs.begin(),
                                                report_inputs.end());
      std::vector<ReportFormat> formats;
      for (const auto& f : report_formats) {
        formats.push_back(ParseReportFormat(f));
      }
      PrintArtifacts(cmd_report(inputs, report_out, formats));
      return 0;
    }
    const ExperimentConfig cfg = LoadConfig(config_path, overrides);
    PrintArtifacts(chosen->run(cfg));
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace nlidebias
