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

// Evaluation suites, score tables and their TSV / markdown serialization.

#ifndef NLIDEBIAS_REPORT_H_
#define NLIDEBIAS_REPORT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nlidebias/corpus.h"
#include "nlidebias/evalharness.h"
#include "nlidebias/prob.h"

namespace nlidebias {

enum class Metric : std::uint8_t { kAccuracy, kMcc };

std::string_view MetricName(Metric m);
Metric ParseMetric(std::string_view name);

struct SuiteEntry {
  // Non-owning.
  const Dataset* dataset = nullptr;
  Metric metric = Metric::kAccuracy;
  // Averaging group, e.g. "adversarial" or "generalization".
  std::string group;
};

class EvalSuite {
 public:
  explicit EvalSuite(std::string name = "suite") : name_(std::move(name)) {}

  // Throws InvalidArgument on a duplicate dataset name.
  void Add(const Dataset& data, Metric metric, std::string group);

  const std::string& name() const { return name_; }
  const std::vector<SuiteEntry>& entries() const { return entries_; }

 private:
  std::string name_;
  std::vector<SuiteEntry> entries_;
};

std::vector<ProbDist> PredictAll(const Predictor& predict, const Dataset& data);

// Accuracy or MCC of `preds` on `data` under the dataset's scheme.
double Score(std::span<const ProbDist> preds, const Dataset& data,
             Metric metric);

// Dataset rows x run columns.
struct EvalReport {
  std::vector<std::string> rows;
  std::vector<std::string> groups;   // per row
  std::vector<Metric> metrics;       // per row
  std::vector<std::string> columns;
  std::vector<std::vector<double>> scores;  // [row][column]
  // Ordered key/value pairs (config hash, seeds, plan, ...).
  std::vector<std::pair<std::string, std::string>> metadata;

  // Appends a column; `column_scores` has one entry per row.
  void AddColumn(std::string name, std::vector<double> column_scores);
  // Group name -> per-column mean, groups in first-appearance order.
  std::vector<std::pair<std::string, std::vector<double>>> GroupAverages() const;
  std::string Meta(std::string_view key) const;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Report rows for `suite` with no columns yet.
EvalReport EmptyReport(const EvalSuite& suite);

// Scores `predict` on every suite dataset as a new column.
void AddRun(EvalReport& report, const EvalSuite& suite, std::string column,
            const Predictor& predict);

EvalReport evaluate(const EvalSuite& suite,
                    const std::vector<std::pair<std::string, Predictor>>& runs,
                    std::vector<std::pair<std::string, std::string>> metadata);

enum class ReportFormat : std::uint8_t { kTsv, kMarkdown };

ReportFormat ParseReportFormat(std::string_view name);

// TSV keeps full round-trip precision; markdown shows percentages with one
// decimal in a dataset-by-run table followed by group averages.
std::string FormatReport(const EvalReport& report, ReportFormat format);
void emit_report(const EvalReport& report, ReportFormat format,
                 const std::filesystem::path& path);

// Inverse of FormatReport(kTsv). Throws ParseError.
EvalReport ParseReportTsv(std::string_view content, std::string_view source);
EvalReport LoadReport(const std::filesystem::path& path);

// Column-wise union; rows must agree. Later metadata keys are appended when
// new.
EvalReport MergeReports(const std::vector<EvalReport>& reports);

// Predictions file: id, p_E, p_N, p_C per line.
std::string FormatPredictions(const Dataset& data,
                              std::span<const ProbDist> preds);
std::vector<std::pair<std::string, ProbDist>> ParsePredictions(
    std::string_view content, std::string_view source);

// Correlation matrix as TSV (NaN cells written as "nan").
std::string FormatCorrelation(const CorrelationMatrix& m);
std::string FormatRunMatrix(const RunMatrix& m);

}  // namespace nlidebias

#endif  // NLIDEBIAS_REPORT_H_
