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

#include "nlidebias/report.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlidebias/error.h"
#include "nlidebias/text_io.h"

namespace nlidebias {
namespace {

std::string Percent(double v) {
  if (std::isnan(v)) return "-";
  return FormatFixed(100.0 * v, 1);
}

}  // namespace

std::string_view MetricName(Metric m) {
  return m == Metric::kAccuracy ? "accuracy" : "mcc";
}

Metric ParseMetric(std::string_view name) {
  if (name == "accuracy" || name == "acc") return Metric::kAccuracy;
  if (name == "mcc") return Metric::kMcc;
  throw InvalidArgument("unknown metric '" + std::string(name) +
                        "' (valid: accuracy, mcc)");
}

void EvalSuite::Add(const Dataset& data, Metric metric, std::string group) {
  for (const auto& e : entries_) {
    if (e.dataset->name() == data.name()) {
      throw InvalidArgument("dataset '" + data.name() +
                            "' appears twice in suite " + name_);
    }
  }
  entries_.push_back({&data, metric, std::move(group)});
}

std::vector<ProbDist> PredictAll(const Predictor& predict, const Dataset& data) {
  std::vector<ProbDist> out;
  out.reserve(data.size());
  for (const auto& x : data) out.push_back(predict(x));
  return out;
}

double Score(std::span<const ProbDist> preds, const Dataset& data,
             Metric metric) {
  std::vector<Verdict> golds;
  golds.reserve(data.size());
  for (const auto& x : data) golds.push_back(x.gold);
  return metric == Metric::kAccuracy ? accuracy(preds, golds, data.scheme())
                                     : mcc(preds, golds, data.scheme());
}

void EvalReport::AddColumn(std::string name, std::vector<double> column_scores) {
  if (column_scores.size() != rows.size()) {
    throw InvalidArgument("column '" + name + "' has " +
                          std::to_string(column_scores.size()) +
                          " scores for " + std::to_string(rows.size()) +
                          " rows");
  }
  if (std::find(columns.begin(), columns.end(), name) != columns.end()) {
    throw InvalidArgument("duplicate report column '" + name + "'");
  }
  columns.push_back(std::move(name));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    scores[r].push_back(column_scores[r]);
  }
}

std::vector<std::pair<std::string, std::vector<double>>>
EvalReport::GroupAverages() const {
  std::vector<std::pair<std::string, std::vector<double>>> out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const bool seen = std::any_of(out.begin(), out.end(), [&](const auto& g) {
      return g.first == groups[r];
    });
    if (seen) continue;
    std::vector<double> mean(columns.size(), 0.0);
    std::size_t n = 0;
    for (std::size_t s = r; s < rows.size(); ++s) {
      if (groups[s] != groups[r]) continue;
      ++n;
      for (std::size_t c = 0; c < columns.size(); ++c) mean[c] += scores[s][c];
    }
    for (double& m : mean) m /= static_cast<double>(n);
    out.emplace_back(groups[r], std::move(mean));
  }
  return out;
}

std::string EvalReport::Meta(std::string_view key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return v;
  }
  return {};
}

EvalReport EmptyReport(const EvalSuite& suite) {
  EvalReport report;
  for (const auto& e : suite.entries()) {
    report.rows.push_back(e.dataset->name());
    report.groups.push_back(e.group);
    report.metrics.push_back(e.metric);
    report.scores.emplace_back();
  }
  return report;
}

void AddRun(EvalReport& report, const EvalSuite& suite, std::string column,
            const Predictor& predict) {
  std::vector<double> col;
  for (const auto& e : suite.entries()) {
    col.push_back(Score(PredictAll(predict, *e.dataset), *e.dataset, e.metric));
  }
  report.AddColumn(std::move(column), std::move(col));
}

EvalReport evaluate(const EvalSuite& suite,
                    const std::vector<std::pair<std::string, Predictor>>& runs,
                    std::vector<std::pair<std::string, std::string>> metadata) {
  EvalReport report = EmptyReport(suite);
  report.metadata = std::move(metadata);
  for (const auto& [name, predict] : runs) AddRun(report, suite, name, predict);
  return report;
}

ReportFormat ParseReportFormat(std::string_view name) {
  if (name == "tsv") return ReportFormat::kTsv;
  if (name == "markdown" || name == "md") return ReportFormat::kMarkdown;
  throw InvalidArgument("unknown report format '" + std::string(name) +
                        "' (valid: tsv, markdown)");
}

std::string FormatReport(const EvalReport& report, ReportFormat format) {
  std::ostringstream out;
  const auto averages = report.GroupAverages();
  if (format == ReportFormat::kTsv) {
    for (const auto& [k, v] : report.metadata) {
      out << "#meta\t" << k << '\t' << v << '\n';
    }
    out << "dataset\tgroup\tmetric";
    for (const auto& c : report.columns) out << '\t' << c;
    out << '\n';
    for (std::size_t r = 0; r < report.rows.size(); ++r) {
      out << report.rows[r] << '\t' << report.groups[r] << '\t'
          << MetricName(report.metrics[r]);
      for (double v : report.scores[r]) out << '\t' << FormatDouble(v);
      out << '\n';
    }
    for (const auto& [group, mean] : averages) {
      out << "#avg\t" << group << "\t-";
      for (double v : mean) out << '\t' << FormatDouble(v);
      out << '\n';
    }
    return out.str();
  }

  for (const auto& [k, v] : report.metadata) {
    out << "- " << k << ": " << v << '\n';
  }
  if (!report.metadata.empty()) out << '\n';
  out << "| Dataset |";
  for (const auto& c : report.columns) out << ' ' << c << " |";
  out << "\n|---|";
  for (std::size_t c = 0; c < report.columns.size(); ++c) out << "---:|";
  out << '\n';
  for (std::size_t r = 0; r < report.rows.size(); ++r) {
    out << "| " << report.rows[r];
    if (report.metrics[r] == Metric::kMcc) out << " (mcc)";
    out << " |";
    for (double v : report.scores[r]) out << ' ' << Percent(v) << " |";
    out << '\n';
  }
  for (const auto& [group, mean] : averages) {
    out << "| Avg. " << group << " |";
    for (double v : mean) out << ' ' << Percent(v) << " |";
    out << '\n';
  }
  return out.str();
}

void emit_report(const EvalReport& report, ReportFormat format,
                 const std::filesystem::path& path) {
  WriteFile(path, FormatReport(report, format));
}

EvalReport ParseReportTsv(std::string_view content, std::string_view source) {
  EvalReport report;
  bool header = false;
  std::size_t line_no = 0;
  const std::string src(source);
  for (auto line : SplitView(content, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    const auto cols = SplitView(line, '\t');
    try {
      if (cols[0] == "#meta") {
        if (cols.size() != 3) throw InvalidArgument("bad metadata line");
        report.metadata.emplace_back(cols[1], cols[2]);
      } else if (cols[0] == "#avg") {
        continue;
      } else if (!header) {
        if (cols.size() < 3 || cols[0] != "dataset") {
          throw InvalidArgument("expected the 'dataset' header");
        }
        for (std::size_t c = 3; c < cols.size(); ++c) {
          report.columns.emplace_back(cols[c]);
        }
        header = true;
      } else {
        if (cols.size() != 3 + report.columns.size()) {
          throw InvalidArgument("wrong number of columns");
        }
        report.rows.emplace_back(cols[0]);
        report.groups.emplace_back(cols[1]);
        report.metrics.push_back(ParseMetric(cols[2]));
        std::vector<double> row;
        for (std::size_t c = 3; c < cols.size(); ++c) {
          row.push_back(ParseDouble(cols[c]));
        }
        report.scores.push_back(std::move(row));
      }
    } catch (const InvalidArgument& e) {
      throw ParseError(src, line_no, e.what());
    }
  }
  if (!header) throw ParseError(src, line_no, "no report header");
  return report;
}

EvalReport LoadReport(const std::filesystem::path& path) {
  return ParseReportTsv(ReadFile(path), path.string());
}

EvalReport MergeReports(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw InvalidArgument("no reports to merge");
  EvalReport out = reports.front();
  for (std::size_t i = 1; i < reports.size(); ++i) {
    const auto& r = reports[i];
    if (r.rows != out.rows || r.groups != out.groups) {
      throw InvalidArgument("reports cover different datasets");
    }
    for (std::size_t c = 0; c < r.columns.size(); ++c) {
      std::vector<double> col;
      for (const auto& row : r.scores) col.push_back(row[c]);
      out.AddColumn(r.columns[c], std::move(col));
    }
    for (const auto& kv : r.metadata) {
      if (std::find(out.metadata.begin(), out.metadata.end(), kv) ==
          out.metadata.end()) {
        out.metadata.push_back(kv);
      }
    }
  }
  return out;
}

std::string FormatPredictions(const Dataset& data,
                              std::span<const ProbDist> preds) {
  if (preds.size() != data.size()) {
    throw InvalidArgument("one prediction per instance expected");
  }
  std::ostringstream out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data[i].id;
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      out << '\t' << FormatDouble(preds[i][k]);
    }
    out << '\n';
  }
  return out.str();
}

std::vector<std::pair<std::string, ProbDist>> ParsePredictions(
    std::string_view content, std::string_view source) {
  std::vector<std::pair<std::string, ProbDist>> out;
  std::size_t line_no = 0;
  for (auto line : SplitView(content, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    const auto cols = SplitView(line, '\t');
    if (cols.size() != 4) {
      throw ParseError(std::string(source), line_no,
                       "expected id, p_E, p_N, p_C");
    }
    try {
      LabelArray p;
      for (std::size_t k = 0; k < kNumLabels; ++k) {
        p[k] = ParseDouble(cols[k + 1]);
      }
      out.emplace_back(std::string(cols[0]), ProbDist::FromWeights(p));
    } catch (const InvalidArgument& e) {
      throw ParseError(std::string(source), line_no, e.what());
    }
  }
  return out;
}

std::string FormatCorrelation(const CorrelationMatrix& m) {
  std::ostringstream out;
  out << "dataset";
  for (const auto& n : m.names) out << '\t' << n;
  out << '\n';
  for (std::size_t i = 0; i < m.names.size(); ++i) {
    out << m.names[i];
    for (double v : m.values[i]) {
      out << '\t' << (std::isnan(v) ? std::string("nan") : FormatDouble(v));
    }
    out << '\n';
  }
  return out.str();
}

std::string FormatRunMatrix(const RunMatrix& m) {
  std::ostringstream out;
  out << "run";
  for (const auto& c : m.columns()) out << '\t' << c;
  out << '\n';
  for (std::size_t r = 0; r < m.rows().size(); ++r) {
    out << m.rows()[r];
    for (std::size_t c = 0; c < m.columns().size(); ++c) {
      const auto v = m.at(r, c);
      out << '\t' << (v ? FormatDouble(*v) : std::string("missing"));
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace nlidebias
