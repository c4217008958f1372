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

#include "nlidebias/evalharness.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "nlidebias/error.h"

namespace nlidebias {
namespace {

void CheckSizes(std::size_t a, std::size_t b) {
  if (a != b) {
    throw InvalidArgument("length mismatch: " + std::to_string(a) + " vs " +
                          std::to_string(b));
  }
}

constexpr int kOutOfScheme = 5;

}  // namespace

std::optional<Verdict> map_prediction(Label argmax, LabelScheme scheme) {
  switch (scheme) {
    case LabelScheme::kThreeWay:
      return ToVerdict(argmax);
    case LabelScheme::kNotEntailmentEntailment:
      return argmax == Label::kEntailment ? Verdict::kEntailment
                                          : Verdict::kNotEntailment;
    case LabelScheme::kNotContradictionContradiction:
      return argmax == Label::kContradiction ? Verdict::kContradiction
                                             : Verdict::kNotContradiction;
    case LabelScheme::kEntailmentContradiction:
      if (argmax == Label::kNeutral) return std::nullopt;
      return ToVerdict(argmax);
    case LabelScheme::kNeutralEntailment:
      if (argmax == Label::kContradiction) return std::nullopt;
      return ToVerdict(argmax);
  }
  return std::nullopt;
}

std::optional<Verdict> map_prediction(const ProbDist& pred,
                                      LabelScheme scheme) {
  return map_prediction(pred.Argmax(), scheme);
}

bool IsCorrect(const ProbDist& pred, Verdict gold, LabelScheme scheme) {
  const auto v = map_prediction(pred, scheme);
  return v.has_value() && *v == gold;
}

double accuracy(std::span<const ProbDist> preds, std::span<const Verdict> golds,
                LabelScheme scheme) {
  CheckSizes(preds.size(), golds.size());
  if (preds.empty()) throw InvalidArgument("accuracy of an empty set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (IsCorrect(preds[i], golds[i], scheme)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

double mcc(std::span<const int> predicted, std::span<const int> gold) {
  CheckSizes(predicted.size(), gold.size());
  if (predicted.size() < 2) {
    throw InvalidArgument("MCC needs at least two instances");
  }
  std::map<int, double> p_count;
  std::map<int, double> t_count;
  double c = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    p_count[predicted[i]] += 1.0;
    t_count[gold[i]] += 1.0;
    if (predicted[i] == gold[i]) c += 1.0;
  }
  const double s = static_cast<double>(predicted.size());
  double pt = 0.0;
  for (const auto& [k, pk] : p_count) {
    const auto it = t_count.find(k);
    if (it != t_count.end()) pt += pk * it->second;
  }
  double pp = 0.0;
  for (const auto& [k, pk] : p_count) pp += pk * pk;
  double tt = 0.0;
  for (const auto& [k, tk] : t_count) tt += tk * tk;
  const double denom = std::sqrt((s * s - pp) * (s * s - tt));
  if (denom == 0.0) return 0.0;
  return (c * s - pt) / denom;
}

double mcc(std::span<const ProbDist> preds, std::span<const Verdict> golds,
           LabelScheme scheme) {
  CheckSizes(preds.size(), golds.size());
  std::vector<int> p(preds.size());
  std::vector<int> t(golds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto v = map_prediction(preds[i], scheme);
    p[i] = v ? static_cast<int>(*v) : kOutOfScheme;
    t[i] = static_cast<int>(golds[i]);
  }
  return mcc(p, t);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  CheckSizes(x.size(), y.size());
  if (x.size() < 2) throw InvalidArgument("pearson needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw InvalidArgument("pearson undefined for a constant vector");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

RunMatrix::RunMatrix(std::vector<std::string> columns)
    : columns_(std::move(columns)) {}

void RunMatrix::AddColumn(std::string column) {
  if (std::find(columns_.begin(), columns_.end(), column) != columns_.end()) {
    return;
  }
  columns_.push_back(std::move(column));
  for (auto& row : cells_) row.emplace_back();
}

void RunMatrix::AddRow(
    std::string run,
    const std::vector<std::pair<std::string, double>>& scores) {
  for (const auto& [col, v] : scores) AddColumn(col);
  rows_.push_back(std::move(run));
  cells_.emplace_back(columns_.size());
  for (const auto& [col, v] : scores) {
    const auto j = static_cast<std::size_t>(
        std::find(columns_.begin(), columns_.end(), col) - columns_.begin());
    cells_.back()[j] = v;
  }
}

void RunMatrix::Set(std::size_t row, std::size_t column,
                    std::optional<double> value) {
  cells_.at(row).at(column) = value;
}

std::optional<double> RunMatrix::at(std::size_t row, std::size_t column) const {
  return cells_.at(row).at(column);
}

bool RunMatrix::HasMissing() const {
  for (const auto& row : cells_) {
    for (const auto& c : row) {
      if (!c) return true;
    }
  }
  return false;
}

std::vector<double> RunMatrix::Column(std::size_t column) const {
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& row : cells_) {
    if (!row.at(column)) {
      throw InvalidArgument("missing cell in column " + columns_[column]);
    }
    out.push_back(*row[column]);
  }
  return out;
}

CorrelationMatrix correlation_matrix(const RunMatrix& runs) {
  if (runs.rows().size() < 2) {
    throw InvalidArgument("correlation needs at least two runs");
  }
  if (runs.HasMissing()) {
    throw InvalidArgument("correlation needs a run matrix without missing cells");
  }
  const std::size_t m = runs.columns().size();
  CorrelationMatrix out;
  out.names = runs.columns();
  out.values.assign(m, std::vector<double>(
                           m, std::numeric_limits<double>::quiet_NaN()));
  out.undefined.assign(m, false);
  std::vector<std::vector<double>> cols(m);
  for (std::size_t j = 0; j < m; ++j) {
    cols[j] = runs.Column(j);
    const auto [lo, hi] = std::minmax_element(cols[j].begin(), cols[j].end());
    out.undefined[j] = *lo == *hi;
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (out.undefined[i]) continue;
    out.values[i][i] = 1.0;
    for (std::size_t j = i + 1; j < m; ++j) {
      if (out.undefined[j]) continue;
      const double r = pearson(cols[i], cols[j]);
      out.values[i][j] = r;
      out.values[j][i] = r;
    }
  }
  return out;
}

std::string_view SelectionName(SelectionStrategy s) {
  switch (s) {
    case SelectionStrategy::kOrigin:
      return "origin";
    case SelectionStrategy::kMixed:
      return "mixed";
    case SelectionStrategy::kOracle:
      return "oracle";
  }
  return "?";
}

SelectionStrategy ParseSelection(std::string_view name) {
  if (name == "origin") return SelectionStrategy::kOrigin;
  if (name == "mixed") return SelectionStrategy::kMixed;
  if (name == "oracle") return SelectionStrategy::kOracle;
  throw InvalidArgument("unknown selection strategy '" + std::string(name) +
                        "' (expected origin, mixed, oracle)");
}

Selection select_model(std::size_t num_checkpoints, SelectionStrategy strategy,
                       const DevSets& dev, const CorrectCounter& correct) {
  if (num_checkpoints == 0) throw InvalidArgument("no checkpoints to select");

  // Argmax of a per-checkpoint score, earliest checkpoint on ties.
  auto best_by = [&](const std::vector<const Dataset*>& sets) {
    std::size_t best = 0;
    std::size_t best_score = 0;
    for (std::size_t c = 0; c < num_checkpoints; ++c) {
      std::size_t score = 0;
      for (const Dataset* d : sets) score += correct(c, *d);
      if (c == 0 || score > best_score) {
        best = c;
        best_score = score;
      }
    }
    return best;
  };

  Selection out;
  switch (strategy) {
    case SelectionStrategy::kOrigin:
      if (!dev.in_domain) {
        throw InvalidArgument("origin selection needs an in-domain dev set");
      }
      out.chosen = best_by({dev.in_domain});
      break;
    case SelectionStrategy::kMixed: {
      if (!dev.in_domain) {
        throw InvalidArgument("mixed selection needs an in-domain dev set");
      }
      std::vector<const Dataset*> all = {dev.in_domain};
      all.insert(all.end(), dev.targets.begin(), dev.targets.end());
      out.chosen = best_by(all);
      break;
    }
    case SelectionStrategy::kOracle:
      if (dev.targets.empty()) {
        throw InvalidArgument("oracle selection needs per-target dev sets");
      }
      for (const Dataset* d : dev.targets) {
        out.per_target.emplace_back(d->name(), best_by({d}));
      }
      out.chosen = dev.in_domain ? best_by({dev.in_domain})
                                 : out.per_target.front().second;
      break;
  }
  return out;
}

std::size_t CountCorrect(const Predictor& predict, const Dataset& data) {
  std::size_t correct = 0;
  for (const auto& x : data) {
    if (IsCorrect(predict(x), x.gold, data.scheme())) ++correct;
  }
  return correct;
}

}  // namespace nlidebias
