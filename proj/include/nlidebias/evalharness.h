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

// Scheme-aware scoring, correlation analysis and checkpoint selection.

#ifndef NLIDEBIAS_EVALHARNESS_H_
#define NLIDEBIAS_EVALHARNESS_H_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nlidebias/corpus.h"
#include "nlidebias/prob.h"

namespace nlidebias {

// Projects a three-way prediction onto `scheme`:
//   three_way  identity
//   not_e_e    E -> E; N, C -> not_entailment
//   not_c_c    C -> C; E, N -> not_contradiction
//   e_c        E -> E; C -> C; N has no counterpart
//   n_e        N -> N; E -> E; C has no counterpart
// nullopt marks a prediction outside the scheme's label set; it never matches
// a gold label.
std::optional<Verdict> map_prediction(const ProbDist& pred, LabelScheme scheme);
std::optional<Verdict> map_prediction(Label argmax, LabelScheme scheme);

bool IsCorrect(const ProbDist& pred, Verdict gold, LabelScheme scheme);

// Fraction correct after map_prediction. Throws InvalidArgument on empty or
// mismatched input.
double accuracy(std::span<const ProbDist> preds, std::span<const Verdict> golds,
                LabelScheme scheme);

// Multi-class Matthews correlation (Gorodkin's R_K) over arbitrary category
// ids. Zero denominator yields 0. Needs at least two instances.
double mcc(std::span<const int> predicted, std::span<const int> gold);
// Predictions mapped through the scheme; out-of-scheme predictions form their
// own category.
double mcc(std::span<const ProbDist> preds, std::span<const Verdict> golds,
           LabelScheme scheme);

// Pearson r. Throws InvalidArgument on length mismatch, fewer than two points
// or zero variance in either vector.
double pearson(std::span<const double> x, std::span<const double> y);

// Scores of runs (rows: model x seed) on datasets (columns).
class RunMatrix {
 public:
  explicit RunMatrix(std::vector<std::string> columns = {});

  // Appends a row; missing cells stay empty. Unknown columns are appended.
  void AddRow(std::string run,
              const std::vector<std::pair<std::string, double>>& scores);
  void AddColumn(std::string column);
  void Set(std::size_t row, std::size_t column, std::optional<double> value);

  const std::vector<std::string>& rows() const { return rows_; }
  const std::vector<std::string>& columns() const { return columns_; }
  std::optional<double> at(std::size_t row, std::size_t column) const;
  bool HasMissing() const;
  std::vector<double> Column(std::size_t column) const;

 private:
  std::vector<std::string> rows_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::optional<double>>> cells_;
};

struct CorrelationMatrix {
  std::vector<std::string> names;
  // values[i][j]; NaN when column i or j is constant.
  std::vector<std::vector<double>> values;
  std::vector<bool> undefined;
};

// Pairwise Pearson over columns; unit diagonal for defined columns. Throws
// InvalidArgument with fewer than two runs or any missing cell.
CorrelationMatrix correlation_matrix(const RunMatrix& runs);

enum class SelectionStrategy : std::uint8_t { kOrigin, kMixed, kOracle };

std::string_view SelectionName(SelectionStrategy s);
SelectionStrategy ParseSelection(std::string_view name);

// Dev sets available for checkpoint selection. Pointers are non-owning.
struct DevSets {
  // The training corpus' own dev set ("origin").
  const Dataset* in_domain = nullptr;
  // Dev sets of the target evaluation sets, by dataset name ("oracle"); the
  // union with in_domain forms the "mixed" dev set.
  std::vector<const Dataset*> targets;
};

// Number of instances checkpoint `c` gets right on a dataset.
using CorrectCounter =
    std::function<std::size_t(std::size_t checkpoint, const Dataset& dev)>;

struct Selection {
  // origin / mixed: the chosen checkpoint. oracle: the in-domain choice when
  // an in-domain set exists, otherwise the first target's choice.
  std::size_t chosen = 0;
  // oracle only: (target dataset name, checkpoint).
  std::vector<std::pair<std::string, std::size_t>> per_target;
};

// Chooses among `num_checkpoints` checkpoints (epoch order). Ties go to the
// earliest checkpoint. Throws InvalidArgument when the strategy's dev sets are
// missing or there are no checkpoints.
Selection select_model(std::size_t num_checkpoints, SelectionStrategy strategy,
                       const DevSets& dev, const CorrectCounter& correct);

// Correct count of `predict` on `data` under the dataset's scheme.
std::size_t CountCorrect(const Predictor& predict, const Dataset& data);

}  // namespace nlidebias

#endif  // NLIDEBIAS_EVALHARNESS_H_
