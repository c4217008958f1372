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

// Canonical data model for NLI corpora: labels, label schemes, instances,
// datasets, and the on-disk formats (canonical TSV, SNLI-style JSONL).

#ifndef NLIDEBIAS_CORPUS_H_
#define NLIDEBIAS_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nlidebias {

// Three-way NLI label. The index order E=0, N=1, C=2 is fixed project-wide;
// every probability vector is laid out in this order and argmax ties go to
// the lowest index.
enum class Label : std::uint8_t {
  kEntailment = 0,
  kNeutral = 1,
  kContradiction = 2,
};

inline constexpr std::size_t kNumLabels = 3;

inline constexpr std::size_t Index(Label l) {
  return static_cast<std::size_t>(l);
}
inline constexpr Label LabelAt(std::size_t i) { return static_cast<Label>(i); }

// Gold or predicted label under any evaluation scheme. The first three values
// coincide with Label.
enum class Verdict : std::uint8_t {
  kEntailment = 0,
  kNeutral = 1,
  kContradiction = 2,
  kNotEntailment = 3,
  kNotContradiction = 4,
};

inline constexpr Verdict ToVerdict(Label l) {
  return static_cast<Verdict>(static_cast<std::uint8_t>(l));
}
// The three-way label for E/N/C verdicts, nullopt for the negated ones.
std::optional<Label> AsLabel(Verdict v);

std::string_view VerdictName(Verdict v);
// Accepts the canonical names plus common corpus spellings
// ("non-entailment", "not_entailment", ...). Throws InvalidArgument.
Verdict ParseVerdict(std::string_view name);

enum class LabelScheme : std::uint8_t {
  kThreeWay,
  kNotEntailmentEntailment,        // (¬E, E)
  kNotContradictionContradiction,  // (¬C, C)
  kEntailmentContradiction,        // (E, C)
  kNeutralEntailment,              // (N, E)
};

std::string_view SchemeName(LabelScheme s);
LabelScheme ParseScheme(std::string_view name);
bool SchemeAllows(LabelScheme s, Verdict v);

enum class Split : std::uint8_t { kTrain, kDev, kTest };

std::string_view SplitName(Split s);
Split ParseSplit(std::string_view name);

using Tokens = std::vector<std::string>;

struct NliInstance {
  std::string id;
  Tokens premise;
  Tokens hypothesis;
  Verdict gold = Verdict::kEntailment;
  // Name of the dataset the instance came from; survives merging.
  std::string source;

  friend bool operator==(const NliInstance&, const NliInstance&) = default;
};

// Three-way gold label; throws InvalidArgument for negated verdicts.
Label GoldLabel(const NliInstance& x);

// Immutable collection of instances sharing one label scheme.
class Dataset {
 public:
  // Validates every instance: non-empty premise and hypothesis, gold label
  // admissible under `scheme`. Throws InvalidArgument.
  Dataset(std::string name, Split split, LabelScheme scheme,
          std::vector<NliInstance> instances);

  const std::string& name() const { return name_; }
  Split split() const { return split_; }
  LabelScheme scheme() const { return scheme_; }
  std::span<const NliInstance> instances() const { return instances_; }
  std::size_t size() const { return instances_.size(); }
  bool empty() const { return instances_.empty(); }
  const NliInstance& operator[](std::size_t i) const { return instances_[i]; }

  auto begin() const { return instances_.begin(); }
  auto end() const { return instances_.end(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::string name_;
  Split split_;
  LabelScheme scheme_;
  std::vector<NliInstance> instances_;
};

// Lowercases ASCII letters, splits on whitespace and emits every ASCII
// punctuation character as its own token. Non-ASCII bytes are kept as word
// characters.
Tokens tokenize(std::string_view text);

std::string JoinTokens(const Tokens& tokens);

struct JsonlLoadResult {
  Dataset dataset;
  // Lines whose gold_label is "-" (no annotator consensus).
  std::size_t skipped = 0;
};

// SNLI/MultiNLI distribution format. Reads gold_label, sentence1 (premise) and
// sentence2 (hypothesis); other fields are ignored except pairID, which
// becomes the instance id when present. Throws ParseError naming the line.
JsonlLoadResult load_jsonl(const std::filesystem::path& path,
                           LabelScheme scheme, Split split = Split::kTest,
                           std::string name = {});
JsonlLoadResult parse_jsonl(std::string_view content, std::string_view source,
                            LabelScheme scheme, Split split, std::string name);

// Canonical TSV: id, premise, hypothesis, label; tokens space-joined; LF line
// endings; no header. save_tsv(load_tsv(f)) reproduces f byte for byte.
Dataset load_tsv(const std::filesystem::path& path, LabelScheme scheme,
                 Split split = Split::kTest, std::string name = {});
Dataset parse_tsv(std::string_view content, std::string_view source,
                  LabelScheme scheme, Split split, std::string name);
std::string to_tsv(const Dataset& data);
void save_tsv(const Dataset& data, const std::filesystem::path& path);

// Picks load_jsonl for *.jsonl files and load_tsv otherwise.
Dataset load_dataset(const std::filesystem::path& path, LabelScheme scheme,
                     Split split = Split::kTest, std::string name = {});

std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, std::string_view content);

}  // namespace nlidebias

#endif  // NLIDEBIAS_CORPUS_H_
