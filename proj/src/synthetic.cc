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

#include "nlidebias/synthetic.h"

#include <algorithm>
#include <cstdio>
#include <tuple>
#include <utility>

#include "nlidebias/error.h"
#include "nlidebias/rng.h"

namespace nlidebias {
namespace {

constexpr std::size_t kMinFillersPerSide = 16;
constexpr int kPremiseFillersMin = 4;
constexpr int kPremiseFillersMax = 7;
constexpr int kHypothesisFillersMin = 2;
constexpr int kHypothesisFillersMax = 4;

// Hypothesis filler counts for lengthSkew, per label (E, N, C).
constexpr std::array<std::pair<int, int>, kNumLabels> kLengthBands = {
    {{1, 2}, {5, 6}, {3, 4}}};
constexpr std::pair<int, int> kLengthRange = {1, 6};

std::string Word(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "t%04zu", i);
  return buf;
}

template <typename T>
void InsertAt(std::vector<T>& v, T item, Rng& rng) {
  const auto pos = rng.Index(v.size() + 1);
  v.insert(v.begin() + static_cast<std::ptrdiff_t>(pos), std::move(item));
}

enum class Regime { kBiased, kAntiBiased };

class Generator {
 public:
  Generator(const SyntheticBiasSpec& spec, SyntheticVocabulary vocab)
      : spec_(spec), vocab_(std::move(vocab)) {}

  Dataset Make(std::string_view split_tag, Split split, std::size_t n,
               Regime regime) const {
    Rng rng(spec_.seed, split_tag);
    const std::string name =
        std::string(BiasKindName(spec_.bias_kind)) + "-" +
        std::string(split_tag);
    std::vector<NliInstance> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(MakeInstance(rng, regime));
      char id[32];
      std::snprintf(id, sizeof(id), "%06zu", i);
      out.back().id = name + "-" + id;
      out.back().source = name;
    }
    return Dataset(name, split, LabelScheme::kThreeWay, std::move(out));
  }

 private:
  NliInstance MakeInstance(Rng& rng, Regime regime) const {
    const auto y = static_cast<std::size_t>(rng.Index(kNumLabels));
    const auto g = rng.Index(vocab_.premise_content.size());
    const auto a = static_cast<std::size_t>(rng.Index(3));
    const double s = spec_.cue_strength;

    Tokens premise;
    const int lp = rng.Between(kPremiseFillersMin, kPremiseFillersMax);
    for (int i = 0; i < lp; ++i) {
      premise.push_back(
          vocab_.premise_fillers[rng.Index(vocab_.premise_fillers.size())]);
    }

    Tokens hyp;
    switch (spec_.bias_kind) {
      case BiasKind::kHypothesisCue: {
        AddHypothesisFillers(hyp, rng.Between(kHypothesisFillersMin,
                                              kHypothesisFillersMax),
                             rng);
        std::size_t cue = rng.Index(kNumLabels);
        if (regime == Regime::kBiased && rng.Bernoulli(s)) cue = y;
        // The uniform draw above is always consumed so that the cue decision
        // does not shift the random stream of later instances.
        InsertAt(hyp, vocab_.cue[cue], rng);
        break;
      }
      case BiasKind::kWordOverlap: {
        bool high;
        if (regime == Regime::kAntiBiased) {
          high = y != Index(Label::kEntailment);
        } else if (rng.Bernoulli(s)) {
          high = y == Index(Label::kEntailment);
        } else {
          high = rng.Index(3) == 0;
        }
        const int lh =
            rng.Between(kHypothesisFillersMin, kHypothesisFillersMax);
        if (high) {
          // Order-preserving subsequence of the premise fillers.
          std::vector<std::size_t> idx(premise.size());
          for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
          rng.Shuffle(idx);
          idx.resize(static_cast<std::size_t>(lh));
          std::sort(idx.begin(), idx.end());
          for (auto i : idx) hyp.push_back(premise[i]);
        } else {
          AddHypothesisFillers(hyp, lh, rng);
        }
        break;
      }
      case BiasKind::kLengthSkew: {
        auto [lo, hi] = kLengthRange;
        if (regime == Regime::kBiased && rng.Bernoulli(s)) {
          std::tie(lo, hi) = kLengthBands[y];
        }
        AddHypothesisFillers(hyp, rng.Between(lo, hi), rng);
        break;
      }
    }

    InsertAt(premise, vocab_.premise_content[g][a], rng);
    InsertAt(hyp, vocab_.hypothesis_content[g][(a + y) % 3], rng);

    NliInstance x;
    x.premise = std::move(premise);
    x.hypothesis = std::move(hyp);
    x.gold = ToVerdict(LabelAt(y));
    return x;
  }

  void AddHypothesisFillers(Tokens& hyp, int count, Rng& rng) const {
    for (int i = 0; i < count; ++i) {
      hyp.push_back(vocab_.hypothesis_fillers[rng.Index(
          vocab_.hypothesis_fillers.size())]);
    }
  }

  const SyntheticBiasSpec& spec_;
  SyntheticVocabulary vocab_;
};

}  // namespace

std::string_view BiasKindName(BiasKind k) {
  switch (k) {
    case BiasKind::kHypothesisCue:
      return "hypothesisCue";
    case BiasKind::kWordOverlap:
      return "wordOverlap";
    case BiasKind::kLengthSkew:
      return "lengthSkew";
  }
  return "?";
}

BiasKind ParseBiasKind(std::string_view name) {
  for (auto k : {BiasKind::kHypothesisCue, BiasKind::kWordOverlap,
                 BiasKind::kLengthSkew}) {
    if (BiasKindName(k) == name) return k;
  }
  throw InvalidArgument("unknown bias kind '" + std::string(name) +
                        "' (expected hypothesisCue, wordOverlap, lengthSkew)");
}

SyntheticVocabulary synthetic_vocabulary(const SyntheticBiasSpec& spec) {
  if (spec.content_groups == 0) {
    throw InvalidArgument("content_groups must be positive");
  }
  const std::size_t reserved = kNumLabels + 6 * spec.content_groups;
  if (spec.vocabulary_size < reserved + 2 * kMinFillersPerSide) {
    throw InvalidArgument(
        "vocabulary_size " + std::to_string(spec.vocabulary_size) +
        " too small: cues and " + std::to_string(spec.content_groups) +
        " content groups need " + std::to_string(reserved) + " words plus " +
        std::to_string(2 * kMinFillersPerSide) + " fillers");
  }
  SyntheticVocabulary v;
  std::size_t next = 0;
  for (auto& c : v.cue) c = Word(next++);
  v.premise_content.resize(spec.content_groups);
  v.hypothesis_content.resize(spec.content_groups);
  for (std::size_t g = 0; g < spec.content_groups; ++g) {
    for (auto& w : v.premise_content[g]) w = Word(next++);
    for (auto& w : v.hypothesis_content[g]) w = Word(next++);
  }
  const std::size_t fillers = spec.vocabulary_size - next;
  const std::size_t premise_fillers = fillers / 2;
  for (std::size_t i = 0; i < premise_fillers; ++i) {
    v.premise_fillers.push_back(Word(next++));
  }
  while (next < spec.vocabulary_size) v.hypothesis_fillers.push_back(Word(next++));
  return v;
}

SyntheticSplits generate_synthetic(const SyntheticBiasSpec& spec) {
  if (!(spec.cue_strength >= 0.0 && spec.cue_strength <= 1.0)) {
    throw InvalidArgument("cue_strength must lie in [0, 1]");
  }
  if (spec.instances_per_split == 0) {
    throw InvalidArgument("instances_per_split must be positive");
  }
  const std::size_t n_eval =
      spec.eval_instances ? spec.eval_instances : spec.instances_per_split;
  Generator gen(spec, synthetic_vocabulary(spec));
  return SyntheticSplits{
      gen.Make("train", Split::kTrain, spec.instances_per_split,
               Regime::kBiased),
      gen.Make("dev", Split::kDev, n_eval, Regime::kBiased),
      gen.Make("test", Split::kTest, n_eval, Regime::kBiased),
      gen.Make("anti", Split::kTest, n_eval, Regime::kAntiBiased),
  };
}

}  // namespace nlidebias
