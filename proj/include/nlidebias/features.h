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

// Feature extractors for the prime model and the bias-only experts, and the
// frozen feature space that maps extracted features to weight indices.

#ifndef NLIDEBIAS_FEATURES_H_
#define NLIDEBIAS_FEATURES_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nlidebias/corpus.h"

namespace nlidebias {

struct FeatureVector {
  // Sorted by id, ids unique.
  std::vector<std::pair<std::string, double>> sparse;
  // Hand-crafted numeric features, in the extractor's fixed slot order.
  std::vector<double> dense;

  // Value of a sparse feature, 0 when absent.
  double Get(std::string_view id) const;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

enum class FeatureSet : std::uint8_t {
  kHypothesisOnly,  // partial-input expert
  kWordOverlap,     // word-overlap expert
  kLength,          // sentence-length expert
  kPair,            // prime model
  kPairOverlap,     // prime variant: pair + overlap
  kPairLength,      // prime variant: pair + length
};

std::string_view FeatureSetName(FeatureSet s);
FeatureSet ParseFeatureSet(std::string_view name);

struct FeatureOptions {
  std::size_t pair_cap = 512;
  std::size_t hash_buckets = std::size_t{1} << 18;

  friend bool operator==(const FeatureOptions&,
                         const FeatureOptions&) = default;
};

// Binary presence of each hypothesis unigram ("uni:<w>"). Ignores the
// premise entirely.
FeatureVector hypothesis_only_features(const NliInstance& x);

// Dense slots: subsequence, all-in, fraction-in, mean distance, max distance.
// "Subsequence" means the hypothesis occurs as a contiguous run of premise
// tokens. The distance of a hypothesis token at position i is
// min |i - j| over premise positions j holding the same token, or len(premise)
// when there is none; distances are divided by len(premise).
FeatureVector word_overlap_features(const NliInstance& x);

// Dense slots: len(h), len(p), (len(h) + len(p)) / 2, len(p) - len(h).
FeatureVector length_features(const NliInstance& x);

// "hyp:<w>", "prem:<w>" presence plus cross pairs "pair:(<w_p>,<w_h>)". At
// most options.pair_cap distinct pairs are emitted, smallest first in
// lexicographic (w_p, w_h) order.
FeatureVector pair_features(const NliInstance& x,
                            const FeatureOptions& options = {});

FeatureVector extract(FeatureSet set, const NliInstance& x,
                      const FeatureOptions& options = {});

std::vector<std::string> DenseSlotNames(FeatureSet set);

bool IsHashedFeature(std::string_view id);

// A feature vector resolved against a FeatureSpace: sorted unique indices.
struct IndexedFeatures {
  std::vector<std::uint32_t> index;
  std::vector<double> value;
};

// Maps feature ids to stable weight indices. Layout:
//   [0]                      out-of-vocabulary bucket
//   [1, 1 + V)               fitted vocabulary, sorted by id
//   [1 + V, 1 + V + B)       hashed buckets for "pair:" features
//   [1 + V + B, dim)         dense slots, standardized with training stats
// Fit once on training data; read-only afterwards.
class FeatureSpace {
 public:
  FeatureSpace() = default;
  FeatureSpace(FeatureSet set, FeatureOptions options);

  // Fits the vocabulary and the dense standardization on `data`.
  static FeatureSpace Fit(FeatureSet set, const FeatureOptions& options,
                          std::span<const FeatureVector> data);
  static FeatureSpace Fit(FeatureSet set, const FeatureOptions& options,
                          const Dataset& data);

  IndexedFeatures Index(const FeatureVector& v) const;
  IndexedFeatures Index(const NliInstance& x) const;
  std::vector<IndexedFeatures> IndexAll(const Dataset& data) const;

  FeatureSet set() const { return set_; }
  const FeatureOptions& options() const { return options_; }
  std::size_t dimension() const;
  std::size_t vocabulary_size() const { return names_.size(); }
  std::size_t hashed_buckets() const;
  std::size_t dense_size() const { return dense_mean_.size(); }

  void Save(std::ostream& out) const;
  static FeatureSpace Load(std::istream& in);

  friend bool operator==(const FeatureSpace& a, const FeatureSpace& b) {
    return a.set_ == b.set_ && a.options_ == b.options_ &&
           a.names_ == b.names_ && a.dense_mean_ == b.dense_mean_ &&
           a.dense_scale_ == b.dense_scale_;
  }

 private:
  void RebuildLookup();

  FeatureSet set_ = FeatureSet::kPair;
  FeatureOptions options_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> lookup_;
  std::vector<double> dense_mean_;
  std::vector<double> dense_scale_;
};

}  // namespace nlidebias

#endif  // NLIDEBIAS_FEATURES_H_
