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

#include "nlidebias/features.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <ostream>
#include <set>

#include "nlidebias/error.h"
#include "nlidebias/hash.h"
#include "nlidebias/text_io.h"

namespace nlidebias {
namespace {

constexpr std::string_view kPairPrefix = "pair:";

void AddPresence(std::map<std::string, double>& out, std::string_view prefix,
                 const Tokens& tokens) {
  for (const auto& t : tokens) out[std::string(prefix) + t] = 1.0;
}

FeatureVector FromMap(std::map<std::string, double> m) {
  FeatureVector v;
  v.sparse.assign(std::make_move_iterator(m.begin()),
                  std::make_move_iterator(m.end()));
  return v;
}

bool IsContiguousRun(const Tokens& needle, const Tokens& haystack) {
  if (needle.size() > haystack.size()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(),
                     needle.end()) != haystack.end();
}

bool UsesPairs(FeatureSet s) {
  return s == FeatureSet::kPair || s == FeatureSet::kPairOverlap ||
         s == FeatureSet::kPairLength;
}

}  // namespace

double FeatureVector::Get(std::string_view id) const {
  const auto it = std::lower_bound(
      sparse.begin(), sparse.end(), id,
      [](const auto& entry, std::string_view key) { return entry.first < key; });
  return it != sparse.end() && it->first == id ? it->second : 0.0;
}

std::string_view FeatureSetName(FeatureSet s) {
  switch (s) {
    case FeatureSet::kHypothesisOnly:
      return "hypothesis_only";
    case FeatureSet::kWordOverlap:
      return "word_overlap";
    case FeatureSet::kLength:
      return "length";
    case FeatureSet::kPair:
      return "pair";
    case FeatureSet::kPairOverlap:
      return "pair_overlap";
    case FeatureSet::kPairLength:
      return "pair_length";
  }
  return "?";
}

FeatureSet ParseFeatureSet(std::string_view name) {
  for (auto s : {FeatureSet::kHypothesisOnly, FeatureSet::kWordOverlap,
                 FeatureSet::kLength, FeatureSet::kPair,
                 FeatureSet::kPairOverlap, FeatureSet::kPairLength}) {
    if (FeatureSetName(s) == name) return s;
  }
  throw InvalidArgument(
      "unknown feature set '" + std::string(name) +
      "' (expected hypothesis_only, word_overlap, length, pair, "
      "pair_overlap, pair_length)");
}

bool IsHashedFeature(std::string_view id) {
  return id.substr(0, kPairPrefix.size()) == kPairPrefix;
}

FeatureVector hypothesis_only_features(const NliInstance& x) {
  std::map<std::string, double> m;
  AddPresence(m, "uni:", x.hypothesis);
  return FromMap(std::move(m));
}

FeatureVector word_overlap_features(const NliInstance& x) {
  const Tokens& p = x.premise;
  const Tokens& h = x.hypothesis;
  FeatureVector v;
  if (p.empty() || h.empty()) {
    v.dense = {0.0, 0.0, 0.0, 1.0, 1.0};
    return v;
  }
  const std::set<std::string_view> premise_words(p.begin(), p.end());
  std::size_t found = 0;
  double dist_sum = 0.0;
  double dist_max = 0.0;
  const double lp = static_cast<double>(p.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    double best = lp;
    if (premise_words.count(h[i])) {
      ++found;
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (p[j] != h[i]) continue;
        const double d = std::fabs(static_cast<double>(i) -
                                   static_cast<double>(j));
        best = std::min(best, d);
      }
    }
    const double normalized = best / lp;
    dist_sum += normalized;
    dist_max = std::max(dist_max, normalized);
  }
  v.dense = {
      IsContiguousRun(h, p) ? 1.0 : 0.0,
      found == h.size() ? 1.0 : 0.0,
      static_cast<double>(found) / static_cast<double>(h.size()),
      dist_sum / static_cast<double>(h.size()),
      dist_max,
  };
  return v;
}

FeatureVector length_features(const NliInstance& x) {
  const double lh = static_cast<double>(x.hypothesis.size());
  const double lp = static_cast<double>(x.premise.size());
  FeatureVector v;
  v.dense = {lh, lp, (lh + lp) / 2.0, lp - lh};
  return v;
}

FeatureVector pair_features(const NliInstance& x,
                            const FeatureOptions& options) {
  std::map<std::string, double> m;
  AddPresence(m, "hyp:", x.hypothesis);
  AddPresence(m, "prem:", x.premise);
  const std::set<std::string_view> ps(x.premise.begin(), x.premise.end());
  const std::set<std::string_view> hs(x.hypothesis.begin(),
                                      x.hypothesis.end());
  std::size_t emitted = 0;
  for (auto wp : ps) {
    for (auto wh : hs) {
      if (emitted == options.pair_cap) break;
      std::string id(kPairPrefix);
      id += '(';
      id += wp;
      id += ',';
      id += wh;
      id += ')';
      m.emplace(std::move(id), 1.0);
      ++emitted;
    }
  }
  return FromMap(std::move(m));
}

FeatureVector extract(FeatureSet set, const NliInstance& x,
                      const FeatureOptions& options) {
  switch (set) {
    case FeatureSet::kHypothesisOnly:
      return hypothesis_only_features(x);
    case FeatureSet::kWordOverlap:
      return word_overlap_features(x);
    case FeatureSet::kLength:
      return length_features(x);
    case FeatureSet::kPair:
      return pair_features(x, options);
    case FeatureSet::kPairOverlap: {
      auto v = pair_features(x, options);
      v.dense = word_overlap_features(x).dense;
      return v;
    }
    case FeatureSet::kPairLength: {
      auto v = pair_features(x, options);
      v.dense = length_features(x).dense;
      return v;
    }
  }
  return {};
}

std::vector<std::string> DenseSlotNames(FeatureSet set) {
  static const std::vector<std::string> kOverlap = {
      "overlap:subsequence", "overlap:all_in", "overlap:fraction",
      "overlap:mean_distance", "overlap:max_distance"};
  static const std::vector<std::string> kLength = {
      "length:hypothesis", "length:premise", "length:mean",
      "length:difference"};
  switch (set) {
    case FeatureSet::kWordOverlap:
    case FeatureSet::kPairOverlap:
      return kOverlap;
    case FeatureSet::kLength:
    case FeatureSet::kPairLength:
      return kLength;
    default:
      return {};
  }
}

FeatureSpace::FeatureSpace(FeatureSet set, FeatureOptions options)
    : set_(set), options_(options) {
  names_.push_back("<oov>");
  const auto dense = DenseSlotNames(set).size();
  dense_mean_.assign(dense, 0.0);
  dense_scale_.assign(dense, 1.0);
  RebuildLookup();
}

FeatureSpace FeatureSpace::Fit(FeatureSet set, const FeatureOptions& options,
                               std::span<const FeatureVector> data) {
  FeatureSpace space(set, options);
  std::set<std::string> ids;
  const std::size_t d = space.dense_mean_.size();
  std::vector<double> sum(d, 0.0);
  std::vector<double> sum_sq(d, 0.0);
  for (const auto& v : data) {
    for (const auto& [id, value] : v.sparse) {
      if (!IsHashedFeature(id)) ids.insert(id);
    }
    if (v.dense.size() != d) {
      throw InvalidArgument("feature vector has " +
                            std::to_string(v.dense.size()) +
                            " dense slots, expected " + std::to_string(d));
    }
    for (std::size_t k = 0; k < d; ++k) {
      sum[k] += v.dense[k];
      sum_sq[k] += v.dense[k] * v.dense[k];
    }
  }
  space.names_.insert(space.names_.end(), ids.begin(), ids.end());
  if (!data.empty()) {
    const double n = static_cast<double>(data.size());
    for (std::size_t k = 0; k < d; ++k) {
      const double mean = sum[k] / n;
      const double var = std::max(0.0, sum_sq[k] / n - mean * mean);
      const double sd = std::sqrt(var);
      space.dense_mean_[k] = mean;
      space.dense_scale_[k] = sd > 1e-12 ? 1.0 / sd : 1.0;
    }
  }
  space.RebuildLookup();
  return space;
}

FeatureSpace FeatureSpace::Fit(FeatureSet set, const FeatureOptions& options,
                               const Dataset& data) {
  std::vector<FeatureVector> vs;
  vs.reserve(data.size());
  for (const auto& x : data) vs.push_back(extract(set, x, options));
  return Fit(set, options, vs);
}

std::size_t FeatureSpace::hashed_buckets() const {
  return UsesPairs(set_) ? options_.hash_buckets : 0;
}

std::size_t FeatureSpace::dimension() const {
  return names_.size() + hashed_buckets() + dense_mean_.size();
}

IndexedFeatures FeatureSpace::Index(const FeatureVector& v) const {
  std::vector<std::pair<std::uint32_t, double>> entries;
  entries.reserve(v.sparse.size() + v.dense.size());
  const std::size_t hash_base = names_.size();
  const std::size_t buckets = hashed_buckets();
  for (const auto& [id, value] : v.sparse) {
    if (IsHashedFeature(id)) {
      if (buckets == 0) continue;
      entries.emplace_back(
          static_cast<std::uint32_t>(hash_base + Fnv1a64(id) % buckets), value);
    } else {
      const auto it = lookup_.find(id);
      entries.emplace_back(it == lookup_.end() ? 0u : it->second, value);
    }
  }
  if (v.dense.size() != dense_mean_.size()) {
    throw InvalidArgument("feature vector does not match feature space " +
                          std::string(FeatureSetName(set_)));
  }
  const std::size_t dense_base = hash_base + buckets;
  for (std::size_t k = 0; k < v.dense.size(); ++k) {
    entries.emplace_back(static_cast<std::uint32_t>(dense_base + k),
                         (v.dense[k] - dense_mean_[k]) * dense_scale_[k]);
  }
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  IndexedFeatures out;
  for (const auto& [i, value] : entries) {
    if (!out.index.empty() && out.index.back() == i) {
      out.value.back() += value;  // hash collision or OOV merge
    } else {
      out.index.push_back(i);
      out.value.push_back(value);
    }
  }
  return out;
}

IndexedFeatures FeatureSpace::Index(const NliInstance& x) const {
  return Index(extract(set_, x, options_));
}

std::vector<IndexedFeatures> FeatureSpace::IndexAll(const Dataset& data) const {
  std::vector<IndexedFeatures> out;
  out.reserve(data.size());
  for (const auto& x : data) out.push_back(Index(x));
  return out;
}

void FeatureSpace::RebuildLookup() {
  lookup_.clear();
  for (std::size_t i = 1; i < names_.size(); ++i) {
    lookup_.emplace(names_[i], static_cast<std::uint32_t>(i));
  }
}

void FeatureSpace::Save(std::ostream& out) const {
  out << "features " << FeatureSetName(set_) << '\n';
  out << "pair_cap " << options_.pair_cap << '\n';
  out << "hash_buckets " << options_.hash_buckets << '\n';
  out << "vocabulary " << names_.size() - 1 << '\n';
  for (std::size_t i = 1; i < names_.size(); ++i) out << names_[i] << '\n';
  out << "dense " << dense_mean_.size() << '\n';
  for (std::size_t k = 0; k < dense_mean_.size(); ++k) {
    out << FormatDouble(dense_mean_[k]) << ' '
        << FormatDouble(dense_scale_[k]) << '\n';
  }
}

FeatureSpace FeatureSpace::Load(std::istream& in) {
  const auto set = ParseFeatureSet(ExpectLine(in, "features"));
  FeatureOptions options;
  options.pair_cap = ParseUint(ExpectLine(in, "pair_cap"));
  options.hash_buckets = ParseUint(ExpectLine(in, "hash_buckets"));
  FeatureSpace space(set, options);
  const auto vocab = ParseUint(ExpectLine(in, "vocabulary"));
  std::string line;
  for (std::uint64_t i = 0; i < vocab; ++i) {
    if (!std::getline(in, line)) throw Error("truncated vocabulary");
    space.names_.push_back(line);
  }
  const auto dense = ParseUint(ExpectLine(in, "dense"));
  if (dense != space.dense_mean_.size()) {
    throw Error("dense slot count mismatch for feature set " +
                std::string(FeatureSetName(set)));
  }
  for (std::uint64_t k = 0; k < dense; ++k) {
    if (!std::getline(in, line)) throw Error("truncated dense statistics");
    const auto parts = SplitView(line, ' ');
    if (parts.size() != 2) throw Error("malformed dense statistics line");
    space.dense_mean_[k] = ParseDouble(parts[0]);
    space.dense_scale_[k] = ParseDouble(parts[1]);
  }
  space.RebuildLookup();
  return space;
}

}  // namespace nlidebias
