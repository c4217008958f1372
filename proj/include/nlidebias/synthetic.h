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

// Planted-bias NLI corpora for desk-scale experiments.
//
// Every instance carries a content pattern that fully determines its label:
// the premise holds word P[g][a] of content group g and the hypothesis holds
// word H[g][(a + y) mod 3]. Neither side alone says anything about y; only the
// cross-sentence pair does. On top of that a spurious cue is planted whose
// agreement with the label is controlled by cue_strength:
//
//   hypothesisCue  a cue token per label in the hypothesis. With probability
//                  cue_strength it is the gold label's token, otherwise a
//                  uniformly drawn one. Anti-biased split: always uniform.
//   wordOverlap    hypothesis fillers copied from the premise (high overlap)
//                  iff the label is entailment, with probability
//                  cue_strength; otherwise overlap is drawn at the base rate.
//                  Anti-biased split: entailment never overlaps, neutral and
//                  contradiction always do.
//   lengthSkew     hypothesis length band per label (E short, C medium,
//                  N long) with probability cue_strength; otherwise a uniform
//                  length. Anti-biased split: uniform length.

#ifndef NLIDEBIAS_SYNTHETIC_H_
#define NLIDEBIAS_SYNTHETIC_H_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "nlidebias/corpus.h"

namespace nlidebias {

enum class BiasKind : std::uint8_t { kHypothesisCue, kWordOverlap, kLengthSkew };

std::string_view BiasKindName(BiasKind k);
BiasKind ParseBiasKind(std::string_view name);

struct SyntheticBiasSpec {
  std::size_t vocabulary_size = 800;
  // Size of the train split.
  std::size_t instances_per_split = 10000;
  // Size of dev and both test splits; 0 means instances_per_split.
  std::size_t eval_instances = 0;
  double cue_strength = 0.8;
  BiasKind bias_kind = BiasKind::kHypothesisCue;
  std::uint64_t seed = 1;
  // Number of content groups (each uses six vocabulary items).
  std::size_t content_groups = 10;
};

// Role assignment of the generated vocabulary.
struct SyntheticVocabulary {
  std::array<std::string, kNumLabels> cue;  // indexed by Label
  std::vector<std::array<std::string, 3>> premise_content;
  std::vector<std::array<std::string, 3>> hypothesis_content;
  std::vector<std::string> premise_fillers;
  std::vector<std::string> hypothesis_fillers;
};

struct SyntheticSplits {
  Dataset train;
  Dataset dev;
  Dataset test_biased;
  Dataset test_anti_biased;
};

// Throws InvalidArgument when the vocabulary cannot host the cue tokens,
// content groups and a minimum of 16 fillers per side, or when
// cue_strength lies outside [0, 1]. Deterministic in spec.seed.
SyntheticSplits generate_synthetic(const SyntheticBiasSpec& spec);

SyntheticVocabulary synthetic_vocabulary(const SyntheticBiasSpec& spec);

}  // namespace nlidebias

#endif  // NLIDEBIAS_SYNTHETIC_H_
