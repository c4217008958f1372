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

// Training-data augmentation: premise/hypothesis swap, embedding-gated
// synonym substitution, and hypothesis rewriting by an external service.

#ifndef NLIDEBIAS_AUGMENT_H_
#define NLIDEBIAS_AUGMENT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nlidebias/corpus.h"
#include "nlidebias/prob.h"

namespace nlidebias {

// ---- text swap ----

enum class SwapMode : std::uint8_t {
  // E/N pairs are relabeled by a teacher.
  kTrain,
  // E/N pairs become not_contradiction; no teacher needed.
  kEvaluation,
};

// Exchanges premise and hypothesis. C stays C. For E/N, kEvaluation yields
// not_contradiction and kTrain asks `teacher` about the swapped pair; without
// a teacher kTrain throws InvalidArgument. Id and source are kept.
NliInstance text_swap(const NliInstance& x, const Predictor* teacher,
                      SwapMode mode = SwapMode::kTrain);

// Swapped copy of a three-way set under the not_c_c scheme.
Dataset swap_evaluation_set(const Dataset& data);

// ---- synonym substitution ----

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  // All vectors must share one dimension.
  explicit EmbeddingTable(
      std::unordered_map<std::string, std::vector<double>> vectors);

  // "token v1 ... vd" per line. Throws ParseError on ragged or non-numeric
  // lines.
  static EmbeddingTable Load(const std::filesystem::path& path);
  static EmbeddingTable Parse(std::string_view content,
                              std::string_view source);

  // nullptr for unknown tokens.
  const std::vector<double>* Find(const std::string& token) const;
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return vectors_.size(); }

 private:
  std::unordered_map<std::string, std::vector<double>> vectors_;
  std::size_t dimension_ = 0;
};

struct SynonymCandidate {
  std::string word;
  // Coarse part of speech: n, v, a or s (adjective satellite).
  char pos = 'n';
};

class SynonymLexicon {
 public:
  // "token<TAB>pos<TAB>cand1,cand2,..." per line. A token listed as its own
  // candidate is dropped. Tags outside {n, v, a, s} are skipped.
  static SynonymLexicon Load(const std::filesystem::path& path);
  static SynonymLexicon Parse(std::string_view content,
                              std::string_view source);

  void Add(const std::string& token, char pos,
           const std::vector<std::string>& candidates);

  // Candidates in file order; empty when the token is unknown.
  std::span<const SynonymCandidate> Candidates(const std::string& token) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::vector<SynonymCandidate>> entries_;
};

bool IsStopword(std::string_view token);
bool IsPunctuation(std::string_view token);
// Neither a stopword nor punctuation.
bool IsContentWord(std::string_view token);

// Coordinatewise max over the vectors; empty input gives an empty vector.
std::vector<double> MaxPool(std::span<const std::vector<double>* const> vectors);
// 0 when either vector has zero norm.
double Cosine(std::span<const double> a, std::span<const double> b);

struct SynonymParams {
  // Tokens in the comparison window (the word plus (window - 1) / 2 on each
  // side).
  std::size_t window = 3;
  // A candidate is accepted iff cosine > gate.
  double cosine_gate = 0.0;
};

struct SubstitutionStats {
  std::size_t replaced = 0;
  // Content words skipped because the word itself has no embedding.
  std::size_t missing_embedding = 0;
};

// Replaces each hypothesis content word that has an accepted candidate by a
// uniform choice among the accepted ones. Windows are always built from the
// original tokens. Randomness comes from Rng(seed, x.id) only.
NliInstance synonym_substitute(const NliInstance& x,
                               const SynonymLexicon& lexicon,
                               const EmbeddingTable& embeddings,
                               std::uint64_t seed,
                               const SynonymParams& params = {},
                               SubstitutionStats* stats = nullptr);

// ---- external transform ----

enum class TransformKind : std::uint8_t { kMaskedSubstitute, kParaphrase };

std::string_view TransformKindName(TransformKind k);
TransformKind ParseTransformKind(std::string_view name);

struct TransformParams {
  double mask_fraction = 0.3;
  std::size_t candidate_pool = 100;
  std::size_t beam = 5;
};

struct TransformRequest {
  std::string id;
  TransformKind kind = TransformKind::kParaphrase;
  std::string text;
  TransformParams params;
  // Token positions to mask (maskedSubstitute only), ascending.
  std::vector<std::size_t> mask_positions;
};

struct TransformResponse {
  std::string id;
  std::string text;
  // "ok" on success; anything else is an error description.
  std::string status;
};

// One JSON object per line.
std::string EncodeRequest(const TransformRequest& r);
TransformRequest DecodeRequest(std::string_view line);
std::string EncodeResponse(const TransformResponse& r);
TransformResponse DecodeResponse(std::string_view line);

// floor(fraction * count) positions, at least one when there is a content
// word, drawn uniformly among content-word positions; ascending.
std::vector<std::size_t> MaskPositions(const Tokens& tokens, double fraction,
                                       std::uint64_t seed, std::string_view key);

class TransformClient {
 public:
  virtual ~TransformClient() = default;
  // One response per request, same order. Transport failures are reported
  // through the response status.
  virtual std::vector<TransformResponse> TransformAll(
      std::span<const TransformRequest> requests) = 0;
};

// Runs `argv` as a child process speaking the JSON-lines protocol over
// stdin/stdout. At most `max_in_flight` requests are outstanding; a response
// not arriving within `timeout_ms` fails that request and the rest of the
// call.
class SubprocessTransformClient : public TransformClient {
 public:
  SubprocessTransformClient(std::vector<std::string> argv, int timeout_ms,
                            std::size_t max_in_flight = 16);
  ~SubprocessTransformClient() override;

  SubprocessTransformClient(const SubprocessTransformClient&) = delete;
  SubprocessTransformClient& operator=(const SubprocessTransformClient&) =
      delete;

  std::vector<TransformResponse> TransformAll(
      std::span<const TransformRequest> requests) override;

 private:
  void Start();
  void Stop();

  std::vector<std::string> argv_;
  int timeout_ms_;
  std::size_t max_in_flight_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string read_buffer_;
};

// The request sent for `x` (hypothesis text, paper-default parameters).
TransformRequest MakeRequest(const NliInstance& x, TransformKind kind,
                             const TransformParams& params, std::uint64_t seed);

// Hypothesis replaced by the response text; nullopt when the response is an
// error or empty.
std::optional<NliInstance> ApplyResponse(const NliInstance& x,
                                         const TransformResponse& r);

// ---- dataset level ----

enum class AugmentMethod : std::uint8_t {
  kTextSwap,
  kSynonym,
  kMaskedSubstitute,
  kParaphrase,
};

std::string_view AugmentMethodName(AugmentMethod m);
AugmentMethod ParseAugmentMethod(std::string_view name);

struct AugmentOptions {
  AugmentMethod method = AugmentMethod::kTextSwap;
  std::uint64_t seed = 1;
  // Non-owning; which ones are needed depends on the method.
  const Predictor* teacher = nullptr;
  const SynonymLexicon* lexicon = nullptr;
  const EmbeddingTable* embeddings = nullptr;
  TransformClient* client = nullptr;
  SynonymParams synonym;
  TransformParams transform;
};

struct AugmentResult {
  // Originals first, then the augmented copies with ids "<id>/<method>".
  Dataset dataset;
  std::size_t original = 0;
  std::size_t augmented = 0;
  std::size_t dropped = 0;
  // Drop reason -> count.
  std::map<std::string, std::size_t> drop_reasons;
  SubstitutionStats substitution;
};

// Three-way input only. Per-instance failures drop that instance and are
// counted; missing resources for the method throw InvalidArgument.
AugmentResult augment_dataset(const Dataset& data,
                              const AugmentOptions& options);

// Method tag of an augmented instance, nullopt for originals.
std::optional<AugmentMethod> AugmentationTag(const NliInstance& x);

// Fraction of instances whose judge prediction matches the assigned label.
// Throws InvalidArgument on an empty set.
double auto_quality(const Dataset& augmented, const Predictor& judge);

}  // namespace nlidebias

#endif  // NLIDEBIAS_AUGMENT_H_
