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

#include "nlidebias/augment.h"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <unordered_set>

#include <json.hpp>

#include "nlidebias/error.h"
#include "nlidebias/evalharness.h"
#include "nlidebias/rng.h"
#include "nlidebias/text_io.h"

namespace nlidebias {
namespace {

using nlohmann::json;

// English function words (the usual NLTK list), in tokenizer form.
const std::unordered_set<std::string_view>& Stopwords() {
  static const std::unordered_set<std::string_view> kWords = {
      "i",        "me",       "my",       "myself",   "we",       "our",
      "ours",     "ourselves", "you",     "your",     "yours",    "yourself",
      "yourselves", "he",     "him",      "his",      "himself",  "she",
      "her",      "hers",     "herself",  "it",       "its",      "itself",
      "they",     "them",     "their",    "theirs",   "themselves", "what",
      "which",    "who",      "whom",     "this",     "that",     "these",
      "those",    "am",       "is",       "are",      "was",      "were",
      "be",       "been",     "being",    "have",     "has",      "had",
      "having",   "do",       "does",     "did",      "doing",    "a",
      "an",       "the",      "and",      "but",      "if",       "or",
      "because",  "as",       "until",    "while",    "of",       "at",
      "by",       "for",      "with",     "about",    "against",  "between",
      "into",     "through",  "during",   "before",   "after",    "above",
      "below",    "to",       "from",     "up",       "down",     "in",
      "out",      "on",       "off",      "over",     "under",    "again",
      "further",  "then",     "once",     "here",     "there",    "when",
      "where",    "why",      "how",      "all",      "any",      "both",
      "each",     "few",      "more",     "most",     "other",    "some",
      "such",     "no",       "nor",      "not",      "only",     "own",
      "same",     "so",       "than",     "too",      "very",     "s",
      "t",        "can",      "will",     "just",     "don",      "should",
      "now",      "d",        "ll",       "m",        "o",        "re",
      "ve",       "y",        "ain",      "aren",     "couldn",   "didn",
      "doesn",    "hadn",     "hasn",     "haven",    "isn",      "ma",
      "mightn",   "mustn",    "needn",    "shan",     "shouldn",  "wasn",
      "weren",    "won",      "wouldn",
  };
  return kWords;
}

bool PosAllowed(char pos) {
  return pos == 'n' || pos == 'v' || pos == 'a' || pos == 's';
}

constexpr std::array<AugmentMethod, 4> kAllMethods = {
    AugmentMethod::kTextSwap, AugmentMethod::kSynonym,
    AugmentMethod::kMaskedSubstitute, AugmentMethod::kParaphrase};

bool WriteAll(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

}  // namespace

// ---- text swap ----

NliInstance text_swap(const NliInstance& x, const Predictor* teacher,
                      SwapMode mode) {
  const Label gold = GoldLabel(x);
  NliInstance out = x;
  std::swap(out.premise, out.hypothesis);
  if (gold == Label::kContradiction) return out;
  if (mode == SwapMode::kEvaluation) {
    out.gold = Verdict::kNotContradiction;
    return out;
  }
  if (teacher == nullptr) {
    throw InvalidArgument("swapped label of '" + x.id +
                          "' needs a teacher (gold is not contradiction)");
  }
  out.gold = ToVerdict((*teacher)(out).Argmax());
  return out;
}

Dataset swap_evaluation_set(const Dataset& data) {
  if (data.scheme() != LabelScheme::kThreeWay) {
    throw InvalidArgument("swap evaluation needs a three-way dataset");
  }
  std::vector<NliInstance> out;
  out.reserve(data.size());
  for (const auto& x : data) {
    out.push_back(text_swap(x, nullptr, SwapMode::kEvaluation));
  }
  return Dataset(data.name() + "-swap", data.split(),
                 LabelScheme::kNotContradictionContradiction, std::move(out));
}

// ---- synonym substitution ----

EmbeddingTable::EmbeddingTable(
    std::unordered_map<std::string, std::vector<double>> vectors)
    : vectors_(std::move(vectors)) {
  for (const auto& [token, v] : vectors_) {
    if (dimension_ == 0) dimension_ = v.size();
    if (v.size() != dimension_ || v.empty()) {
      throw InvalidArgument("embedding for '" + token +
                            "' has the wrong dimension");
    }
  }
}

EmbeddingTable EmbeddingTable::Load(const std::filesystem::path& path) {
  return Parse(ReadFile(path), path.string());
}

EmbeddingTable EmbeddingTable::Parse(std::string_view content,
                                     std::string_view source) {
  std::unordered_map<std::string, std::vector<double>> vectors;
  std::size_t dim = 0;
  std::size_t line_no = 0;
  for (auto line : SplitView(content, '\n')) {
    ++line_no;
    line = Trim(line);
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    for (auto f : SplitView(line, ' ')) {
      if (!f.empty()) fields.push_back(f);
    }
    if (fields.size() < 2) {
      throw ParseError(std::string(source), line_no, "token without a vector");
    }
    std::vector<double> v;
    v.reserve(fields.size() - 1);
    try {
      for (std::size_t i = 1; i < fields.size(); ++i) {
        v.push_back(ParseDouble(fields[i]));
      }
    } catch (const InvalidArgument& e) {
      throw ParseError(std::string(source), line_no, e.what());
    }
    if (dim == 0) dim = v.size();
    if (v.size() != dim) {
      throw ParseError(std::string(source), line_no,
                       "expected " + std::to_string(dim) + " components, got " +
                           std::to_string(v.size()));
    }
    vectors[std::string(fields[0])] = std::move(v);
  }
  return EmbeddingTable(std::move(vectors));
}

const std::vector<double>* EmbeddingTable::Find(const std::string& token) const {
  const auto it = vectors_.find(token);
  return it == vectors_.end() ? nullptr : &it->second;
}

SynonymLexicon SynonymLexicon::Load(const std::filesystem::path& path) {
  return Parse(ReadFile(path), path.string());
}

SynonymLexicon SynonymLexicon::Parse(std::string_view content,
                                     std::string_view source) {
  SynonymLexicon lex;
  std::size_t line_no = 0;
  for (auto line : SplitView(content, '\n')) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const auto cols = SplitView(line, '\t');
    if (cols.size() != 3 || cols[1].size() != 1) {
      throw ParseError(std::string(source), line_no,
                       "expected 'token<TAB>pos<TAB>candidates'");
    }
    std::vector<std::string> cands;
    for (auto c : SplitView(cols[2], ',')) {
      c = Trim(c);
      if (!c.empty()) cands.emplace_back(c);
    }
    lex.Add(std::string(Trim(cols[0])), cols[1][0], cands);
  }
  return lex;
}

void SynonymLexicon::Add(const std::string& token, char pos,
                         const std::vector<std::string>& candidates) {
  if (!PosAllowed(pos)) return;
  auto& list = entries_[token];
  for (const auto& c : candidates) {
    if (c == token || c.find_first_of(" \t") != std::string::npos) continue;
    const bool seen = std::any_of(list.begin(), list.end(),
                                  [&](const auto& e) { return e.word == c; });
    if (!seen) list.push_back({c, pos});
  }
  if (list.empty()) entries_.erase(token);
}

std::span<const SynonymCandidate> SynonymLexicon::Candidates(
    const std::string& token) const {
  const auto it = entries_.find(token);
  if (it == entries_.end()) return {};
  return it->second;
}

bool IsStopword(std::string_view token) {
  return Stopwords().count(token) > 0;
}

bool IsPunctuation(std::string_view token) {
  return !token.empty() &&
         std::all_of(token.begin(), token.end(), [](char c) {
           return std::ispunct(static_cast<unsigned char>(c)) != 0;
         });
}

bool IsContentWord(std::string_view token) {
  return !token.empty() && !IsStopword(token) && !IsPunctuation(token);
}

std::vector<double> MaxPool(std::span<const std::vector<double>* const> vectors) {
  if (vectors.empty()) return {};
  std::vector<double> out = *vectors.front();
  for (std::size_t i = 1; i < vectors.size(); ++i) {
    const auto& v = *vectors[i];
    for (std::size_t d = 0; d < out.size(); ++d) out[d] = std::max(out[d], v[d]);
  }
  return out;
}

double Cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("cosine of unequal lengths");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

NliInstance synonym_substitute(const NliInstance& x,
                               const SynonymLexicon& lexicon,
                               const EmbeddingTable& embeddings,
                               std::uint64_t seed, const SynonymParams& params,
                               SubstitutionStats* stats) {
  if (x.hypothesis.empty()) throw InvalidArgument("empty hypothesis");
  if (params.window == 0) throw InvalidArgument("window must be >= 1");
  SubstitutionStats local;
  SubstitutionStats& st = stats ? *stats : local;
  const std::size_t radius = (params.window - 1) / 2;
  const Tokens& h = x.hypothesis;
  NliInstance out = x;
  Rng rng(seed, x.id);

  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!IsContentWord(h[i])) continue;
    const auto cands = lexicon.Candidates(h[i]);
    if (cands.empty()) continue;
    const std::vector<double>* self = embeddings.Find(h[i]);
    if (self == nullptr) {
      ++st.missing_embedding;
      continue;
    }
    // Window over original tokens; neighbours without embeddings drop out.
    std::vector<const std::vector<double>*> window;
    std::size_t self_slot = 0;
    const std::size_t lo = i >= radius ? i - radius : 0;
    const std::size_t hi = std::min(h.size() - 1, i + radius);
    for (std::size_t j = lo; j <= hi; ++j) {
      const std::vector<double>* v = j == i ? self : embeddings.Find(h[j]);
      if (v == nullptr) continue;
      if (j == i) self_slot = window.size();
      window.push_back(v);
    }
    const std::vector<double> original = MaxPool(window);

    std::vector<const std::string*> accepted;
    for (const auto& c : cands) {
      const std::vector<double>* v = embeddings.Find(c.word);
      if (v == nullptr) continue;
      window[self_slot] = v;
      if (Cosine(original, MaxPool(window)) > params.cosine_gate) {
        accepted.push_back(&c.word);
      }
    }
    if (accepted.empty()) continue;
    out.hypothesis[i] = *accepted[rng.Index(accepted.size())];
    ++st.replaced;
  }
  return out;
}

// ---- external transform ----

std::string_view TransformKindName(TransformKind k) {
  return k == TransformKind::kMaskedSubstitute ? "maskedSubstitute"
                                               : "paraphrase";
}

TransformKind ParseTransformKind(std::string_view name) {
  if (name == "maskedSubstitute") return TransformKind::kMaskedSubstitute;
  if (name == "paraphrase") return TransformKind::kParaphrase;
  throw InvalidArgument("unknown transform kind '" + std::string(name) +
                        "' (valid: maskedSubstitute, paraphrase)");
}

std::string EncodeRequest(const TransformRequest& r) {
  json params = {{"mask_fraction", r.params.mask_fraction},
                 {"candidate_pool", r.params.candidate_pool},
                 {"beam", r.params.beam}};
  if (r.kind == TransformKind::kMaskedSubstitute) {
    params["mask_positions"] = r.mask_positions;
  }
  const json j = {{"id", r.id},
                  {"kind", std::string(TransformKindName(r.kind))},
                  {"text", r.text},
                  {"params", params}};
  return j.dump();
}

TransformRequest DecodeRequest(std::string_view line) {
  try {
    const json j = json::parse(line);
    TransformRequest r;
    r.id = j.at("id").get<std::string>();
    r.kind = ParseTransformKind(j.at("kind").get<std::string>());
    r.text = j.at("text").get<std::string>();
    const json& p = j.at("params");
    r.params.mask_fraction = p.value("mask_fraction", r.params.mask_fraction);
    r.params.candidate_pool = p.value("candidate_pool", r.params.candidate_pool);
    r.params.beam = p.value("beam", r.params.beam);
    if (p.contains("mask_positions")) {
      r.mask_positions = p["mask_positions"].get<std::vector<std::size_t>>();
    }
    return r;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed transform request: ") +
                          e.what());
  }
}

std::string EncodeResponse(const TransformResponse& r) {
  const json j = {{"id", r.id}, {"text", r.text}, {"status", r.status}};
  return j.dump();
}

TransformResponse DecodeResponse(std::string_view line) {
  try {
    const json j = json::parse(line);
    return {j.at("id").get<std::string>(), j.value("text", std::string()),
            j.at("status").get<std::string>()};
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed transform response: ") +
                          e.what());
  }
}

std::vector<std::size_t> MaskPositions(const Tokens& tokens, double fraction,
                                       std::uint64_t seed,
                                       std::string_view key) {
  std::vector<std::size_t> content;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (IsContentWord(tokens[i])) content.push_back(i);
  }
  if (content.empty()) return {};
  // The epsilon keeps products such as 0.3 * 10 from flooring to 2.
  auto count = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(content.size()) + 1e-9));
  count = std::clamp<std::size_t>(count, 1, content.size());
  Rng rng(seed, key);
  rng.Shuffle(content);
  content.resize(count);
  std::sort(content.begin(), content.end());
  return content;
}

TransformRequest MakeRequest(const NliInstance& x, TransformKind kind,
                             const TransformParams& params,
                             std::uint64_t seed) {
  TransformRequest r;
  r.id = x.id;
  r.kind = kind;
  r.text = JoinTokens(x.hypothesis);
  r.params = params;
  if (kind == TransformKind::kMaskedSubstitute) {
    r.mask_positions =
        MaskPositions(x.hypothesis, params.mask_fraction, seed, x.id);
  }
  return r;
}

std::optional<NliInstance> ApplyResponse(const NliInstance& x,
                                         const TransformResponse& r) {
  if (r.status != "ok") return std::nullopt;
  Tokens t = tokenize(r.text);
  if (t.empty()) return std::nullopt;
  NliInstance out = x;
  out.hypothesis = std::move(t);
  return out;
}

SubprocessTransformClient::SubprocessTransformClient(
    std::vector<std::string> argv, int timeout_ms, std::size_t max_in_flight)
    : argv_(std::move(argv)),
      timeout_ms_(timeout_ms),
      max_in_flight_(std::max<std::size_t>(1, max_in_flight)) {
  if (argv_.empty()) throw InvalidArgument("transform command is empty");
}

SubprocessTransformClient::~SubprocessTransformClient() { Stop(); }

void SubprocessTransformClient::Start() {
  // A dead service must surface as a failed write, not kill the process.
  ::signal(SIGPIPE, SIG_IGN);
  int in[2];
  int out[2];
  if (::pipe2(in, O_CLOEXEC) != 0) throw Error("pipe failed");
  if (::pipe2(out, O_CLOEXEC) != 0) {
    ::close(in[0]);
    ::close(in[1]);
    throw Error("pipe failed");
  }
  std::vector<char*> args;
  for (auto& a : argv_) args.push_back(a.data());
  args.push_back(nullptr);
  const pid_t pid = ::fork();
  if (pid < 0) throw Error("fork failed");
  if (pid == 0) {
    ::dup2(in[0], STDIN_FILENO);
    ::dup2(out[1], STDOUT_FILENO);
    ::execvp(args[0], args.data());
    ::_exit(127);
  }
  ::close(in[0]);
  ::close(out[1]);
  pid_ = pid;
  to_child_ = in[1];
  from_child_ = out[0];
  read_buffer_.clear();
}

void SubprocessTransformClient::Stop() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    ::kill(pid_, SIGTERM);
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }
  pid_ = -1;
}

std::vector<TransformResponse> SubprocessTransformClient::TransformAll(
    std::span<const TransformRequest> requests) {
  std::vector<TransformResponse> out(requests.size());
  std::vector<bool> done(requests.size(), false);
  std::multimap<std::string, std::size_t> pending;
  std::size_t next = 0;
  std::size_t finished = 0;

  auto fail_rest = [&](const std::string& why) {
    for (std::size_t i = 0; i < requests.size(); ++i) {
      if (!done[i]) out[i] = {requests[i].id, "", why};
    }
    Stop();
  };

  if (requests.empty()) return out;
  if (pid_ < 0) Start();
  while (finished < requests.size()) {
    while (pending.size() < max_in_flight_ && next < requests.size()) {
      if (!WriteAll(to_child_, EncodeRequest(requests[next]) + "\n")) {
        fail_rest("service unavailable");
        return out;
      }
      pending.emplace(requests[next].id, next);
      ++next;
    }
    pollfd pfd{from_child_, POLLIN, 0};
    int ready = 0;
    do {
      ready = ::poll(&pfd, 1, timeout_ms_);
    } while (ready < 0 && errno == EINTR);
    if (ready == 0) {
      fail_rest("timeout");
      return out;
    }
    char buf[4096];
    const ssize_t n = ::read(from_child_, buf, sizeof(buf));
    if (n <= 0) {
      fail_rest("service exited");
      return out;
    }
    read_buffer_.append(buf, static_cast<std::size_t>(n));
    std::size_t eol;
    while ((eol = read_buffer_.find('\n')) != std::string::npos) {
      const std::string line = read_buffer_.substr(0, eol);
      read_buffer_.erase(0, eol + 1);
      TransformResponse r;
      try {
        r = DecodeResponse(line);
      } catch (const InvalidArgument&) {
        fail_rest("malformed response");
        return out;
      }
      const auto it = pending.find(r.id);
      if (it == pending.end()) continue;  // stale or unknown id
      out[it->second] = std::move(r);
      done[it->second] = true;
      pending.erase(it);
      ++finished;
    }
  }
  return out;
}

// ---- dataset level ----

std::string_view AugmentMethodName(AugmentMethod m) {
  switch (m) {
    case AugmentMethod::kTextSwap:
      return "text_swap";
    case AugmentMethod::kSynonym:
      return "synonym";
    case AugmentMethod::kMaskedSubstitute:
      return "masked_substitute";
    case AugmentMethod::kParaphrase:
      return "paraphrase";
  }
  return "?";
}

AugmentMethod ParseAugmentMethod(std::string_view name) {
  for (auto m : kAllMethods) {
    if (AugmentMethodName(m) == name) return m;
  }
  throw InvalidArgument(
      "unknown augmentation method '" + std::string(name) +
      "' (valid: text_swap, synonym, masked_substitute, paraphrase)");
}

AugmentResult augment_dataset(const Dataset& data,
                              const AugmentOptions& options) {
  if (data.scheme() != LabelScheme::kThreeWay) {
    throw InvalidArgument("augmentation needs a three-way dataset");
  }
  const std::string tag(AugmentMethodName(options.method));
  std::vector<NliInstance> augmented;
  AugmentResult result{Dataset(data.name(), data.split(), data.scheme(), {}),
                       0, 0, 0, {}, {}};
  auto drop = [&](const std::string& reason) {
    ++result.dropped;
    ++result.drop_reasons[reason];
  };

  switch (options.method) {
    case AugmentMethod::kTextSwap: {
      const bool needs_teacher = std::any_of(data.begin(), data.end(), [](const auto& x) {
        return GoldLabel(x) != Label::kContradiction;
      });
      if (needs_teacher && options.teacher == nullptr) {
        throw InvalidArgument(
            "text_swap of entailment/neutral pairs needs a teacher");
      }
      for (const auto& x : data) {
        augmented.push_back(text_swap(x, options.teacher, SwapMode::kTrain));
      }
      break;
    }
    case AugmentMethod::kSynonym:
      if (options.lexicon == nullptr || options.embeddings == nullptr) {
        throw InvalidArgument("synonym augmentation needs a lexicon and embeddings");
      }
      for (const auto& x : data) {
        augmented.push_back(synonym_substitute(x, *options.lexicon,
                                               *options.embeddings, options.seed,
                                               options.synonym,
                                               &result.substitution));
      }
      break;
    case AugmentMethod::kMaskedSubstitute:
    case AugmentMethod::kParaphrase: {
      if (options.client == nullptr) {
        throw InvalidArgument(tag + " augmentation needs a transform client");
      }
      const TransformKind kind = options.method == AugmentMethod::kParaphrase
                                     ? TransformKind::kParaphrase
                                     : TransformKind::kMaskedSubstitute;
      std::vector<TransformRequest> requests;
      requests.reserve(data.size());
      for (const auto& x : data) {
        requests.push_back(MakeRequest(x, kind, options.transform, options.seed));
      }
      const auto responses = options.client->TransformAll(requests);
      for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& r = responses.at(i);
        auto y = ApplyResponse(data[i], r);
        if (y) {
          augmented.push_back(std::move(*y));
        } else {
          drop(r.status == "ok" ? std::string("empty text") : r.status);
        }
      }
      break;
    }
  }

  std::vector<NliInstance> all(data.begin(), data.end());
  for (auto& x : augmented) {
    x.id += "/" + tag;
    all.push_back(std::move(x));
  }
  result.original = data.size();
  result.augmented = augmented.size();
  result.dataset = Dataset(data.name() + "+" + tag, data.split(),
                           LabelScheme::kThreeWay, std::move(all));
  return result;
}

std::optional<AugmentMethod> AugmentationTag(const NliInstance& x) {
  const auto slash = x.id.rfind('/');
  if (slash == std::string::npos) return std::nullopt;
  const std::string_view suffix = std::string_view(x.id).substr(slash + 1);
  for (auto m : kAllMethods) {
    if (AugmentMethodName(m) == suffix) return m;
  }
  return std::nullopt;
}

double auto_quality(const Dataset& augmented, const Predictor& judge) {
  if (augmented.empty()) {
    throw InvalidArgument("auto_quality of an empty augmented set");
  }
  return static_cast<double>(CountCorrect(judge, augmented)) /
         static_cast<double>(augmented.size());
}

}  // namespace nlidebias
