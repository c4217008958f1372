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

#include "nlidebias/corpus.h"

#include <array>
#include <fstream>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "nlidebias/error.h"

namespace nlidebias {
namespace {

bool IsSpace(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool IsAsciiPunct(unsigned char c) {
  return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') ||
         (c >= '[' && c <= '`') || (c >= '{' && c <= '~');
}

// Splits on single spaces; canonical TSV never contains empty tokens.
Tokens SplitCanonical(std::string_view text, std::string_view source,
                      std::size_t line) {
  Tokens out;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = text.find(' ', start);
    const std::string_view tok = text.substr(start, end - start);
    if (tok.empty()) {
      throw ParseError(std::string(source), line,
                       "empty token (text must be space-joined tokens)");
    }
    out.emplace_back(tok);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

std::string DefaultName(const std::filesystem::path& path, std::string name) {
  return name.empty() ? path.stem().string() : name;
}

}  // namespace

std::optional<Label> AsLabel(Verdict v) {
  switch (v) {
    case Verdict::kEntailment:
      return Label::kEntailment;
    case Verdict::kNeutral:
      return Label::kNeutral;
    case Verdict::kContradiction:
      return Label::kContradiction;
    default:
      return std::nullopt;
  }
}

std::string_view VerdictName(Verdict v) {
  switch (v) {
    case Verdict::kEntailment:
      return "entailment";
    case Verdict::kNeutral:
      return "neutral";
    case Verdict::kContradiction:
      return "contradiction";
    case Verdict::kNotEntailment:
      return "not_entailment";
    case Verdict::kNotContradiction:
      return "not_contradiction";
  }
  return "?";
}

Verdict ParseVerdict(std::string_view name) {
  if (name == "entailment") return Verdict::kEntailment;
  if (name == "neutral") return Verdict::kNeutral;
  if (name == "contradiction") return Verdict::kContradiction;
  if (name == "not_entailment" || name == "non-entailment" ||
      name == "not-entailment" || name == "non_entailment") {
    return Verdict::kNotEntailment;
  }
  if (name == "not_contradiction" || name == "non-contradiction" ||
      name == "not-contradiction" || name == "non_contradiction" ||
      name == "non-contradicted") {
    return Verdict::kNotContradiction;
  }
  throw InvalidArgument("unknown label '" + std::string(name) + "'");
}

std::string_view SchemeName(LabelScheme s) {
  switch (s) {
    case LabelScheme::kThreeWay:
      return "three_way";
    case LabelScheme::kNotEntailmentEntailment:
      return "not_e_e";
    case LabelScheme::kNotContradictionContradiction:
      return "not_c_c";
    case LabelScheme::kEntailmentContradiction:
      return "e_c";
    case LabelScheme::kNeutralEntailment:
      return "n_e";
  }
  return "?";
}

LabelScheme ParseScheme(std::string_view name) {
  for (auto s : {LabelScheme::kThreeWay, LabelScheme::kNotEntailmentEntailment,
                 LabelScheme::kNotContradictionContradiction,
                 LabelScheme::kEntailmentContradiction,
                 LabelScheme::kNeutralEntailment}) {
    if (SchemeName(s) == name) return s;
  }
  throw InvalidArgument("unknown label scheme '" + std::string(name) +
                        "' (expected three_way, not_e_e, not_c_c, e_c, n_e)");
}

bool SchemeAllows(LabelScheme s, Verdict v) {
  switch (s) {
    case LabelScheme::kThreeWay:
      return AsLabel(v).has_value();
    case LabelScheme::kNotEntailmentEntailment:
      return v == Verdict::kNotEntailment || v == Verdict::kEntailment;
    case LabelScheme::kNotContradictionContradiction:
      return v == Verdict::kNotContradiction || v == Verdict::kContradiction;
    case LabelScheme::kEntailmentContradiction:
      return v == Verdict::kEntailment || v == Verdict::kContradiction;
    case LabelScheme::kNeutralEntailment:
      return v == Verdict::kNeutral || v == Verdict::kEntailment;
  }
  return false;
}

std::string_view SplitName(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kDev:
      return "dev";
    case Split::kTest:
      return "test";
  }
  return "?";
}

Split ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  throw InvalidArgument("unknown split '" + std::string(name) + "'");
}

Label GoldLabel(const NliInstance& x) {
  const auto label = AsLabel(x.gold);
  if (!label) {
    throw InvalidArgument("instance " + x.id + " has non three-way label " +
                          std::string(VerdictName(x.gold)));
  }
  return *label;
}

Dataset::Dataset(std::string name, Split split, LabelScheme scheme,
                 std::vector<NliInstance> instances)
    : name_(std::move(name)),
      split_(split),
      scheme_(scheme),
      instances_(std::move(instances)) {
  for (const auto& x : instances_) {
    if (x.premise.empty() || x.hypothesis.empty()) {
      throw InvalidArgument("dataset " + name_ + ": instance " + x.id +
                            " has an empty premise or hypothesis");
    }
    if (!SchemeAllows(scheme_, x.gold)) {
      throw InvalidArgument("dataset " + name_ + ": instance " + x.id +
                            " label " + std::string(VerdictName(x.gold)) +
                            " not allowed under scheme " +
                            std::string(SchemeName(scheme_)));
    }
  }
}

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(std::exchange(current, {}));
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (IsSpace(c)) {
      flush();
    } else if (IsAsciiPunct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else if (c >= 'A' && c <= 'Z') {
      current.push_back(static_cast<char>(c - 'A' + 'a'));
    } else {
      current.push_back(ch);
    }
  }
  flush();
  return out;
}

std::string JoinTokens(const Tokens& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

JsonlLoadResult parse_jsonl(std::string_view content, std::string_view source,
                            LabelScheme scheme, Split split, std::string name) {
  std::vector<NliInstance> instances;
  std::size_t skipped = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string(source), line_no,
                       std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) {
      throw ParseError(std::string(source), line_no, "expected a JSON object");
    }
    for (const char* field : {"gold_label", "sentence1", "sentence2"}) {
      if (!obj.contains(field) || !obj[field].is_string()) {
        throw ParseError(std::string(source), line_no,
                         std::string("missing string field ") + field);
      }
    }
    const auto gold = obj["gold_label"].get<std::string>();
    if (gold == "-") {
      ++skipped;
      continue;
    }
    NliInstance x;
    try {
      x.gold = ParseVerdict(gold);
    } catch (const InvalidArgument& e) {
      throw ParseError(std::string(source), line_no, e.what());
    }
    if (!SchemeAllows(scheme, x.gold)) {
      throw ParseError(std::string(source), line_no,
                       "label " + gold + " not allowed under scheme " +
                           std::string(SchemeName(scheme)));
    }
    if (obj.contains("pairID") && obj["pairID"].is_string()) {
      x.id = obj["pairID"].get<std::string>();
    } else {
      x.id = name + "-" + std::to_string(line_no);
    }
    x.premise = tokenize(obj["sentence1"].get<std::string>());
    x.hypothesis = tokenize(obj["sentence2"].get<std::string>());
    if (x.premise.empty() || x.hypothesis.empty()) {
      throw ParseError(std::string(source), line_no,
                       "empty premise or hypothesis");
    }
    x.source = name;
    instances.push_back(std::move(x));
  }
  if (instances.empty()) {
    throw ParseError(std::string(source), line_no, "no instances");
  }
  return {Dataset(std::move(name), split, scheme, std::move(instances)),
          skipped};
}

JsonlLoadResult load_jsonl(const std::filesystem::path& path,
                           LabelScheme scheme, Split split, std::string name) {
  return parse_jsonl(ReadFile(path), path.string(), scheme, split,
                     DefaultName(path, std::move(name)));
}

Dataset parse_tsv(std::string_view content, std::string_view source,
                  LabelScheme scheme, Split split, std::string name) {
  std::vector<NliInstance> instances;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) {
      throw ParseError(std::string(source), line_no + 1,
                       "missing final newline");
    }
    const std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    std::array<std::string_view, 4> cols;
    std::size_t start = 0;
    for (std::size_t c = 0; c < 4; ++c) {
      const std::size_t tab = line.find('\t', start);
      if ((c < 3) == (tab == std::string_view::npos)) {
        throw ParseError(std::string(source), line_no, "expected 4 columns");
      }
      cols[c] = line.substr(start, tab - start);
      start = tab + 1;
    }
    NliInstance x;
    x.id = std::string(cols[0]);
    if (x.id.empty()) {
      throw ParseError(std::string(source), line_no, "empty id");
    }
    x.premise = SplitCanonical(cols[1], source, line_no);
    x.hypothesis = SplitCanonical(cols[2], source, line_no);
    try {
      x.gold = ParseVerdict(cols[3]);
    } catch (const InvalidArgument& e) {
      throw ParseError(std::string(source), line_no, e.what());
    }
    if (VerdictName(x.gold) != cols[3]) {
      throw ParseError(std::string(source), line_no,
                       "non-canonical label spelling '" +
                           std::string(cols[3]) + "'");
    }
    if (!SchemeAllows(scheme, x.gold)) {
      throw ParseError(std::string(source), line_no,
                       "label not allowed under scheme " +
                           std::string(SchemeName(scheme)));
    }
    x.source = name;
    instances.push_back(std::move(x));
  }
  if (instances.empty()) {
    throw ParseError(std::string(source), 0, "no instances");
  }
  return Dataset(std::move(name), split, scheme, std::move(instances));
}

Dataset load_tsv(const std::filesystem::path& path, LabelScheme scheme,
                 Split split, std::string name) {
  return parse_tsv(ReadFile(path), path.string(), scheme, split,
                   DefaultName(path, std::move(name)));
}

std::string to_tsv(const Dataset& data) {
  auto check = [](std::string_view text, const NliInstance& x) {
    if (text.empty() || text.find_first_of(" \t\n\r") != text.npos) {
      throw InvalidArgument("instance " + x.id +
                            " cannot be written as canonical TSV: token '" +
                            std::string(text) + "'");
    }
  };
  std::string out;
  for (const auto& x : data) {
    check(x.id, x);
    for (const auto& t : x.premise) check(t, x);
    for (const auto& t : x.hypothesis) check(t, x);
    out += x.id;
    out.push_back('\t');
    out += JoinTokens(x.premise);
    out.push_back('\t');
    out += JoinTokens(x.hypothesis);
    out.push_back('\t');
    out += VerdictName(x.gold);
    out.push_back('\n');
  }
  return out;
}

void save_tsv(const Dataset& data, const std::filesystem::path& path) {
  WriteFile(path, to_tsv(data));
}

Dataset load_dataset(const std::filesystem::path& path, LabelScheme scheme,
                     Split split, std::string name) {
  if (path.extension() == ".jsonl") {
    return load_jsonl(path, scheme, split, std::move(name)).dataset;
  }
  return load_tsv(path, scheme, split, std::move(name));
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace nlidebias
