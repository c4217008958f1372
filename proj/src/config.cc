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

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include "nlidebias/error.h"
#include "nlidebias/experiment.h"
#include "nlidebias/hash.h"
#include "nlidebias/text_io.h"

namespace nlidebias {
namespace {

using Section = std::vector<std::pair<std::string, std::string>>;

const std::map<std::string, std::set<std::string>>& KnownKeys() {
  static const std::map<std::string, std::set<std::string>> kKeys = {
      {"run", {"name", "output_dir", "seed"}},
      {"data", {"train", "dev", "target_dev"}},
      {"synthetic",
       {"bias_kind", "cue_strength", "vocabulary_size", "instances_per_split",
        "eval_instances", "content_groups", "seed"}},
      {"training",
       {"learning_rate", "epochs", "batch_size", "l2", "patience", "selection",
        "pair_cap", "hash_buckets", "prime_features", "seed"}},
      {"debias", {"strategy", "experts", "ensemble_rule", "expert_dir"}},
      {"merge",
       {"sources", "dev_sources", "mode", "performance", "ensemble",
        "ensemble_features", "ensemble_seeds"}},
      {"augment",
       {"method", "input", "teacher", "judge", "lexicon", "embeddings",
        "transform_command", "timeout_ms", "max_in_flight", "mask_fraction",
        "candidate_pool", "beam", "window", "cosine_gate"}},
      {"eval", {"formats", "model"}},
      {"suite", {}},  // free-form: one key per dataset
      {"sweep", {"plans", "seeds", "correlation_group"}},
  };
  return kKeys;
}

std::vector<std::string> SplitList(std::string_view s, char sep = ',') {
  std::vector<std::string> out;
  if (Trim(s).empty()) return out;
  for (auto part : SplitView(s, sep)) out.emplace_back(Trim(part));
  return out;
}

// Typed accessors that record problems instead of throwing.
class Reader {
 public:
  Reader(std::map<std::string, Section> sections,
         std::vector<std::string>& problems)
      : sections_(std::move(sections)), problems_(problems) {}

  const std::string* Find(const std::string& section,
                          const std::string& key) const {
    const auto it = sections_.find(section);
    if (it == sections_.end()) return nullptr;
    for (const auto& [k, v] : it->second) {
      if (k == key) return &v;
    }
    return nullptr;
  }

  const Section* Entries(const std::string& section) const {
    const auto it = sections_.find(section);
    return it == sections_.end() ? nullptr : &it->second;
  }

  template <typename T, typename F>
  void Read(const std::string& section, const std::string& key, T& out,
            F parse) {
    const std::string* v = Find(section, key);
    if (v == nullptr) return;
    try {
      out = parse(*v);
    } catch (const std::exception& e) {
      problems_.push_back("[" + section + "] " + key + ": " + e.what());
    }
  }

  void String(const std::string& s, const std::string& k, std::string& out) {
    Read(s, k, out, [](const std::string& v) { return v; });
  }
  void Double(const std::string& s, const std::string& k, double& out) {
    Read(s, k, out, [](const std::string& v) { return ParseDouble(v); });
  }
  template <typename U>
  void Unsigned(const std::string& s, const std::string& k, U& out) {
    Read(s, k, out,
         [](const std::string& v) { return static_cast<U>(ParseUint(v)); });
  }

 private:
  std::map<std::string, Section> sections_;
  std::vector<std::string>& problems_;
};

std::map<std::string, Section> ReadSections(std::string_view content,
                                            std::vector<std::string>& problems) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(content)};
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError({std::string("syntax error: ") + e.what()});
  }
  std::map<std::string, Section> out;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      problems.push_back("key '" + section + "' outside a section");
      continue;
    }
    for (const auto& [key, value] : body) {
      out[section].emplace_back(key, std::string(Trim(value.data())));
    }
  }
  return out;
}

void ApplyOverride(std::map<std::string, Section>& sections,
                   const std::string& text, std::vector<std::string>& problems) {
  const auto eq = text.find('=');
  const auto dot = text.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    problems.push_back("override '" + text + "' is not section.key=value");
    return;
  }
  const std::string section(Trim(std::string_view(text).substr(0, dot)));
  const std::string key(
      Trim(std::string_view(text).substr(dot + 1, eq - dot - 1)));
  const std::string value(Trim(std::string_view(text).substr(eq + 1)));
  auto& body = sections[section];
  for (auto& [k, v] : body) {
    if (k == key) {
      v = value;
      return;
    }
  }
  body.emplace_back(key, value);
}

std::string Canonical(const std::map<std::string, std::string>& lines) {
  std::string out;
  for (const auto& [k, v] : lines) out += k + "=" + v + "\n";
  return out;
}

}  // namespace

PlanSpec ParsePlanSpec(std::string_view text) {
  PlanSpec plan;
  plan.label = std::string(Trim(text));
  const auto colon = plan.label.find(':');
  plan.strategy = ParseStrategy(Trim(plan.label.substr(0, colon)));
  if (colon != std::string::npos) {
    for (const auto& e : SplitList(plan.label.substr(colon + 1), '+')) {
      plan.experts.push_back(ParseExpert(e));
    }
  }
  ValidateExpertCount(plan.strategy, plan.experts.size());
  return plan;
}

ExperimentConfig ParseConfig(std::string_view content,
                             const std::filesystem::path& base_dir,
                             const std::vector<std::string>& overrides) {
  std::vector<std::string> problems;
  auto sections = ReadSections(content, problems);
  for (const auto& o : overrides) ApplyOverride(sections, o, problems);

  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  for (const auto& [section, body] : sections) {
    const auto known = KnownKeys().find(section);
    if (known == KnownKeys().end()) {
      problems.push_back("unknown section [" + section + "]");
      continue;
    }
    std::set<std::string> seen;
    for (const auto& [key, value] : body) {
      if (!seen.insert(key).second) {
        problems.push_back("[" + section + "] " + key + " given twice");
      }
      if (section != "suite" && !known->second.count(key)) {
        problems.push_back("unknown key [" + section + "] " + key);
      }
      if (!(section == "run" && key == "output_dir")) {
        cfg.canonical[section + "." + key] = value;
      }
    }
  }
  cfg.hash = HexDigest(Fnv1a64(Canonical(cfg.canonical)));

  Reader r(sections, problems);
  // [run]
  r.String("run", "name", cfg.name);
  r.Read("run", "output_dir", cfg.output_dir,
         [](const std::string& v) { return std::filesystem::path(v); });
  r.Unsigned("run", "seed", cfg.seed);

  // [data]
  r.String("data", "train", cfg.train);
  r.String("data", "dev", cfg.dev);
  r.Read("data", "target_dev", cfg.target_devs,
         [](const std::string& v) { return SplitList(v); });

  // [synthetic]
  cfg.synthetic.seed = cfg.seed;
  r.Read("synthetic", "bias_kind", cfg.synthetic.bias_kind,
         [](const std::string& v) { return ParseBiasKind(v); });
  r.Double("synthetic", "cue_strength", cfg.synthetic.cue_strength);
  r.Unsigned("synthetic", "vocabulary_size", cfg.synthetic.vocabulary_size);
  r.Unsigned("synthetic", "instances_per_split",
             cfg.synthetic.instances_per_split);
  r.Unsigned("synthetic", "eval_instances", cfg.synthetic.eval_instances);
  r.Unsigned("synthetic", "content_groups", cfg.synthetic.content_groups);
  r.Unsigned("synthetic", "seed", cfg.synthetic.seed);

  // [training]
  auto& t = cfg.training;
  t.seed = cfg.seed;
  r.Double("training", "learning_rate", t.learning_rate);
  r.Unsigned("training", "epochs", t.epochs);
  r.Unsigned("training", "batch_size", t.batch_size);
  r.Double("training", "l2", t.l2);
  r.Unsigned("training", "patience", t.patience);
  r.Read("training", "selection", t.selection,
         [](const std::string& v) { return ParseSelection(v); });
  r.Unsigned("training", "pair_cap", t.features.pair_cap);
  r.Unsigned("training", "hash_buckets", t.features.hash_buckets);
  r.Read("training", "prime_features", cfg.prime_features,
         [](const std::string& v) { return ParseFeatureSet(v); });
  r.Unsigned("training", "seed", t.seed);
  if (!(t.learning_rate > 0.0)) problems.push_back("[training] learning_rate must be > 0");
  if (t.epochs == 0) problems.push_back("[training] epochs must be >= 1");
  if (t.batch_size == 0) problems.push_back("[training] batch_size must be >= 1");
  if (!(t.l2 >= 0.0)) problems.push_back("[training] l2 must be >= 0");
  if (t.features.hash_buckets == 0) {
    problems.push_back("[training] hash_buckets must be >= 1");
  }

  // [debias]
  {
    std::string strategy = "Baseline";
    std::string experts;
    r.String("debias", "strategy", strategy);
    r.String("debias", "experts", experts);
    bool parts_ok = true;
    try {
      cfg.plan.strategy = ParseStrategy(Trim(strategy));
    } catch (const std::exception& e) {
      problems.push_back(std::string("[debias] strategy: ") + e.what());
      parts_ok = false;
    }
    std::string joined;
    for (const auto& e : SplitList(experts)) {
      try {
        cfg.plan.experts.push_back(ParseExpert(e));
      } catch (const std::exception& ex) {
        problems.push_back(std::string("[debias] experts: ") + ex.what());
        parts_ok = false;
      }
      joined += (joined.empty() ? "" : "+") + e;
    }
    cfg.plan.label = std::string(Trim(strategy)) +
                     (joined.empty() ? "" : ":" + joined);
    if (parts_ok) {
      try {
        ValidateExpertCount(cfg.plan.strategy, cfg.plan.experts.size());
      } catch (const std::exception& e) {
        problems.push_back(std::string("[debias] experts: ") + e.what());
      }
    }
    if (r.Find("debias", "strategy") == nullptr && !Trim(experts).empty()) {
      problems.push_back("[debias] experts given without a strategy");
    }
  }
  r.Read("debias", "ensemble_rule", cfg.ensemble_rule,
         [](const std::string& v) { return ParseEnsembleRule(v); });
  r.String("debias", "expert_dir", cfg.expert_dir);

  // [merge]
  r.Read("merge", "sources", cfg.merge_sources,
         [](const std::string& v) { return SplitList(v); });
  r.Read("merge", "dev_sources", cfg.merge_dev_sources,
         [](const std::string& v) { return SplitList(v); });
  r.Read("merge", "mode", cfg.merge_mode,
         [](const std::string& v) { return ParseMergeMode(v); });
  r.String("merge", "performance", cfg.performance_table);
  r.Read("merge", "ensemble", cfg.ensemble,
         [](const std::string& v) -> std::optional<EnsembleMode> {
           if (v == "none" || v.empty()) return std::nullopt;
           return ParseEnsembleMode(v);
         });
  r.Read("merge", "ensemble_features", cfg.ensemble_features,
         [](const std::string& v) {
           std::vector<FeatureSet> out;
           for (const auto& s : SplitList(v)) out.push_back(ParseFeatureSet(s));
           return out;
         });
  r.Read("merge", "ensemble_seeds", cfg.ensemble_seeds,
         [](const std::string& v) {
           std::vector<std::uint64_t> out;
           for (const auto& s : SplitList(v)) out.push_back(ParseUint(s));
           return out;
         });
  if (!cfg.merge_dev_sources.empty() &&
      cfg.merge_dev_sources.size() != cfg.merge_sources.size()) {
    problems.push_back("[merge] dev_sources must match sources one to one");
  }
  if (cfg.merge_mode == MergeMode::kPR && cfg.performance_table.empty() &&
      !cfg.merge_sources.empty() && cfg.merge_dev_sources.empty()) {
    problems.push_back(
        "[merge] mode PR needs either performance or dev_sources to score "
        "per-source baselines");
  }

  // [augment]
  r.Read("augment", "method", cfg.augment_method,
         [](const std::string& v) { return ParseAugmentMethod(v); });
  r.String("augment", "input", cfg.augment_input);
  r.String("augment", "teacher", cfg.teacher);
  r.String("augment", "judge", cfg.judge);
  r.String("augment", "lexicon", cfg.lexicon);
  r.String("augment", "embeddings", cfg.embeddings);
  r.Read("augment", "transform_command", cfg.transform_command,
         [](const std::string& v) {
           std::vector<std::string> out;
           for (auto part : SplitView(v, ' ')) {
             if (!part.empty()) out.emplace_back(part);
           }
           return out;
         });
  r.Read("augment", "timeout_ms", cfg.timeout_ms,
         [](const std::string& v) { return static_cast<int>(ParseUint(v)); });
  r.Unsigned("augment", "max_in_flight", cfg.max_in_flight);
  r.Double("augment", "mask_fraction", cfg.transform.mask_fraction);
  r.Unsigned("augment", "candidate_pool", cfg.transform.candidate_pool);
  r.Unsigned("augment", "beam", cfg.transform.beam);
  r.Unsigned("augment", "window", cfg.synonym.window);
  r.Double("augment", "cosine_gate", cfg.synonym.cosine_gate);
  if (!(cfg.transform.mask_fraction > 0.0 && cfg.transform.mask_fraction <= 1.0)) {
    problems.push_back("[augment] mask_fraction must lie in (0, 1]");
  }
  if (cfg.synonym.window == 0) problems.push_back("[augment] window must be >= 1");

  // [eval] / [suite]
  r.Read("eval", "formats", cfg.formats, [](const std::string& v) {
    std::vector<ReportFormat> out;
    for (const auto& s : SplitList(v)) out.push_back(ParseReportFormat(s));
    return out;
  });
  r.String("eval", "model", cfg.eval_model);
  if (const Section* suite = r.Entries("suite")) {
    for (const auto& [name, value] : *suite) {
      const auto parts = SplitList(value);
      DatasetSpec spec;
      spec.name = name;
      spec.group = "test";
      try {
        if (parts.empty() || parts[0].empty()) {
          throw InvalidArgument("missing dataset reference");
        }
        if (parts.size() > 4) throw InvalidArgument("too many fields");
        spec.ref = parts[0];
        if (parts.size() > 1) spec.scheme = ParseScheme(parts[1]);
        if (parts.size() > 2) spec.metric = ParseMetric(parts[2]);
        if (parts.size() > 3) spec.group = parts[3];
        cfg.suite.push_back(spec);
      } catch (const std::exception& e) {
        problems.push_back("[suite] " + name + ": " + e.what());
      }
    }
  }
  if (cfg.suite.empty() && cfg.train == "synthetic") {
    cfg.suite = {
        {"test_biased", "synthetic:test_biased", LabelScheme::kThreeWay,
         Metric::kAccuracy, "in-domain"},
        {"test_anti_biased", "synthetic:test_anti_biased",
         LabelScheme::kThreeWay, Metric::kAccuracy, "adversarial"},
    };
  }

  // [sweep]
  if (const std::string* plans = r.Find("sweep", "plans")) {
    for (const auto& p : SplitList(*plans)) {
      try {
        cfg.sweep_plans.push_back(ParsePlanSpec(p));
      } catch (const std::exception& e) {
        problems.push_back("[sweep] plans: " + std::string(e.what()));
      }
    }
  }
  r.Read("sweep", "seeds", cfg.sweep_seeds, [](const std::string& v) {
    std::vector<std::uint64_t> out;
    for (const auto& s : SplitList(v)) out.push_back(ParseUint(s));
    return out;
  });
  r.String("sweep", "correlation_group", cfg.correlation_group);

  // Synthetic spec sanity, checked up front so generation cannot fail later.
  if (!(cfg.synthetic.cue_strength >= 0.0 && cfg.synthetic.cue_strength <= 1.0)) {
    problems.push_back("[synthetic] cue_strength must lie in [0, 1]");
  } else {
    try {
      synthetic_vocabulary(cfg.synthetic);
    } catch (const std::exception& e) {
      problems.push_back(std::string("[synthetic] ") + e.what());
    }
  }

  if (!problems.empty()) throw ConfigError(std::move(problems));
  return cfg;
}

ExperimentConfig LoadConfig(const std::filesystem::path& path,
                            const std::vector<std::string>& overrides) {
  std::string content;
  try {
    content = ReadFile(path);
  } catch (const Error& e) {
    throw ConfigError({e.what()});
  }
  return ParseConfig(content, path.parent_path(), overrides);
}

}  // namespace nlidebias
