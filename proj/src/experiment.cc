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

#include "nlidebias/experiment.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>

#include "nlidebias/error.h"
#include "nlidebias/text_io.h"

namespace nlidebias {
namespace {

namespace fs = std::filesystem;

constexpr std::string_view kSyntheticPrefix = "synthetic:";
constexpr std::string_view kHardPrefix = "hard:";

bool IsFileRef(std::string_view ref) {
  return !ref.starts_with(kSyntheticPrefix) && !ref.starts_with(kHardPrefix) &&
         ref != "synthetic";
}

fs::path Resolve(const ExperimentConfig& cfg, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : cfg.base_dir / path;
}

fs::path OutDir(const ExperimentConfig& cfg) {
  return cfg.output_dir.is_absolute() ? cfg.output_dir
                                      : cfg.base_dir / cfg.output_dir;
}

// Collects missing-file problems for one command before any work starts.
class Requirements {
 public:
  explicit Requirements(const ExperimentConfig& cfg) : cfg_(cfg) {}

  void File(const std::string& what, const std::string& p) {
    if (p.empty()) {
      problems_.push_back(what + " is not set");
    } else if (!fs::exists(Resolve(cfg_, p))) {
      problems_.push_back(what + " '" + p + "' does not exist");
    }
  }

  void DataRef(const std::string& what, const std::string& ref) {
    std::string_view r = ref;
    while (r.starts_with(kHardPrefix)) {
      r.remove_prefix(kHardPrefix.size());
      const auto colon = r.find(':');
      if (colon == std::string_view::npos) {
        problems_.push_back(what + ": '" + ref + "' is not hard:<expert>:<ref>");
        return;
      }
      try {
        ParseExpert(r.substr(0, colon));
      } catch (const std::exception& e) {
        problems_.push_back(what + ": " + e.what());
      }
      r.remove_prefix(colon + 1);
    }
    if (r.starts_with(kSyntheticPrefix)) {
      const auto split = r.substr(kSyntheticPrefix.size());
      if (split != "train" && split != "dev" && split != "test_biased" &&
          split != "test_anti_biased") {
        problems_.push_back(what + ": unknown synthetic split '" +
                            std::string(split) + "'");
      }
      return;
    }
    if (r == "synthetic") return;
    File(what, std::string(r));
  }

  void Problem(std::string p) { problems_.push_back(std::move(p)); }

  void Check() const {
    if (!problems_.empty()) throw ConfigError(problems_);
  }

 private:
  const ExperimentConfig& cfg_;
  std::vector<std::string> problems_;
};

void RequireTrainingData(const ExperimentConfig& cfg, Requirements& req) {
  req.DataRef("[data] train", cfg.train);
  if (!cfg.dev.empty()) req.DataRef("[data] dev", cfg.dev);
  for (const auto& t : cfg.target_devs) req.DataRef("[data] target_dev", t);
  const auto sel = cfg.training.selection;
  if (sel == SelectionStrategy::kMixed && cfg.dev.empty()) {
    req.Problem("[training] selection mixed needs [data] dev");
  }
  if (sel == SelectionStrategy::kOracle && cfg.target_devs.empty()) {
    req.Problem("[training] selection oracle needs [data] target_dev");
  }
  if (!cfg.expert_dir.empty() && !fs::is_directory(Resolve(cfg, cfg.expert_dir))) {
    req.Problem("[debias] expert_dir '" + cfg.expert_dir + "' is not a directory");
  }
}

void RequireSuite(const ExperimentConfig& cfg, Requirements& req) {
  if (cfg.suite.empty()) req.Problem("[suite] lists no datasets");
  for (const auto& s : cfg.suite) req.DataRef("[suite] " + s.name, s.ref);
}

// Run log, truncated at the start of each command.
class RunLog {
 public:
  RunLog(const fs::path& dir, std::string_view command) {
    fs::create_directories(dir);
    out_.open(dir / "log.txt", std::ios::trunc);
    if (!out_) throw Error("cannot write " + (dir / "log.txt").string());
    Line("command " + std::string(command));
  }

  void Line(const std::string& s) { out_ << s << '\n' << std::flush; }

 private:
  std::ofstream out_;
};

// Loads, generates and caches the datasets and experts a command needs.
class Workspace {
 public:
  Workspace(const ExperimentConfig& cfg, RunLog& log) : cfg_(cfg), log_(log) {}

  const SyntheticSplits& Synthetic() {
    if (!synthetic_) {
      synthetic_ = generate_synthetic(cfg_.synthetic);
      log_.Line("generated synthetic " +
                std::string(BiasKindName(cfg_.synthetic.bias_kind)) +
                " data, seed " + std::to_string(cfg_.synthetic.seed));
    }
    return *synthetic_;
  }

  // `ref` resolved as a dataset named `name` under `scheme`.
  const Dataset& Get(const std::string& ref, LabelScheme scheme, Split split,
                     const std::string& name) {
    const std::string key = ref + "|" + std::string(SchemeName(scheme)) + "|" +
                            name;
    if (const auto it = cache_.find(key); it != cache_.end()) return *it->second;
    const Dataset& d = Store(Build(ref, scheme, split, name));
    cache_[key] = &d;
    log_.Line("dataset " + name + " <- " + ref + " (" +
              std::to_string(d.size()) + " instances)");
    return d;
  }

  const Dataset& Train() {
    return Get(cfg_.train == "synthetic" ? "synthetic:train" : cfg_.train,
               LabelScheme::kThreeWay, Split::kTrain, "train");
  }

  // Dev sets for checkpoint selection; nullopt when none are configured.
  std::optional<DevSets> Dev() {
    if (cfg_.dev.empty() && cfg_.target_devs.empty()) return std::nullopt;
    DevSets dev;
    if (!cfg_.dev.empty()) {
      dev.in_domain = &Get(cfg_.dev == "synthetic" ? "synthetic:dev" : cfg_.dev,
                           LabelScheme::kThreeWay, Split::kDev, "dev");
    }
    for (std::size_t i = 0; i < cfg_.target_devs.size(); ++i) {
      dev.targets.push_back(&Get(cfg_.target_devs[i], LabelScheme::kThreeWay,
                                 Split::kDev,
                                 "target_dev" + std::to_string(i + 1)));
    }
    return dev;
  }

  // Expert of `kind` trained with `seed` (or loaded from expert_dir).
  const BiasExpert& Expert(ExpertKind kind, std::uint64_t seed) {
    const auto key = std::make_pair(kind, seed);
    if (const auto it = experts_.find(key); it != experts_.end()) {
      return it->second;
    }
    if (!cfg_.expert_dir.empty()) {
      const fs::path p = Resolve(cfg_, cfg_.expert_dir) /
                         (std::string(ExpertName(kind)) + ".expert");
      log_.Line("loading expert " + p.string());
      return experts_.emplace(key, LoadExpert(p)).first->second;
    }
    TrainingConfig tc = cfg_.training;
    tc.seed = seed;
    log_.Line("training expert " + std::string(ExpertName(kind)) + " seed " +
              std::to_string(seed));
    return experts_.emplace(key, train_expert(kind, Train(), tc)).first->second;
  }

  const Dataset& Store(Dataset d) { return store_.emplace_back(std::move(d)); }

 private:
  Dataset Build(const std::string& ref, LabelScheme scheme, Split split,
                const std::string& name) {
    std::string_view r = ref;
    if (r.starts_with(kHardPrefix)) {
      r.remove_prefix(kHardPrefix.size());
      const auto colon = r.find(':');
      const ExpertKind kind = ParseExpert(r.substr(0, colon));
      const Dataset& inner = Get(std::string(r.substr(colon + 1)),
                                 LabelScheme::kThreeWay, split, name + ".full");
      const Dataset hard =
          extract_hard_subset(inner, Expert(kind, cfg_.training.seed));
      return Dataset(name, split, scheme, {hard.begin(), hard.end()});
    }
    if (r.starts_with(kSyntheticPrefix)) {
      const auto which = r.substr(kSyntheticPrefix.size());
      const auto& s = Synthetic();
      const Dataset& d = which == "train"         ? s.train
                         : which == "dev"         ? s.dev
                         : which == "test_biased" ? s.test_biased
                                                  : s.test_anti_biased;
      return Dataset(name, split, scheme, {d.begin(), d.end()});
    }
    const fs::path path = Resolve(cfg_, ref);
    if (path.extension() == ".jsonl") {
      auto loaded = load_jsonl(path, scheme, split, name);
      if (loaded.skipped > 0) {
        log_.Line("skipped " + std::to_string(loaded.skipped) +
                  " lines without a gold label in " + ref);
      }
      return std::move(loaded.dataset);
    }
    return load_tsv(path, scheme, split, name);
  }

  const ExperimentConfig& cfg_;
  RunLog& log_;
  std::optional<SyntheticSplits> synthetic_;
  std::deque<Dataset> store_;
  std::map<std::string, const Dataset*> cache_;
  std::map<std::pair<ExpertKind, std::uint64_t>, BiasExpert> experts_;
};

EvalSuite BuildSuite(const ExperimentConfig& cfg, Workspace& ws) {
  EvalSuite suite(cfg.name);
  for (const auto& s : cfg.suite) {
    suite.Add(ws.Get(s.ref, s.scheme, Split::kTest, s.name), s.metric, s.group);
  }
  return suite;
}

std::string TrainingSummary(const ExperimentConfig& cfg) {
  const auto& t = cfg.training;
  std::ostringstream out;
  out << "lr=" << FormatDouble(t.learning_rate) << " epochs=" << t.epochs
      << " batch=" << t.batch_size << " l2=" << FormatDouble(t.l2)
      << " patience=" << t.patience
      << " selection=" << SelectionName(t.selection)
      << " prime=" << FeatureSetName(cfg.prime_features)
      << " pair_cap=" << t.features.pair_cap
      << " hash_buckets=" << t.features.hash_buckets;
  return out.str();
}

std::string SyntheticSummary(const SyntheticBiasSpec& s) {
  std::ostringstream out;
  out << BiasKindName(s.bias_kind) << " cue_strength="
      << FormatDouble(s.cue_strength) << " train=" << s.instances_per_split
      << " eval=" << (s.eval_instances ? s.eval_instances : s.instances_per_split)
      << " vocabulary=" << s.vocabulary_size << " groups=" << s.content_groups
      << " seed=" << s.seed;
  return out.str();
}

bool UsesSynthetic(const ExperimentConfig& cfg) {
  if (cfg.train == "synthetic") return true;
  for (const auto& s : cfg.suite) {
    if (s.ref.find("synthetic") != std::string::npos) return true;
  }
  return false;
}

std::vector<std::pair<std::string, std::string>> BaseMetadata(
    const ExperimentConfig& cfg, std::string_view command) {
  std::vector<std::pair<std::string, std::string>> meta = {
      {"command", std::string(command)},
      {"name", cfg.name},
      {"config_hash", cfg.hash},
      {"seed", std::to_string(cfg.seed)},
      {"training_seed", std::to_string(cfg.training.seed)},
      {"training", TrainingSummary(cfg)},
  };
  if (UsesSynthetic(cfg)) {
    meta.emplace_back("synthetic", SyntheticSummary(cfg.synthetic));
  }
  return meta;
}

void WriteReports(const ExperimentConfig& cfg, const EvalReport& report,
                  const fs::path& stem, CommandResult& result) {
  for (const auto f : cfg.formats) {
    fs::path p = stem;
    p += f == ReportFormat::kTsv ? ".tsv" : ".md";
    emit_report(report, f, p);
    result.artifacts.push_back(p);
  }
}

void WriteManifest(const ExperimentConfig& cfg, std::string_view command,
                   CommandResult& result) {
  const fs::path dir = OutDir(cfg);
  std::ostringstream out;
  out << "command\t" << command << '\n';
  out << "config_hash\t" << cfg.hash << '\n';
  out << "seed\t" << cfg.seed << '\n';
  for (const auto& a : result.artifacts) {
    out << "artifact\t" << fs::relative(a, dir).generic_string() << '\n';
  }
  const fs::path p = dir / "manifest.tsv";
  WriteFile(p, out.str());
  result.artifacts.push_back(p);
}

std::vector<const BiasExpert*> PlanExperts(Workspace& ws, const PlanSpec& plan,
                                           std::uint64_t seed) {
  std::vector<const BiasExpert*> out;
  for (auto k : plan.experts) out.push_back(&ws.Expert(k, seed));
  return out;
}

DebiasedModel TrainPlan(const ExperimentConfig& cfg, Workspace& ws,
                        const PlanSpec& spec, std::uint64_t seed,
                        const std::optional<DevSets>& dev) {
  DebiasPlan plan;
  plan.strategy = spec.strategy;
  plan.experts = PlanExperts(ws, spec, seed);
  plan.config = cfg.training;
  plan.config.seed = seed;
  plan.prime_features = cfg.prime_features;
  plan.ensemble_rule = cfg.ensemble_rule;
  return train_debiased(plan, ws.Train(), dev ? &*dev : nullptr);
}

std::string PlanLabel(const PlanSpec& p) {
  return p.label.empty() ? std::string(StrategyName(p.strategy)) : p.label;
}

DebiasedModel LoadModelFile(const ExperimentConfig& cfg, const std::string& p) {
  return LoadDebiased(Resolve(cfg, p));
}

}  // namespace

CommandResult cmd_gen_synthetic(const ExperimentConfig& cfg) {
  const fs::path dir = OutDir(cfg);
  RunLog log(dir, "gen-synthetic");
  Workspace ws(cfg, log);
  const auto& s = ws.Synthetic();
  CommandResult result;
  const std::pair<const Dataset*, const char*> splits[] = {
      {&s.train, "train"},
      {&s.dev, "dev"},
      {&s.test_biased, "test_biased"},
      {&s.test_anti_biased, "test_anti_biased"}};
  for (const auto& [d, name] : splits) {
    const fs::path p = dir / "data" / (std::string(name) + ".tsv");
    save_tsv(*d, p);
    result.artifacts.push_back(p);
    log.Line("wrote " + p.filename().string() + " (" + std::to_string(d->size()) +
             " instances)");
  }
  WriteManifest(cfg, "gen-synthetic", result);
  return result;
}

CommandResult cmd_train_expert(const ExperimentConfig& cfg) {
  Requirements req(cfg);
  RequireTrainingData(cfg, req);
  RequireSuite(cfg, req);
  req.Check();

  const fs::path dir = OutDir(cfg);
  RunLog log(dir, "train-expert");
  ExperimentConfig local = cfg;
  local.expert_dir.clear();  // always train here
  Workspace ws(local, log);
  const EvalSuite suite = BuildSuite(local, ws);

  std::vector<ExpertKind> kinds = cfg.plan.experts;
  if (kinds.empty()) kinds.assign(kAllExperts.begin(), kAllExperts.end());
  CommandResult result;
  EvalReport report = EmptyReport(suite);
  report.metadata = BaseMetadata(cfg, "train-expert");
  for (auto k : kinds) {
    const BiasExpert& e = ws.Expert(k, cfg.training.seed);
    const fs::path p = dir / "experts" / (std::string(e.name()) + ".expert");
    SaveExpert(e, p);
    result.artifacts.push_back(p);
    AddRun(report, suite, "expert:" + std::string(e.name()),
           [&e](const NliInstance& x) { return e.Predict(x); });
  }
  WriteReports(cfg, report, dir / "report", result);
  result.report = std::move(report);
  WriteManifest(cfg, "train-expert", result);
  return result;
}

CommandResult cmd_train(const ExperimentConfig& cfg) {
  Requirements req(cfg);
  RequireTrainingData(cfg, req);
  RequireSuite(cfg, req);
  req.Check();

  const fs::path dir = OutDir(cfg);
  RunLog log(dir, "train");
  Workspace ws(cfg, log);
  const EvalSuite suite = BuildSuite(cfg, ws);
  const auto dev = ws.Dev();

  CommandResult result;
  EvalReport report = EmptyReport(suite);
  report.metadata = BaseMetadata(cfg, "train");
  report.metadata.emplace_back("plan", PlanLabel(cfg.plan));
  report.metadata.emplace_back("ensemble_rule",
                               std::string(EnsembleRuleName(cfg.ensemble_rule)));

  // Baseline is trained alongside every plan as the control column.
  if (cfg.plan.strategy != Strategy::kBaseline) {
    log.Line("training Baseline control");
    const DebiasedModel base =
        TrainPlan(cfg, ws, PlanSpec{}, cfg.training.seed, dev);
    SaveDebiased(base, dir / "baseline.ckpt");
    result.artifacts.push_back(dir / "baseline.ckpt");
    AddRun(report, suite, "Baseline", base.AsPredictor());
  }
  log.Line("training " + PlanLabel(cfg.plan));
  const DebiasedModel model =
      TrainPlan(cfg, ws, cfg.plan, cfg.training.seed, dev);
  SaveDebiased(model, dir / "model.ckpt");
  result.artifacts.push_back(dir / "model.ckpt");
  AddRun(report, suite, PlanLabel(cfg.plan), model.AsPredictor());

  WriteReports(cfg, report, dir / "report", result);
  result.report = std::move(report);
  WriteManifest(cfg, "train", result);
  return result;
}

CommandResult cmd_augment(const ExperimentConfig& cfg) {
  Requirements req(cfg);
  const std::string input = cfg.augment_input.empty() ? cfg.train : cfg.augment_input;
  req.DataRef("[augment] input", input);
  if (!cfg.teacher.empty()) req.File("[augment] teacher", cfg.teacher);
  if (!cfg.judge.empty()) req.File("[augment] judge", cfg.judge);
  switch (cfg.augment_method) {
    case AugmentMethod::kSynonym:
      req.File("[augment] embeddings", cfg.embeddings);
      req.File("[augment] lexicon", cfg.lexicon);
      break;
    case AugmentMethod::kMaskedSubstitute:
    case AugmentMethod::kParaphrase:
      if (cfg.transform_command.empty()) {
        req.Problem("[augment] transform_command is not set");
      }
      break;
    case AugmentMethod::kTextSwap:
      break;
  }
  req.Check();

  const fs::path dir = OutDir(cfg);
  RunLog log(dir, "augment");
  Workspace ws(cfg, log);
  const Dataset& data =
      ws.Get(input == "synthetic" ? "synthetic:train" : input,
             LabelScheme::kThreeWay, Split::kTrain, "input");

  std::optional<DebiasedModel> teacher;
  std::optional<DebiasedModel> judge;
  if (!cfg.teacher.empty()) teacher = LoadModelFile(cfg, cfg.teacher);
  if (!cfg.judge.empty()) judge = LoadModelFile(cfg, cfg.judge);
  std::optional<SynonymLexicon> lexicon;
  std::optional<EmbeddingTable> embeddings;
  if (cfg.augment_method == AugmentMethod::kSynonym) {
    lexicon = SynonymLexicon::Load(Resolve(cfg, cfg.lexicon));
    embeddings = EmbeddingTable::Load(Resolve(cfg, cfg.embeddings));
  }
  std::unique_ptr<SubprocessTransformClient> client;
  if (!cfg.transform_command.empty()) {
    client = std::make_unique<SubprocessTransformClient>(
        cfg.transform_command, cfg.timeout_ms, cfg.max_in_flight);
  }

  Predictor teacher_fn;
  if (teacher) teacher_fn = teacher->AsPredictor();
  AugmentOptions opts;
  opts.method = cfg.augment_method;
  opts.seed = cfg.seed;
  opts.teacher = teacher ? &teacher_fn : nullptr;
  opts.lexicon = lexicon ? &*lexicon : nullptr;
  opts.embeddings = embeddings ? &*embeddings : nullptr;
  opts.client = client.get();
  opts.synonym = cfg.synonym;
  opts.transform = cfg.transform;
  AugmentResult res = augment_dataset(data, opts);

  const bool external = cfg.augment_method == AugmentMethod::kMaskedSubstitute ||
                        cfg.augment_method == AugmentMethod::kParaphrase;
  if (external && res.augmented == 0 && res.dropped > 0 &&
      (res.drop_reasons.count("service exited") ||
       res.drop_reasons.count("service unavailable"))) {
    throw Error("transform service unreachable: '" + cfg.transform_command[0] +
                "'");
  }

  CommandResult result;
  const fs::path out = dir / "augmented.tsv";
  save_tsv(res.dataset, out);
  result.artifacts.push_back(out);

  std::ostringstream summary;
  summary << "#meta\tconfig_hash\t" << cfg.hash << '\n';
  summary << "#meta\tseed\t" << cfg.seed << '\n';
  summary << "method\t" << AugmentMethodName(cfg.augment_method) << '\n';
  summary << "original\t" << res.original << '\n';
  summary << "augmented\t" << res.augmented << '\n';
  summary << "dropped\t" << res.dropped << '\n';
  summary << "total\t" << res.dataset.size() << '\n';
  for (const auto& [why, n] : res.drop_reasons) {
    summary << "dropped:" << why << '\t' << n << '\n';
  }
  if (cfg.augment_method == AugmentMethod::kSynonym) {
    summary << "words_replaced\t" << res.substitution.replaced << '\n';
    summary << "missing_embedding\t" << res.substitution.missing_embedding << '\n';
  }
  if (judge && res.augmented > 0) {
    std::vector<NliInstance> only;
    for (const auto& x : res.dataset) {
      if (AugmentationTag(x)) only.push_back(x);
    }
    const Dataset aug("augmented", Split::kTrain, LabelScheme::kThreeWay,
                      std::move(only));
    summary << "auto_quality\t" << FormatDouble(auto_quality(aug, judge->AsPredictor()))
            << '\n';
  }
  const fs::path sp = dir / "summary.tsv";
  WriteFile(sp, summary.str());
  result.artifacts.push_back(sp);
  log.Line("augmented " + std::to_string(res.augmented) + ", dropped " +
           std::to_string(res.dropped));
  WriteManifest(cfg, "augment", result);
  return result;
}

CommandResult cmd_merge(const ExperimentConfig& cfg) {
  Requirements req(cfg);
  if (cfg.merge_sources.empty()) req.Problem("[merge] sources is not set");
  for (const auto& s : cfg.merge_sources) req.DataRef("[merge] sources", s);
  for (const auto& s : cfg.merge_dev_sources) req.DataRef("[merge] dev_sources", s);
  if (!cfg.performance_table.empty()) {
    req.File("[merge] performance", cfg.performance_table);
  }
  RequireSuite(cfg, req);
  req.Check();

  const fs::path dir = OutDir(cfg);
  RunLog log(dir, "merge");
  Workspace ws(cfg, log);
  const EvalSuite suite = BuildSuite(cfg, ws);

  std::map<std::string, double> perf;
  if (!cfg.performance_table.empty()) {
    perf = load_performance_table(Resolve(cfg, cfg.performance_table));
  }
  MergePlan plan;
  plan.mode = cfg.merge_mode;
  for (std::size_t i = 0; i < cfg.merge_sources.size(); ++i) {
    const std::string& ref = cfg.merge_sources[i];
    const std::string name = IsFileRef(ref) ? fs::path(ref).stem().string()
                                            : "source" + std::to_string(i + 1);
    MergeSource src;
    src.train = &ws.Get(ref, LabelScheme::kThreeWay, Split::kTrain, name);
    if (!cfg.merge_dev_sources.empty()) {
      src.dev = &ws.Get(cfg.merge_dev_sources[i], LabelScheme::kThreeWay,
                        Split::kDev, name + "-dev");
    }
    if (const auto it = perf.find(name); it != perf.end()) {
      src.performance = it->second;
    }
    plan.sources.push_back(src);
  }
  const bool scored = plan.mode == MergeMode::kPR && cfg.performance_table.empty();
  if (scored) {
    // p_j = mean dev accuracy of a Baseline trained on source j alone.
    std::ostringstream table;
    for (auto& src : plan.sources) {
      auto init = InitModel(cfg.prime_features, *src.train, cfg.training.features);
      const SoftmaxModel m = train(std::move(init), *src.train, {}, cfg.training).model;
      double sum = 0.0;
      for (const auto& d : plan.sources) {
        sum += static_cast<double>(CountCorrect(m.AsPredictor(), *d.dev)) /
               static_cast<double>(d.dev->size());
      }
      src.performance = sum / static_cast<double>(plan.sources.size());
      table << src.train->name() << '\t' << FormatDouble(*src.performance) << '\n';
    }
    WriteFile(dir / "performance.tsv", table.str());
    log.Line("scored per-source baselines for PR weights");
  }
  MergedData merged = merge_datasets(plan, "merged");
  log.Line("merged " + std::to_string(merged.train.size()) + " instances (" +
           std::string(MergeModeName(plan.mode)) + ")");
  std::optional<DevSets> dev;
  if (merged.dev) dev = DevSets{&*merged.dev, {}};

  CommandResult result;
  EvalReport report = EmptyReport(suite);
  report.metadata = BaseMetadata(cfg, "merge");
  report.metadata.emplace_back("merge_mode",
                               std::string(MergeModeName(plan.mode)));
  std::string sources;
  for (const auto& s : plan.sources) {
    sources += (sources.empty() ? "" : ",") + s.train->name();
  }
  report.metadata.emplace_back("sources", sources);

  auto init = InitModel(cfg.prime_features, merged.train, cfg.training.features);
  const SoftmaxModel model =
      train(std::move(init), merged.train, merged.weights, cfg.training,
            dev ? &*dev : nullptr)
          .model;
  const DebiasedModel single(Strategy::kBaseline, {}, {model});
  SaveDebiased(single, dir / "model.ckpt");
  result.artifacts.push_back(dir / "model.ckpt");
  AddRun(report, suite, "merge:" + std::string(MergeModeName(plan.mode)),
         single.AsPredictor());

  if (cfg.ensemble) {
    std::vector<MemberSpec> members;
    if (*cfg.ensemble == EnsembleMode::kMixed) {
      auto feats = cfg.ensemble_features;
      if (feats.empty()) {
        feats = {FeatureSet::kPair, FeatureSet::kPairOverlap,
                 FeatureSet::kPairLength};
      }
      for (auto f : feats) members.push_back({f, cfg.training});
    } else {
      auto seeds = cfg.ensemble_seeds;
      if (seeds.empty()) {
        seeds = {cfg.training.seed, cfg.training.seed + 1, cfg.training.seed + 2};
      }
      for (auto s : seeds) {
        MemberSpec m{cfg.prime_features, cfg.training};
        m.config.seed = s;
        members.push_back(m);
      }
    }
    auto models = train_ensemble(*cfg.ensemble, members, merged.train,
                                 merged.weights, dev ? &*dev : nullptr);
    const DebiasedModel ens(Strategy::kBaseline, {}, std::move(models));
    SaveDebiased(ens, dir / "ensemble.ckpt");
    result.artifacts.push_back(dir / "ensemble.ckpt");
    AddRun(report, suite,
           "ensemble:" + std::string(EnsembleModeName(*cfg.ensemble)),
           ens.AsPredictor());
  }

  if (scored) result.artifacts.push_back(dir / "performance.tsv");
  WriteReports(cfg, report, dir / "report", result);
  result.report = std::move(report);
  WriteManifest(cfg, "merge", result);
  return result;
}

CommandResult cmd_eval(const ExperimentConfig& cfg) {
  Requirements req(cfg);
  req.File("[eval] model", cfg.eval_model);
  RequireSuite(cfg, req);
  req.Check();

  const fs::path dir = OutDir(cfg);
  RunLog log(dir, "eval");
  Workspace ws(cfg, log);
  const EvalSuite suite = BuildSuite(cfg, ws);
  const DebiasedModel model = LoadModelFile(cfg, cfg.eval_model);

  CommandResult result;
  EvalReport report = EmptyReport(suite);
  report.metadata = BaseMetadata(cfg, "eval");
  report.metadata.emplace_back("model", cfg.eval_model);
  const std::string column = std::string(StrategyName(model.strategy()));
  std::vector<double> col;
  for (const auto& e : suite.entries()) {
    const auto preds = PredictAll(model.AsPredictor(), *e.dataset);
    const fs::path p = dir / "predictions" / (e.dataset->name() + ".tsv");
    WriteFile(p, FormatPredictions(*e.dataset, preds));
    result.artifacts.push_back(p);
    col.push_back(Score(preds, *e.dataset, e.metric));
  }
  report.AddColumn(column, std::move(col));
  WriteReports(cfg, report, dir / "report", result);
  result.report = std::move(report);
  WriteManifest(cfg, "eval", result);
  return result;
}

CommandResult cmd_sweep(const ExperimentConfig& cfg) {
  Requirements req(cfg);
  RequireTrainingData(cfg, req);
  RequireSuite(cfg, req);
  if (cfg.sweep_plans.empty()) req.Problem("[sweep] plans is not set");
  req.Check();

  const fs::path dir = OutDir(cfg);
  RunLog log(dir, "sweep");
  Workspace ws(cfg, log);
  const EvalSuite suite = BuildSuite(cfg, ws);
  const auto dev = ws.Dev();
  std::vector<std::uint64_t> seeds = cfg.sweep_seeds;
  if (seeds.empty()) seeds = {cfg.training.seed};

  std::vector<std::string> matrix_columns;
  for (const auto& e : suite.entries()) {
    if (cfg.correlation_group.empty() || e.group == cfg.correlation_group) {
      matrix_columns.push_back(e.dataset->name());
    }
  }
  RunMatrix runs(matrix_columns);
  EvalReport report = EmptyReport(suite);
  report.metadata = BaseMetadata(cfg, "sweep");
  std::string seed_list;
  for (auto s : seeds) seed_list += (seed_list.empty() ? "" : ",") + std::to_string(s);
  report.metadata.emplace_back("sweep_seeds", seed_list);
  report.metadata.emplace_back("correlation_inputs", "raw scores");
  std::ostringstream cells;
  cells << "plan\tseed\tstatus\n";

  for (const auto& plan : cfg.sweep_plans) {
    const std::string label = PlanLabel(plan);
    std::vector<double> sum(suite.entries().size(), 0.0);
    std::size_t ok = 0;
    for (auto seed : seeds) {
      const std::string run = label + "@" + std::to_string(seed);
      std::vector<std::pair<std::string, double>> row;
      try {
        const DebiasedModel model = TrainPlan(cfg, ws, plan, seed, dev);
        const auto predict = model.AsPredictor();
        std::size_t i = 0;
        for (const auto& e : suite.entries()) {
          const double s = Score(PredictAll(predict, *e.dataset), *e.dataset,
                                 e.metric);
          sum[i++] += s;
          if (std::find(matrix_columns.begin(), matrix_columns.end(),
                        e.dataset->name()) != matrix_columns.end()) {
            row.emplace_back(e.dataset->name(), s);
          }
        }
        ++ok;
        cells << label << '\t' << seed << "\tok\n";
      } catch (const std::exception& ex) {
        row.clear();
        cells << label << '\t' << seed << "\terror: " << ex.what() << '\n';
        log.Line("run " + run + " failed: " + ex.what());
      }
      runs.AddRow(run, row);
      log.Line("run " + run + " done");
    }
    std::vector<double> mean(sum.size(), std::numeric_limits<double>::quiet_NaN());
    if (ok > 0) {
      for (std::size_t i = 0; i < sum.size(); ++i) mean[i] = sum[i] / ok;
    }
    report.AddColumn(label, std::move(mean));
  }

  CommandResult result;
  WriteReports(cfg, report, dir / "report", result);
  const fs::path rm = dir / "run_matrix.tsv";
  WriteFile(rm, FormatRunMatrix(runs));
  result.artifacts.push_back(rm);
  const fs::path cp = dir / "cells.tsv";
  WriteFile(cp, cells.str());
  result.artifacts.push_back(cp);
  if (runs.rows().size() >= 2 && !runs.HasMissing() && !matrix_columns.empty()) {
    const fs::path cm = dir / "correlation.tsv";
    WriteFile(cm, FormatCorrelation(correlation_matrix(runs)));
    result.artifacts.push_back(cm);
  } else {
    log.Line("correlation skipped: needs two complete runs");
  }
  result.report = std::move(report);
  WriteManifest(cfg, "sweep", result);
  return result;
}

CommandResult cmd_report(const std::vector<fs::path>& inputs,
                         const fs::path& output_dir,
                         const std::vector<ReportFormat>& formats) {
  if (inputs.empty()) throw ConfigError({"no report files given"});
  std::vector<EvalReport> reports;
  for (const auto& p : inputs) reports.push_back(LoadReport(p));
  EvalReport merged = MergeReports(reports);
  CommandResult result;
  for (const auto f : formats) {
    const fs::path p = output_dir / (f == ReportFormat::kTsv ? "report.tsv"
                                                             : "report.md");
    emit_report(merged, f, p);
    result.artifacts.push_back(p);
  }
  result.report = std::move(merged);
  return result;
}

}  // namespace nlidebias
