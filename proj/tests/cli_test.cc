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


#include <gtest/gtest.h>

#include <fstream>
#include <string>
#include <vector>

#include "nlidebias/error.h"
#include "nlidebias/experiment.h"
#include "nlidebias/text_io.h"
#include "test_util.h"

namespace nlidebias {
namespace {

namespace fs = std::filesystem;
using testing::ScratchDir;

constexpr char kSmall[] =
    "[synthetic]\n"
    "instances_per_split = 300\n"
    "eval_instances = 150\n"
    "[training]\n"
    "epochs = 3\n";

int RunTool(std::vector<std::string> args) {
  args.insert(args.begin(), "nlidebias");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  ::testing::internal::CaptureStdout();
  ::testing::internal::CaptureStderr();
  const int code = RunCli(static_cast<int>(argv.size()), argv.data());
  ::testing::internal::GetCapturedStdout();
  ::testing::internal::GetCapturedStderr();
  return code;
}

std::size_t CountLines(const fs::path& p) {
  const std::string s = ReadFile(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

fs::path WriteConfig(const ScratchDir& dir, const std::string& name,
                     const std::string& body) {
  const fs::path p = dir / name;
  WriteFile(p, body);
  return p;
}

TEST(Config, ProblemsListedTogether) {
  try {
    ParseConfig(
        "[run]\nseed = x\ncolour = blue\n"
        "[training]\nlearning_rate = -1\n"
        "[debias]\nstrategy = Reweight\nexperts = lexical\n"
        "[augment]\nmask_fraction = 2\n",
        ".");
    FAIL() << "expected a config error";
  } catch (const ConfigError& e) {
    const auto& p = e.problems();
    auto has = [&](const std::string& s) {
      return std::any_of(p.begin(), p.end(), [&](const std::string& q) {
        return q.find(s) != std::string::npos;
      });
    };
    EXPECT_GE(p.size(), 6u) << e.what();
    EXPECT_TRUE(has("[run] seed")) << e.what();
    EXPECT_TRUE(has("colour")) << e.what();
    EXPECT_TRUE(has("learning_rate")) << e.what();
    EXPECT_TRUE(has("[debias] strategy")) << e.what();
    EXPECT_TRUE(has("[debias] experts")) << e.what();
    EXPECT_TRUE(has("mask_fraction")) << e.what();
  }
}

TEST(Config, InvalidExpertEnumeratesValidNames) {
  try {
    ParseConfig("[debias]\nstrategy = ReW\nexperts = lexical\n", ".");
    FAIL() << "expected a config error";
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("lexical"), std::string::npos);
    for (const char* name : {"wordOverlap", "partialInput", "sentenceLength"}) {
      EXPECT_NE(what.find(name), std::string::npos) << what;
    }
  }
}

TEST(Config, DefaultsMatchTransformAndSynonymValues) {
  const auto cfg = ParseConfig("", ".");
  EXPECT_DOUBLE_EQ(cfg.transform.mask_fraction, 0.3);
  EXPECT_EQ(cfg.transform.candidate_pool, 100u);
  EXPECT_EQ(cfg.transform.beam, 5u);
  EXPECT_EQ(cfg.synonym.window, 3u);
  EXPECT_DOUBLE_EQ(cfg.synonym.cosine_gate, 0.0);
}

TEST(Config, HashIgnoresOutputDirAndFollowsOverrides) {
  const auto a = ParseConfig("[run]\noutput_dir = a\nseed = 4\n", ".");
  const auto b = ParseConfig("[run]\noutput_dir = b\nseed = 4\n", ".");
  const auto c = ParseConfig("[run]\noutput_dir = a\nseed = 4\n", ".",
                             {"run.seed=5"});
  EXPECT_EQ(a.hash, b.hash);
  EXPECT_NE(a.hash, c.hash);
  EXPECT_EQ(c.seed, 5u);
  EXPECT_THROW(ParseConfig("", ".", {"seed=5"}), ConfigError);
}

TEST(Cli, ExitCodes) {
  ScratchDir dir("cli-exit");
  EXPECT_EQ(RunTool({}), 1);
  EXPECT_EQ(RunTool({"train", (dir / "missing.ini").string()}), 1);
  EXPECT_EQ(RunTool({"frobnicate"}), 1);
  const auto bad = WriteConfig(dir, "bad.ini", "[training]\nepochs = 0\n");
  EXPECT_EQ(RunTool({"train", bad.string()}), 1);

  WriteFile(dir / "garbage.ckpt", "not a model\n");
  const auto eval = WriteConfig(
      dir, "eval.ini",
      std::string(kSmall) + "[run]\noutput_dir = " + (dir / "out").string() +
          "\n[eval]\nmodel = " + (dir / "garbage.ckpt").string() + "\n");
  EXPECT_EQ(RunTool({"eval", eval.string()}), 2);
}

TEST(Cli, SynonymWithoutEmbeddingsIsAConfigError) {
  ScratchDir dir("cli-syn");
  WriteFile(dir / "lex.tsv", "dog\tn\thound\n");
  const auto cfg = WriteConfig(
      dir, "syn.ini",
      std::string(kSmall) + "[run]\noutput_dir = " + (dir / "out").string() +
          "\n[augment]\nmethod = synonym\nlexicon = lex.tsv\n");
  EXPECT_EQ(RunTool({"augment", cfg.string()}), 1);
  EXPECT_FALSE(fs::exists(dir / "out" / "augmented.tsv"));
}

TEST(Cli, TrainTwiceGivesByteIdenticalReports) {
  ScratchDir dir("cli-repro");
  const std::string body = std::string(kSmall) +
                           "[run]\nseed = 7\n"
                           "[debias]\nstrategy = ReW\nexperts = partialInput\n";
  const auto cfg = WriteConfig(dir, "t.ini", body);
  ASSERT_EQ(RunTool({"train", cfg.string(), "--set",
                 "run.output_dir=" + (dir / "a").string()}),
            0);
  ASSERT_EQ(RunTool({"train", cfg.string(), "--set",
                 "run.output_dir=" + (dir / "b").string()}),
            0);
  for (const char* f : {"report.tsv", "report.md", "model.ckpt", "manifest.tsv"}) {
    EXPECT_EQ(ReadFile(dir / "a" / f), ReadFile(dir / "b" / f)) << f;
  }
  const EvalReport r = LoadReport(dir / "a" / "report.tsv");
  EXPECT_EQ(r.columns, (std::vector<std::string>{"Baseline", "ReW:partialInput"}));
  EXPECT_EQ(r.Meta("seed"), "7");
  EXPECT_FALSE(r.Meta("config_hash").empty());
  const std::string manifest = ReadFile(dir / "a" / "manifest.tsv");
  EXPECT_NE(manifest.find("config_hash\t" + r.Meta("config_hash")),
            std::string::npos);
  EXPECT_NE(manifest.find("seed\t7"), std::string::npos);
}

TEST(Cli, BaselinePlanReportsBaselineColumn) {
  ScratchDir dir("cli-base");
  auto cfg = ParseConfig(std::string(kSmall) + "[run]\noutput_dir = " +
                             (dir / "out").string() + "\n",
                         dir.path());
  const auto res = cmd_train(cfg);
  ASSERT_TRUE(res.report);
  EXPECT_EQ(res.report->columns, std::vector<std::string>{"Baseline"});
  EXPECT_EQ(res.report->rows,
            (std::vector<std::string>{"test_biased", "test_anti_biased"}));
}

TEST(Cli, SweepTwoPlansThreeSeeds) {
  ScratchDir dir("cli-sweep");
  const std::string suite = "[suite]\n"
                           "biased = synthetic:test_biased, three_way, "
                           "accuracy, adversarial\n"
                           "anti = synthetic:test_anti_biased, three_way, "
                           "accuracy, adversarial\n";
  const std::string base = suite + kSmall +
                           "[sweep]\nseeds = 1, 2, 3\n"
                           "correlation_group = adversarial\n";
  auto two = ParseConfig(base + "plans = Baseline, ReW:partialInput\n[run]\n"
                                "output_dir = " + (dir / "two").string() + "\n",
                         dir.path());
  const auto r2 = cmd_sweep(two);
  EXPECT_EQ(CountLines(dir / "two" / "run_matrix.tsv"), 1u + 6u);
  EXPECT_TRUE(fs::exists(dir / "two" / "correlation.tsv"));
  EXPECT_EQ(r2.report->Meta("correlation_inputs"), "raw scores");

  auto three = ParseConfig(
      base + "plans = Baseline, ReW:partialInput, BiasProd:partialInput\n"
             "[run]\noutput_dir = " + (dir / "three").string() + "\n",
      dir.path());
  const auto r3 = cmd_sweep(three);
  ASSERT_EQ(r3.report->columns.size(), 3u);
  for (std::size_t r = 0; r < r2.report->rows.size(); ++r) {
    for (std::size_t c = 0; c < 2; ++c) {
      EXPECT_EQ(r3.report->scores[r][c], r2.report->scores[r][c]);
    }
  }
  const std::string m2 = ReadFile(dir / "two" / "run_matrix.tsv");
  const std::string m3 = ReadFile(dir / "three" / "run_matrix.tsv");
  EXPECT_EQ(m3.substr(0, m2.size()), m2);
}

TEST(Cli, SweepWithOneRunSkipsCorrelation) {
  ScratchDir dir("cli-sweep1");
  auto cfg = ParseConfig(std::string(kSmall) + "[sweep]\nplans = Baseline\n" +
                             "[run]\noutput_dir = " + (dir / "o").string() + "\n",
                         dir.path());
  cmd_sweep(cfg);
  EXPECT_EQ(CountLines(dir / "o" / "run_matrix.tsv"), 2u);
  EXPECT_FALSE(fs::exists(dir / "o" / "correlation.tsv"));
}

TEST(Cli, TextSwapDoublesContradictionFile) {
  ScratchDir dir("cli-swap");
  Rng rng(3);
  std::vector<NliInstance> xs;
  for (int i = 0; i < 40; ++i) {
    auto x = testing::RandomInstance(rng, i);
    x.gold = Verdict::kContradiction;
    xs.push_back(x);
  }
  save_tsv(testing::MakeSet(xs), dir / "c.tsv");
  const auto cfg = WriteConfig(dir, "a.ini",
                               "[run]\noutput_dir = out\n"
                               "[augment]\nmethod = text_swap\ninput = c.tsv\n");
  ASSERT_EQ(RunTool({"augment", cfg.string()}), 0);
  EXPECT_EQ(CountLines(dir / "out" / "augmented.tsv"), 80u);
  const std::string summary = ReadFile(dir / "out" / "summary.tsv");
  EXPECT_NE(summary.find("original\t40"), std::string::npos) << summary;
  EXPECT_NE(summary.find("augmented\t40"), std::string::npos) << summary;
  EXPECT_NE(summary.find("dropped\t0"), std::string::npos) << summary;
}

TEST(Cli, TextSwapOfEntailmentNeedsTeacher) {
  ScratchDir dir("cli-swap-e");
  save_tsv(testing::MakeSet({testing::Make("1", "a", "b", Verdict::kEntailment)}),
           dir / "e.tsv");
  const auto cfg = WriteConfig(dir, "a.ini",
                               "[run]\noutput_dir = out\n"
                               "[augment]\ninput = e.tsv\n");
  EXPECT_EQ(RunTool({"augment", cfg.string()}), 1);
}

TEST(Cli, UnreachableTransformServiceFails) {
  ScratchDir dir("cli-unreach");
  save_tsv(testing::MakeSet({testing::Make("1", "a", "b", Verdict::kEntailment)}),
           dir / "e.tsv");
  const auto cfg = WriteConfig(dir, "a.ini",
                               "[run]\noutput_dir = out\n"
                               "[augment]\nmethod = paraphrase\ninput = e.tsv\n"
                               "transform_command = /nonexistent/service\n");
  EXPECT_EQ(RunTool({"augment", cfg.string()}), 2);
}

TEST(Cli, MergeScoresSourcesForPerformanceWeights) {
  ScratchDir dir("cli-merge");
  SyntheticBiasSpec a;
  a.instances_per_split = 200;
  a.eval_instances = 100;
  SyntheticBiasSpec b = a;
  b.bias_kind = BiasKind::kWordOverlap;
  b.seed = 9;
  const auto sa = generate_synthetic(a);
  const auto sb = generate_synthetic(b);
  save_tsv(sa.train, dir / "alpha.tsv");
  save_tsv(sa.dev, dir / "alpha-dev.tsv");
  save_tsv(sb.train, dir / "beta.tsv");
  save_tsv(sb.dev, dir / "beta-dev.tsv");
  const auto cfg = ParseConfig(
      "[run]\noutput_dir = out\n[training]\nepochs = 2\n"
      "[merge]\nsources = alpha.tsv, beta.tsv\n"
      "dev_sources = alpha-dev.tsv, beta-dev.tsv\nmode = PR\n"
      "[suite]\nalpha = alpha-dev.tsv\nbeta = beta-dev.tsv\n",
      dir.path());
  const auto res = cmd_merge(cfg);
  const auto table = load_performance_table(dir / "out" / "performance.tsv");
  ASSERT_EQ(table.size(), 2u);
  for (const auto& [name, p] : table) {
    EXPECT_GT(p, 0.0) << name;
    EXPECT_LE(p, 1.0) << name;
  }
  EXPECT_EQ(res.report->Meta("merge_mode"), "PR");
  EXPECT_EQ(res.report->columns, std::vector<std::string>{"merge:PR"});
}

TEST(Cli, PrWithoutPerformanceOrDevIsAConfigError) {
  EXPECT_THROW(ParseConfig("[merge]\nsources = a.tsv, b.tsv\nmode = PR\n", "."),
               ConfigError);
}

TEST(Cli, ReportCombinesColumns) {
  ScratchDir dir("cli-report");
  EvalReport a;
  a.rows = {"d"};
  a.groups = {"g"};
  a.metrics = {Metric::kAccuracy};
  a.scores.resize(1);
  a.AddColumn("x", {0.5});
  EvalReport b = a;
  b.columns = {"y"};
  emit_report(a, ReportFormat::kTsv, dir / "a.tsv");
  emit_report(b, ReportFormat::kTsv, dir / "b.tsv");
  ASSERT_EQ(RunTool({"report", (dir / "a.tsv").string(), (dir / "b.tsv").string(),
                 "-o", dir.path().string(), "--format", "tsv"}),
            0);
  EXPECT_EQ(LoadReport(dir / "report.tsv").columns,
            (std::vector<std::string>{"x", "y"}));
}

}  // namespace
}  // namespace nlidebias
