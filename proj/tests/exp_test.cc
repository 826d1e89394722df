/*
 * Copyright 2026 The Reweigh Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "json.hpp"
#include "reweigh/clf/checkpoint.h"
#include "reweigh/core/errors.h"
#include "reweigh/exp/config.h"
#include "reweigh/exp/metrics.h"
#include "reweigh/exp/oracle_report.h"
#include "reweigh/exp/runner.h"

namespace reweigh::experiment {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

fs::path FreshDir(const std::string& name) {
  const fs::path dir = fs::path(::testing::TempDir()) / ("reweigh_exp_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> ReadCsv(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) row.push_back(f);
    rows.push_back(row);
  }
  return rows;
}

json SmallConfigJson() {
  return {{"schema_version", 1},
          {"dataset", {{"num_samples", 600}, {"bc_ratio", 0.05}, {"test_samples", 200}}},
          {"scheme", "oracle-ub"},
          {"method", "LW"},
          {"train", {{"epochs", 3}, {"hidden", {16}}, {"batch_size", 64}}},
          {"repeat", 3}};
}

TEST(Config, DefaultsAndRepeat) {
  const RunConfig c = ParseRunConfig(SmallConfigJson());
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_EQ(c.pipeline.scheme, debias::Provenance::kOracleUb);
  EXPECT_EQ(c.pipeline.t_bias, 10);
  EXPECT_EQ(c.pipeline.gamma, 200.0);
  EXPECT_EQ(c.dataset.generate->num_samples, 600u);
  EXPECT_FALSE(c.dataset.data_seed.has_value());
  EXPECT_NO_THROW(c.Validate());
}

TEST(Config, RoundTripsThroughJson) {
  json j = SmallConfigJson();
  j["anneal"] = {{"w_init", 2.0}, {"t_anneal", 50}};
  j["vcae"] = {{"dim_z", 3}, {"lambda", {1.0, 0.5, 2.0}}};
  j["sweep"] = {{"axis", "t_bias"}, {"values", {2, 10, 80}}};
  const RunConfig a = ParseRunConfig(j);
  const RunConfig b = ParseRunConfig(ToJson(a));
  EXPECT_EQ(ToJson(a), ToJson(b));
  EXPECT_EQ(b.pipeline.vcae.lambda_kl, 0.5);
  EXPECT_EQ(b.pipeline.anneal.t_anneal, 50);
  EXPECT_EQ(b.sweep->axis, SweepAxis::kTBias);
}

TEST(Config, RejectsUnknownKeysAtEveryLevel) {
  for (const char* path : {"/gama", "/train/epoch", "/dataset/rho",
                           "/train/optimizer/lr", "/anneal/beta"}) {
    json j = SmallConfigJson();
    j["anneal"] = json::object();
    j["train"]["optimizer"] = json::object();
    j[json::json_pointer(path)] = 1;
    EXPECT_THROW(ParseRunConfig(j), InvalidArgument) << path;
  }
}

TEST(Config, RejectsBadDocuments) {
  json j = SmallConfigJson();
  j.erase("schema_version");
  EXPECT_THROW(ParseRunConfig(j), InvalidArgument);
  j = SmallConfigJson();
  j["schema_version"] = 2;
  EXPECT_THROW(ParseRunConfig(j), InvalidArgument);
  j = SmallConfigJson();
  j["seeds"] = {1, 2};
  EXPECT_THROW(ParseRunConfig(j), InvalidArgument);  // with repeat
  j = SmallConfigJson();
  j["train"]["epochs"] = "three";
  EXPECT_THROW(ParseRunConfig(j), InvalidArgument);
  j = SmallConfigJson();
  j["dataset"]["train_path"] = "x";
  EXPECT_THROW(ParseRunConfig(j), InvalidArgument);
  j = SmallConfigJson();
  j["scheme"] = "lff";
  j["method"] = "TBA";
  EXPECT_THROW(ParseRunConfig(j).Validate(), InvalidArgument);
  j = SmallConfigJson();
  j["sweep"] = {{"axis", "t_bias"}, {"values", {2.5}}};
  EXPECT_THROW(ParseRunConfig(j).Validate(), InvalidArgument);
  EXPECT_THROW(LoadRunConfig("/nonexistent/config.json"), IoError);
}

TEST(Metrics, DebiasBcRatioExamples) {
  const std::vector<std::uint8_t> aligned = {1, 1, 0, 0};
  EXPECT_DOUBLE_EQ(DebiasBcRatio(std::vector<double>{3, 3, 3, 3}, aligned), 0.5);
  EXPECT_DOUBLE_EQ(DebiasBcRatio(std::vector<double>{1, 1, 99, 99}, aligned), 0.99);
  EXPECT_DOUBLE_EQ(DebiasBcRatio(std::vector<double>{0.05, 0.05, 10, 10}, aligned),
                   200.0 / 201.0);
  EXPECT_THROW(DebiasBcRatio(std::vector<double>{1, 1}, std::vector<std::uint8_t>{1, 1}),
               InvalidArgument);
}

TEST(Summary, SampleStandardDeviation) {
  std::vector<MetricsRow> rows(3);
  rows[0].test_acc = 0.5;
  rows[1].test_acc = 0.6;
  rows[2].test_acc = 0.7;
  const FinalSummary s = Summarize(rows);
  EXPECT_NEAR(s.test_acc.mean, 0.6, 1e-15);
  EXPECT_NEAR(s.test_acc.std, 0.1, 1e-15);
  EXPECT_TRUE(std::isnan(Summarize({rows[0]}).test_acc.std));
  const json j = SummaryJson(Summarize({rows[0]}));
  EXPECT_TRUE(j["final"]["test_acc"]["std"].is_null());
}

TEST(ParallelFor, RunsEveryIndexOnceAndPropagatesErrors) {
  std::vector<std::atomic<int>> hits(57);
  ParallelFor(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(ParallelFor(10, 3,
                           [](std::size_t i) {
                             if (i == 7) throw std::runtime_error("boom");
                           }),
               std::runtime_error);
  EXPECT_THROW(ParallelFor(3, 0, [](std::size_t) {}), InvalidArgument);
}

class RunExperimentTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(FreshDir("run"));
    cfg_ = new RunConfig(ParseRunConfig(SmallConfigJson()));
    runs_ = new std::vector<SeedRun>(RunExperiment(*cfg_, *dir_, 3));
  }
  static void TearDownTestSuite() {
    delete dir_;
    delete cfg_;
    delete runs_;
  }
  static fs::path* dir_;
  static RunConfig* cfg_;
  static std::vector<SeedRun>* runs_;
};
fs::path* RunExperimentTest::dir_ = nullptr;
RunConfig* RunExperimentTest::cfg_ = nullptr;
std::vector<SeedRun>* RunExperimentTest::runs_ = nullptr;

TEST_F(RunExperimentTest, MetricsHasEpochsTimesSeedsRows) {
  const auto rows = ReadCsv(*dir_ / "metrics.csv");
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows[0], (std::vector<std::string>{"seed", "epoch", "train_loss", "test_acc",
                                               "test_acc_ba", "test_acc_bc", "bc_ratio"}));
  EXPECT_EQ(rows.size() - 1, 3u * 3u);
}

TEST_F(RunExperimentTest, SummaryMatchesIndependentAggregation) {
  const auto rows = ReadCsv(*dir_ / "metrics.csv");
  std::map<std::string, std::vector<double>> final_by_metric;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r][1] != "3") continue;
    for (std::size_t c = 2; c < rows[0].size(); ++c) {
      final_by_metric[rows[0][c]].push_back(std::stod(rows[r][c]));
    }
  }
  std::ifstream in(*dir_ / "summary.json");
  const json summary = json::parse(in);
  EXPECT_EQ(summary["n_seeds"], 3);
  for (const auto& [metric, values] : final_by_metric) {
    ASSERT_EQ(values.size(), 3u);
    const double mean = (values[0] + values[1] + values[2]) / 3;
    double ss = 0;
    for (double v : values) ss += (v - mean) * (v - mean);
    EXPECT_NEAR(summary["final"][metric]["mean"].get<double>(), mean, 1e-12) << metric;
    EXPECT_NEAR(summary["final"][metric]["std"].get<double>(), std::sqrt(ss / 2), 1e-12)
        << metric;
  }
  const std::vector<ReportRow> report = WriteReport(*dir_);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_NEAR(report[0].summary.test_acc_bc.mean,
              summary["final"]["test_acc_bc"]["mean"].get<double>(), 1e-12);
}

TEST_F(RunExperimentTest, SameConfigTwiceGivesIdenticalCsv) {
  const fs::path again = FreshDir("run_again");
  RunExperiment(*cfg_, again, 1);
  EXPECT_EQ(Slurp(*dir_ / "metrics.csv"), Slurp(again / "metrics.csv"));
  EXPECT_EQ(Slurp(*dir_ / "weights" / "seed_1.csv"), Slurp(again / "weights" / "seed_1.csv"));
  EXPECT_EQ(Slurp(*dir_ / "summary.json"), Slurp(again / "summary.json"));
}

TEST_F(RunExperimentTest, CheckpointsAndWeightsAreWritten) {
  const DatasetPair d = LoadOrGenerate(cfg_->dataset, 2);
  const clf::Checkpoint ckpt = clf::LoadCheckpoint(*dir_ / "checkpoints" / "seed_2");
  const clf::SubsetAccuracy acc = clf::EvaluateAccuracy(ckpt.params, d.test);
  EXPECT_EQ(acc.conflicting, (*runs_)[2].result.history.back().test_acc_bc);
  const auto weights = ReadCsv(*dir_ / "weights" / "seed_2.csv");
  EXPECT_EQ(weights.size() - 1, d.train.size());
  EXPECT_EQ(weights[1][3], "oracle-ub");
  EXPECT_TRUE(fs::exists(*dir_ / "timing.json"));
  EXPECT_TRUE(fs::exists(*dir_ / "config.json"));
}

TEST(RunSweep, SingletonAxisEqualsPlainRun) {
  RunConfig cfg = ParseRunConfig(SmallConfigJson());
  cfg.pipeline.scheme = debias::Provenance::kBiasedConfidence;
  cfg.pipeline.t_bias = 2;
  cfg.seeds = {4};
  const fs::path plain = FreshDir("plain"), sweep = FreshDir("sweep1");
  RunExperiment(cfg, plain, 1);
  RunSweep(cfg, {SweepAxis::kGamma, {200}}, sweep, 2);
  EXPECT_EQ(Slurp(plain / "metrics.csv"), Slurp(sweep / "gamma_200" / "metrics.csv"));
  const auto merged = ReadCsv(sweep / "sweep.csv");
  EXPECT_EQ(merged.size() - 1, 3u);
  EXPECT_EQ(merged[1][0], "gamma");
  EXPECT_EQ(merged[1][1], "200");
}

TEST(RunSweep, BiasedEpochsChangeTheBcRatio) {
  RunConfig cfg = ParseRunConfig(SmallConfigJson());
  cfg.pipeline.scheme = debias::Provenance::kBiasedConfidence;
  cfg.seeds = {0, 1};
  const fs::path dir = FreshDir("sweep_tbias");
  const std::vector<SweepPoint> points =
      RunSweep(cfg, {SweepAxis::kTBias, {1, 10}}, dir, 4);
  ASSERT_EQ(points.size(), 2u);
  EXPECT_NE(points[0].runs[0].result.history.back().bc_ratio,
            points[1].runs[0].result.history.back().bc_ratio);
  EXPECT_EQ(ReadCsv(dir / "sweep.csv").size() - 1, 2u * 2u * 3u);
  const std::vector<ReportRow> report = WriteReport(dir);
  ASSERT_EQ(report.size(), 2u);
  EXPECT_EQ(report[0].group, "1");
  EXPECT_EQ(report[1].group, "10");
  EXPECT_EQ(report[1].summary.seeds, 2u);
}

TEST(Datasets, WrittenDirectoriesLoadBack) {
  const RunConfig cfg = ParseRunConfig(SmallConfigJson());
  const fs::path dir = FreshDir("data");
  WriteDatasets(cfg, 9, dir);
  json j = SmallConfigJson();
  j["dataset"] = {{"train_path", (dir / "train").string()},
                  {"test_path", (dir / "test").string()}};
  const RunConfig from_disk = ParseRunConfig(j);
  const DatasetPair a = LoadOrGenerate(from_disk.dataset, 123);
  const DatasetPair b = LoadOrGenerate(cfg.dataset, 9);
  EXPECT_EQ(a.train.features, b.train.features);
  EXPECT_EQ(a.test.labels, b.test.labels);
  // The test set is the unbiased companion.
  EXPECT_GT(b.test.ConflictingIndices().size(), b.test.size() / 2);
}

TEST(BiasedArtifact, FilesAndWeightRange) {
  RunConfig cfg = ParseRunConfig(SmallConfigJson());
  cfg.pipeline.t_bias = 2;
  const fs::path dir = FreshDir("psi");
  WriteBiasedArtifact(cfg, 0, dir);
  EXPECT_TRUE(fs::exists(dir / "psi" / "model.json"));
  const auto conf = ReadCsv(dir / "confidences.csv");
  EXPECT_EQ(conf[0], (std::vector<std::string>{"index", "label", "aligned", "confidence"}));
  const auto w = ReadCsv(dir / "weights.csv");
  for (std::size_t r = 1; r < w.size(); ++r) {
    const double v = std::stod(w[r][1]);
    EXPECT_GE(v, 10.0 / 200 - 1e-15);
    EXPECT_LE(v, 10.0);
  }
}

TEST(VcaeDumps, WritesEveryFile) {
  json j = SmallConfigJson();
  j["dataset"]["kind"] = "colored-glyphs";
  j["vcae"] = {{"epochs", 2}, {"hidden", {16}}};
  j.erase("repeat");
  j["seeds"] = {5};
  const fs::path dir = FreshDir("vcae");
  const json summary = RunVcaeDumps(ParseRunConfig(j), dir, 1);
  for (const char* f : {"vcae_loss_seed_5.csv", "latent_seed_5.csv",
                        "log_density_seed_5.csv", "weights_seed_5.csv",
                        "vcae_summary.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  EXPECT_TRUE(summary["seeds"][0].contains("mean_weight_bc"));
  EXPECT_EQ(ReadCsv(dir / "vcae_loss_seed_5.csv").size(), 3u);
}

TEST(OracleChecks, PassAndAreDeterministic) {
  OracleCheckConfig oc;
  oc.bound_instances = 20;
  oc.identity_instances = 20;
  oc.equivalence_instances = 5;
  json a, b;
  const OracleCheckSummary s = RunOracleChecks(oc, &a);
  RunOracleChecks(oc, &b);
  EXPECT_TRUE(s.ok());
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_EQ(a["bound"].size(), 20u);
  EXPECT_EQ(a["lw_ws_equivalence"].size(), 5u);
  oc.bound_instances = 0;
  EXPECT_THROW(RunOracleChecks(oc), InvalidArgument);
}

}  // namespace
}  // namespace reweigh::experiment
