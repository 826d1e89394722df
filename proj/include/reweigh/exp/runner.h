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

#ifndef REWEIGH_EXP_RUNNER_H_
#define REWEIGH_EXP_RUNNER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "reweigh/data/dataset.h"
#include "reweigh/debias/pipeline.h"
#include "reweigh/exp/config.h"
#include "reweigh/exp/metrics.h"

namespace reweigh::experiment {

// Runs fn(0..n-1) on up to `jobs` threads. Rethrows the first exception after
// every worker has stopped.
void ParallelFor(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

struct DatasetPair {
  data::LabeledDataset train;
  data::LabeledDataset test;
};

// Generated datasets use data_seed when set, else the run seed; the test set
// is the unbiased companion (bc_ratio = (C-1)/C) with its own stream.
DatasetPair LoadOrGenerate(const DatasetSpec& spec, std::uint64_t seed);

struct SeedRun {
  std::uint64_t seed = 0;
  debias::PipelineResult result;
  std::vector<std::uint8_t> train_aligned;  // for the weight dump
};

// Final-epoch mean and sample standard deviation across seeds (NaN where
// undefined: one seed, or a NaN metric such as TBA's bc_ratio).
struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> values;
};
struct FinalSummary {
  std::size_t seeds = 0;
  MetricSummary train_loss, test_acc, test_acc_ba, test_acc_bc, bc_ratio;
};
FinalSummary Summarize(const std::vector<MetricsRow>& final_rows);
nlohmann::json SummaryJson(const FinalSummary& s);

// One seed of the pipeline, no I/O.
SeedRun RunSeed(const RunConfig& cfg, const debias::PipelineConfig& pipeline,
                std::uint64_t seed);

// Trains every seed (concurrently up to `jobs`) and writes into `out`:
//   config.json     resolved configuration
//   metrics.csv     seed,epoch,train_loss,test_acc,test_acc_ba,test_acc_bc,bc_ratio
//   summary.json    final-epoch mean and sample std across seeds
//   weights/seed_<s>.csv      index,weight,aligned,provenance
//   checkpoints/seed_<s>/     model.json + params.f64le
//   timing.json     wall-clock seconds (the only non-deterministic file)
std::vector<SeedRun> RunExperiment(const RunConfig& cfg,
                                   const std::filesystem::path& out, int jobs);

// One RunExperiment layout per axis value under out/<axis>_<value>/, all
// (value, seed) pairs scheduled together, plus out/sweep.csv in long format:
//   axis,value,seed,epoch,train_loss,test_acc,test_acc_ba,test_acc_bc,bc_ratio
struct SweepPoint {
  double value = 0.0;
  std::vector<SeedRun> runs;
};
std::vector<SweepPoint> RunSweep(const RunConfig& cfg, const SweepSpec& sweep,
                                 const std::filesystem::path& out, int jobs);

// Aggregates out/sweep.csv (grouped by value) or out/metrics.csv (one group)
// over the final epoch of every seed into out/report.csv:
//   group,seeds,<metric>_mean,<metric>_std for train_loss, test_acc,
//   test_acc_ba, test_acc_bc, bc_ratio.
// Returns the rows in the order written.
struct ReportRow {
  std::string group;
  FinalSummary summary;
};
std::vector<ReportRow> WriteReport(const std::filesystem::path& dir);

// Writes train/ and test/ dataset directories for one seed.
void WriteDatasets(const RunConfig& cfg, std::uint64_t seed,
                   const std::filesystem::path& out);

// Trains psi on the seed's training set and writes psi/ (checkpoint),
// confidences.csv (index,label,aligned,confidence) and weights.csv (clamped
// and, if configured, rescaled with the configured gamma).
void WriteBiasedArtifact(const RunConfig& cfg, std::uint64_t seed,
                         const std::filesystem::path& out);

// Per seed: VCAE training loss (vcae_loss_seed_<s>.csv: epoch,loss), latent
// dump, log p(z|y) dump and weights; vcae_summary.json holds mean weights of
// BA and BC samples per seed.
nlohmann::json RunVcaeDumps(const RunConfig& cfg, const std::filesystem::path& out,
                            int jobs);

}  // namespace reweigh::experiment

#endif  // REWEIGH_EXP_RUNNER_H_
