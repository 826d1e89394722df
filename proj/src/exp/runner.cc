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

#include "reweigh/exp/runner.h"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "fmt/format.h"
#include "reweigh/clf/checkpoint.h"
#include "reweigh/core/csv.h"
#include "reweigh/core/errors.h"
#include "reweigh/core/kernels.h"
#include "reweigh/core/rng.h"
#include "reweigh/data/dataset_io.h"
#include "reweigh/data/generate.h"

namespace reweigh::experiment {
namespace {

using nlohmann::json;

constexpr std::uint64_t kTestSetStream = 7;

const std::vector<std::string> kMetricColumns = {
    "train_loss", "test_acc", "test_acc_ba", "test_acc_bc", "bc_ratio"};

void MakeDir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
  }
}

void WriteJson(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  out.close();
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
}

void AddMetrics(CsvWriter& w, const MetricsRow& r) {
  w.Add(r.train_loss).Add(r.test_acc).Add(r.test_acc_ba).Add(r.test_acc_bc).Add(
      r.bc_ratio);
}

MetricSummary Describe(std::vector<double> values) {
  MetricSummary s;
  s.values = std::move(values);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(s.values.size());
  s.mean = s.values.empty() ? nan : kernels::PairwiseSum(s.values) / n;
  if (s.values.size() < 2) {
    s.std = nan;
    return s;
  }
  std::vector<double> sq(s.values.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    sq[i] = (s.values[i] - s.mean) * (s.values[i] - s.mean);
  }
  s.std = std::sqrt(kernels::PairwiseSum(sq) / (n - 1));
  return s;
}

json NumberOrNull(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json MetricJson(const MetricSummary& m) {
  json values = json::array();
  for (double v : m.values) values.push_back(NumberOrNull(v));
  return {{"mean", NumberOrNull(m.mean)}, {"std", NumberOrNull(m.std)},
          {"values", values}};
}

// Writes the per-experiment files for already trained seeds.
void WriteExperiment(const RunConfig& cfg, const debias::PipelineConfig& pipeline,
                     const std::vector<SeedRun>& runs,
                     const std::vector<double>& seconds,
                     const std::filesystem::path& out) {
  MakeDir(out / "weights");
  MakeDir(out / "checkpoints");
  RunConfig resolved = cfg;
  resolved.pipeline = pipeline;
  resolved.sweep.reset();
  resolved.output_dir.clear();
  WriteJson(out / "config.json", ToJson(resolved));

  CsvWriter metrics(out / "metrics.csv",
                    {"seed", "epoch", "train_loss", "test_acc", "test_acc_ba",
                     "test_acc_bc", "bc_ratio"});
  std::vector<MetricsRow> finals;
  json timing = json::object();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const SeedRun& run = runs[i];
    for (const MetricsRow& row : run.result.history) {
      metrics.Add(static_cast<std::int64_t>(run.seed)).Add(row.epoch);
      AddMetrics(metrics, row);
      metrics.EndRow();
    }
    finals.push_back(run.result.history.back());
    const std::string tag = fmt::format("seed_{}", run.seed);
    debias::WriteWeightsCsv(out / "weights" / (tag + ".csv"), run.result.weights,
                            run.train_aligned);
    clf::SaveCheckpoint({run.result.params, pipeline.train.optimizer},
                        out / "checkpoints" / tag);
    timing[tag] = seconds[i];
  }
  metrics.Close();

  json summary = SummaryJson(Summarize(finals));
  summary["scheme"] = debias::ProvenanceName(pipeline.scheme);
  summary["method"] = debias::MethodName(pipeline.method);
  summary["gamma"] = pipeline.gamma;
  summary["t_bias"] = pipeline.t_bias;
  json seeds = json::array();
  for (const SeedRun& r : runs) seeds.push_back(r.seed);
  summary["seeds"] = seeds;
  WriteJson(out / "summary.json", summary);
  WriteJson(out / "timing.json", {{"wall_seconds", timing}});
}

// Splits a line of our own CSV output (no quoting).
std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double ParseDouble(const std::string& s, const std::filesystem::path& path) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw IoError(fmt::format("{}: '{}' is not a number", path.string(), s));
}

}  // namespace

void ParallelFor(std::size_t n, int jobs,
                 const std::function<void(std::size_t)>& fn) {
  if (jobs < 1) throw InvalidArgument(fmt::format("jobs must be >= 1, got {}", jobs));
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first) first = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

DatasetPair LoadOrGenerate(const DatasetSpec& spec, std::uint64_t seed) {
  if (!spec.generate) {
    DatasetPair d{data::LoadDataset(spec.train_path), data::LoadDataset(spec.test_path)};
    if (d.train.num_classes != d.test.num_classes || d.train.dim() != d.test.dim()) {
      throw InvalidArgument("train and test datasets disagree on shape");
    }
    return d;
  }
  data::GenConfig g = *spec.generate;
  g.seed = spec.data_seed.value_or(seed);
  return {data::Generate(g),
          data::Generate(data::UnbiasedCompanion(
              g, spec.test_samples, DeriveSeed(g.seed, kTestSetStream)))};
}

FinalSummary Summarize(const std::vector<MetricsRow>& rows) {
  FinalSummary s;
  s.seeds = rows.size();
  std::vector<double> a, b, c, d, e;
  for (const MetricsRow& r : rows) {
    a.push_back(r.train_loss);
    b.push_back(r.test_acc);
    c.push_back(r.test_acc_ba);
    d.push_back(r.test_acc_bc);
    e.push_back(r.bc_ratio);
  }
  s.train_loss = Describe(a);
  s.test_acc = Describe(b);
  s.test_acc_ba = Describe(c);
  s.test_acc_bc = Describe(d);
  s.bc_ratio = Describe(e);
  return s;
}

json SummaryJson(const FinalSummary& s) {
  return {{"n_seeds", s.seeds},
          {"final",
           {{"train_loss", MetricJson(s.train_loss)},
            {"test_acc", MetricJson(s.test_acc)},
            {"test_acc_ba", MetricJson(s.test_acc_ba)},
            {"test_acc_bc", MetricJson(s.test_acc_bc)},
            {"bc_ratio", MetricJson(s.bc_ratio)}}}};
}

SeedRun RunSeed(const RunConfig& cfg, const debias::PipelineConfig& pipeline,
                std::uint64_t seed) {
  const DatasetPair data = LoadOrGenerate(cfg.dataset, seed);
  debias::PipelineConfig p = pipeline;
  p.train.seed = seed;
  return {seed, debias::RunDebiasPipeline(data.train, data.test, p),
          data.train.aligned};
}

std::vector<SeedRun> RunExperiment(const RunConfig& cfg,
                                   const std::filesystem::path& out, int jobs) {
  cfg.Validate();
  MakeDir(out);
  std::vector<SeedRun> runs(cfg.seeds.size());
  std::vector<double> seconds(cfg.seeds.size());
  ParallelFor(cfg.seeds.size(), jobs, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    runs[i] = RunSeed(cfg, cfg.pipeline, cfg.seeds[i]);
    seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                     .count();
  });
  WriteExperiment(cfg, cfg.pipeline, runs, seconds, out);
  return runs;
}

std::vector<SweepPoint> RunSweep(const RunConfig& cfg, const SweepSpec& sweep,
                                 const std::filesystem::path& out, int jobs) {
  RunConfig base = cfg;
  base.sweep = sweep;
  base.Validate();
  MakeDir(out);
  const std::size_t ns = cfg.seeds.size();
  std::vector<SweepPoint> points(sweep.values.size());
  std::vector<std::vector<double>> seconds(points.size(), std::vector<double>(ns));
  for (std::size_t p = 0; p < points.size(); ++p) {
    points[p].value = sweep.values[p];
    points[p].runs.resize(ns);
  }
  ParallelFor(points.size() * ns, jobs, [&](std::size_t k) {
    const std::size_t p = k / ns, s = k % ns;
    const auto start = std::chrono::steady_clock::now();
    points[p].runs[s] = RunSeed(
        cfg, AtSweepPoint(cfg.pipeline, sweep.axis, sweep.values[p]), cfg.seeds[s]);
    seconds[p][s] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                        .count();
  });

  const std::string axis = SweepAxisName(sweep.axis);
  CsvWriter merged(out / "sweep.csv",
                   {"axis", "value", "seed", "epoch", "train_loss", "test_acc",
                    "test_acc_ba", "test_acc_bc", "bc_ratio"});
  for (std::size_t p = 0; p < points.size(); ++p) {
    const double v = points[p].value;
    WriteExperiment(cfg, AtSweepPoint(cfg.pipeline, sweep.axis, v), points[p].runs,
                    seconds[p], out / fmt::format("{}_{}", axis, FormatDouble(v)));
    for (const SeedRun& run : points[p].runs) {
      for (const MetricsRow& row : run.result.history) {
        merged.Add(axis).Add(v).Add(static_cast<std::int64_t>(run.seed)).Add(row.epoch);
        AddMetrics(merged, row);
        merged.EndRow();
      }
    }
  }
  merged.Close();
  return points;
}

std::vector<ReportRow> WriteReport(const std::filesystem::path& dir) {
  const bool is_sweep = std::filesystem::exists(dir / "sweep.csv");
  const std::filesystem::path src = dir / (is_sweep ? "sweep.csv" : "metrics.csv");
  std::ifstream in(src);
  if (!in) throw IoError(fmt::format("no sweep.csv or metrics.csv in {}", dir.string()));
  std::string line;
  std::getline(in, line);
  const std::vector<std::string> header = SplitCsv(line);
  const auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw IoError(fmt::format("{}: missing column {}", src.string(), name));
  };
  const std::size_t seed_col = col("seed"), epoch_col = col("epoch");
  const std::size_t value_col = is_sweep ? col("value") : 0;
  std::vector<std::size_t> metric_cols;
  for (const std::string& m : kMetricColumns) metric_cols.push_back(col(m));

  // group -> seed -> (epoch, row) of the last epoch seen.
  std::vector<std::string> order;
  std::map<std::string, std::map<std::string, std::pair<long, MetricsRow>>> last;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = SplitCsv(line);
    if (f.size() != header.size()) {
      throw IoError(fmt::format("{}: ragged row '{}'", src.string(), line));
    }
    const std::string group = is_sweep ? f[value_col] : "all";
    if (!last.contains(group)) order.push_back(group);
    const long epoch = std::stol(f[epoch_col]);
    MetricsRow r;
    r.epoch = static_cast<int>(epoch);
    r.train_loss = ParseDouble(f[metric_cols[0]], src);
    r.test_acc = ParseDouble(f[metric_cols[1]], src);
    r.test_acc_ba = ParseDouble(f[metric_cols[2]], src);
    r.test_acc_bc = ParseDouble(f[metric_cols[3]], src);
    r.bc_ratio = ParseDouble(f[metric_cols[4]], src);
    auto& slot = last[group][f[seed_col]];
    if (epoch >= slot.first) slot = {epoch, r};
  }

  std::vector<std::string> out_header = {"group", "seeds"};
  for (const std::string& m : kMetricColumns) {
    out_header.push_back(m + "_mean");
    out_header.push_back(m + "_std");
  }
  CsvWriter report(dir / "report.csv", out_header);
  std::vector<ReportRow> rows;
  for (const std::string& group : order) {
    std::vector<MetricsRow> finals;
    for (const auto& [seed, entry] : last[group]) finals.push_back(entry.second);
    ReportRow row{group, Summarize(finals)};
    report.Add(std::string_view(group)).Add(row.summary.seeds);
    for (const MetricSummary* m :
         {&row.summary.train_loss, &row.summary.test_acc, &row.summary.test_acc_ba,
          &row.summary.test_acc_bc, &row.summary.bc_ratio}) {
      report.Add(m->mean).Add(m->std);
    }
    report.EndRow();
    rows.push_back(std::move(row));
  }
  report.Close();
  return rows;
}

void WriteDatasets(const RunConfig& cfg, std::uint64_t seed,
                   const std::filesystem::path& out) {
  cfg.Validate();
  const DatasetPair d = LoadOrGenerate(cfg.dataset, seed);
  data::SaveDataset(d.train, out / "train");
  data::SaveDataset(d.test, out / "test");
}

void WriteBiasedArtifact(const RunConfig& cfg, std::uint64_t seed,
                         const std::filesystem::path& out) {
  cfg.Validate();
  MakeDir(out);
  const DatasetPair d = LoadOrGenerate(cfg.dataset, seed);
  clf::TrainConfig tc = cfg.pipeline.train;
  tc.seed = seed;
  const debias::BiasedClassifierArtifact psi =
      debias::TrainBiasedClassifier(d.train, cfg.pipeline.gce, cfg.pipeline.t_bias, tc);
  clf::SaveCheckpoint({psi.params, tc.optimizer}, out / "psi");
  CsvWriter conf(out / "confidences.csv", {"index", "label", "aligned", "confidence"});
  for (std::size_t i = 0; i < d.train.size(); ++i) {
    conf.Add(i).Add(d.train.labels[i]);
    conf.Add(d.train.has_bias() ? static_cast<int>(d.train.aligned[i]) : -1);
    conf.Add(psi.confidences[i]).EndRow();
  }
  conf.Close();
  debias::SampleWeights w = debias::ComputeWeightsClamped(psi.confidences, cfg.pipeline.gamma);
  if (cfg.pipeline.rescale) w = debias::RescaleWeights(std::move(w));
  debias::WriteWeightsCsv(out / "weights.csv", w, d.train.aligned);
  json meta = {{"t_bias", psi.t_bias}, {"tau", psi.tau}, {"seed", seed},
               {"gamma", cfg.pipeline.gamma}, {"rescaled", w.rescaled}};
  if (d.train.has_bias()) {
    meta["debias_bc_ratio"] = NumberOrNull(DebiasBcRatio(w.weights, d.train.aligned));
  }
  WriteJson(out / "artifact.json", meta);
}

json RunVcaeDumps(const RunConfig& cfg, const std::filesystem::path& out, int jobs) {
  cfg.Validate();
  MakeDir(out);
  const debias::PipelineConfig& p = cfg.pipeline;
  std::vector<json> per_seed(cfg.seeds.size());
  ParallelFor(cfg.seeds.size(), jobs, [&](std::size_t i) {
    const std::uint64_t seed = cfg.seeds[i];
    const DatasetPair d = LoadOrGenerate(cfg.dataset, seed);
    clf::TrainConfig tc = p.train;
    tc.epochs = p.vcae_epochs;
    tc.seed = seed;
    const vcae::VcaeTrainResult model = vcae::TrainVcae(d.train, p.vcae, tc);
    const vcae::VcaeWeightResult w =
        vcae::VcaeWeights(model.params, d.train, model.prior, p.vcae_cap);
    const std::string tag = fmt::format("seed_{}", seed);
    CsvWriter loss(out / fmt::format("vcae_loss_{}.csv", tag), {"epoch", "loss"});
    for (std::size_t e = 0; e < model.epoch_loss.size(); ++e) {
      loss.Add(e + 1).Add(model.epoch_loss[e]).EndRow();
    }
    loss.Close();
    vcae::WriteLatentCsv(out / fmt::format("latent_{}.csv", tag), d.train, w);
    vcae::WriteLogDensityCsv(out / fmt::format("log_density_{}.csv", tag), d.train,
                             model.params, w.z);
    debias::WriteWeightsCsv(out / fmt::format("weights_{}.csv", tag), w.weights,
                            d.train.aligned);
    json entry = {{"seed", seed}, {"final_loss", model.epoch_loss.back()}};
    if (d.train.has_bias()) {
      std::vector<double> ba, bc;
      for (std::size_t n = 0; n < d.train.size(); ++n) {
        (d.train.aligned[n] ? ba : bc).push_back(w.weights.weights[n]);
      }
      entry["mean_weight_ba"] = NumberOrNull(Describe(ba).mean);
      entry["mean_weight_bc"] = NumberOrNull(Describe(bc).mean);
    }
    per_seed[i] = entry;
  });
  json summary = {{"dim_z", p.vcae.dim_z},
                  {"lambda", {p.vcae.lambda_recon, p.vcae.lambda_kl, p.vcae.lambda_ce}},
                  {"cap", p.vcae_cap},
                  {"seeds", per_seed}};
  WriteJson(out / "vcae_summary.json", summary);
  return summary;
}

}  // namespace reweigh::experiment
