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

// Command-line front end: dataset generation, biased-classifier artifacts,
// debiasing runs, sweeps, VCAE dumps, causal-oracle checks and reports.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fmt/format.h"
#include "json.hpp"
#include "reweigh/core/csv.h"
#include "reweigh/core/errors.h"
#include "reweigh/exp/config.h"
#include "reweigh/exp/oracle_report.h"
#include "reweigh/exp/runner.h"

namespace {

using reweigh::InvalidArgument;
namespace experiment = reweigh::experiment;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int jobs = 1;
  std::string gamma;
  std::string t_bias;
  std::optional<double> tau;
  std::string method;
  std::string scheme;
};

std::vector<double> ParseList(const std::string& text, const char* flag) {
  std::vector<double> values;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument(fmt::format("--{}: '{}' is not a number", flag, item));
    }
  }
  if (values.empty()) throw InvalidArgument(fmt::format("--{} is empty", flag));
  return values;
}

double ParseSingle(const std::string& text, const char* flag) {
  const std::vector<double> v = ParseList(text, flag);
  if (v.size() != 1) {
    throw InvalidArgument(fmt::format("--{} takes one value here", flag));
  }
  return v[0];
}

// Loads --config (or the defaults) and applies the flags that are not axis
// lists.
experiment::RunConfig Resolve(const Flags& f) {
  experiment::RunConfig cfg;
  if (!f.config.empty()) {
    cfg = experiment::LoadRunConfig(f.config);
  } else {
    cfg = experiment::ParseRunConfig({{"schema_version", experiment::kSchemaVersion}});
  }
  if (f.seed) cfg.seeds = {*f.seed};
  if (!f.out.empty()) cfg.output_dir = f.out;
  if (cfg.output_dir.empty()) throw InvalidArgument("no output directory (--out)");
  if (f.tau) cfg.pipeline.gce.tau = *f.tau;
  if (!f.method.empty()) cfg.pipeline.method = reweigh::debias::ParseMethod(f.method);
  if (!f.scheme.empty()) {
    cfg.pipeline.scheme = reweigh::debias::ParseProvenance(f.scheme);
  }
  return cfg;
}

void ApplyScalarAxes(const Flags& f, experiment::RunConfig& cfg) {
  if (!f.gamma.empty()) cfg.pipeline.gamma = ParseSingle(f.gamma, "gamma");
  if (!f.t_bias.empty()) {
    cfg.pipeline = experiment::AtSweepPoint(cfg.pipeline, experiment::SweepAxis::kTBias,
                                     ParseSingle(f.t_bias, "t-bias"));
  }
}

void PrintFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::cout << in.rdbuf();
}

int Generate(const Flags& f) {
  experiment::RunConfig cfg = Resolve(f);
  experiment::WriteDatasets(cfg, cfg.seeds.front(), cfg.output_dir);
  std::cout << "wrote " << (cfg.output_dir / "train").string() << " and "
            << (cfg.output_dir / "test").string() << "\n";
  return 0;
}

int TrainBiased(const Flags& f) {
  experiment::RunConfig cfg = Resolve(f);
  ApplyScalarAxes(f, cfg);
  experiment::WriteBiasedArtifact(cfg, cfg.seeds.front(), cfg.output_dir);
  std::cout << "wrote " << cfg.output_dir.string() << "\n";
  return 0;
}

int Debias(const Flags& f) {
  experiment::RunConfig cfg = Resolve(f);
  ApplyScalarAxes(f, cfg);
  experiment::RunExperiment(cfg, cfg.output_dir, f.jobs);
  PrintFile(cfg.output_dir / "summary.json");
  return 0;
}

int Sweep(const Flags& f) {
  experiment::RunConfig cfg = Resolve(f);
  if (!f.gamma.empty() && !f.t_bias.empty()) {
    throw InvalidArgument("sweep one axis at a time: --gamma or --t-bias");
  }
  experiment::SweepSpec spec;
  if (!f.gamma.empty()) {
    spec = {experiment::SweepAxis::kGamma, ParseList(f.gamma, "gamma")};
  } else if (!f.t_bias.empty()) {
    spec = {experiment::SweepAxis::kTBias, ParseList(f.t_bias, "t-bias")};
  } else if (cfg.sweep) {
    spec = *cfg.sweep;
  } else {
    throw InvalidArgument("sweep needs --gamma LIST, --t-bias LIST or a sweep section");
  }
  experiment::RunSweep(cfg, spec, cfg.output_dir, f.jobs);
  experiment::WriteReport(cfg.output_dir);
  PrintFile(cfg.output_dir / "report.csv");
  return 0;
}

int Vcae(const Flags& f) {
  experiment::RunConfig cfg = Resolve(f);
  const nlohmann::json summary = experiment::RunVcaeDumps(cfg, cfg.output_dir, f.jobs);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int OracleCheck(const Flags& f) {
  experiment::OracleCheckConfig oc;
  if (f.seed) oc.seed = *f.seed;
  nlohmann::json report;
  const experiment::OracleCheckSummary s = experiment::RunOracleChecks(oc, &report);
  if (!f.out.empty()) {
    std::filesystem::create_directories(f.out);
    std::ofstream out(std::filesystem::path(f.out) / "oracle_report.json");
    out << report.dump(2) << "\n";
    if (!out) throw reweigh::IoError("cannot write oracle_report.json");
  }
  std::cout << report["summary"].dump(2) << "\n";
  return s.ok() ? 0 : 1;
}

int Report(const Flags& f) {
  if (f.out.empty()) throw InvalidArgument("report needs --out DIR (a run or sweep)");
  experiment::WriteReport(f.out);
  PrintFile(std::filesystem::path(f.out) / "report.csv");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sample reweighting for spurious-correlation debiasing"};
  app.require_subcommand(1);
  Flags flags;

  const auto add_common = [&](CLI::App* sub, bool axes) {
    sub->add_option("--config", flags.config, "RunConfig JSON file")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "Run with this single seed");
    sub->add_option("--out", flags.out, "Output directory");
    if (axes) {
      sub->add_option("--jobs", flags.jobs, "Concurrent runs")->check(CLI::PositiveNumber);
      sub->add_option("--gamma", flags.gamma, "Clamp gamma (comma list for sweep)");
      sub->add_option("--t-bias", flags.t_bias, "Biased epochs (comma list for sweep)");
      sub->add_option("--tau", flags.tau, "GCE tau");
      sub->add_option("--method", flags.method, "LW, ALW, WS or TBA");
      sub->add_option("--scheme", flags.scheme,
                      "uniform, oracle-ub, oracle-yb, biased-confidence, lff, pgd, vcae");
    }
  };

  struct Command {
    CLI::App* app;
    int (*run)(const Flags&);
  };
  std::vector<Command> commands;
  const auto add = [&](const char* name, const char* help, bool axes,
                       int (*run)(const Flags&)) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, axes);
    commands.push_back({sub, run});
    return sub;
  };
  add("generate", "Write train/ and test/ dataset directories", false, Generate);
  add("train-biased", "Train the biased classifier and dump its confidences", true,
      TrainBiased);
  add("debias", "Run the debiasing pipeline for every seed", true, Debias);
  add("sweep", "Run a gamma or T_bias sweep", true, Sweep);
  add("vcae", "Train the VCAE and dump latents, densities and weights", true, Vcae);
  CLI::App* oracle = app.add_subcommand("oracle-check", "Exact causal-oracle checks");
  oracle->add_option("--seed", flags.seed, "Instance seed");
  oracle->add_option("--out", flags.out, "Directory for oracle_report.json");
  commands.push_back({oracle, OracleCheck});
  CLI::App* report = app.add_subcommand("report", "Aggregate a run or sweep directory");
  report->add_option("--out", flags.out, "Run or sweep directory")->required();
  commands.push_back({report, Report});

  CLI11_PARSE(app, argc, argv);
  try {
    for (const Command& c : commands) {
      if (c.app->parsed()) return c.run(flags);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
