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

#ifndef REWEIGH_EXP_CONFIG_H_
#define REWEIGH_EXP_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "reweigh/data/generate.h"
#include "reweigh/debias/pipeline.h"

namespace reweigh::experiment {

inline constexpr int kSchemaVersion = 1;

// Either a generator spec (train set plus an unbiased test companion) or a
// pair of dataset directories written by SaveDataset.
struct DatasetSpec {
  std::optional<data::GenConfig> generate;
  std::size_t test_samples = 2000;
  // Fixed data seed; when unset every run seed draws its own dataset.
  std::optional<std::uint64_t> data_seed;
  std::filesystem::path train_path;
  std::filesystem::path test_path;
};

enum class SweepAxis { kGamma, kTBias };

std::string SweepAxisName(SweepAxis axis);
SweepAxis ParseSweepAxis(const std::string& name);

struct SweepSpec {
  SweepAxis axis = SweepAxis::kGamma;
  std::vector<double> values;
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  DatasetSpec dataset;
  debias::PipelineConfig pipeline;
  std::vector<std::uint64_t> seeds = {0};
  std::filesystem::path output_dir;
  std::optional<SweepSpec> sweep;

  // Throws InvalidArgument before any work starts.
  void Validate() const;
};

// Parses the JSON layout documented in README.md. Unknown keys and a missing
// or different schema_version are errors.
RunConfig ParseRunConfig(const nlohmann::json& j);
RunConfig LoadRunConfig(const std::filesystem::path& path);
// Full resolved config; ParseRunConfig(ToJson(c)) reproduces c.
nlohmann::json ToJson(const RunConfig& cfg);

// Applies `sweep` point `value` to a copy of cfg.pipeline.
debias::PipelineConfig AtSweepPoint(const debias::PipelineConfig& base,
                                    SweepAxis axis, double value);

}  // namespace reweigh::experiment

#endif  // REWEIGH_EXP_CONFIG_H_
