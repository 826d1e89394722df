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

#include "reweigh/data/dataset_io.h"

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "reweigh/core/errors.h"
#include "reweigh/core/f64le.h"

namespace reweigh::data {
namespace {

constexpr int kFormatVersion = 1;

int ToLabel(double v, const char* what) {
  const double r = std::round(v);
  if (r != v || r < 0 || r > 1e9) {
    throw IoError(std::string("dataset: non-integer ") + what + " column");
  }
  return static_cast<int>(r);
}

}  // namespace

void SaveDataset(const LabeledDataset& ds, const std::filesystem::path& dir) {
  ds.Validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  nlohmann::ordered_json meta;
  meta["format"] = "reweigh-dataset";
  meta["version"] = kFormatVersion;
  meta["num_samples"] = ds.size();
  meta["dim"] = ds.dim();
  meta["num_classes"] = ds.num_classes;
  meta["bc_ratio"] = ds.bc_ratio;
  meta["seed"] = ds.seed;
  meta["kind"] = DatasetKindName(ds.kind);
  meta["has_bias"] = ds.has_bias();
  std::vector<std::string> columns = {"features", "labels"};
  if (ds.has_bias()) {
    columns.push_back("bias");
    columns.push_back("aligned");
  }
  meta["columns"] = columns;
  std::ofstream meta_out(dir / "meta.json", std::ios::trunc);
  if (!meta_out) throw IoError("cannot write " + (dir / "meta.json").string());
  meta_out << meta.dump(2) << "\n";

  const std::size_t n = ds.size();
  std::vector<double> flat(ds.features.data().begin(), ds.features.data().end());
  flat.reserve(flat.size() + (ds.has_bias() ? 3 : 1) * n);
  for (int y : ds.labels) flat.push_back(y);
  if (ds.bias) {
    for (int b : *ds.bias) flat.push_back(b);
    for (auto a : ds.aligned) flat.push_back(a ? 1.0 : 0.0);
  }
  WriteF64Le(dir / "data.f64le", flat);
}

LabeledDataset LoadDataset(const std::filesystem::path& dir) {
  std::ifstream meta_in(dir / "meta.json");
  if (!meta_in) throw IoError("cannot open " + (dir / "meta.json").string());
  nlohmann::json meta;
  try {
    meta_in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad meta.json: " + std::string(e.what()));
  }
  if (meta.value("format", "") != "reweigh-dataset" ||
      meta.value("version", 0) != kFormatVersion) {
    throw IoError(dir.string() + ": not a reweigh dataset (format/version)");
  }
  LabeledDataset ds;
  const auto n = meta.at("num_samples").get<std::size_t>();
  const auto d = meta.at("dim").get<std::size_t>();
  ds.num_classes = meta.at("num_classes").get<int>();
  ds.bc_ratio = meta.at("bc_ratio").get<double>();
  ds.seed = meta.at("seed").get<std::uint64_t>();
  ds.kind = ParseDatasetKind(meta.at("kind").get<std::string>());
  const bool has_bias = meta.at("has_bias").get<bool>();

  const std::vector<double> flat = ReadF64Le(dir / "data.f64le");
  const std::size_t expected = n * d + (has_bias ? 3 : 1) * n;
  if (flat.size() != expected) {
    throw IoError("data.f64le holds " + std::to_string(flat.size()) +
                  " values, meta.json implies " + std::to_string(expected));
  }
  ds.features = Tensor(n, d, std::vector<double>(flat.begin(), flat.begin() + n * d));
  std::size_t pos = n * d;
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) ds.labels[i] = ToLabel(flat[pos++], "label");
  if (has_bias) {
    std::vector<int> b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = ToLabel(flat[pos++], "bias");
    ds.bias = std::move(b);
    ds.aligned.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      ds.aligned[i] = static_cast<std::uint8_t>(ToLabel(flat[pos++], "aligned"));
    }
  }
  ds.Validate();
  return ds;
}

}  // namespace reweigh::data
