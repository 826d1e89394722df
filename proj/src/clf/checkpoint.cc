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

#include "reweigh/clf/checkpoint.h"

#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "reweigh/core/errors.h"
#include "reweigh/core/f64le.h"

namespace reweigh::clf {
namespace {

constexpr int kFormatVersion = 1;

}  // namespace

void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& dir) {
  ckpt.params.Validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  nlohmann::ordered_json model;
  model["format"] = "reweigh-mlp";
  model["version"] = kFormatVersion;
  model["layer_sizes"] = ckpt.params.layer_sizes;
  model["activation"] = "relu";
  model["parameter_order"] = "W0,b0,W1,b1,...; W_l is in x out, b_l is 1 x out";
  model["parameter_count"] = ckpt.params.parameter_count();
  const OptimizerConfig& o = ckpt.optimizer;
  model["optimizer"] = {{"kind", OptimizerKindName(o.kind)},
                        {"learning_rate", o.learning_rate},
                        {"momentum", o.momentum},
                        {"weight_decay", o.weight_decay},
                        {"beta1", o.beta1},
                        {"beta2", o.beta2},
                        {"epsilon", o.epsilon}};
  std::ofstream out(dir / "model.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "model.json").string());
  out << model.dump(2) << "\n";

  std::vector<double> flat;
  flat.reserve(ckpt.params.parameter_count());
  for (const Tensor& t : ckpt.params.tensors) {
    flat.insert(flat.end(), t.data().begin(), t.data().end());
  }
  WriteF64Le(dir / "params.f64le", flat);
}

Checkpoint LoadCheckpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "model.json");
  if (!in) throw IoError("cannot open " + (dir / "model.json").string());
  nlohmann::json model;
  try {
    in >> model;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad model.json: " + std::string(e.what()));
  }
  if (model.value("format", "") != "reweigh-mlp" ||
      model.value("version", 0) != kFormatVersion) {
    throw IoError(dir.string() + ": not a reweigh checkpoint");
  }
  Checkpoint ckpt;
  try {
    ckpt.params.layer_sizes =
        model.at("layer_sizes").get<std::vector<std::size_t>>();
    const auto& o = model.at("optimizer");
    ckpt.optimizer.kind = ParseOptimizerKind(o.at("kind").get<std::string>());
    ckpt.optimizer.learning_rate = o.at("learning_rate").get<double>();
    ckpt.optimizer.momentum = o.at("momentum").get<double>();
    ckpt.optimizer.weight_decay = o.at("weight_decay").get<double>();
    ckpt.optimizer.beta1 = o.at("beta1").get<double>();
    ckpt.optimizer.beta2 = o.at("beta2").get<double>();
    ckpt.optimizer.epsilon = o.at("epsilon").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad model.json: " + std::string(e.what()));
  }
  if (ckpt.params.layer_sizes.size() < 2) {
    throw IoError("model.json: need at least two layer sizes");
  }

  const std::vector<double> flat = ReadF64Le(dir / "params.f64le");
  std::size_t pos = 0;
  const auto& sizes = ckpt.params.layer_sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    for (const auto& [r, c] : {std::pair{sizes[l], sizes[l + 1]},
                              std::pair{std::size_t{1}, sizes[l + 1]}}) {
      if (pos + r * c > flat.size()) {
        throw IoError("params.f64le is shorter than model.json implies");
      }
      ckpt.params.tensors.emplace_back(
          r, c, std::vector<double>(flat.begin() + pos, flat.begin() + pos + r * c));
      pos += r * c;
    }
  }
  if (pos != flat.size()) {
    throw IoError("params.f64le is longer than model.json implies");
  }
  ckpt.params.Validate();
  return ckpt;
}

}  // namespace reweigh::clf
