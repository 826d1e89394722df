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

#include "reweigh/exp/config.h"

#include <cmath>
#include <fstream>
#include <set>

#include "fmt/format.h"
#include "reweigh/core/errors.h"

namespace reweigh::experiment {
namespace {

using nlohmann::json;

void CheckKeys(const json& j, const std::string& where,
               const std::set<std::string>& allowed) {
  if (!j.is_object()) {
    throw InvalidArgument(fmt::format("config: '{}' must be an object", where));
  }
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      throw InvalidArgument(fmt::format("config: unknown key '{}' in {}", key, where));
    }
  }
}

template <typename T>
void Read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidArgument(fmt::format("config: bad value for '{}': {}", key, e.what()));
  }
}

void ReadOptimizer(const json& j, OptimizerConfig& o) {
  CheckKeys(j, "train.optimizer",
            {"kind", "learning_rate", "momentum", "weight_decay", "beta1",
             "beta2", "epsilon"});
  std::string kind = OptimizerKindName(o.kind);
  Read(j, "kind", kind);
  o.kind = ParseOptimizerKind(kind);
  Read(j, "learning_rate", o.learning_rate);
  Read(j, "momentum", o.momentum);
  Read(j, "weight_decay", o.weight_decay);
  Read(j, "beta1", o.beta1);
  Read(j, "beta2", o.beta2);
  Read(j, "epsilon", o.epsilon);
}

json OptimizerJson(const OptimizerConfig& o) {
  return {{"kind", OptimizerKindName(o.kind)}, {"learning_rate", o.learning_rate},
          {"momentum", o.momentum},           {"weight_decay", o.weight_decay},
          {"beta1", o.beta1},                 {"beta2", o.beta2},
          {"epsilon", o.epsilon}};
}

void ReadDataset(const json& j, DatasetSpec& d) {
  CheckKeys(j, "dataset",
            {"kind", "num_classes", "num_samples", "bc_ratio", "sigma_u",
             "sigma_b", "seed", "test_samples", "train_path", "test_path"});
  const bool from_disk = j.contains("train_path") || j.contains("test_path");
  if (from_disk) {
    for (const char* key : {"kind", "num_classes", "num_samples", "bc_ratio",
                            "sigma_u", "sigma_b", "seed", "test_samples"}) {
      if (j.contains(key)) {
        throw InvalidArgument(fmt::format(
            "config: dataset.{} cannot be combined with train_path/test_path", key));
      }
    }
    std::string train, test;
    Read(j, "train_path", train);
    Read(j, "test_path", test);
    d.train_path = train;
    d.test_path = test;
    d.generate.reset();
    return;
  }
  data::GenConfig g;
  std::string kind = data::DatasetKindName(g.kind);
  Read(j, "kind", kind);
  g.kind = data::ParseDatasetKind(kind);
  Read(j, "num_classes", g.num_classes);
  Read(j, "num_samples", g.num_samples);
  Read(j, "bc_ratio", g.bc_ratio);
  Read(j, "sigma_u", g.sigma_u);
  Read(j, "sigma_b", g.sigma_b);
  Read(j, "test_samples", d.test_samples);
  if (j.contains("seed")) {
    std::uint64_t s = 0;
    Read(j, "seed", s);
    d.data_seed = s;
  }
  d.generate = g;
}

void ReadTrain(const json& j, clf::TrainConfig& t) {
  CheckKeys(j, "train",
            {"epochs", "batch_size", "hidden", "shuffle", "optimizer"});
  Read(j, "epochs", t.epochs);
  Read(j, "batch_size", t.batch_size);
  Read(j, "hidden", t.hidden);
  Read(j, "shuffle", t.shuffle);
  if (j.contains("optimizer")) ReadOptimizer(j.at("optimizer"), t.optimizer);
}

void ReadVcae(const json& j, debias::PipelineConfig& p) {
  CheckKeys(j, "vcae", {"dim_z", "lambda", "hidden", "epochs", "cap"});
  Read(j, "dim_z", p.vcae.dim_z);
  if (j.contains("lambda")) {
    std::vector<double> l;
    Read(j, "lambda", l);
    if (l.size() != 3) {
      throw InvalidArgument("config: vcae.lambda needs three coefficients");
    }
    p.vcae.lambda_recon = l[0];
    p.vcae.lambda_kl = l[1];
    p.vcae.lambda_ce = l[2];
  }
  Read(j, "hidden", p.vcae.hidden);
  Read(j, "epochs", p.vcae_epochs);
  Read(j, "cap", p.vcae_cap);
}

}  // namespace

std::string SweepAxisName(SweepAxis axis) {
  return axis == SweepAxis::kGamma ? "gamma" : "t_bias";
}

SweepAxis ParseSweepAxis(const std::string& name) {
  if (name == "gamma") return SweepAxis::kGamma;
  if (name == "t_bias") return SweepAxis::kTBias;
  throw InvalidArgument(
      fmt::format("unknown sweep axis '{}' (expected gamma or t_bias)", name));
}

void RunConfig::Validate() const {
  if (schema_version != kSchemaVersion) {
    throw InvalidArgument(fmt::format("config: schema_version {} is not supported",
                                      schema_version));
  }
  if (dataset.generate) {
    dataset.generate->Validate();
    if (dataset.test_samples == 0) {
      throw InvalidArgument("config: dataset.test_samples must be >= 1");
    }
  } else if (dataset.train_path.empty() || dataset.test_path.empty()) {
    throw InvalidArgument("config: dataset needs a generator spec or both paths");
  }
  if (seeds.empty()) throw InvalidArgument("config: need at least one seed");
  std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
  if (unique.size() != seeds.size()) {
    throw InvalidArgument("config: seeds must be distinct");
  }
  pipeline.Validate();
  if (sweep) {
    if (sweep->values.empty()) throw InvalidArgument("config: sweep.values is empty");
    for (double v : sweep->values) AtSweepPoint(pipeline, sweep->axis, v).Validate();
  }
}

debias::PipelineConfig AtSweepPoint(const debias::PipelineConfig& base,
                                    SweepAxis axis, double value) {
  debias::PipelineConfig p = base;
  if (axis == SweepAxis::kGamma) {
    p.gamma = value;
  } else {
    if (value != std::floor(value) || value < 1 || value > 1e6) {
      throw InvalidArgument(fmt::format("t_bias sweep value {} is not a positive integer", value));
    }
    p.t_bias = static_cast<int>(value);
  }
  return p;
}

RunConfig ParseRunConfig(const json& j) {
  CheckKeys(j, "config",
            {"schema_version", "dataset", "scheme", "method", "gamma", "t_bias",
             "tau", "rescale", "anneal", "train", "vcae", "seeds", "seed",
             "repeat", "output_dir", "sweep"});
  if (!j.contains("schema_version")) {
    throw InvalidArgument("config: schema_version is required");
  }
  RunConfig c;
  Read(j, "schema_version", c.schema_version);
  if (c.schema_version != kSchemaVersion) {
    throw InvalidArgument(fmt::format("config: schema_version {} is not supported",
                                      c.schema_version));
  }
  if (j.contains("dataset")) ReadDataset(j.at("dataset"), c.dataset);
  if (!c.dataset.generate && c.dataset.train_path.empty()) {
    c.dataset.generate = data::GenConfig{};
  }
  debias::PipelineConfig& p = c.pipeline;
  std::string scheme = debias::ProvenanceName(p.scheme);
  std::string method = debias::MethodName(p.method);
  Read(j, "scheme", scheme);
  Read(j, "method", method);
  p.scheme = debias::ParseProvenance(scheme);
  p.method = debias::ParseMethod(method);
  Read(j, "gamma", p.gamma);
  Read(j, "t_bias", p.t_bias);
  Read(j, "tau", p.gce.tau);
  Read(j, "rescale", p.rescale);
  if (j.contains("anneal")) {
    const json& a = j.at("anneal");
    CheckKeys(a, "anneal", {"w_init", "t_anneal"});
    Read(a, "w_init", p.anneal.w_init);
    Read(a, "t_anneal", p.anneal.t_anneal);
  }
  if (j.contains("train")) ReadTrain(j.at("train"), p.train);
  if (j.contains("vcae")) ReadVcae(j.at("vcae"), p);

  if (j.contains("seeds") && (j.contains("seed") || j.contains("repeat"))) {
    throw InvalidArgument("config: give either seeds or seed/repeat");
  }
  if (j.contains("seeds")) {
    Read(j, "seeds", c.seeds);
  } else {
    std::uint64_t first = 0;
    int repeat = 1;
    Read(j, "seed", first);
    Read(j, "repeat", repeat);
    if (repeat < 1) throw InvalidArgument("config: repeat must be >= 1");
    c.seeds.clear();
    for (int r = 0; r < repeat; ++r) c.seeds.push_back(first + r);
  }
  std::string out;
  Read(j, "output_dir", out);
  c.output_dir = out;
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    CheckKeys(s, "sweep", {"axis", "values"});
    SweepSpec spec;
    std::string axis = "gamma";
    Read(s, "axis", axis);
    spec.axis = ParseSweepAxis(axis);
    Read(s, "values", spec.values);
    c.sweep = spec;
  }
  return c;
}

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open config {}", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument(fmt::format("config {}: {}", path.string(), e.what()));
  }
  return ParseRunConfig(j);
}

json ToJson(const RunConfig& c) {
  const debias::PipelineConfig& p = c.pipeline;
  json j;
  j["schema_version"] = c.schema_version;
  json d;
  if (c.dataset.generate) {
    const data::GenConfig& g = *c.dataset.generate;
    d = {{"kind", data::DatasetKindName(g.kind)},
         {"num_classes", g.num_classes},
         {"num_samples", g.num_samples},
         {"bc_ratio", g.bc_ratio},
         {"sigma_u", g.sigma_u},
         {"sigma_b", g.sigma_b},
         {"test_samples", c.dataset.test_samples}};
    if (c.dataset.data_seed) d["seed"] = *c.dataset.data_seed;
  } else {
    d = {{"train_path", c.dataset.train_path.string()},
         {"test_path", c.dataset.test_path.string()}};
  }
  j["dataset"] = d;
  j["scheme"] = debias::ProvenanceName(p.scheme);
  j["method"] = debias::MethodName(p.method);
  j["gamma"] = p.gamma;
  j["t_bias"] = p.t_bias;
  j["tau"] = p.gce.tau;
  j["rescale"] = p.rescale;
  j["anneal"] = {{"w_init", p.anneal.w_init}, {"t_anneal", p.anneal.t_anneal}};
  j["train"] = {{"epochs", p.train.epochs},
                {"batch_size", p.train.batch_size},
                {"hidden", p.train.hidden},
                {"shuffle", p.train.shuffle},
                {"optimizer", OptimizerJson(p.train.optimizer)}};
  j["vcae"] = {{"dim_z", p.vcae.dim_z},
               {"lambda", {p.vcae.lambda_recon, p.vcae.lambda_kl, p.vcae.lambda_ce}},
               {"hidden", p.vcae.hidden},
               {"epochs", p.vcae_epochs},
               {"cap", p.vcae_cap}};
  j["seeds"] = c.seeds;
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir.string();
  if (c.sweep) {
    j["sweep"] = {{"axis", SweepAxisName(c.sweep->axis)}, {"values", c.sweep->values}};
  }
  return j;
}

}  // namespace reweigh::experiment
