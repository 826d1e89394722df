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

#include "reweigh/debias/pipeline.h"

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <utility>

#include "fmt/format.h"
#include "reweigh/core/autodiff.h"
#include "reweigh/core/errors.h"
#include "reweigh/core/kernels.h"
#include "reweigh/core/optim.h"
#include "reweigh/core/rng.h"
#include "reweigh/data/generate.h"

namespace reweigh::debias {
namespace {

constexpr std::uint64_t kThetaInitStream = 21;
constexpr std::uint64_t kThetaShuffleStream = 22;
constexpr std::uint64_t kWeightedSamplerStream = 23;
constexpr std::uint64_t kVcaeStream = 24;
constexpr std::uint64_t kLffPsiStream = 31;  // same init as the two-stage psi

using experiment::MetricsRow;

std::vector<int> BatchLabels(const data::LabeledDataset& ds,
                             std::span<const std::size_t> batch) {
  std::vector<int> labels(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) labels[i] = ds.labels[batch[i]];
  return labels;
}

double NaN() { return std::numeric_limits<double>::quiet_NaN(); }

double BcRatioOrNaN(std::span<const double> weights,
                    const data::LabeledDataset& train) {
  if (!train.has_bias()) return NaN();
  const auto ba = train.AlignedIndices().size();
  if (ba == 0 || ba == train.size()) return NaN();
  return experiment::DebiasBcRatio(weights, train.aligned);
}

std::vector<double> PerSampleXent(const clf::MlpParams& params,
                                  const data::LabeledDataset& ds) {
  const Tensor logp = kernels::LogSoftmaxRows(clf::MlpLogits(params, ds.features));
  std::vector<double> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) out[i] = -logp(i, ds.labels[i]);
  return out;
}

// p(y | b_n) rows for TBA from the chosen source.
Tensor TbaBiasProbs(const data::LabeledDataset& train, Provenance scheme,
                    const BiasedClassifierArtifact* artifact) {
  if (scheme == Provenance::kBiasedConfidence) return artifact->probabilities;
  if (!train.has_bias()) {
    throw InvalidArgument("TBA with an oracle scheme needs bias labels");
  }
  Tensor table;
  if (scheme == Provenance::kOracleUb) {
    if (!(train.bc_ratio > 0.0)) {
      throw InvalidArgument("oracle-ub needs the generator's BC ratio");
    }
    table = data::AnalyticPYGivenB(train.num_classes, train.bc_ratio);
  } else {
    table = data::EstimatePYGivenB(train).table;
  }
  const auto c = static_cast<std::size_t>(train.num_classes);
  Tensor out(train.size(), c);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const int b = (*train.bias)[i];
    for (std::size_t y = 0; y < c; ++y) out(i, y) = table(y, b);
  }
  return out;
}

struct StageOne {
  SampleWeights weights;
  std::optional<BiasedClassifierArtifact> owned;
  const BiasedClassifierArtifact* artifact = nullptr;
};

StageOne ComputeStageOne(const data::LabeledDataset& train,
                         const PipelineConfig& cfg,
                         const PipelineInputs& inputs) {
  StageOne s;
  const bool needs_psi =
      cfg.scheme == Provenance::kBiasedConfidence ||
      cfg.scheme == Provenance::kPgd;
  if (needs_psi) {
    if (inputs.artifact != nullptr) {
      inputs.artifact->Validate(train.size());
      s.artifact = inputs.artifact;
    } else {
      s.owned = TrainBiasedClassifier(train, cfg.gce, cfg.t_bias, cfg.train);
      s.artifact = &*s.owned;
    }
  }
  switch (cfg.scheme) {
    case Provenance::kUniform:
    case Provenance::kLff:
      s.weights = UniformWeights(train.size());
      break;
    case Provenance::kOracleUb:
      s.weights = OracleWeightsAnalytic(train);
      break;
    case Provenance::kOracleYb:
      s.weights = OracleWeightsEmpirical(train);
      break;
    case Provenance::kBiasedConfidence:
      s.weights = ComputeWeightsClamped(s.artifact->confidences, cfg.gamma);
      if (cfg.rescale) s.weights = RescaleWeights(std::move(s.weights));
      break;
    case Provenance::kPgd:
      s.weights = PgdWeights(s.artifact->probabilities, train.labels,
                             s.artifact->penultimate);
      break;
    case Provenance::kVcae: {
      clf::TrainConfig vt = cfg.train;
      vt.epochs = cfg.vcae_epochs;
      vt.seed = DeriveSeed(cfg.train.seed, kVcaeStream);
      const vcae::VcaeTrainResult model = vcae::TrainVcae(train, cfg.vcae, vt);
      s.weights =
          vcae::VcaeWeights(model.params, train, model.prior, cfg.vcae_cap)
              .weights;
      if (cfg.rescale) s.weights = RescaleWeights(std::move(s.weights));
      break;
    }
  }
  if (cfg.method == Method::kTba) s.weights = UniformWeights(train.size());
  s.weights.Validate();
  return s;
}

}  // namespace

std::string MethodName(Method m) {
  switch (m) {
    case Method::kLw:
      return "LW";
    case Method::kAlw:
      return "ALW";
    case Method::kWs:
      return "WS";
    case Method::kTba:
      return "TBA";
  }
  return "?";
}

Method ParseMethod(const std::string& name) {
  for (Method m : {Method::kLw, Method::kAlw, Method::kWs, Method::kTba}) {
    if (MethodName(m) == name) return m;
  }
  throw InvalidArgument(
      fmt::format("unknown method '{}' (expected LW, ALW, WS or TBA)", name));
}

void ValidateCombination(Provenance scheme, Method method) {
  const auto reject = [&](const char* why) {
    throw InvalidArgument(fmt::format("scheme {} cannot run with method {}: {}",
                                      ProvenanceName(scheme),
                                      MethodName(method), why));
  };
  if (scheme == Provenance::kLff && method != Method::kLw) {
    reject("lff recomputes its weights every step and only supports LW");
  }
  if (scheme == Provenance::kPgd && method != Method::kWs) {
    reject("pgd is a resampling scheme and only supports WS");
  }
  if (method == Method::kTba && scheme != Provenance::kOracleUb &&
      scheme != Provenance::kOracleYb &&
      scheme != Provenance::kBiasedConfidence) {
    reject("TBA needs a p(y|b) table (oracle-ub, oracle-yb, biased-confidence)");
  }
}

void PipelineConfig::Validate() const {
  ValidateCombination(scheme, method);
  train.Validate();
  gce.Validate();
  anneal.Validate();
  if (t_bias < 1) throw InvalidArgument("t_bias must be >= 1");
  if (!(gamma > 1.0) || !std::isfinite(gamma)) {
    throw InvalidArgument(fmt::format("gamma must be finite and > 1, got {}", gamma));
  }
  if (scheme == Provenance::kVcae) {
    if (vcae_epochs < 1) throw InvalidArgument("vcae_epochs must be >= 1");
    if (!(vcae_cap > 1.0)) throw InvalidArgument("vcae_cap must be > 1");
  }
}

clf::MlpParams InitTheta(const data::LabeledDataset& train,
                         const PipelineConfig& cfg) {
  return clf::InitMlp(
      clf::LayerSizes(train.dim(), cfg.train.hidden,
                      static_cast<std::size_t>(train.num_classes)),
      DeriveSeed(cfg.train.seed, kThetaInitStream));
}

std::uint64_t ThetaShuffleSeed(const PipelineConfig& cfg) {
  return DeriveSeed(cfg.train.seed, kThetaShuffleStream);
}

PipelineResult RunDebiasPipeline(const data::LabeledDataset& train,
                                 const data::LabeledDataset& test,
                                 const PipelineConfig& cfg,
                                 const PipelineInputs& inputs) {
  cfg.Validate();
  train.Validate();
  test.Validate();
  if (train.num_classes != test.num_classes || train.dim() != test.dim()) {
    throw InvalidArgument("train and test sets disagree on shape");
  }
  const auto started = std::chrono::steady_clock::now();
  StageOne stage = ComputeStageOne(train, cfg, inputs);

  PipelineResult result;
  const std::size_t n = train.size();
  const std::size_t bs = cfg.train.batch_size;
  const std::size_t batches_per_epoch = (n + bs - 1) / bs;

  std::unique_ptr<clf::BatchSampler> sampler;
  if (cfg.method == Method::kWs) {
    sampler = std::make_unique<WeightedBatchSampler>(
        stage.weights.weights, bs, batches_per_epoch,
        DeriveSeed(cfg.train.seed, kWeightedSamplerStream));
  } else {
    sampler = std::make_unique<clf::ShuffleSampler>(n, bs, cfg.train.shuffle,
                                                    ThetaShuffleSeed(cfg));
  }

  // lff: psi trained with GCE alongside theta, weights from the current
  // per-sample losses of both (taken before either update).
  std::optional<clf::MlpParams> psi;
  std::optional<Optimizer> psi_opt;
  if (cfg.scheme == Provenance::kLff) {
    psi = clf::InitMlp(clf::LayerSizes(train.dim(), cfg.train.hidden,
                                       static_cast<std::size_t>(train.num_classes)),
                       DeriveSeed(cfg.train.seed, kLffPsiStream));
    psi_opt.emplace(cfg.train.optimizer, psi->tensors);
  }

  Tensor tba_offsets;
  if (cfg.method == Method::kTba) {
    TbaConfig tc{cfg.gamma};
    tba_offsets = TbaLogOffsets(TbaBiasProbs(train, cfg.scheme, stage.artifact), tc);
  }

  const std::vector<double>& w = stage.weights.weights;
  const clf::BatchLossFn loss = [&](ad::Tape& tape, const clf::MlpOutput& out,
                                    const clf::StepContext& ctx) {
    const std::vector<int> labels = BatchLabels(train, ctx.batch);
    switch (cfg.method) {
      case Method::kTba: {
        ad::Var shifted = ad::Add(
            out.logits, tape.Constant(tba_offsets.GatherRows(ctx.batch)));
        return ad::Mean(clf::SoftmaxXent(shifted, labels));
      }
      case Method::kWs:
        return ad::Mean(clf::SoftmaxXent(out.logits, labels));
      case Method::kAlw:
      case Method::kLw:
        break;
    }
    ad::Var xent = clf::SoftmaxXent(out.logits, labels);
    std::vector<double> bw(ctx.batch.size());
    if (psi) {
      ad::Tape psi_tape;
      const clf::MlpVars pv = clf::BindMlp(psi_tape, *psi);
      const clf::MlpOutput po = clf::MlpForward(
          pv, psi_tape.Constant(train.features.GatherRows(ctx.batch)));
      const Tensor psi_xent = clf::SoftmaxXent(po.logits, labels).value();
      for (std::size_t i = 0; i < bw.size(); ++i) {
        bw[i] = LffWeight(psi_xent[i], xent.value()[i]);
      }
      ad::Var gce = ad::Mean(clf::GceLoss(po.logits, labels, cfg.gce.tau));
      psi_tape.Backward(gce);
      psi_opt->Step(psi->tensors, clf::CollectGrads(psi_tape, pv));
    } else {
      for (std::size_t i = 0; i < bw.size(); ++i) {
        const double wn = w[ctx.batch[i]];
        bw[i] = cfg.method == Method::kAlw
                    ? AnnealWeight(wn, ctx.step, cfg.anneal)
                    : wn;
      }
    }
    return clf::WeightedMeanLoss(xent, bw);
  };

  const clf::EpochHook hook = [&](int epoch, const clf::MlpParams& params,
                                  double mean_loss) {
    MetricsRow row;
    row.epoch = epoch + 1;
    row.train_loss = mean_loss;
    const clf::SubsetAccuracy acc = clf::EvaluateAccuracy(params, test);
    row.test_acc = acc.overall;
    row.test_acc_ba = acc.aligned;
    row.test_acc_bc = acc.conflicting;
    switch (cfg.method) {
      case Method::kTba:
        row.bc_ratio = NaN();
        break;
      case Method::kAlw: {
        const std::int64_t last_step =
            static_cast<std::int64_t>((epoch + 1) * batches_per_epoch) - 1;
        std::vector<double> annealed(n);
        for (std::size_t i = 0; i < n; ++i) {
          annealed[i] = AnnealWeight(w[i], last_step, cfg.anneal);
        }
        row.bc_ratio = BcRatioOrNaN(annealed, train);
        break;
      }
      case Method::kLw:
      case Method::kWs:
        if (psi) {
          const std::vector<double> lp = PerSampleXent(*psi, train);
          const std::vector<double> lt = PerSampleXent(params, train);
          for (std::size_t i = 0; i < n; ++i) {
            stage.weights.weights[i] = LffWeight(lp[i], lt[i]);
          }
        }
        row.bc_ratio = BcRatioOrNaN(stage.weights.weights, train);
        break;
    }
    row.wall_seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - started)
                           .count();
    result.history.push_back(row);
  };

  clf::TrainResult trained = clf::Train(train, InitTheta(train, cfg), cfg.train,
                                        *sampler, loss, hook);
  result.params = std::move(trained.params);
  if (cfg.scheme == Provenance::kLff) stage.weights.provenance = Provenance::kLff;
  result.weights = std::move(stage.weights);
  result.artifact = std::move(stage.owned);
  return result;
}

}  // namespace reweigh::debias
