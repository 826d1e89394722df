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

#include "reweigh/debias/biased_classifier.h"

#include <algorithm>

#include "fmt/format.h"
#include "reweigh/core/errors.h"
#include "reweigh/core/rng.h"

namespace reweigh::debias {
namespace {

constexpr std::uint64_t kInitStream = 31;
constexpr std::uint64_t kShuffleStream = 32;

}  // namespace

void BiasedClassifierArtifact::Validate(std::size_t n) const {
  if (confidences.size() != n || probabilities.rows() != n ||
      penultimate.rows() != n) {
    throw InvalidArgument("biased classifier outputs do not match the dataset");
  }
  for (double p : confidences) {
    if (!(p > 0.0 && p <= 1.0)) {
      throw InvalidArgument(fmt::format("confidence {} outside (0, 1]", p));
    }
  }
}

void FillBiasedOutputs(const data::LabeledDataset& train,
                       BiasedClassifierArtifact& artifact) {
  artifact.probabilities = clf::PredictProba(artifact.params, train.features);
  artifact.penultimate = clf::MlpPenultimate(artifact.params, train.features);
  artifact.confidences.resize(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    artifact.confidences[i] = std::clamp(
        artifact.probabilities(i, train.labels[i]), clf::kProbabilityFloor, 1.0);
  }
}

BiasedClassifierArtifact TrainBiasedClassifier(const data::LabeledDataset& train,
                                               const clf::GceConfig& gce,
                                               int t_bias,
                                               const clf::TrainConfig& cfg) {
  if (t_bias < 1) {
    throw InvalidArgument(fmt::format("T_bias must be >= 1, got {}", t_bias));
  }
  gce.Validate();
  clf::TrainConfig psi_cfg = cfg;
  psi_cfg.epochs = t_bias;
  const auto sizes =
      clf::LayerSizes(train.dim(), psi_cfg.hidden,
                      static_cast<std::size_t>(train.num_classes));
  clf::ShuffleSampler sampler(train.size(), psi_cfg.batch_size, psi_cfg.shuffle,
                              DeriveSeed(cfg.seed, kShuffleStream));
  const clf::BatchLossFn loss = [&](ad::Tape&, const clf::MlpOutput& out,
                                    const clf::StepContext& ctx) {
    std::vector<int> labels(ctx.batch.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      labels[i] = train.labels[ctx.batch[i]];
    }
    return ad::Mean(clf::GceLoss(out.logits, labels, gce.tau));
  };
  const clf::EpochHook collapse_check = [&](int epoch, const clf::MlpParams& p,
                                            double) {
    const double xent = clf::MeanCrossEntropy(p, train);
    if (xent > kCollapseCrossEntropy) {
      throw NumericalError(fmt::format(
          "biased classifier collapsed at epoch {}: mean training "
          "cross-entropy {:.1f} > {} (confident wrong predictions; lower the "
          "learning rate or T_bias)",
          epoch + 1, xent, kCollapseCrossEntropy));
    }
  };
  clf::TrainResult result = clf::Train(
      train, clf::InitMlp(sizes, DeriveSeed(cfg.seed, kInitStream)), psi_cfg,
      sampler, loss, collapse_check);

  BiasedClassifierArtifact artifact;
  artifact.params = std::move(result.params);
  artifact.t_bias = t_bias;
  artifact.tau = gce.tau;
  FillBiasedOutputs(train, artifact);
  artifact.Validate(train.size());
  return artifact;
}

}  // namespace reweigh::debias
