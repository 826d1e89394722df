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

#ifndef REWEIGH_DEBIAS_BIASED_CLASSIFIER_H_
#define REWEIGH_DEBIAS_BIASED_CLASSIFIER_H_

#include <vector>

#include "reweigh/clf/losses.h"
#include "reweigh/clf/mlp.h"
#include "reweigh/clf/train.h"
#include "reweigh/core/tensor.h"
#include "reweigh/data/dataset.h"

namespace reweigh::debias {

// Mean training cross-entropy above which the biased classifier is treated
// as collapsed.
inline constexpr double kCollapseCrossEntropy = 50.0;

// Frozen biased classifier psi and its outputs on the training set.
struct BiasedClassifierArtifact {
  clf::MlpParams params;
  // p_psi(y_n | x_n), floored at clf::kProbabilityFloor so it lies in (0, 1].
  std::vector<double> confidences;
  // Full N x C table p_psi(c | x_n).
  Tensor probabilities;
  // Input of psi's last layer, N x H; PGD's gradient norms need it.
  Tensor penultimate;
  int t_bias = 0;
  double tau = 0.0;

  // Throws InvalidArgument when lengths disagree with n or a confidence is
  // outside (0, 1].
  void Validate(std::size_t n) const;
};

// Trains psi for t_bias epochs on mean GCE (cfg.epochs is ignored), then
// caches confidences over the whole training set. Throws InvalidArgument for
// t_bias < 1 and NumericalError when the mean training cross-entropy exceeds
// kCollapseCrossEntropy after an epoch.
BiasedClassifierArtifact TrainBiasedClassifier(const data::LabeledDataset& train,
                                               const clf::GceConfig& gce,
                                               int t_bias,
                                               const clf::TrainConfig& cfg);

// Recomputes confidences, probabilities and penultimate features for params.
void FillBiasedOutputs(const data::LabeledDataset& train,
                       BiasedClassifierArtifact& artifact);

}  // namespace reweigh::debias

#endif  // REWEIGH_DEBIAS_BIASED_CLASSIFIER_H_
