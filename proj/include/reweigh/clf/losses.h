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

#ifndef REWEIGH_CLF_LOSSES_H_
#define REWEIGH_CLF_LOSSES_H_

#include <span>
#include <vector>

#include "reweigh/core/autodiff.h"

namespace reweigh::clf {

// Probabilities are floored here inside cross-entropy and GCE.
inline constexpr double kProbabilityFloor = 1e-12;

struct GceConfig {
  // Amplification exponent; GCE tends to cross-entropy as tau -> 0.
  double tau = 0.7;
  void Validate() const;  // 0 < tau <= 1
};

// Per-sample -log softmax(logits)[y] (n x 1).
ad::Var SoftmaxXent(ad::Var logits, std::span<const int> labels);
// Per-sample generalized cross-entropy (1 - p_y^tau) / tau (n x 1).
ad::Var GceLoss(ad::Var logits, std::span<const int> labels, double tau);
// (1/n) * sum_n w_n * loss_n. Normalized by the batch size, not by the sum
// of weights. Throws InvalidArgument on a negative weight.
ad::Var WeightedMeanLoss(ad::Var per_sample, std::span<const double> weights);

// Scalar forms.
std::vector<double> Softmax(std::span<const double> logits);
double SoftmaxXent(std::span<const double> logits, int label);
double Gce(double p, double tau);
// d Gce / d p = -p^(tau - 1).
double GceGradient(double p, double tau);
double WeightedMean(std::span<const double> losses,
                    std::span<const double> weights);

}  // namespace reweigh::clf

#endif  // REWEIGH_CLF_LOSSES_H_
