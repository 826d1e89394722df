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

#include "reweigh/clf/losses.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "reweigh/core/errors.h"
#include "reweigh/core/kernels.h"

namespace reweigh::clf {
namespace {

void CheckLabels(std::span<const int> labels, std::size_t classes) {
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw InvalidArgument("label " + std::to_string(y) + " outside [0, " +
                            std::to_string(classes) + ")");
    }
  }
}

void CheckTau(double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw InvalidArgument("GCE tau must lie in (0, 1], got " + std::to_string(tau));
  }
}

void CheckWeights(std::span<const double> weights) {
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvalidArgument("loss weights must be finite and >= 0");
    }
  }
}

}  // namespace

void GceConfig::Validate() const { CheckTau(tau); }

ad::Var SoftmaxXent(ad::Var logits, std::span<const int> labels) {
  CheckLabels(labels, logits.cols());
  ad::Var log_p = ad::PickColumns(ad::LogSoftmax(logits), labels);
  return ad::Neg(ad::ClampMin(log_p, std::log(kProbabilityFloor)));
}

ad::Var GceLoss(ad::Var logits, std::span<const int> labels, double tau) {
  CheckTau(tau);
  CheckLabels(labels, logits.cols());
  ad::Var p = ad::ClampMin(
      ad::Exp(ad::PickColumns(ad::LogSoftmax(logits), labels)),
      kProbabilityFloor);
  return ad::AddScalar(ad::Scale(ad::Pow(p, tau), -1.0 / tau), 1.0 / tau);
}

ad::Var WeightedMeanLoss(ad::Var per_sample, std::span<const double> weights) {
  if (per_sample.cols() != 1 || per_sample.rows() != weights.size()) {
    throw InvalidArgument("WeightedMeanLoss: need n x 1 losses and n weights");
  }
  if (weights.empty()) throw InvalidArgument("WeightedMeanLoss: empty batch");
  CheckWeights(weights);
  ad::Var w = per_sample.tape().Constant(Tensor::ColumnVector(weights));
  return ad::Scale(ad::Sum(ad::Mul(per_sample, w)),
                   1.0 / static_cast<double>(weights.size()));
}

std::vector<double> Softmax(std::span<const double> logits) {
  if (logits.empty()) throw InvalidArgument("Softmax: empty input");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double SoftmaxXent(std::span<const double> logits, int label) {
  if (logits.empty()) throw InvalidArgument("SoftmaxXent: empty input");
  CheckLabels(std::span<const int>(&label, 1), logits.size());
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  const double log_p = logits[label] - mx - std::log(sum);
  return -std::max(log_p, std::log(kProbabilityFloor));
}

double Gce(double p, double tau) {
  CheckTau(tau);
  p = std::max(p, kProbabilityFloor);
  return (1.0 - std::pow(p, tau)) / tau;
}

double GceGradient(double p, double tau) {
  CheckTau(tau);
  p = std::max(p, kProbabilityFloor);
  return -std::pow(p, tau - 1.0);
}

double WeightedMean(std::span<const double> losses,
                    std::span<const double> weights) {
  if (losses.size() != weights.size() || losses.empty()) {
    throw InvalidArgument("WeightedMean: need equal, non-zero lengths");
  }
  CheckWeights(weights);
  std::vector<double> terms(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i) terms[i] = weights[i] * losses[i];
  // Same rounding as the tape form: multiply by 1/n rather than divide.
  return kernels::PairwiseSum(terms) * (1.0 / static_cast<double>(losses.size()));
}

}  // namespace reweigh::clf
