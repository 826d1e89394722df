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

#ifndef REWEIGH_DEBIAS_WEIGHTS_H_
#define REWEIGH_DEBIAS_WEIGHTS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "reweigh/clf/train.h"
#include "reweigh/core/rng.h"
#include "reweigh/core/tensor.h"
#include "reweigh/data/dataset.h"

namespace reweigh::debias {

enum class Provenance {
  kUniform,
  kOracleUb,
  kOracleYb,
  kBiasedConfidence,
  kLff,
  kPgd,
  kVcae,
};

std::string ProvenanceName(Provenance p);
Provenance ParseProvenance(const std::string& name);

// Largest weight after rescaling.
inline constexpr double kRescaleMax = 10.0;

struct SampleWeights {
  std::vector<double> weights;
  Provenance provenance = Provenance::kUniform;
  // Clamp ceiling used to build the weights; 0 when none was applied.
  double gamma = 0.0;
  bool rescaled = false;

  std::size_t size() const { return weights.size(); }

  // Throws InvalidArgument unless every weight is finite and positive (LfF
  // and PGD weights may be 0), and clamped weights lie in [1, gamma], or in
  // [kRescaleMax / gamma, kRescaleMax] once rescaled.
  void Validate() const;
};

SampleWeights UniformWeights(std::size_t n);

// w_n = min(1 / confidence_n, gamma), so w_n is in [1, gamma]. Throws
// InvalidArgument for gamma <= 1 or a confidence outside (0, 1].
SampleWeights ComputeWeightsClamped(
    std::span<const double> confidences, double gamma,
    Provenance provenance = Provenance::kBiasedConfidence);

// Multiplies by kRescaleMax / gamma. Throws InvalidArgument when the weights
// are already rescaled or carry no clamp.
SampleWeights RescaleWeights(SampleWeights w);

// 1 / p(y_n | b_n) with the generator's exact conditional (u is y for
// generated data). Needs bias labels and a known bc_ratio.
SampleWeights OracleWeightsAnalytic(const data::LabeledDataset& ds);
// 1 / p_hat(y_n | b_n) from the training set's own co-occurrence counts.
SampleWeights OracleWeightsEmpirical(const data::LabeledDataset& ds);

// Linear warm-up from w_init to the target weight over t_anneal steps.
struct AnnealConfig {
  double w_init = 1.0;
  std::int64_t t_anneal = 0;
  void Validate() const;  // w_init > 0, t_anneal >= 0
};

// w_init + t (w - w_init) / t_anneal for t < t_anneal, else w. With
// t_anneal = 0 the target weight is used from the start.
double AnnealWeight(double w, std::int64_t t, const AnnealConfig& cfg);

// Draws index n with probability w_n / sum(w), with replacement. Zero
// weights are allowed and never drawn.
class WeightedSampler {
 public:
  // Throws InvalidArgument for a negative or non-finite weight, or when all
  // weights are zero.
  explicit WeightedSampler(std::span<const double> weights);

  std::size_t Draw(Rng& rng) const;
  double probability(std::size_t i) const;
  std::size_t size() const { return cumulative_.size(); }

 private:
  std::vector<double> cumulative_;
  std::size_t last_positive_ = 0;
};

// Every epoch is batches_per_epoch independent weighted draws of batch_size
// indices. Epoch e uses its own derived stream, so batches do not depend on
// the order in which epochs are requested.
class WeightedBatchSampler : public clf::BatchSampler {
 public:
  WeightedBatchSampler(std::span<const double> weights, std::size_t batch_size,
                       std::size_t batches_per_epoch, std::uint64_t seed);
  std::vector<std::vector<std::size_t>> EpochBatches(int epoch) override;

 private:
  WeightedSampler sampler_;
  std::size_t batch_size_;
  std::size_t batches_per_epoch_;
  std::uint64_t seed_;
};

// L_biased / (L_biased + L_debiased), defined as 0.5 when both are 0. Throws
// InvalidArgument for negative or non-finite losses.
double LffWeight(double loss_biased, double loss_debiased);

// Frobenius norm of the last-layer gradient (p - onehot(y)) h^T, which is
// ||p - onehot(y)|| * ||h||.
double PgdWeight(std::span<const double> probs, int label,
                 std::span<const double> penultimate);
// PgdWeight for every sample, divided by their sum.
SampleWeights PgdWeights(const Tensor& probs, std::span<const int> labels,
                         const Tensor& penultimate);

struct TbaConfig {
  double gamma = 200.0;
  void Validate() const;  // gamma > 1
};

// log max(p, 1/gamma), elementwise. Added to the logits during training.
Tensor TbaLogOffsets(const Tensor& bias_probs, const TbaConfig& cfg);
// softmax(f + log v) with v = max(p_bias, 1/gamma).
std::vector<double> TbaAdjustedProbs(std::span<const double> logits,
                                     std::span<const double> bias_probs,
                                     const TbaConfig& cfg);

// CSV with columns index,weight,aligned,provenance. aligned is 1/0, or -1
// when the flags are unknown (empty span).
void WriteWeightsCsv(const std::filesystem::path& path, const SampleWeights& w,
                     std::span<const std::uint8_t> aligned);

}  // namespace reweigh::debias

#endif  // REWEIGH_DEBIAS_WEIGHTS_H_
