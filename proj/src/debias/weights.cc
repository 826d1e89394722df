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

#include "reweigh/debias/weights.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "fmt/format.h"
#include "reweigh/clf/losses.h"
#include "reweigh/core/csv.h"
#include "reweigh/core/errors.h"
#include "reweigh/core/kernels.h"
#include "reweigh/data/generate.h"

namespace reweigh::debias {
namespace {

constexpr struct {
  Provenance value;
  const char* name;
} kProvenanceNames[] = {
    {Provenance::kUniform, "uniform"},
    {Provenance::kOracleUb, "oracle-ub"},
    {Provenance::kOracleYb, "oracle-yb"},
    {Provenance::kBiasedConfidence, "biased-confidence"},
    {Provenance::kLff, "lff"},
    {Provenance::kPgd, "pgd"},
    {Provenance::kVcae, "vcae"},
};

void CheckGamma(double gamma) {
  if (!(gamma > 1.0) || !std::isfinite(gamma)) {
    throw InvalidArgument(fmt::format("gamma must be finite and > 1, got {}", gamma));
  }
}

double Norm(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

SampleWeights InverseConditional(const data::LabeledDataset& ds,
                                 const Tensor& table, Provenance provenance) {
  SampleWeights w{std::vector<double>(ds.size()), provenance, 0.0, false};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double p = table(ds.labels[i], (*ds.bias)[i]);
    if (!(p > 0)) {
      throw InvalidArgument(fmt::format(
          "p(y={} | b={}) is 0; inverse weight undefined", ds.labels[i],
          (*ds.bias)[i]));
    }
    w.weights[i] = 1.0 / p;
  }
  return w;
}

}  // namespace

std::string ProvenanceName(Provenance p) {
  for (const auto& e : kProvenanceNames) {
    if (e.value == p) return e.name;
  }
  throw InvalidArgument("unknown provenance");
}

Provenance ParseProvenance(const std::string& name) {
  for (const auto& e : kProvenanceNames) {
    if (name == e.name) return e.value;
  }
  throw InvalidArgument("unknown weight scheme '" + name + "'");
}

void SampleWeights::Validate() const {
  const bool may_be_zero =
      provenance == Provenance::kLff || provenance == Provenance::kPgd;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0 || (w == 0 && !may_be_zero)) {
      throw InvalidArgument(fmt::format("{} weight {} is not positive",
                                        ProvenanceName(provenance), w));
    }
  }
  if (gamma == 0.0) {
    if (rescaled) throw InvalidArgument("rescaled weights without a clamp");
    return;
  }
  CheckGamma(gamma);
  const double lo = rescaled ? kRescaleMax / gamma : 1.0;
  const double hi = rescaled ? kRescaleMax : gamma;
  const double slack = 1e-12 * hi;
  for (double w : weights) {
    if (w < lo - slack || w > hi + slack) {
      throw InvalidArgument(
          fmt::format("weight {} outside [{}, {}]", w, lo, hi));
    }
  }
}

SampleWeights UniformWeights(std::size_t n) {
  return {std::vector<double>(n, 1.0), Provenance::kUniform, 0.0, false};
}

SampleWeights ComputeWeightsClamped(std::span<const double> confidences,
                                    double gamma, Provenance provenance) {
  CheckGamma(gamma);
  SampleWeights w{std::vector<double>(confidences.size()), provenance, gamma,
                  false};
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    const double p = confidences[i];
    if (!(p > 0.0 && p <= 1.0)) {
      throw InvalidArgument(fmt::format("confidence {} outside (0, 1]", p));
    }
    w.weights[i] = std::min(1.0 / p, gamma);
  }
  return w;
}

SampleWeights RescaleWeights(SampleWeights w) {
  if (w.rescaled) throw InvalidArgument("weights are already rescaled");
  if (w.gamma == 0.0) throw InvalidArgument("cannot rescale unclamped weights");
  CheckGamma(w.gamma);
  for (double& v : w.weights) v = v * kRescaleMax / w.gamma;
  w.rescaled = true;
  return w;
}

SampleWeights OracleWeightsAnalytic(const data::LabeledDataset& ds) {
  if (!ds.has_bias()) throw InvalidArgument("oracle weights need bias labels");
  if (!(ds.bc_ratio > 0.0 && ds.bc_ratio < 1.0)) {
    throw InvalidArgument("oracle-ub needs the generator's bc_ratio");
  }
  return InverseConditional(
      ds, data::AnalyticPYGivenB(ds.num_classes, ds.bc_ratio),
      Provenance::kOracleUb);
}

SampleWeights OracleWeightsEmpirical(const data::LabeledDataset& ds) {
  return InverseConditional(ds, data::EstimatePYGivenB(ds).table,
                            Provenance::kOracleYb);
}

void AnnealConfig::Validate() const {
  if (!(w_init > 0.0) || !std::isfinite(w_init)) {
    throw InvalidArgument("anneal w_init must be > 0");
  }
  if (t_anneal < 0) throw InvalidArgument("anneal t_anneal must be >= 0");
}

double AnnealWeight(double w, std::int64_t t, const AnnealConfig& cfg) {
  if (t < 0) throw InvalidArgument("anneal step must be >= 0");
  if (t >= cfg.t_anneal) return w;
  return cfg.w_init + static_cast<double>(t) * (w - cfg.w_init) /
                          static_cast<double>(cfg.t_anneal);
}

WeightedSampler::WeightedSampler(std::span<const double> weights)
    : cumulative_(weights.size()) {
  double total = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double w = weights[i];
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvalidArgument(fmt::format("sampling weight {} is invalid", w));
    }
    total += w;
    cumulative_[i] = total;
    if (w > 0.0) {
      last_positive_ = i;
      any = true;
    }
  }
  if (!any) throw InvalidArgument("all sampling weights are zero");
}

std::size_t WeightedSampler::Draw(Rng& rng) const {
  const double u = rng.Uniform() * cumulative_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  // u can round up to the total; the last positive weight owns that point.
  return std::min(static_cast<std::size_t>(it - cumulative_.begin()),
                  last_positive_);
}

double WeightedSampler::probability(std::size_t i) const {
  const double prev = i == 0 ? 0.0 : cumulative_[i - 1];
  return (cumulative_[i] - prev) / cumulative_.back();
}

WeightedBatchSampler::WeightedBatchSampler(std::span<const double> weights,
                                           std::size_t batch_size,
                                           std::size_t batches_per_epoch,
                                           std::uint64_t seed)
    : sampler_(weights),
      batch_size_(batch_size),
      batches_per_epoch_(batches_per_epoch),
      seed_(seed) {
  if (batch_size_ == 0 || batches_per_epoch_ == 0) {
    throw InvalidArgument("weighted sampler needs batch size and count >= 1");
  }
}

std::vector<std::vector<std::size_t>> WeightedBatchSampler::EpochBatches(
    int epoch) {
  Rng rng(DeriveSeed(seed_, static_cast<std::uint64_t>(epoch)));
  std::vector<std::vector<std::size_t>> batches(batches_per_epoch_);
  for (auto& batch : batches) {
    batch.resize(batch_size_);
    for (std::size_t& i : batch) i = sampler_.Draw(rng);
  }
  return batches;
}

double LffWeight(double loss_biased, double loss_debiased) {
  if (!(loss_biased >= 0.0) || !(loss_debiased >= 0.0) ||
      !std::isfinite(loss_biased) || !std::isfinite(loss_debiased)) {
    throw InvalidArgument("LfF losses must be finite and >= 0");
  }
  const double total = loss_biased + loss_debiased;
  if (total == 0.0) return 0.5;
  return loss_biased / total;
}

double PgdWeight(std::span<const double> probs, int label,
                 std::span<const double> penultimate) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
    throw InvalidArgument("PgdWeight: label out of range");
  }
  double residual = 0.0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    const double d = probs[c] - (static_cast<int>(c) == label ? 1.0 : 0.0);
    residual += d * d;
  }
  return std::sqrt(residual) * Norm(penultimate);
}

SampleWeights PgdWeights(const Tensor& probs, std::span<const int> labels,
                         const Tensor& penultimate) {
  if (probs.rows() != labels.size() || penultimate.rows() != labels.size()) {
    throw InvalidArgument("PgdWeights: row counts differ");
  }
  SampleWeights w{std::vector<double>(labels.size()), Provenance::kPgd, 0.0,
                  false};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    w.weights[i] = PgdWeight(probs.row(i), labels[i], penultimate.row(i));
  }
  const double total = kernels::PairwiseSum(w.weights);
  if (!(total > 0.0)) {
    throw NumericalError("PGD gradient norms are all zero; nothing to sample");
  }
  for (double& v : w.weights) v /= total;
  return w;
}

void TbaConfig::Validate() const { CheckGamma(gamma); }

Tensor TbaLogOffsets(const Tensor& bias_probs, const TbaConfig& cfg) {
  cfg.Validate();
  Tensor out(bias_probs.rows(), bias_probs.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double p = bias_probs[i];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw InvalidArgument(fmt::format("bias probability {} outside [0, 1]", p));
    }
    out[i] = std::log(std::max(p, 1.0 / cfg.gamma));
  }
  return out;
}

std::vector<double> TbaAdjustedProbs(std::span<const double> logits,
                                     std::span<const double> bias_probs,
                                     const TbaConfig& cfg) {
  if (logits.size() != bias_probs.size()) {
    throw InvalidArgument("TbaAdjustedProbs: length mismatch");
  }
  const Tensor offsets = TbaLogOffsets(
      Tensor(1, bias_probs.size(),
             std::vector<double>(bias_probs.begin(), bias_probs.end())),
      cfg);
  std::vector<double> shifted(logits.size());
  for (std::size_t c = 0; c < logits.size(); ++c) {
    shifted[c] = logits[c] + offsets[c];
  }
  return clf::Softmax(shifted);
}

void WriteWeightsCsv(const std::filesystem::path& path, const SampleWeights& w,
                     std::span<const std::uint8_t> aligned) {
  if (!aligned.empty() && aligned.size() != w.size()) {
    throw InvalidArgument("WriteWeightsCsv: flag count differs from weights");
  }
  CsvWriter csv(path, {"index", "weight", "aligned", "provenance"});
  const std::string provenance = ProvenanceName(w.provenance);
  for (std::size_t i = 0; i < w.size(); ++i) {
    csv.Add(i).Add(w.weights[i]);
    csv.Add(aligned.empty() ? -1 : static_cast<int>(aligned[i]));
    csv.Add(provenance).EndRow();
  }
  csv.Close();
}

}  // namespace reweigh::debias
