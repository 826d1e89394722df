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

#ifndef REWEIGH_VCAE_VCAE_H_
#define REWEIGH_VCAE_VCAE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "reweigh/clf/mlp.h"
#include "reweigh/clf/train.h"
#include "reweigh/core/autodiff.h"
#include "reweigh/core/tensor.h"
#include "reweigh/data/dataset.h"
#include "reweigh/debias/weights.h"

// Variational clustering autoencoder: an encoder q(z|x) = N(mu_x, sigma_x^2),
// a decoder x_hat(z), and one isotropic Gaussian cluster N(mu_y, sigma_y^2 I)
// per class acting as p(z|y). p(y|z) follows from Bayes' rule with the class
// prior, and 1 / p(y|z) at z = mu_x is used as a sample weight.
namespace reweigh::vcae {

inline constexpr double kDefaultWeightCap = 100.0;

struct VcaeConfig {
  std::size_t dim_z = 2;
  double lambda_recon = 1.0;
  double lambda_kl = 1.0;
  double lambda_ce = 1.0;
  // Hidden widths shared by encoder and decoder.
  std::vector<std::size_t> hidden = {64};
  // p_D(y); empty means "class frequencies of the training labels".
  std::vector<double> prior;

  // Throws InvalidArgument for dim_z = 0, a negative lambda, or a prior that
  // is not a distribution over num_classes.
  void Validate(int num_classes) const;
};

struct VcaeParams {
  clf::MlpParams encoder;     // D -> hidden -> 2 dim_z (mu, then log sigma)
  clf::MlpParams decoder;     // dim_z -> hidden -> D, linear output
  Tensor class_means;         // C x dim_z
  Tensor class_log_sigma;     // C x 1

  std::size_t dim_z() const { return class_means.cols(); }
  std::size_t num_classes() const { return class_means.rows(); }
  std::size_t input_dim() const { return encoder.input_dim(); }

  // Encoder, decoder, means, log sigmas; the optimizer's view.
  std::vector<Tensor> Flatten() const;
  void Unflatten(std::span<const Tensor> tensors);
};

// Encoder and decoder with the usual uniform init, except the log-sigma half
// of the encoder's last layer, which starts at zero (sigma_x = 1). Class means
// are N(0, 1) and class log sigmas 0.
VcaeParams InitVcae(std::size_t input_dim, int num_classes,
                    const VcaeConfig& cfg, std::uint64_t seed);

struct LatentGaussian {
  Tensor mu;         // n x dim_z
  Tensor log_sigma;  // n x dim_z
};

// Throws InvalidArgument on an input width mismatch.
LatentGaussian Encode(const VcaeParams& params, const Tensor& x);

// KL(N(mu_q, diag sigma_q^2) || N(mu_p, diag sigma_p^2)) for one pair.
double KlDiagGauss(std::span<const double> mu_q, std::span<const double> sigma_q,
                   std::span<const double> mu_p, std::span<const double> sigma_p);

// log p(z|c) for every row of z and class c (n x C).
Tensor LogPZGivenY(const VcaeParams& params, const Tensor& z);
// log p(y|z) (n x C), normalized with log-sum-exp.
Tensor LogPYGivenZ(const VcaeParams& params, const Tensor& z,
                   std::span<const double> prior);
Tensor PYGivenZ(const VcaeParams& params, const Tensor& z,
                std::span<const double> prior);

// Tape form of the loss for one batch. eps (n x dim_z) is the standard normal
// noise of the single reparameterized sample z = mu + sigma * eps.
struct VcaeLossTerms {
  ad::Var total;
  ad::Var recon;  // mean of 0.5 ||x - x_hat(z)||^2
  ad::Var kl;     // mean KL(q(z|x) || p(z|y))
  ad::Var ce;     // mean -log p(y|z)
};

struct VcaeVars {
  clf::MlpVars encoder;
  clf::MlpVars decoder;
  ad::Var class_means;
  ad::Var class_log_sigma;
};

VcaeVars BindVcae(ad::Tape& tape, const VcaeParams& params);
VcaeLossTerms VcaeLoss(const VcaeVars& vars, const Tensor& x,
                       std::span<const int> labels, const Tensor& eps,
                       std::span<const double> prior, const VcaeConfig& cfg);

// Class frequencies of the labels.
std::vector<double> EmpiricalPrior(std::span<const int> labels, int num_classes);

struct VcaeWeightResult {
  debias::SampleWeights weights;  // provenance vcae, gamma = cap, unrescaled
  std::vector<double> p_y_given_z;
  Tensor z;  // the posterior means used
};

// w_n = min(1 / p(y_n | mu_{x_n}), cap), so w_n lies in [1, cap].
VcaeWeightResult VcaeWeights(const VcaeParams& params,
                             const data::LabeledDataset& ds,
                             std::span<const double> prior,
                             double cap = kDefaultWeightCap);

struct VcaeTrainResult {
  VcaeParams params;
  std::vector<double> prior;
  std::vector<double> epoch_loss;
};

// Mini-batch Adam (or SGD) on the mean loss. The reparameterization noise of
// step t is drawn from a stream derived from (train_cfg.seed, t), so runs are
// reproducible. Throws NumericalError with the epoch and step on a
// non-finite value.
VcaeTrainResult TrainVcae(const data::LabeledDataset& ds, const VcaeConfig& cfg,
                          const clf::TrainConfig& train_cfg);

// index,z_0..z_{d-1},label,aligned,p_y_given_z,weight
void WriteLatentCsv(const std::filesystem::path& path,
                    const data::LabeledDataset& ds,
                    const VcaeWeightResult& result);
// index,label,log_p_z_given_y: the unnormalized density diagnostic.
void WriteLogDensityCsv(const std::filesystem::path& path,
                        const data::LabeledDataset& ds,
                        const VcaeParams& params, const Tensor& z);

}  // namespace reweigh::vcae

#endif  // REWEIGH_VCAE_VCAE_H_
