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

#include "reweigh/vcae/vcae.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fmt/format.h"
#include "reweigh/core/csv.h"
#include "reweigh/core/errors.h"
#include "reweigh/core/kernels.h"
#include "reweigh/core/optim.h"
#include "reweigh/core/rng.h"

namespace reweigh::vcae {
namespace {

constexpr std::uint64_t kInitStream = 41;
constexpr std::uint64_t kShuffleStream = 42;
constexpr std::uint64_t kNoiseStream = 43;

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

Tensor LogPriorRow(std::span<const double> prior) {
  Tensor row(1, prior.size());
  for (std::size_t c = 0; c < prior.size(); ++c) row[c] = std::log(prior[c]);
  return row;
}

void CheckPrior(std::span<const double> prior, std::size_t num_classes) {
  if (prior.size() != num_classes) {
    throw InvalidArgument(fmt::format("class prior has {} entries, expected {}",
                                      prior.size(), num_classes));
  }
  double total = 0;
  for (double p : prior) {
    if (!(p > 0.0)) throw InvalidArgument("class prior entries must be > 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidArgument(fmt::format("class prior sums to {}, not 1", total));
  }
}

}  // namespace

void VcaeConfig::Validate(int num_classes) const {
  if (dim_z == 0) throw InvalidArgument("dim_z must be >= 1");
  if (!(lambda_recon >= 0) || !(lambda_kl >= 0) || !(lambda_ce >= 0)) {
    throw InvalidArgument("VCAE loss coefficients must be >= 0");
  }
  if (num_classes < 2) throw InvalidArgument("VCAE needs at least two classes");
  if (!prior.empty()) CheckPrior(prior, static_cast<std::size_t>(num_classes));
}

std::vector<Tensor> VcaeParams::Flatten() const {
  std::vector<Tensor> out = encoder.tensors;
  out.insert(out.end(), decoder.tensors.begin(), decoder.tensors.end());
  out.push_back(class_means);
  out.push_back(class_log_sigma);
  return out;
}

void VcaeParams::Unflatten(std::span<const Tensor> tensors) {
  const std::size_t ne = encoder.tensors.size();
  const std::size_t nd = decoder.tensors.size();
  if (tensors.size() != ne + nd + 2) {
    throw InvalidArgument("VcaeParams::Unflatten: wrong tensor count");
  }
  std::copy(tensors.begin(), tensors.begin() + ne, encoder.tensors.begin());
  std::copy(tensors.begin() + ne, tensors.begin() + ne + nd,
            decoder.tensors.begin());
  class_means = tensors[ne + nd];
  class_log_sigma = tensors[ne + nd + 1];
}

VcaeParams InitVcae(std::size_t input_dim, int num_classes,
                    const VcaeConfig& cfg, std::uint64_t seed) {
  cfg.Validate(num_classes);
  VcaeParams p;
  p.encoder = clf::InitMlp(clf::LayerSizes(input_dim, cfg.hidden, 2 * cfg.dim_z),
                           DeriveSeed(seed, 1));
  Tensor& w_out = p.encoder.weight(p.encoder.num_layers() - 1);
  Tensor& b_out = p.encoder.bias(p.encoder.num_layers() - 1);
  for (std::size_t r = 0; r < w_out.rows(); ++r) {
    for (std::size_t c = cfg.dim_z; c < 2 * cfg.dim_z; ++c) w_out(r, c) = 0.0;
  }
  for (std::size_t c = cfg.dim_z; c < 2 * cfg.dim_z; ++c) b_out(0, c) = 0.0;
  p.decoder = clf::InitMlp(clf::LayerSizes(cfg.dim_z, cfg.hidden, input_dim),
                           DeriveSeed(seed, 2));
  Rng rng(DeriveSeed(seed, 3));
  p.class_means = Tensor(static_cast<std::size_t>(num_classes), cfg.dim_z);
  for (double& v : p.class_means.data()) v = rng.Normal();
  p.class_log_sigma = Tensor(static_cast<std::size_t>(num_classes), 1, 0.0);
  return p;
}

LatentGaussian Encode(const VcaeParams& params, const Tensor& x) {
  const Tensor h = clf::MlpLogits(params.encoder, x);
  const std::size_t dz = params.dim_z();
  LatentGaussian q{Tensor(x.rows(), dz), Tensor(x.rows(), dz)};
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < dz; ++j) {
      q.mu(i, j) = h(i, j);
      q.log_sigma(i, j) = h(i, dz + j);
    }
  }
  return q;
}

double KlDiagGauss(std::span<const double> mu_q, std::span<const double> sigma_q,
                   std::span<const double> mu_p, std::span<const double> sigma_p) {
  const std::size_t d = mu_q.size();
  if (sigma_q.size() != d || mu_p.size() != d || sigma_p.size() != d) {
    throw InvalidArgument("KlDiagGauss: dimension mismatch");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    if (!(sigma_q[i] > 0) || !(sigma_p[i] > 0)) {
      throw InvalidArgument("KlDiagGauss: sigma must be > 0");
    }
    const double diff = mu_q[i] - mu_p[i];
    kl += std::log(sigma_p[i] / sigma_q[i]) +
          (sigma_q[i] * sigma_q[i] + diff * diff) / (2 * sigma_p[i] * sigma_p[i]) -
          0.5;
  }
  return kl;
}

Tensor LogPZGivenY(const VcaeParams& params, const Tensor& z) {
  const std::size_t dz = params.dim_z();
  if (z.cols() != dz) throw InvalidArgument("LogPZGivenY: z has wrong width");
  const std::size_t classes = params.num_classes();
  Tensor out(z.rows(), classes);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    for (std::size_t c = 0; c < classes; ++c) {
      const double s = params.class_log_sigma(c, 0);
      double sq = 0.0;
      for (std::size_t j = 0; j < dz; ++j) {
        const double d = z(i, j) - params.class_means(c, j);
        sq += d * d;
      }
      out(i, c) = -static_cast<double>(dz) * (kHalfLog2Pi + s) -
                  0.5 * sq * std::exp(-2.0 * s);
    }
  }
  return out;
}

Tensor LogPYGivenZ(const VcaeParams& params, const Tensor& z,
                   std::span<const double> prior) {
  CheckPrior(prior, params.num_classes());
  Tensor joint = LogPZGivenY(params, z);
  for (std::size_t i = 0; i < joint.rows(); ++i) {
    for (std::size_t c = 0; c < joint.cols(); ++c) {
      joint(i, c) += std::log(prior[c]);
    }
  }
  return kernels::LogSoftmaxRows(joint);
}

Tensor PYGivenZ(const VcaeParams& params, const Tensor& z,
                std::span<const double> prior) {
  Tensor p = LogPYGivenZ(params, z, prior);
  for (double& v : p.data()) v = std::exp(v);
  return p;
}

VcaeVars BindVcae(ad::Tape& tape, const VcaeParams& params) {
  return {clf::BindMlp(tape, params.encoder), clf::BindMlp(tape, params.decoder),
          tape.Leaf(params.class_means), tape.Leaf(params.class_log_sigma)};
}

VcaeLossTerms VcaeLoss(const VcaeVars& vars, const Tensor& x,
                       std::span<const int> labels, const Tensor& eps,
                       std::span<const double> prior, const VcaeConfig& cfg) {
  ad::Tape& tape = vars.class_means.tape();
  const std::size_t dz = vars.class_means.cols();
  const std::size_t classes = vars.class_means.rows();
  if (labels.size() != x.rows() || eps.rows() != x.rows() || eps.cols() != dz) {
    throw InvalidArgument("VcaeLoss: batch shapes disagree");
  }
  CheckPrior(prior, classes);
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw InvalidArgument(fmt::format("VcaeLoss: label {} out of range", y));
    }
  }
  const ad::Var xv = tape.Constant(x);
  const ad::Var enc = clf::MlpForward(vars.encoder, xv).logits;
  const ad::Var mu = ad::SliceCols(enc, 0, dz);
  const ad::Var log_sigma = ad::SliceCols(enc, dz, 2 * dz);
  const ad::Var z =
      ad::Add(mu, ad::Mul(ad::Exp(log_sigma), tape.Constant(eps)));

  // Unit-variance Gaussian decoder, additive constants dropped.
  const ad::Var x_hat = clf::MlpForward(vars.decoder, z).logits;
  const ad::Var recon = ad::Scale(ad::RowSum(ad::Square(ad::Sub(x_hat, xv))), 0.5);

  // Closed-form KL against the label's cluster.
  const ad::Var mu_p = ad::GatherRows(vars.class_means, labels);
  const ad::Var s_p =
      ad::TileCols(ad::GatherRows(vars.class_log_sigma, labels), dz);
  const ad::Var ratio =
      ad::Mul(ad::Add(ad::Exp(ad::Scale(log_sigma, 2.0)),
                      ad::Square(ad::Sub(mu, mu_p))),
              ad::Exp(ad::Scale(s_p, -2.0)));
  const ad::Var kl = ad::RowSum(ad::AddScalar(
      ad::Add(ad::Sub(s_p, log_sigma), ad::Scale(ratio, 0.5)), -0.5));

  const ad::Var log_joint = ad::AddRowVector(
      ad::GaussianLogDensity(z, vars.class_means, vars.class_log_sigma),
      tape.Constant(LogPriorRow(prior)));
  const ad::Var ce = ad::Neg(ad::PickColumns(ad::LogSoftmax(log_joint), labels));

  VcaeLossTerms terms;
  terms.recon = ad::Mean(recon);
  terms.kl = ad::Mean(kl);
  terms.ce = ad::Mean(ce);
  terms.total = ad::Mean(ad::Add(
      ad::Add(ad::Scale(recon, cfg.lambda_recon), ad::Scale(kl, cfg.lambda_kl)),
      ad::Scale(ce, cfg.lambda_ce)));
  return terms;
}

std::vector<double> EmpiricalPrior(std::span<const int> labels, int num_classes) {
  if (labels.empty()) throw InvalidArgument("EmpiricalPrior: no labels");
  std::vector<double> counts(static_cast<std::size_t>(num_classes), 0.0);
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw InvalidArgument("label out of range");
    counts[y] += 1.0;
  }
  for (int c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) {
      throw InvalidArgument(fmt::format("class {} has no samples", c));
    }
    counts[c] /= static_cast<double>(labels.size());
  }
  return counts;
}

VcaeWeightResult VcaeWeights(const VcaeParams& params,
                             const data::LabeledDataset& ds,
                             std::span<const double> prior, double cap) {
  if (!(cap > 1.0)) throw InvalidArgument("VCAE weight cap must be > 1");
  VcaeWeightResult r;
  r.z = Encode(params, ds.features).mu;
  const Tensor log_p = LogPYGivenZ(params, r.z, prior);
  r.weights = {std::vector<double>(ds.size()), debias::Provenance::kVcae, cap,
               false};
  r.p_y_given_z.resize(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double lp = log_p(i, ds.labels[i]);
    r.p_y_given_z[i] = std::exp(lp);
    // exp(-lp) rather than 1 / p so an underflowed p still clamps to cap.
    r.weights.weights[i] = std::min(std::exp(-lp), cap);
  }
  return r;
}

VcaeTrainResult TrainVcae(const data::LabeledDataset& ds, const VcaeConfig& cfg,
                          const clf::TrainConfig& train_cfg) {
  train_cfg.Validate();
  cfg.Validate(ds.num_classes);
  if (ds.size() == 0) throw InvalidArgument("TrainVcae: empty dataset");
  VcaeTrainResult result;
  result.prior = cfg.prior.empty() ? EmpiricalPrior(ds.labels, ds.num_classes)
                                   : cfg.prior;
  result.params = InitVcae(ds.dim(), ds.num_classes, cfg,
                           DeriveSeed(train_cfg.seed, kInitStream));
  std::vector<Tensor> flat = result.params.Flatten();
  Optimizer opt(train_cfg.optimizer, flat);
  clf::ShuffleSampler sampler(ds.size(), train_cfg.batch_size, train_cfg.shuffle,
                              DeriveSeed(train_cfg.seed, kShuffleStream));
  const std::uint64_t noise_seed = DeriveSeed(train_cfg.seed, kNoiseStream);
  const std::size_t dz = cfg.dim_z;

  std::int64_t step = 0;
  for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    std::vector<double> losses;
    for (const auto& batch : sampler.EpochBatches(epoch)) {
      Rng rng(DeriveSeed(noise_seed, static_cast<std::uint64_t>(step)));
      Tensor eps(batch.size(), dz);
      for (double& v : eps.data()) v = rng.Normal();
      std::vector<int> labels(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) labels[i] = ds.labels[batch[i]];

      std::vector<Tensor> grads;
      try {
        ad::Tape tape;
        const VcaeVars vars = BindVcae(tape, result.params);
        const VcaeLossTerms terms = VcaeLoss(vars, ds.features.GatherRows(batch),
                                             labels, eps, result.prior, cfg);
        losses.push_back(terms.total.value().item());
        tape.Backward(terms.total);
        grads = clf::CollectGrads(tape, vars.encoder);
        const auto dec = clf::CollectGrads(tape, vars.decoder);
        grads.insert(grads.end(), dec.begin(), dec.end());
        grads.push_back(tape.grad(vars.class_means));
        grads.push_back(tape.grad(vars.class_log_sigma));
      } catch (const NumericalError& e) {
        throw NumericalError(fmt::format("VCAE training aborted at epoch {} step {}: {}",
                                         epoch, step, e.what()));
      }
      opt.Step(flat, grads);
      result.params.Unflatten(flat);
      ++step;
    }
    result.epoch_loss.push_back(kernels::PairwiseSum(losses) /
                                static_cast<double>(losses.size()));
  }
  return result;
}

void WriteLatentCsv(const std::filesystem::path& path,
                    const data::LabeledDataset& ds,
                    const VcaeWeightResult& result) {
  const std::size_t dz = result.z.cols();
  std::vector<std::string> header = {"index"};
  for (std::size_t j = 0; j < dz; ++j) header.push_back(fmt::format("z_{}", j));
  for (const char* h : {"label", "aligned", "p_y_given_z", "weight"}) {
    header.emplace_back(h);
  }
  CsvWriter csv(path, header);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    csv.Add(i);
    for (std::size_t j = 0; j < dz; ++j) csv.Add(result.z(i, j));
    csv.Add(ds.labels[i]);
    csv.Add(ds.has_bias() ? static_cast<int>(ds.aligned[i]) : -1);
    csv.Add(result.p_y_given_z[i]).Add(result.weights.weights[i]);
    csv.EndRow();
  }
  csv.Close();
}

void WriteLogDensityCsv(const std::filesystem::path& path,
                        const data::LabeledDataset& ds,
                        const VcaeParams& params, const Tensor& z) {
  const Tensor log_pz = LogPZGivenY(params, z);
  CsvWriter csv(path, {"index", "label", "log_p_z_given_y"});
  for (std::size_t i = 0; i < ds.size(); ++i) {
    csv.Add(i).Add(ds.labels[i]).Add(log_pz(i, ds.labels[i]));
    csv.EndRow();
  }
  csv.Close();
}

}  // namespace reweigh::vcae
