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

#include "reweigh/clf/train.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "reweigh/clf/losses.h"
#include "reweigh/core/errors.h"
#include "reweigh/core/kernels.h"
#include "reweigh/core/rng.h"

namespace reweigh::clf {
namespace {

constexpr std::uint64_t kShuffleStream = 11;

}  // namespace

void TrainConfig::Validate() const {
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
}

ShuffleSampler::ShuffleSampler(std::size_t num_samples, std::size_t batch_size,
                               bool shuffle, std::uint64_t seed)
    : num_samples_(num_samples),
      batch_size_(batch_size),
      shuffle_(shuffle),
      seed_(seed) {
  if (batch_size_ == 0) throw InvalidArgument("batch size must be >= 1");
}

std::vector<std::vector<std::size_t>> ShuffleSampler::EpochBatches(int epoch) {
  std::vector<std::size_t> order(num_samples_);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle_) {
    Rng rng(DeriveSeed(DeriveSeed(seed_, kShuffleStream),
                       static_cast<std::uint64_t>(epoch)));
    rng.Shuffle(order);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < num_samples_; start += batch_size_) {
    const std::size_t end = std::min(num_samples_, start + batch_size_);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

TrainResult Train(const data::LabeledDataset& ds, MlpParams init,
                  const TrainConfig& cfg, BatchSampler& sampler,
                  const BatchLossFn& loss, const EpochHook& hook) {
  cfg.Validate();
  init.Validate();
  if (ds.size() == 0) throw InvalidArgument("Train: empty dataset");
  TrainResult result{std::move(init), {}};
  Optimizer opt(cfg.optimizer, result.params.tensors);
  std::int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<double> batch_losses;
    for (const auto& batch : sampler.EpochBatches(epoch)) {
      StepContext ctx{batch, step, epoch};
      std::vector<Tensor> grads;
      try {
        ad::Tape tape;
        MlpVars vars = BindMlp(tape, result.params);
        ad::Var x = tape.Constant(ds.features.GatherRows(batch));
        ad::Var l = loss(tape, MlpForward(vars, x), ctx);
        batch_losses.push_back(l.value().item());
        tape.Backward(l);
        grads = CollectGrads(tape, vars);
      } catch (const NumericalError& e) {
        throw NumericalError("training aborted at epoch " +
                             std::to_string(epoch) + " step " +
                             std::to_string(step) + ": " + e.what());
      }
      opt.Step(result.params.tensors, grads);
      ++step;
    }
    const double mean_loss = kernels::PairwiseSum(batch_losses) /
                             static_cast<double>(batch_losses.size());
    result.history.push_back({epoch, mean_loss});
    if (hook) hook(epoch, result.params, mean_loss);
  }
  return result;
}

TrainResult TrainWeighted(const data::LabeledDataset& ds, MlpParams init,
                          const TrainConfig& cfg, BatchSampler& sampler,
                          const WeightProvider& weights,
                          const EpochHook& hook) {
  BatchLossFn fn = [&](ad::Tape&, const MlpOutput& out, const StepContext& ctx) {
    std::vector<int> labels(ctx.batch.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      labels[i] = ds.labels[ctx.batch[i]];
    }
    std::vector<double> w(ctx.batch.size());
    weights(ctx.batch, ctx.step, w);
    return WeightedMeanLoss(SoftmaxXent(out.logits, labels), w);
  };
  return Train(ds, std::move(init), cfg, sampler, fn, hook);
}

Tensor PredictProba(const MlpParams& params, const Tensor& x) {
  Tensor logp = kernels::LogSoftmaxRows(MlpLogits(params, x));
  for (double& v : logp.data()) v = std::exp(v);
  return logp;
}

std::vector<int> Predict(const MlpParams& params, const Tensor& x) {
  const Tensor logits = MlpLogits(params, x);
  std::vector<int> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) -
                              row.begin());
  }
  return out;
}

SubsetAccuracy EvaluateAccuracy(const MlpParams& params,
                                const data::LabeledDataset& ds) {
  const std::vector<int> pred = Predict(params, ds.features);
  std::size_t hit = 0, hit_ba = 0, n_ba = 0, hit_bc = 0, n_bc = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool ok = pred[i] == ds.labels[i];
    hit += ok;
    if (ds.has_bias()) {
      if (ds.aligned[i]) {
        ++n_ba;
        hit_ba += ok;
      } else {
        ++n_bc;
        hit_bc += ok;
      }
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto ratio = [nan](std::size_t a, std::size_t b) {
    return b == 0 ? nan : static_cast<double>(a) / static_cast<double>(b);
  };
  return {ratio(hit, pred.size()), ratio(hit_ba, n_ba), ratio(hit_bc, n_bc)};
}

double MeanCrossEntropy(const MlpParams& params, const data::LabeledDataset& ds) {
  const Tensor logp = kernels::LogSoftmaxRows(MlpLogits(params, ds.features));
  std::vector<double> losses(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) losses[i] = -logp(i, ds.labels[i]);
  return kernels::PairwiseSum(losses) / static_cast<double>(ds.size());
}

}  // namespace reweigh::clf
