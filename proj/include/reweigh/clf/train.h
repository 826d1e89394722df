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

#ifndef REWEIGH_CLF_TRAIN_H_
#define REWEIGH_CLF_TRAIN_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "reweigh/clf/mlp.h"
#include "reweigh/core/autodiff.h"
#include "reweigh/core/optim.h"
#include "reweigh/data/dataset.h"

namespace reweigh::clf {

struct TrainConfig {
  int epochs = 20;
  std::size_t batch_size = 128;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  bool shuffle = true;
  std::vector<std::size_t> hidden = {64, 64};

  void Validate() const;  // epochs >= 1, batch_size >= 1
};

// Where a mini-batch sits in the run.
struct StepContext {
  std::span<const std::size_t> batch;
  std::int64_t step = 0;  // global, 0-based
  int epoch = 0;          // 0-based
};

// Produces the batches of one epoch.
class BatchSampler {
 public:
  virtual ~BatchSampler() = default;
  virtual std::vector<std::vector<std::size_t>> EpochBatches(int epoch) = 0;
};

// Every sample exactly once per epoch, optionally in a fresh shuffled order.
class ShuffleSampler : public BatchSampler {
 public:
  ShuffleSampler(std::size_t num_samples, std::size_t batch_size, bool shuffle,
                 std::uint64_t seed);
  std::vector<std::vector<std::size_t>> EpochBatches(int epoch) override;

 private:
  std::size_t num_samples_;
  std::size_t batch_size_;
  bool shuffle_;
  std::uint64_t seed_;
};

// Builds the scalar batch loss from the forward pass.
using BatchLossFn = std::function<ad::Var(ad::Tape& tape, const MlpOutput& out,
                                          const StepContext& ctx)>;
// Per-sample weights for the batch at a step (written into `out`).
using WeightProvider = std::function<void(std::span<const std::size_t> batch,
                                          std::int64_t step,
                                          std::span<double> out)>;
// Called after every epoch with the current parameters.
using EpochHook = std::function<void(int epoch, const MlpParams& params,
                                     double mean_train_loss)>;

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
};

struct TrainResult {
  MlpParams params;
  std::vector<EpochRecord> history;
};

// Generic mini-batch loop. Deterministic given the sampler and the initial
// parameters. Throws NumericalError (with epoch and step) when the loss or any
// intermediate value is not finite.
TrainResult Train(const data::LabeledDataset& ds, MlpParams init,
                  const TrainConfig& cfg, BatchSampler& sampler,
                  const BatchLossFn& loss, const EpochHook& hook = {});

// Weighted cross-entropy: loss = (1/B) sum_n w_n(t) * xent_n.
TrainResult TrainWeighted(const data::LabeledDataset& ds, MlpParams init,
                          const TrainConfig& cfg, BatchSampler& sampler,
                          const WeightProvider& weights,
                          const EpochHook& hook = {});

// Accuracy on all samples and on the bias-aligned / bias-conflicting subsets
// (NaN for an empty or unknown subset).
struct SubsetAccuracy {
  double overall = 0.0;
  double aligned = 0.0;
  double conflicting = 0.0;
};

std::vector<int> Predict(const MlpParams& params, const Tensor& x);
SubsetAccuracy EvaluateAccuracy(const MlpParams& params,
                                const data::LabeledDataset& ds);
// Mean unclamped cross-entropy over the dataset.
double MeanCrossEntropy(const MlpParams& params, const data::LabeledDataset& ds);
// p(y_n | x_n) for every sample, and the full N x C probability table.
Tensor PredictProba(const MlpParams& params, const Tensor& x);

}  // namespace reweigh::clf

#endif  // REWEIGH_CLF_TRAIN_H_
