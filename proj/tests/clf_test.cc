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

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "gradcheck.h"
#include "gtest/gtest.h"
#include "reweigh/clf/checkpoint.h"
#include "reweigh/clf/losses.h"
#include "reweigh/clf/mlp.h"
#include "reweigh/clf/train.h"
#include "reweigh/core/errors.h"
#include "reweigh/core/f64le.h"
#include "reweigh/core/rng.h"
#include "reweigh/data/generate.h"

namespace reweigh::clf {
namespace {

using reweigh::testing::NumericGrad;
using reweigh::testing::RelativeError;

Tensor RandomFeatures(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Tensor x(n, d);
  for (double& v : x.data()) v = rng.Normal();
  return x;
}

TEST(Mlp, ZeroWeightsGiveUniformProbabilities) {
  const std::vector<std::size_t> sizes = {5, 8, 4};
  const Tensor p = PredictProba(ZeroMlp(sizes), RandomFeatures(3, 5, 1));
  for (double v : p.data()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Mlp, BatchRowMatchesSingleRow) {
  const std::vector<std::size_t> sizes = {6, 16, 16, 3};
  const MlpParams params = InitMlp(sizes, 2);
  const Tensor x = RandomFeatures(7, 6, 3);
  const Tensor batch = MlpLogits(params, x);
  for (std::size_t i = 0; i < 7; ++i) {
    const std::vector<std::size_t> one = {i};
    const Tensor single = MlpLogits(params, x.GatherRows(one));
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(single(0, c), batch(i, c));
  }
}

TEST(Mlp, TapeAndKernelForwardAgree) {
  const std::vector<std::size_t> sizes = {4, 9, 5};
  const MlpParams params = InitMlp(sizes, 4);
  const Tensor x = RandomFeatures(11, 4, 5);
  ad::Tape tape;
  const MlpOutput out = MlpForward(BindMlp(tape, params), tape.Constant(x));
  EXPECT_EQ(out.logits.value(), MlpLogits(params, x));
  EXPECT_EQ(out.penultimate.value(), MlpPenultimate(params, x));
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  const std::vector<std::size_t> sizes = {5, 7, 6, 3};
  const MlpParams params = InitMlp(sizes, 6);
  const Tensor x = RandomFeatures(8, 5, 7);
  const std::vector<int> y = {0, 1, 2, 0, 1, 2, 2, 1};
  const auto loss = [&](const std::vector<Tensor>& tensors) {
    MlpParams p{params.layer_sizes, tensors};
    ad::Tape tape;
    const MlpVars vars = BindMlp(tape, p);
    const ad::Var l =
        ad::Mean(SoftmaxXent(MlpForward(vars, tape.Constant(x)).logits, y));
    return std::pair<double, std::vector<Tensor>>(
        l.value().item(), [&] {
          tape.Backward(l);
          return CollectGrads(tape, vars);
        }());
  };
  const auto [value, analytic] = loss(params.tensors);
  const auto numeric = NumericGrad(
      [&](const std::vector<Tensor>& t) { return loss(t).first; },
      params.tensors);
  EXPECT_GT(value, 0);
  EXPECT_LT(RelativeError(analytic, numeric), 1e-6);
}

TEST(Mlp, DimensionMismatch) {
  const std::vector<std::size_t> sizes = {5, 3};
  const MlpParams params = InitMlp(sizes, 1);
  ad::Tape tape;
  EXPECT_THROW(MlpForward(BindMlp(tape, params), tape.Constant(Tensor(2, 4))),
               InvalidArgument);
  EXPECT_THROW(MlpLogits(params, Tensor(2, 4)), InvalidArgument);
}

TEST(Mlp, ParameterLayout) {
  const std::vector<std::size_t> hidden = {64, 64};
  const auto sizes = LayerSizes(20, hidden, 10);
  const MlpParams p = InitMlp(sizes, 1);
  EXPECT_EQ(p.num_layers(), 3u);
  EXPECT_EQ(p.parameter_count(), 20u * 64 + 64 + 64 * 64 + 64 + 64 * 10 + 10);
  EXPECT_EQ(p.weight(1).rows(), 64u);
  EXPECT_EQ(p.bias(2).cols(), 10u);
  for (double v : p.weight(0).data()) EXPECT_LE(std::abs(v), 1 / std::sqrt(20.0));
}

TEST(SoftmaxXent, UniformLogits) {
  const std::vector<double> logits(10, 0.3);
  EXPECT_NEAR(SoftmaxXent(logits, 4), std::log(10.0), 1e-15);
}

TEST(SoftmaxXent, ConfidentCorrectClass) {
  std::vector<double> logits(5, 0.0);
  logits[2] = 50;
  EXPECT_LT(SoftmaxXent(logits, 2), 1e-9);
}

TEST(SoftmaxXent, ThreeLogits) {
  const std::vector<double> logits = {1, 2, 3};
  // log(e^1 + e^2 + e^3) - 3 = log(1 + e^-1 + e^-2).
  EXPECT_NEAR(SoftmaxXent(logits, 2), 0.40760596444438, 1e-12);
  EXPECT_NEAR(SoftmaxXent(logits, 2), 0.407606, 5e-7);
}

TEST(SoftmaxXent, TapeMatchesScalar) {
  const Tensor logits = RandomFeatures(6, 4, 9);
  const std::vector<int> y = {3, 0, 1, 2, 2, 0};
  ad::Tape tape;
  const ad::Var l = SoftmaxXent(tape.Constant(logits), y);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_NEAR(l.value()(i, 0), SoftmaxXent(logits.row(i), y[i]), 1e-14);
  }
}

TEST(SoftmaxXent, OutOfRangeLabel) {
  const std::vector<double> logits = {0, 0};
  EXPECT_THROW(SoftmaxXent(logits, 2), InvalidArgument);
  EXPECT_THROW(SoftmaxXent(logits, -1), InvalidArgument);
  ad::Tape tape;
  const std::vector<int> y = {5};
  EXPECT_THROW(SoftmaxXent(tape.Constant(Tensor(1, 3)), y), InvalidArgument);
}

TEST(Softmax, SumsToOne) {
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> logits(1 + rng.UniformInt(12));
    for (double& v : logits) v = 20 * rng.Normal();
    double total = 0;
    for (double p : Softmax(logits)) total += p;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Gce, Examples) {
  for (double tau : {0.1, 0.5, 0.7, 1.0}) EXPECT_EQ(Gce(1.0, tau), 0.0);
  EXPECT_DOUBLE_EQ(Gce(0.5, 1.0), 0.5);
  // (1 - sqrt(1/2)) / (1/2) = 2 - sqrt(2).
  EXPECT_NEAR(Gce(0.5, 0.5), 2 - std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(Gce(0.5, 0.5), 0.585786, 5e-7);
}

TEST(Gce, TendsToCrossEntropy) {
  for (int k = 1; k <= 9; ++k) {
    const double p = 0.1 * k;
    EXPECT_NEAR(Gce(p, 1e-6), -std::log(p), 1e-4) << "p=" << p;
  }
}

TEST(Gce, GradientMatchesFiniteDifferences) {
  for (double tau : {0.2, 0.7, 1.0}) {
    for (double p : {0.05, 0.3, 0.9}) {
      const double h = 1e-5;
      const double fd = (Gce(p + h, tau) - Gce(p - h, tau)) / (2 * h);
      const double g = GceGradient(p, tau);
      EXPECT_LT(std::abs(fd - g) / std::abs(g), 1e-6);
    }
  }
}

TEST(Gce, TapeGradientMatchesFiniteDifferences) {
  const Tensor logits = RandomFeatures(5, 4, 12);
  const std::vector<int> y = {0, 3, 1, 1, 2};
  const auto build = [&](ad::Tape& tape, const Tensor& z) {
    const ad::Var v = tape.Leaf(z);
    return std::pair(v, ad::Mean(GceLoss(v, y, 0.7)));
  };
  ad::Tape tape;
  const auto [leaf, out] = build(tape, logits);
  tape.Backward(out);
  const auto numeric = NumericGrad(
      [&](const std::vector<Tensor>& z) {
        ad::Tape t;
        return build(t, z[0]).second.value().item();
      },
      {logits});
  EXPECT_LT(RelativeError({tape.grad(leaf)}, numeric), 1e-6);
  // Forward values agree with the scalar form.
  ad::Tape t2;
  const ad::Var per = GceLoss(t2.Constant(logits), y, 0.7);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(per.value()(i, 0), Gce(Softmax(logits.row(i))[y[i]], 0.7), 1e-14);
  }
}

TEST(Gce, RejectsBadTau) {
  EXPECT_THROW(Gce(0.5, 0.0), InvalidArgument);
  EXPECT_THROW(Gce(0.5, 1.5), InvalidArgument);
  EXPECT_THROW(GceConfig{-1}.Validate(), InvalidArgument);
}

TEST(WeightedMean, Examples) {
  const std::vector<double> losses = {3, 5};
  EXPECT_EQ(WeightedMean(losses, std::vector<double>{1, 1}), 4);
  EXPECT_EQ(WeightedMean(losses, std::vector<double>{2, 0}), 3);
  const std::vector<double> ones = {1, 1};
  EXPECT_NEAR(WeightedMean(ones, std::vector<double>{10, 0.05}), 5.025, 1e-15);
  EXPECT_THROW(WeightedMean(ones, std::vector<double>{1, -1}), InvalidArgument);
  EXPECT_THROW(WeightedMean(ones, std::vector<double>{1}), InvalidArgument);
}

TEST(WeightedMean, TapeMatchesScalar) {
  ad::Tape tape;
  const std::vector<double> losses = {0.5, 1.5, 2.0};
  const std::vector<double> w = {0.05, 10, 1};
  const ad::Var l = WeightedMeanLoss(tape.Constant(Tensor::ColumnVector(losses)), w);
  EXPECT_EQ(l.value().item(), WeightedMean(losses, w));
  const std::vector<double> neg = {1, -0.1, 1};
  EXPECT_THROW(WeightedMeanLoss(tape.Constant(Tensor::ColumnVector(losses)), neg),
               InvalidArgument);
}

// Two well-separated Gaussian blobs.
data::LabeledDataset Separable(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  data::LabeledDataset ds;
  ds.features = Tensor(n, 2);
  ds.labels.resize(n);
  ds.num_classes = 2;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    ds.labels[i] = y;
    ds.features(i, 0) = (y ? 2.0 : -2.0) + 0.3 * rng.Normal();
    ds.features(i, 1) = rng.Normal();
  }
  return ds;
}

TEST(Train, SoftmaxRegressionSeparatesBlobs) {
  const data::LabeledDataset ds = Separable(200, 1);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 32;
  cfg.optimizer.learning_rate = 1e-2;
  const std::vector<std::size_t> sizes = {2, 2};
  ShuffleSampler sampler(ds.size(), cfg.batch_size, true, 3);
  const TrainResult r = TrainWeighted(
      ds, InitMlp(sizes, 2), cfg, sampler,
      [](std::span<const std::size_t>, std::int64_t, std::span<double> w) {
        std::fill(w.begin(), w.end(), 1.0);
      });
  EXPECT_EQ(EvaluateAccuracy(r.params, ds).overall, 1.0);
  ASSERT_EQ(r.history.size(), 200u);
  EXPECT_LT(r.history.back().train_loss, r.history.front().train_loss);
}

std::vector<Tensor> WeightedGrads(const MlpParams& params,
                                  const data::LabeledDataset& ds, double w) {
  ad::Tape tape;
  const MlpVars vars = BindMlp(tape, params);
  const std::vector<double> weights(ds.size(), w);
  const ad::Var l = WeightedMeanLoss(
      SoftmaxXent(MlpForward(vars, tape.Constant(ds.features)).logits, ds.labels),
      weights);
  tape.Backward(l);
  return CollectGrads(tape, vars);
}

TEST(Train, ConstantWeightScalesGradient) {
  const data::LabeledDataset ds = Separable(16, 4);
  const std::vector<std::size_t> sizes = {2, 8, 2};
  const MlpParams params = InitMlp(sizes, 5);
  const auto g1 = WeightedGrads(params, ds, 1.0);
  const auto g3 = WeightedGrads(params, ds, 3.0);
  for (std::size_t t = 0; t < g1.size(); ++t) {
    for (std::size_t i = 0; i < g1[t].size(); ++i) {
      EXPECT_NEAR(g3[t][i], 3 * g1[t][i], 1e-12 * std::max(1.0, std::abs(g1[t][i])));
    }
  }
}

TEST(Train, ConstantWeightEqualsLearningRateRescale) {
  // Plain SGD: weight c with rate lr takes the same step as weight 1 with
  // rate c * lr. c is a power of two so both paths round identically.
  const data::LabeledDataset ds = Separable(16, 6);
  const std::vector<std::size_t> sizes = {2, 8, 2};
  const auto step = [&](double weight, double lr) {
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 16;
    cfg.optimizer.kind = OptimizerKind::kSgd;
    cfg.optimizer.learning_rate = lr;
    ShuffleSampler sampler(ds.size(), 16, false, 0);
    return TrainWeighted(
               ds, InitMlp(sizes, 7), cfg, sampler,
               [weight](std::span<const std::size_t>, std::int64_t,
                        std::span<double> w) {
                 std::fill(w.begin(), w.end(), weight);
               })
        .params;
  };
  EXPECT_EQ(step(4.0, 0.05).tensors, step(1.0, 0.2).tensors);
}

TEST(Train, DeterministicTrajectories) {
  const data::LabeledDataset ds = Separable(100, 8);
  const std::vector<std::size_t> sizes = {2, 16, 2};
  const auto run = [&] {
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 10;
    ShuffleSampler sampler(ds.size(), 10, true, 9);
    std::vector<MlpParams> trajectory;
    TrainWeighted(
        ds, InitMlp(sizes, 10), cfg, sampler,
        [](std::span<const std::size_t>, std::int64_t, std::span<double> w) {
          std::fill(w.begin(), w.end(), 1.0);
        },
        [&](int, const MlpParams& p, double) { trajectory.push_back(p); });
    return trajectory;
  };
  const auto a = run(), b = run();
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t e = 0; e < a.size(); ++e) EXPECT_EQ(a[e].tensors, b[e].tensors);
}

TEST(Train, NonFiniteLossAbortsWithLocation) {
  const data::LabeledDataset ds = Separable(20, 1);
  const std::vector<std::size_t> sizes = {2, 2};
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 5;
  ShuffleSampler sampler(ds.size(), 5, false, 0);
  const BatchLossFn loss = [](ad::Tape&, const MlpOutput& out,
                              const StepContext& ctx) {
    ad::Var l = ad::Mean(out.logits);
    return ctx.step == 5 ? ad::Scale(ad::Exp(ad::AddScalar(l, 800)), 1) : l;
  };
  try {
    Train(ds, InitMlp(sizes, 1), cfg, sampler, loss);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1 step 5"), std::string::npos)
        << e.what();
  }
}

TEST(Train, ShuffleSamplerCoversEveryIndexOnce) {
  ShuffleSampler sampler(103, 10, true, 5);
  for (int epoch = 0; epoch < 3; ++epoch) {
    const auto batches = sampler.EpochBatches(epoch);
    EXPECT_EQ(batches.size(), 11u);
    std::vector<int> seen(103);
    for (const auto& b : batches) {
      for (std::size_t i : b) ++seen[i];
    }
    for (int s : seen) EXPECT_EQ(s, 1);
  }
  EXPECT_NE(sampler.EpochBatches(0), sampler.EpochBatches(1));
}

TEST(Train, RejectsBadConfig) {
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(cfg.Validate(), InvalidArgument);
  cfg.epochs = 1;
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.Validate(), InvalidArgument);
}

TEST(Train, VanillaLearnsTheShortcut) {
  // Bias features are far less noisy than class features, so plain training
  // leans on the bias and does worse on bias-conflicting test samples.
  data::GenConfig gen;
  gen.num_samples = 5000;
  gen.bc_ratio = 0.01;
  gen.sigma_u = 1.0;
  gen.sigma_b = 0.1;
  gen.seed = 21;
  const data::LabeledDataset train = data::Generate(gen);
  const data::LabeledDataset test =
      data::Generate(data::UnbiasedCompanion(gen, 2000, 22));
  TrainConfig cfg;
  cfg.epochs = 5;
  ShuffleSampler sampler(train.size(), cfg.batch_size, true, 23);
  const auto sizes = LayerSizes(train.dim(), cfg.hidden, 10);
  const TrainResult r = TrainWeighted(
      train, InitMlp(sizes, 24), cfg, sampler,
      [](std::span<const std::size_t>, std::int64_t, std::span<double> w) {
        std::fill(w.begin(), w.end(), 1.0);
      });
  const SubsetAccuracy acc = EvaluateAccuracy(r.params, test);
  EXPECT_LT(acc.conflicting + 0.2, acc.aligned)
      << "BA " << acc.aligned << " BC " << acc.conflicting;
}

TEST(Evaluate, SubsetsAndCrossEntropy) {
  data::LabeledDataset ds;
  ds.features = Tensor(4, 2, std::vector<double>{1, 0, 0, 1, 1, 0, 0, 1});
  ds.labels = {0, 1, 1, 1};
  ds.bias = std::vector<int>{0, 1, 0, 0};
  ds.num_classes = 2;
  data::RecomputeAlignment(ds);
  // Identity logits: predicts argmax of the features.
  MlpParams p{{2, 2}, {Tensor(2, 2, std::vector<double>{1, 0, 0, 1}), Tensor(1, 2)}};
  const SubsetAccuracy acc = EvaluateAccuracy(p, ds);
  EXPECT_DOUBLE_EQ(acc.overall, 0.75);
  EXPECT_DOUBLE_EQ(acc.aligned, 1.0);
  EXPECT_DOUBLE_EQ(acc.conflicting, 0.5);
  const double right = std::log(1 + std::exp(-1.0));
  const double wrong = std::log(1 + std::exp(1.0));
  EXPECT_NEAR(MeanCrossEntropy(p, ds), (3 * right + wrong) / 4, 1e-15);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto dir = std::filesystem::path(::testing::TempDir()) / "ckpt";
  const std::vector<std::size_t> sizes = {7, 5, 3, 2};
  Checkpoint ckpt{InitMlp(sizes, 3), {}};
  ckpt.optimizer.kind = OptimizerKind::kSgd;
  ckpt.optimizer.momentum = 0.9;
  SaveCheckpoint(ckpt, dir);
  const Checkpoint back = LoadCheckpoint(dir);
  EXPECT_EQ(back.params.layer_sizes, ckpt.params.layer_sizes);
  EXPECT_EQ(back.params.tensors, ckpt.params.tensors);
  EXPECT_EQ(back.optimizer.kind, OptimizerKind::kSgd);
  EXPECT_EQ(back.optimizer.momentum, 0.9);
  EXPECT_EQ(std::filesystem::file_size(dir / "params.f64le"),
            8 * ckpt.params.parameter_count());
}

TEST(Checkpoint, SizeMismatchIsAnError) {
  const auto dir = std::filesystem::path(::testing::TempDir()) / "ckpt_bad";
  const std::vector<std::size_t> sizes = {3, 2};
  SaveCheckpoint({InitMlp(sizes, 1), {}}, dir);
  WriteF64Le(dir / "params.f64le", std::vector<double>(5, 0.0));
  EXPECT_THROW(LoadCheckpoint(dir), IoError);
}

}  // namespace
}  // namespace reweigh::clf
