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

#include "reweigh/debias/pipeline.h"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "reweigh/core/autodiff.h"
#include "reweigh/core/errors.h"
#include "reweigh/data/generate.h"

namespace reweigh::debias {
namespace {

struct Data {
  data::LabeledDataset train;
  data::LabeledDataset test;
};

Data TwoFactor(std::size_t n, double rho, std::uint64_t seed, int classes = 10) {
  data::GenConfig g;
  g.num_classes = classes;
  g.num_samples = n;
  g.bc_ratio = rho;
  g.seed = seed;
  return {data::Generate(g),
          data::Generate(data::UnbiasedCompanion(g, 1000, seed + 100))};
}

PipelineConfig Config(Provenance scheme, Method method, int epochs = 3) {
  PipelineConfig c;
  c.scheme = scheme;
  c.method = method;
  c.train.epochs = epochs;
  c.train.hidden = {32};
  c.train.seed = 5;
  c.t_bias = 3;
  return c;
}

TEST(Combination, RejectsMeaninglessPairs) {
  EXPECT_THROW(ValidateCombination(Provenance::kLff, Method::kWs), InvalidArgument);
  EXPECT_THROW(ValidateCombination(Provenance::kLff, Method::kTba), InvalidArgument);
  EXPECT_THROW(ValidateCombination(Provenance::kPgd, Method::kLw), InvalidArgument);
  EXPECT_THROW(ValidateCombination(Provenance::kVcae, Method::kTba), InvalidArgument);
  EXPECT_THROW(ValidateCombination(Provenance::kUniform, Method::kTba), InvalidArgument);
  EXPECT_NO_THROW(ValidateCombination(Provenance::kLff, Method::kLw));
  EXPECT_NO_THROW(ValidateCombination(Provenance::kPgd, Method::kWs));
  EXPECT_NO_THROW(ValidateCombination(Provenance::kBiasedConfidence, Method::kTba));
  EXPECT_NO_THROW(ValidateCombination(Provenance::kOracleYb, Method::kAlw));
}

TEST(Combination, MethodNamesRoundTrip) {
  for (Method m : {Method::kLw, Method::kAlw, Method::kWs, Method::kTba}) {
    EXPECT_EQ(ParseMethod(MethodName(m)), m);
  }
  EXPECT_THROW(ParseMethod("lw"), InvalidArgument);
}

TEST(Pipeline, RejectsBadConfig) {
  const Data d = TwoFactor(200, 0.05, 1);
  PipelineConfig c = Config(Provenance::kBiasedConfidence, Method::kLw);
  c.gamma = 1.0;
  EXPECT_THROW(RunDebiasPipeline(d.train, d.test, c), InvalidArgument);
  c = Config(Provenance::kBiasedConfidence, Method::kLw);
  c.t_bias = 0;
  EXPECT_THROW(RunDebiasPipeline(d.train, d.test, c), InvalidArgument);
  c = Config(Provenance::kUniform, Method::kAlw);
  c.anneal.w_init = 0;
  EXPECT_THROW(RunDebiasPipeline(d.train, d.test, c), InvalidArgument);
}

TEST(Pipeline, EqualWeightsReproduceVanillaTrajectory) {
  const Data d = TwoFactor(500, 0.05, 2);
  const PipelineConfig c = Config(Provenance::kUniform, Method::kLw);
  const PipelineResult lw = RunDebiasPipeline(d.train, d.test, c);

  clf::ShuffleSampler sampler(d.train.size(), c.train.batch_size, true,
                              ThetaShuffleSeed(c));
  const clf::BatchLossFn mean_xent = [&](ad::Tape&, const clf::MlpOutput& out,
                                         const clf::StepContext& ctx) {
    std::vector<int> labels;
    for (std::size_t i : ctx.batch) labels.push_back(d.train.labels[i]);
    return ad::Mean(clf::SoftmaxXent(out.logits, labels));
  };
  const clf::TrainResult vanilla = clf::Train(d.train, InitTheta(d.train, c),
                                              c.train, sampler, mean_xent);
  ASSERT_EQ(lw.history.size(), vanilla.history.size());
  for (std::size_t e = 0; e < lw.history.size(); ++e) {
    EXPECT_EQ(lw.history[e].train_loss, vanilla.history[e].train_loss);
  }
  for (std::size_t t = 0; t < lw.params.tensors.size(); ++t) {
    EXPECT_EQ(lw.params.tensors[t], vanilla.params.tensors[t]);
  }
  EXPECT_EQ(lw.history.front().bc_ratio, 0.5);
}

TEST(Pipeline, HistoryHasOneRowPerEpoch) {
  const Data d = TwoFactor(300, 0.05, 3);
  const PipelineResult r = RunDebiasPipeline(
      d.train, d.test, Config(Provenance::kOracleUb, Method::kLw, 4));
  ASSERT_EQ(r.history.size(), 4u);
  for (std::size_t e = 0; e < 4; ++e) {
    EXPECT_EQ(r.history[e].epoch, static_cast<int>(e) + 1);
    EXPECT_TRUE(std::isfinite(r.history[e].test_acc_bc));
    EXPECT_GE(r.history[e].wall_seconds, 0.0);
  }
}

TEST(Pipeline, OracleUbUsesExactInversePropensity) {
  const Data d = TwoFactor(400, 0.05, 4);
  const PipelineResult r = RunDebiasPipeline(
      d.train, d.test, Config(Provenance::kOracleUb, Method::kLw, 1));
  EXPECT_EQ(r.weights.provenance, Provenance::kOracleUb);
  for (std::size_t i = 0; i < d.train.size(); ++i) {
    const double expected = d.train.aligned[i] ? 1.0 / (1.0 - 0.05) : 9.0 / 0.05;
    EXPECT_NEAR(r.weights.weights[i], expected, 1e-12 * expected);
  }
}

TEST(Pipeline, IdealSeparatorGivesBetaOfGammaOverGammaPlusOne) {
  // rho = 0.5%: psi is confident on BA samples and below 1/gamma on BC ones.
  const Data d = TwoFactor(2000, 0.005, 6);
  const std::size_t n = d.train.size(), c = 10;
  BiasedClassifierArtifact psi;
  psi.params = clf::ZeroMlp(clf::LayerSizes(d.train.dim(), std::vector<std::size_t>{4}, c));
  psi.confidences.assign(n, 1.0);
  psi.probabilities = Tensor(n, c);
  psi.penultimate = Tensor(n, 4);
  for (std::size_t i = 0; i < n; ++i) {
    if (!d.train.aligned[i]) psi.confidences[i] = 1e-3;
    psi.probabilities(i, d.train.labels[i]) = psi.confidences[i];
  }
  psi.t_bias = 1;
  PipelineConfig cfg = Config(Provenance::kBiasedConfidence, Method::kLw, 1);
  const PipelineResult r = RunDebiasPipeline(d.train, d.test, cfg, {&psi});
  EXPECT_NEAR(r.history.back().bc_ratio, 200.0 / 201.0, 1e-12);
  EXPECT_NEAR(200.0 / 201.0, 0.995, 5e-5);
  EXPECT_TRUE(r.weights.rescaled);
  EXPECT_FALSE(r.artifact.has_value());
}

TEST(Pipeline, SharedArtifactMatchesInternalOne) {
  const Data d = TwoFactor(400, 0.05, 7);
  const PipelineConfig cfg = Config(Provenance::kBiasedConfidence, Method::kLw);
  const PipelineResult own = RunDebiasPipeline(d.train, d.test, cfg);
  ASSERT_TRUE(own.artifact.has_value());
  const PipelineResult shared =
      RunDebiasPipeline(d.train, d.test, cfg, {&*own.artifact});
  EXPECT_EQ(own.weights.weights, shared.weights.weights);
  EXPECT_EQ(own.params.tensors[0], shared.params.tensors[0]);
}

TEST(Pipeline, AnnealingWithoutRampEqualsLw) {
  const Data d = TwoFactor(400, 0.05, 8);
  PipelineConfig cfg = Config(Provenance::kOracleUb, Method::kLw);
  const PipelineResult lw = RunDebiasPipeline(d.train, d.test, cfg);
  cfg.method = Method::kAlw;
  cfg.anneal.w_init = 3.0;
  cfg.anneal.t_anneal = 0;
  const PipelineResult alw = RunDebiasPipeline(d.train, d.test, cfg);
  EXPECT_EQ(lw.params.tensors[0], alw.params.tensors[0]);
  EXPECT_EQ(lw.history.back().bc_ratio, alw.history.back().bc_ratio);
}

TEST(Pipeline, AnnealedBetaRisesToTheStaticValue) {
  const Data d = TwoFactor(640, 0.05, 9);
  PipelineConfig cfg = Config(Provenance::kOracleUb, Method::kAlw, 6);
  cfg.train.batch_size = 64;    // 10 steps per epoch
  cfg.anneal.t_anneal = 40;     // ramp ends at the first step of epoch 5
  const PipelineResult r = RunDebiasPipeline(d.train, d.test, cfg);
  for (std::size_t e = 1; e < 4; ++e) {
    EXPECT_GT(r.history[e].bc_ratio, r.history[e - 1].bc_ratio);
  }
  const double beta = experiment::DebiasBcRatio(r.weights.weights, d.train.aligned);
  EXPECT_LT(r.history[3].bc_ratio, beta);  // last step 39 is still ramping
  EXPECT_DOUBLE_EQ(r.history[4].bc_ratio, beta);
  EXPECT_DOUBLE_EQ(r.history[5].bc_ratio, beta);
}

TEST(Pipeline, TbaAcceptsEveryTableSource) {
  const Data d = TwoFactor(400, 0.05, 11);
  for (Provenance p : {Provenance::kOracleUb, Provenance::kOracleYb,
                       Provenance::kBiasedConfidence}) {
    const PipelineResult r =
        RunDebiasPipeline(d.train, d.test, Config(p, Method::kTba, 1));
    EXPECT_TRUE(std::isnan(r.history.back().bc_ratio));
    EXPECT_EQ(r.weights.provenance, Provenance::kUniform);
  }
}

TEST(Pipeline, LffWeightsStayInUnitInterval) {
  const Data d = TwoFactor(500, 0.05, 12);
  const PipelineResult r = RunDebiasPipeline(
      d.train, d.test, Config(Provenance::kLff, Method::kLw, 3));
  EXPECT_EQ(r.weights.provenance, Provenance::kLff);
  for (double w : r.weights.weights) {
    EXPECT_GE(w, 0.0);
    EXPECT_LE(w, 1.0);
  }
}

TEST(Pipeline, PgdAndVcaeSchemesRun) {
  const Data d = TwoFactor(400, 0.05, 13);
  const PipelineResult pgd = RunDebiasPipeline(
      d.train, d.test, Config(Provenance::kPgd, Method::kWs, 2));
  EXPECT_EQ(pgd.weights.provenance, Provenance::kPgd);
  EXPECT_NEAR(std::accumulate(pgd.weights.weights.begin(),
                              pgd.weights.weights.end(), 0.0),
              1.0, 1e-9);
  PipelineConfig vc = Config(Provenance::kVcae, Method::kLw, 2);
  vc.vcae_epochs = 2;
  vc.vcae.hidden = {16};
  const PipelineResult v = RunDebiasPipeline(d.train, d.test, vc);
  EXPECT_EQ(v.weights.provenance, Provenance::kVcae);
  EXPECT_TRUE(v.weights.rescaled);
  EXPECT_NO_THROW(v.weights.Validate());
}

TEST(Pipeline, Deterministic) {
  const Data d = TwoFactor(300, 0.05, 14);
  const PipelineConfig cfg = Config(Provenance::kBiasedConfidence, Method::kWs);
  const PipelineResult a = RunDebiasPipeline(d.train, d.test, cfg);
  const PipelineResult b = RunDebiasPipeline(d.train, d.test, cfg);
  for (std::size_t e = 0; e < a.history.size(); ++e) {
    EXPECT_EQ(a.history[e].train_loss, b.history[e].train_loss);
    EXPECT_EQ(a.history[e].test_acc_bc, b.history[e].test_acc_bc);
  }
}

TEST(Pipeline, DebiasingMethodsCloseTheConflictingGap) {
  // Reduced-size version of the end-to-end trend.
  const Data d = TwoFactor(4000, 0.01, 15);
  const auto bc_acc = [&](Provenance p, Method m) {
    PipelineConfig cfg = Config(p, m, 10);
    cfg.train.hidden = {64, 64};
    return RunDebiasPipeline(d.train, d.test, cfg).history.back().test_acc_bc;
  };
  const double vanilla = bc_acc(Provenance::kUniform, Method::kLw);
  const double lw = bc_acc(Provenance::kOracleUb, Method::kLw);
  const double ws = bc_acc(Provenance::kOracleUb, Method::kWs);
  const double tba = bc_acc(Provenance::kOracleUb, Method::kTba);
  const double lff = bc_acc(Provenance::kLff, Method::kLw);
  std::printf("BC accuracy: vanilla %.3f LW %.3f WS %.3f TBA %.3f LfF %.3f\n",
              vanilla, lw, ws, tba, lff);
  EXPECT_GT(lw, vanilla + 0.2);
  EXPECT_GT(ws, vanilla + 0.1);
  EXPECT_GT(tba, vanilla + 0.1);
  EXPECT_GT(lff, vanilla + 0.05);
}

}  // namespace
}  // namespace reweigh::debias
