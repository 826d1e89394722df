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

#ifndef REWEIGH_DEBIAS_PIPELINE_H_
#define REWEIGH_DEBIAS_PIPELINE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "reweigh/clf/losses.h"
#include "reweigh/clf/mlp.h"
#include "reweigh/clf/train.h"
#include "reweigh/data/dataset.h"
#include "reweigh/debias/biased_classifier.h"
#include "reweigh/debias/weights.h"
#include "reweigh/exp/metrics.h"
#include "reweigh/vcae/vcae.h"

namespace reweigh::debias {

// How the debiased classifier consumes the weights.
enum class Method {
  kLw,   // per-sample loss weights
  kAlw,  // loss weights annealed from w_init over t_anneal steps
  kWs,   // batches drawn with replacement proportionally to the weights
  kTba,  // logits shifted by log max(p(y|b), 1/gamma) during training
};

std::string MethodName(Method m);
Method ParseMethod(const std::string& name);

// Throws InvalidArgument for combinations that have no meaning: lff needs the
// parallel LW loop, pgd is a resampling scheme (WS only), TBA needs a p(y|b)
// table (oracle-ub, oracle-yb or biased-confidence).
void ValidateCombination(Provenance scheme, Method method);

struct PipelineConfig {
  Provenance scheme = Provenance::kUniform;
  Method method = Method::kLw;
  // Debiased classifier; also the template for psi (epochs replaced by t_bias).
  clf::TrainConfig train;
  clf::GceConfig gce;
  int t_bias = 10;
  double gamma = 200.0;
  bool rescale = true;  // biased-confidence and vcae weights
  AnnealConfig anneal;
  vcae::VcaeConfig vcae;
  int vcae_epochs = 20;
  double vcae_cap = vcae::kDefaultWeightCap;

  void Validate() const;
};

// Optional precomputed stage-one outputs, e.g. one psi shared by a gamma sweep.
struct PipelineInputs {
  const BiasedClassifierArtifact* artifact = nullptr;
};

struct PipelineResult {
  clf::MlpParams params;
  std::vector<experiment::MetricsRow> history;
  // Frozen weights of the two-stage schemes; for lff the per-sample weights
  // recomputed after the last epoch. Uniform weights for TBA.
  SampleWeights weights;
  std::optional<BiasedClassifierArtifact> artifact;  // when trained here
};

// Initial theta and shuffle seed of the debiased run, exposed so a caller can
// replay the vanilla trajectory.
clf::MlpParams InitTheta(const data::LabeledDataset& train,
                         const PipelineConfig& cfg);
std::uint64_t ThetaShuffleSeed(const PipelineConfig& cfg);

// Stage one (weights, psi or the VCAE) followed by training theta. Each
// MetricsRow holds 1-based epoch, mean batch loss, test accuracies and the
// debiasing BC ratio of the weights in force at the end of the epoch (NaN for
// TBA or when the training set has no bias labels).
PipelineResult RunDebiasPipeline(const data::LabeledDataset& train,
                                 const data::LabeledDataset& test,
                                 const PipelineConfig& cfg,
                                 const PipelineInputs& inputs = {});

}  // namespace reweigh::debias

#endif  // REWEIGH_DEBIAS_PIPELINE_H_
