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

#ifndef REWEIGH_CORE_OPTIM_H_
#define REWEIGH_CORE_OPTIM_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "reweigh/core/tensor.h"

namespace reweigh {

enum class OptimizerKind { kSgd, kAdam };

std::string OptimizerKindName(OptimizerKind kind);
OptimizerKind ParseOptimizerKind(const std::string& name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  // SGD only.
  double momentum = 0.0;
  // L2 penalty added to the gradient (both optimizers).
  double weight_decay = 0.0;
  // Adam only.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Holds per-parameter state (momentum buffers for SGD; first/second moments
// and the step counter for Adam). Buffers are shaped from the parameters on
// construction and every Step checks shapes against them.
class Optimizer {
 public:
  Optimizer(OptimizerConfig config, std::span<const Tensor> params);

  // In-place update. Throws InvalidArgument on a shape mismatch.
  void Step(std::span<Tensor> params, std::span<const Tensor> grads);

  const OptimizerConfig& config() const { return config_; }
  std::int64_t step_count() const { return step_count_; }

 private:
  void CheckShapes(std::span<const Tensor> params,
                   std::span<const Tensor> grads) const;

  OptimizerConfig config_;
  std::int64_t step_count_ = 0;
  std::vector<Tensor> first_;   // SGD momentum buffer or Adam m.
  std::vector<Tensor> second_;  // Adam v.
};

}  // namespace reweigh

#endif  // REWEIGH_CORE_OPTIM_H_
