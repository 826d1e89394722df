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

#include "reweigh/core/optim.h"

#include <cmath>

#include "reweigh/core/errors.h"

namespace reweigh {

std::string OptimizerKindName(OptimizerKind kind) {
  return kind == OptimizerKind::kSgd ? "sgd" : "adam";
}

OptimizerKind ParseOptimizerKind(const std::string& name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw InvalidArgument("unknown optimizer '" + name + "'");
}

Optimizer::Optimizer(OptimizerConfig config, std::span<const Tensor> params)
    : config_(config) {
  if (!(config_.learning_rate > 0.0)) {
    throw InvalidArgument("optimizer: learning rate must be positive");
  }
  for (const Tensor& p : params) {
    first_.emplace_back(p.rows(), p.cols(), 0.0);
    if (config_.kind == OptimizerKind::kAdam) {
      second_.emplace_back(p.rows(), p.cols(), 0.0);
    }
  }
}

void Optimizer::CheckShapes(std::span<const Tensor> params,
                            std::span<const Tensor> grads) const {
  if (params.size() != first_.size() || grads.size() != first_.size()) {
    throw InvalidArgument("optimizer: parameter count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].SameShape(first_[i]) || !grads[i].SameShape(first_[i])) {
      throw InvalidArgument("optimizer: shape mismatch at parameter " +
                            std::to_string(i));
    }
  }
}

void Optimizer::Step(std::span<Tensor> params, std::span<const Tensor> grads) {
  CheckShapes(params, grads);
  ++step_count_;
  const double lr = config_.learning_rate;
  const double wd = config_.weight_decay;
  if (config_.kind == OptimizerKind::kSgd) {
    const double mu = config_.momentum;
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto p = params[i].data();
      auto g = grads[i].data();
      auto buf = first_[i].data();
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double d = g[j] + wd * p[j];
        buf[j] = mu * buf[j] + d;
        p[j] -= lr * buf[j];
      }
    }
    return;
  }
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double t = static_cast<double>(step_count_);
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    auto g = grads[i].data();
    auto m = first_[i].data();
    auto v = second_[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double d = g[j] + wd * p[j];
      m[j] = b1 * m[j] + (1.0 - b1) * d;
      v[j] = b2 * v[j] + (1.0 - b2) * d * d;
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      p[j] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace reweigh
