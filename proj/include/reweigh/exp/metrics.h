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

#ifndef REWEIGH_EXP_METRICS_H_
#define REWEIGH_EXP_METRICS_H_

#include <cstdint>
#include <span>

namespace reweigh::experiment {

// One epoch of a debiasing run.
struct MetricsRow {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double test_acc = 0.0;
  double test_acc_ba = 0.0;
  double test_acc_bc = 0.0;
  // Share of loss weight on bias-conflicting samples; NaN when the method
  // has no per-sample weights (TBA) or bias labels are unknown.
  double bc_ratio = 0.0;
  double wall_seconds = 0.0;
};

// E_BC[w] / (E_BC[w] + E_BA[w]) over the training samples. Throws
// InvalidArgument when either subset is empty or the lengths differ.
double DebiasBcRatio(std::span<const double> weights,
                     std::span<const std::uint8_t> aligned);

}  // namespace reweigh::experiment

#endif  // REWEIGH_EXP_METRICS_H_
