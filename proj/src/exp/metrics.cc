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

#include "reweigh/exp/metrics.h"

#include <vector>

#include "reweigh/core/errors.h"
#include "reweigh/core/kernels.h"

namespace reweigh::experiment {

double DebiasBcRatio(std::span<const double> weights,
                     std::span<const std::uint8_t> aligned) {
  if (weights.size() != aligned.size()) {
    throw InvalidArgument("DebiasBcRatio: weights and flags differ in length");
  }
  std::vector<double> ba, bc;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    (aligned[i] ? ba : bc).push_back(weights[i]);
  }
  if (ba.empty() || bc.empty()) {
    throw InvalidArgument("DebiasBcRatio: need both aligned and conflicting samples");
  }
  const double mean_ba =
      kernels::PairwiseSum(ba) / static_cast<double>(ba.size());
  const double mean_bc =
      kernels::PairwiseSum(bc) / static_cast<double>(bc.size());
  return mean_bc / (mean_bc + mean_ba);
}

}  // namespace reweigh::experiment
