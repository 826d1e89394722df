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

#ifndef REWEIGH_TESTS_GRADCHECK_H_
#define REWEIGH_TESTS_GRADCHECK_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "reweigh/core/tensor.h"

namespace reweigh::testing {

using ScalarFn = std::function<double(const std::vector<Tensor>&)>;

// Central differences of f with respect to every entry of every input.
inline std::vector<Tensor> NumericGrad(const ScalarFn& f,
                                       std::vector<Tensor> inputs,
                                       double h = 1e-5) {
  std::vector<Tensor> grads;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    Tensor g(inputs[t].rows(), inputs[t].cols());
    for (std::size_t i = 0; i < inputs[t].size(); ++i) {
      const double saved = inputs[t][i];
      inputs[t][i] = saved + h;
      const double up = f(inputs);
      inputs[t][i] = saved - h;
      const double down = f(inputs);
      inputs[t][i] = saved;
      g[i] = (up - down) / (2 * h);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

// ||a - b|| / max(||a||, ||b||, floor) over all tensors jointly.
inline double RelativeError(const std::vector<Tensor>& a,
                            const std::vector<Tensor>& b,
                            double floor = 1e-8) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (std::size_t i = 0; i < a[t].size(); ++i) {
      diff += (a[t][i] - b[t][i]) * (a[t][i] - b[t][i]);
      na += a[t][i] * a[t][i];
      nb += b[t][i] * b[t][i];
    }
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

}  // namespace reweigh::testing

#endif  // REWEIGH_TESTS_GRADCHECK_H_
