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

#ifndef REWEIGH_CLF_MLP_H_
#define REWEIGH_CLF_MLP_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "reweigh/core/autodiff.h"
#include "reweigh/core/tensor.h"

namespace reweigh::clf {

// Fully connected ReLU network [D, H..., C]. Parameters are stored flat as
// W0, b0, W1, b1, ... with W_l of shape (in x out) and b_l of shape (1 x out);
// this is also the on-disk order of a checkpoint.
struct MlpParams {
  std::vector<std::size_t> layer_sizes;
  std::vector<Tensor> tensors;

  std::size_t num_layers() const { return layer_sizes.size() - 1; }
  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t output_dim() const { return layer_sizes.back(); }
  Tensor& weight(std::size_t l) { return tensors[2 * l]; }
  const Tensor& weight(std::size_t l) const { return tensors[2 * l]; }
  Tensor& bias(std::size_t l) { return tensors[2 * l + 1]; }
  const Tensor& bias(std::size_t l) const { return tensors[2 * l + 1]; }
  std::size_t parameter_count() const;

  // Throws InvalidArgument if shapes do not chain or a value is not finite.
  void Validate() const;
};

// [input, hidden..., output].
std::vector<std::size_t> LayerSizes(std::size_t input,
                                    std::span<const std::size_t> hidden,
                                    std::size_t output);

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
MlpParams InitMlp(std::span<const std::size_t> layer_sizes, std::uint64_t seed);
MlpParams ZeroMlp(std::span<const std::size_t> layer_sizes);

// Parameters bound as leaves on a tape, in MlpParams::tensors order.
struct MlpVars {
  std::vector<ad::Var> tensors;
};

struct MlpOutput {
  ad::Var logits;
  // Input of the final linear layer (x itself when there are no hidden
  // layers).
  ad::Var penultimate;
};

MlpVars BindMlp(ad::Tape& tape, const MlpParams& params);
// Throws InvalidArgument when x's width differs from the first layer.
MlpOutput MlpForward(const MlpVars& vars, ad::Var x);
std::vector<Tensor> CollectGrads(const ad::Tape& tape, const MlpVars& vars);

// Tape-free inference, through the (possibly parallel) kernels.
Tensor MlpLogits(const MlpParams& params, const Tensor& x);
Tensor MlpPenultimate(const MlpParams& params, const Tensor& x);

}  // namespace reweigh::clf

#endif  // REWEIGH_CLF_MLP_H_
