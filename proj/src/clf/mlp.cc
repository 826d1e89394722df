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

#include "reweigh/clf/mlp.h"

#include <cmath>
#include <string>

#include "reweigh/core/errors.h"
#include "reweigh/core/kernels.h"
#include "reweigh/core/rng.h"

namespace reweigh::clf {
namespace {

void CheckSizes(std::span<const std::size_t> sizes) {
  if (sizes.size() < 2) throw InvalidArgument("MLP needs at least 2 layer sizes");
  for (std::size_t s : sizes) {
    if (s == 0) throw InvalidArgument("MLP layer size must be positive");
  }
}

// Affine layer without the tape; optionally followed by ReLU.
Tensor Affine(const Tensor& x, const Tensor& w, const Tensor& b, bool relu) {
  Tensor y = kernels::MatMul(x, w);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    auto row = y.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      row[j] += b[j];
      if (relu && row[j] < 0.0) row[j] = 0.0;
    }
  }
  return y;
}

void CheckInput(const MlpParams& params, std::size_t width) {
  if (width != params.input_dim()) {
    throw InvalidArgument("MLP input has " + std::to_string(width) +
                          " features, first layer expects " +
                          std::to_string(params.input_dim()));
  }
}

}  // namespace

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor& t : tensors) n += t.size();
  return n;
}

void MlpParams::Validate() const {
  CheckSizes(layer_sizes);
  if (tensors.size() != 2 * num_layers()) {
    throw InvalidArgument("MLP: tensor count does not match layer sizes");
  }
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const Tensor& w = weight(l);
    const Tensor& b = bias(l);
    if (w.rows() != layer_sizes[l] || w.cols() != layer_sizes[l + 1] ||
        b.rows() != 1 || b.cols() != layer_sizes[l + 1]) {
      throw InvalidArgument("MLP: layer " + std::to_string(l) +
                            " shape does not chain");
    }
    if (!w.AllFinite() || !b.AllFinite()) {
      throw InvalidArgument("MLP: non-finite parameter in layer " +
                            std::to_string(l));
    }
  }
}

std::vector<std::size_t> LayerSizes(std::size_t input,
                                    std::span<const std::size_t> hidden,
                                    std::size_t output) {
  std::vector<std::size_t> sizes{input};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(output);
  return sizes;
}

MlpParams InitMlp(std::span<const std::size_t> layer_sizes, std::uint64_t seed) {
  CheckSizes(layer_sizes);
  MlpParams p;
  p.layer_sizes.assign(layer_sizes.begin(), layer_sizes.end());
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const std::size_t in = layer_sizes[l], out = layer_sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Tensor w(in, out), b(1, out);
    for (double& v : w.data()) v = bound * (2.0 * rng.Uniform() - 1.0);
    for (double& v : b.data()) v = bound * (2.0 * rng.Uniform() - 1.0);
    p.tensors.push_back(std::move(w));
    p.tensors.push_back(std::move(b));
  }
  return p;
}

MlpParams ZeroMlp(std::span<const std::size_t> layer_sizes) {
  CheckSizes(layer_sizes);
  MlpParams p;
  p.layer_sizes.assign(layer_sizes.begin(), layer_sizes.end());
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    p.tensors.emplace_back(layer_sizes[l], layer_sizes[l + 1], 0.0);
    p.tensors.emplace_back(1, layer_sizes[l + 1], 0.0);
  }
  return p;
}

MlpVars BindMlp(ad::Tape& tape, const MlpParams& params) {
  MlpVars vars;
  vars.tensors.reserve(params.tensors.size());
  for (const Tensor& t : params.tensors) vars.tensors.push_back(tape.Leaf(t));
  return vars;
}

MlpOutput MlpForward(const MlpVars& vars, ad::Var x) {
  const std::size_t layers = vars.tensors.size() / 2;
  if (layers == 0) throw InvalidArgument("MlpForward: no layers bound");
  if (x.cols() != vars.tensors[0].rows()) {
    throw InvalidArgument("MLP input has " + std::to_string(x.cols()) +
                          " features, first layer expects " +
                          std::to_string(vars.tensors[0].rows()));
  }
  ad::Var h = x;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    h = ad::Relu(ad::AddRowVector(ad::MatMul(h, vars.tensors[2 * l]),
                                  vars.tensors[2 * l + 1]));
  }
  ad::Var logits = ad::AddRowVector(ad::MatMul(h, vars.tensors[2 * layers - 2]),
                                    vars.tensors[2 * layers - 1]);
  return {logits, h};
}

std::vector<Tensor> CollectGrads(const ad::Tape& tape, const MlpVars& vars) {
  std::vector<Tensor> grads;
  grads.reserve(vars.tensors.size());
  for (ad::Var v : vars.tensors) grads.push_back(tape.grad(v));
  return grads;
}

Tensor MlpPenultimate(const MlpParams& params, const Tensor& x) {
  CheckInput(params, x.cols());
  Tensor h = x;
  for (std::size_t l = 0; l + 1 < params.num_layers(); ++l) {
    h = Affine(h, params.weight(l), params.bias(l), /*relu=*/true);
  }
  return h;
}

Tensor MlpLogits(const MlpParams& params, const Tensor& x) {
  const std::size_t last = params.num_layers() - 1;
  return Affine(MlpPenultimate(params, x), params.weight(last),
                params.bias(last), /*relu=*/false);
}

}  // namespace reweigh::clf
