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

#ifndef REWEIGH_CORE_AUTODIFF_H_
#define REWEIGH_CORE_AUTODIFF_H_

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "reweigh/core/tensor.h"

// Tape-based reverse-mode automatic differentiation over rank-2 tensors.
//
// A Tape is rebuilt for every forward pass: each op appends a node holding its
// forward value and a closure that pushes the node's adjoint to its parents.
// Nodes are appended after their parents, so a single reverse sweep over the
// tape visits them in a valid topological order. Values are never mutated
// after being recorded.
namespace reweigh::ad {

enum class OpKind {
  kLeaf,
  kConstant,
  kMatMul,
  kAddRowVector,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddScalar,
  kRelu,
  kExp,
  kLog,
  kSquare,
  kPow,
  kClampMin,
  kSum,
  kRowSum,
  kMean,
  kLogSoftmax,
  kPickColumns,
  kGatherRows,
  kTileCols,
  kSliceCols,
  kGaussianLogDensity,
};

const char* OpName(OpKind kind);

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  Tape& tape() const { return *tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  // Pushes the adjoint of node `self` into its parents' adjoints.
  using BackwardFn = std::function<void(Tape& tape, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Differentiable input (parameters, or anything we want a gradient for).
  Var Leaf(Tensor value);
  // Input that receives no adjoint.
  Var Constant(Tensor value);

  // Runs the reverse sweep from a 1x1 output. Adjoints are reset to zero
  // first, so calling it again recomputes the same gradients.
  // Throws InvalidArgument for a non-scalar output and NumericalError when a
  // non-finite adjoint appears.
  void Backward(Var output);

  const Tensor& value(int id) const { return nodes_[id].value; }
  const Tensor& value(Var v) const { return nodes_[v.id()].value; }
  // Adjoint of a node after Backward (zeros for nodes off the gradient path).
  const Tensor& grad(Var v) const;
  Tensor& mutable_grad(int id) { return nodes_[id].grad; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  OpKind kind(Var v) const { return nodes_[v.id()].kind; }
  std::span<const int> parents(Var v) const { return nodes_[v.id()].parents; }
  std::size_t size() const { return nodes_.size(); }

  // Appends a node. Used by the op implementations; throws NumericalError if
  // `value` is not finite.
  Var Record(OpKind kind, Tensor value, std::vector<int> parents,
             BackwardFn backward);

 private:
  struct Node {
    OpKind kind;
    std::vector<int> parents;
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  bool has_grads_ = false;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

// Ops. All operands must live on the same tape.
Var MatMul(Var a, Var b);
// a (n x m) plus a 1 x m row broadcast over rows.
Var AddRowVector(Var a, Var row);
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Scale(Var a, double factor);
Var AddScalar(Var a, double offset);
Var Neg(Var a);
Var Relu(Var a);
Var Exp(Var a);
Var Log(Var a);
Var Square(Var a);
// a^exponent for strictly positive a.
Var Pow(Var a, double exponent);
// max(a, floor); the adjoint is passed only where a > floor.
Var ClampMin(Var a, double floor);
Var Sum(Var a);
// n x m -> n x 1.
Var RowSum(Var a);
Var Mean(Var a);
Var LogSoftmax(Var logits);
// out[i] = a(i, columns[i]); n x 1.
Var PickColumns(Var a, std::span<const int> columns);
// out[i, :] = table[indices[i], :].
Var GatherRows(Var table, std::span<const int> indices);
// n x 1 -> n x count by repeating the column.
Var TileCols(Var a, std::size_t count);
// Columns [begin, end).
Var SliceCols(Var a, std::size_t begin, std::size_t end);
// out(i, c) = log N(z_i; mean_c, exp(2 log_sigma_c) I) for z (n x d),
// mean (C x d) and an isotropic log_sigma (C x 1).
Var GaussianLogDensity(Var z, Var mean, Var log_sigma);

}  // namespace reweigh::ad

#endif  // REWEIGH_CORE_AUTODIFF_H_
