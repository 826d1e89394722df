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

#include "reweigh/core/autodiff.h"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "reweigh/core/errors.h"
#include "reweigh/core/kernels.h"

namespace reweigh::ad {
namespace {

Tape& SameTape(Var a, Var b) {
  if (!a.valid() || !b.valid() || &a.tape() != &b.tape()) {
    throw InvalidArgument("autodiff: operands live on different tapes");
  }
  return a.tape();
}

Tape& TapeOf(Var a) {
  if (!a.valid()) throw InvalidArgument("autodiff: invalid Var");
  return a.tape();
}

void RequireSameShape(Var a, Var b, const char* op) {
  if (!a.value().SameShape(b.value())) {
    throw InvalidArgument(std::string(op) + ": shape mismatch");
  }
}

// grad[id] += scale * delta, elementwise.
void AccumulateScaled(Tape& tape, int id, const Tensor& delta, double scale) {
  if (!tape.requires_grad(id)) return;
  auto g = tape.mutable_grad(id).data();
  const auto d = delta.data();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += scale * d[i];
}

void Accumulate(Tape& tape, int id, const Tensor& delta) {
  AccumulateScaled(tape, id, delta, 1.0);
}

// Elementwise unary op with derivative df(x, y) where y = f(x).
template <typename F, typename DF>
Var Unary(Var a, OpKind kind, F f, DF df) {
  Tape& tape = TapeOf(a);
  const Tensor& x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const int pa = a.id();
  return tape.Record(kind, std::move(y), {pa}, [pa, df](Tape& t, int self) {
    if (!t.requires_grad(pa)) return;
    const Tensor& x = t.value(pa);
    const Tensor& y = t.value(self);
    const Tensor& g = t.mutable_grad(self);
    Tensor& ga = t.mutable_grad(pa);
    for (std::size_t i = 0; i < x.size(); ++i) ga[i] += g[i] * df(x[i], y[i]);
  });
}

}  // namespace

const char* OpName(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kConstant: return "constant";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kAddRowVector: return "add_row_vector";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kAddScalar: return "add_scalar";
    case OpKind::kRelu: return "relu";
    case OpKind::kExp: return "exp";
    case OpKind::kLog: return "log";
    case OpKind::kSquare: return "square";
    case OpKind::kPow: return "pow";
    case OpKind::kClampMin: return "clamp_min";
    case OpKind::kSum: return "sum";
    case OpKind::kRowSum: return "row_sum";
    case OpKind::kMean: return "mean";
    case OpKind::kLogSoftmax: return "log_softmax";
    case OpKind::kPickColumns: return "pick_columns";
    case OpKind::kGatherRows: return "gather_rows";
    case OpKind::kTileCols: return "tile_cols";
    case OpKind::kSliceCols: return "slice_cols";
    case OpKind::kGaussianLogDensity: return "gaussian_log_density";
  }
  return "unknown";
}

Var Tape::Leaf(Tensor value) {
  Var v = Record(OpKind::kLeaf, std::move(value), {}, nullptr);
  nodes_.back().requires_grad = true;
  return v;
}

Var Tape::Constant(Tensor value) {
  return Record(OpKind::kConstant, std::move(value), {}, nullptr);
}

Var Tape::Record(OpKind kind, Tensor value, std::vector<int> parents,
                 BackwardFn backward) {
  if (!value.AllFinite()) {
    throw NumericalError(std::string("autodiff: non-finite value produced by ") +
                         OpName(kind));
  }
  bool needs_grad = false;
  for (int p : parents) needs_grad = needs_grad || nodes_[p].requires_grad;
  Node node{kind, std::move(parents), std::move(value), Tensor(),
            std::move(backward), needs_grad};
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

const Tensor& Tape::grad(Var v) const {
  if (!has_grads_) throw InvalidArgument("Tape::grad before Backward");
  return nodes_[v.id()].grad;
}

void Tape::Backward(Var output) {
  if (output.tape_ != this) throw InvalidArgument("Backward: foreign Var");
  const Tensor& out = nodes_[output.id()].value;
  if (out.rows() != 1 || out.cols() != 1) {
    throw InvalidArgument("Backward: output must be scalar, got " +
                          std::to_string(out.rows()) + "x" +
                          std::to_string(out.cols()));
  }
  for (Node& node : nodes_) {
    node.grad = Tensor(node.value.rows(), node.value.cols(), 0.0);
  }
  has_grads_ = true;
  nodes_[output.id()].grad[0] = 1.0;
  for (int id = output.id(); id >= 0; --id) {
    Node& node = nodes_[id];
    if (!node.requires_grad) continue;
    if (!node.grad.AllFinite()) {
      throw NumericalError(std::string("autodiff: non-finite adjoint at ") +
                           OpName(node.kind) + " node " + std::to_string(id));
    }
    if (node.backward) node.backward(*this, id);
  }
}

Var MatMul(Var a, Var b) {
  Tape& tape = SameTape(a, b);
  if (a.cols() != b.rows()) throw InvalidArgument("MatMul: inner dims differ");
  const int pa = a.id(), pb = b.id();
  return tape.Record(OpKind::kMatMul, kernels::MatMul(a.value(), b.value()),
                     {pa, pb}, [pa, pb](Tape& t, int self) {
                       const Tensor& g = t.mutable_grad(self);
                       if (t.requires_grad(pa)) {
                         Accumulate(t, pa, kernels::MatMulTransB(g, t.value(pb)));
                       }
                       if (t.requires_grad(pb)) {
                         Accumulate(t, pb, kernels::MatMulTransA(t.value(pa), g));
                       }
                     });
}

Var AddRowVector(Var a, Var row) {
  Tape& tape = SameTape(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw InvalidArgument("AddRowVector: row must be 1 x cols(a)");
  }
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += row.value()[j];
  }
  const int pa = a.id(), pr = row.id();
  return tape.Record(OpKind::kAddRowVector, std::move(y), {pa, pr},
                     [pa, pr](Tape& t, int self) {
                       const Tensor& g = t.mutable_grad(self);
                       Accumulate(t, pa, g);
                       if (t.requires_grad(pr)) {
                         Tensor& gr = t.mutable_grad(pr);
                         for (std::size_t i = 0; i < g.rows(); ++i) {
                           for (std::size_t j = 0; j < g.cols(); ++j) {
                             gr[j] += g(i, j);
                           }
                         }
                       }
                     });
}

Var Add(Var a, Var b) {
  Tape& tape = SameTape(a, b);
  RequireSameShape(a, b, "Add");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b.value()[i];
  const int pa = a.id(), pb = b.id();
  return tape.Record(OpKind::kAdd, std::move(y), {pa, pb},
                     [pa, pb](Tape& t, int self) {
                       const Tensor& g = t.mutable_grad(self);
                       Accumulate(t, pa, g);
                       Accumulate(t, pb, g);
                     });
}

Var Sub(Var a, Var b) {
  Tape& tape = SameTape(a, b);
  RequireSameShape(a, b, "Sub");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= b.value()[i];
  const int pa = a.id(), pb = b.id();
  return tape.Record(OpKind::kSub, std::move(y), {pa, pb},
                     [pa, pb](Tape& t, int self) {
                       const Tensor& g = t.mutable_grad(self);
                       Accumulate(t, pa, g);
                       AccumulateScaled(t, pb, g, -1.0);
                     });
}

Var Mul(Var a, Var b) {
  Tape& tape = SameTape(a, b);
  RequireSameShape(a, b, "Mul");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= b.value()[i];
  const int pa = a.id(), pb = b.id();
  return tape.Record(OpKind::kMul, std::move(y), {pa, pb},
                     [pa, pb](Tape& t, int self) {
                       const Tensor& g = t.mutable_grad(self);
                       const Tensor& va = t.value(pa);
                       const Tensor& vb = t.value(pb);
                       if (t.requires_grad(pa)) {
                         Tensor& ga = t.mutable_grad(pa);
                         for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
                       }
                       if (t.requires_grad(pb)) {
                         Tensor& gb = t.mutable_grad(pb);
                         for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
                       }
                     });
}

Var Scale(Var a, double factor) {
  return Unary(
      a, OpKind::kScale, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Var AddScalar(Var a, double offset) {
  return Unary(
      a, OpKind::kAddScalar, [offset](double x) { return x + offset; },
      [](double, double) { return 1.0; });
}

Var Neg(Var a) { return Scale(a, -1.0); }

Var Relu(Var a) {
  return Unary(
      a, OpKind::kRelu, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var Exp(Var a) {
  return Unary(
      a, OpKind::kExp, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Var Log(Var a) {
  return Unary(
      a, OpKind::kLog, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Var Square(Var a) {
  return Unary(
      a, OpKind::kSquare, [](double x) { return x * x; },
      [](double x, double) { return 2.0 * x; });
}

Var Pow(Var a, double exponent) {
  for (double v : a.value().data()) {
    if (!(v > 0.0)) throw InvalidArgument("Pow: base must be positive");
  }
  return Unary(
      a, OpKind::kPow, [exponent](double x) { return std::pow(x, exponent); },
      [exponent](double x, double) {
        return exponent * std::pow(x, exponent - 1.0);
      });
}

Var ClampMin(Var a, double floor) {
  return Unary(
      a, OpKind::kClampMin,
      [floor](double x) { return x > floor ? x : floor; },
      [floor](double x, double) { return x > floor ? 1.0 : 0.0; });
}

Var Sum(Var a) {
  Tape& tape = TapeOf(a);
  const double total = kernels::PairwiseSum(a.value().data());
  const int pa = a.id();
  return tape.Record(OpKind::kSum, Tensor::Scalar(total), {pa},
                     [pa](Tape& t, int self) {
                       if (!t.requires_grad(pa)) return;
                       const double g = t.mutable_grad(self)[0];
                       for (double& v : t.mutable_grad(pa).data()) v += g;
                     });
}

Var RowSum(Var a) {
  Tape& tape = TapeOf(a);
  const Tensor& x = a.value();
  Tensor y(x.rows(), 1);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double acc = 0.0;
    for (double v : x.row(i)) acc += v;
    y[i] = acc;
  }
  const int pa = a.id();
  return tape.Record(OpKind::kRowSum, std::move(y), {pa},
                     [pa](Tape& t, int self) {
                       if (!t.requires_grad(pa)) return;
                       const Tensor& g = t.mutable_grad(self);
                       Tensor& ga = t.mutable_grad(pa);
                       for (std::size_t i = 0; i < ga.rows(); ++i) {
                         for (double& v : ga.row(i)) v += g[i];
                       }
                     });
}

Var Mean(Var a) {
  if (a.value().size() == 0) throw InvalidArgument("Mean: empty tensor");
  return Scale(Sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var LogSoftmax(Var logits) {
  Tape& tape = TapeOf(logits);
  const int pa = logits.id();
  return tape.Record(OpKind::kLogSoftmax,
                     kernels::LogSoftmaxRows(logits.value()), {pa},
                     [pa](Tape& t, int self) {
                       if (!t.requires_grad(pa)) return;
                       const Tensor& g = t.mutable_grad(self);
                       const Tensor& y = t.value(self);
                       Tensor& ga = t.mutable_grad(pa);
                       for (std::size_t i = 0; i < g.rows(); ++i) {
                         double gsum = 0.0;
                         for (double v : g.row(i)) gsum += v;
                         for (std::size_t j = 0; j < g.cols(); ++j) {
                           ga(i, j) += g(i, j) - std::exp(y(i, j)) * gsum;
                         }
                       }
                     });
}

Var PickColumns(Var a, std::span<const int> columns) {
  Tape& tape = TapeOf(a);
  const Tensor& x = a.value();
  if (columns.size() != x.rows()) {
    throw InvalidArgument("PickColumns: one column index per row required");
  }
  Tensor y(x.rows(), 1);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (columns[i] < 0 || static_cast<std::size_t>(columns[i]) >= x.cols()) {
      throw InvalidArgument("PickColumns: column index out of range");
    }
    y[i] = x(i, columns[i]);
  }
  const int pa = a.id();
  return tape.Record(
      OpKind::kPickColumns, std::move(y), {pa},
      [pa, cols = std::vector<int>(columns.begin(), columns.end())](
          Tape& t, int self) {
        if (!t.requires_grad(pa)) return;
        const Tensor& g = t.mutable_grad(self);
        Tensor& ga = t.mutable_grad(pa);
        for (std::size_t i = 0; i < cols.size(); ++i) ga(i, cols[i]) += g[i];
      });
}

Var GatherRows(Var table, std::span<const int> indices) {
  Tape& tape = TapeOf(table);
  const Tensor& x = table.value();
  Tensor y(indices.size(), x.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || static_cast<std::size_t>(indices[i]) >= x.rows()) {
      throw InvalidArgument("GatherRows: index out of range");
    }
    for (std::size_t j = 0; j < x.cols(); ++j) y(i, j) = x(indices[i], j);
  }
  const int pa = table.id();
  return tape.Record(
      OpKind::kGatherRows, std::move(y), {pa},
      [pa, idx = std::vector<int>(indices.begin(), indices.end())](Tape& t,
                                                                   int self) {
        if (!t.requires_grad(pa)) return;
        const Tensor& g = t.mutable_grad(self);
        Tensor& ga = t.mutable_grad(pa);
        for (std::size_t i = 0; i < idx.size(); ++i) {
          for (std::size_t j = 0; j < g.cols(); ++j) ga(idx[i], j) += g(i, j);
        }
      });
}

Var TileCols(Var a, std::size_t count) {
  Tape& tape = TapeOf(a);
  const Tensor& x = a.value();
  if (x.cols() != 1) throw InvalidArgument("TileCols: input must be n x 1");
  Tensor y(x.rows(), count);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < count; ++j) y(i, j) = x[i];
  }
  const int pa = a.id();
  return tape.Record(OpKind::kTileCols, std::move(y), {pa},
                     [pa](Tape& t, int self) {
                       if (!t.requires_grad(pa)) return;
                       const Tensor& g = t.mutable_grad(self);
                       Tensor& ga = t.mutable_grad(pa);
                       for (std::size_t i = 0; i < g.rows(); ++i) {
                         for (double v : g.row(i)) ga[i] += v;
                       }
                     });
}

Var SliceCols(Var a, std::size_t begin, std::size_t end) {
  Tape& tape = TapeOf(a);
  const Tensor& x = a.value();
  if (begin > end || end > x.cols()) {
    throw InvalidArgument("SliceCols: bad column range");
  }
  Tensor y(x.rows(), end - begin);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = begin; j < end; ++j) y(i, j - begin) = x(i, j);
  }
  const int pa = a.id();
  return tape.Record(OpKind::kSliceCols, std::move(y), {pa},
                     [pa, begin](Tape& t, int self) {
                       if (!t.requires_grad(pa)) return;
                       const Tensor& g = t.mutable_grad(self);
                       Tensor& ga = t.mutable_grad(pa);
                       for (std::size_t i = 0; i < g.rows(); ++i) {
                         for (std::size_t j = 0; j < g.cols(); ++j) {
                           ga(i, begin + j) += g(i, j);
                         }
                       }
                     });
}

Var GaussianLogDensity(Var z, Var mean, Var log_sigma) {
  Tape& tape = SameTape(z, mean);
  SameTape(z, log_sigma);
  const Tensor& zv = z.value();
  const Tensor& mv = mean.value();
  const Tensor& sv = log_sigma.value();
  if (mv.cols() != zv.cols() || sv.rows() != mv.rows() || sv.cols() != 1) {
    throw InvalidArgument(
        "GaussianLogDensity: want z n x d, mean C x d, log_sigma C x 1");
  }
  const std::size_t n = zv.rows(), d = zv.cols(), k = mv.rows();
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  Tensor y(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      double sq = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = zv(i, j) - mv(c, j);
        sq += diff * diff;
      }
      const double s = sv[c];
      y(i, c) = -static_cast<double>(d) * (half_log_2pi + s) -
                0.5 * sq * std::exp(-2.0 * s);
    }
  }
  const int pz = z.id(), pm = mean.id(), ps = log_sigma.id();
  return tape.Record(
      OpKind::kGaussianLogDensity, std::move(y), {pz, pm, ps},
      [pz, pm, ps](Tape& t, int self) {
        const Tensor& g = t.mutable_grad(self);
        const Tensor& zv = t.value(pz);
        const Tensor& mv = t.value(pm);
        const Tensor& sv = t.value(ps);
        const bool want_z = t.requires_grad(pz);
        const bool want_m = t.requires_grad(pm);
        const bool want_s = t.requires_grad(ps);
        const std::size_t n = zv.rows(), d = zv.cols(), k = mv.rows();
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t c = 0; c < k; ++c) {
            const double gic = g(i, c);
            if (gic == 0.0) continue;
            const double inv_var = std::exp(-2.0 * sv[c]);
            double sq = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
              const double diff = zv(i, j) - mv(c, j);
              sq += diff * diff;
              if (want_z) t.mutable_grad(pz)(i, j) -= gic * diff * inv_var;
              if (want_m) t.mutable_grad(pm)(c, j) += gic * diff * inv_var;
            }
            if (want_s) {
              t.mutable_grad(ps)[c] +=
                  gic * (-static_cast<double>(d) + sq * inv_var);
            }
          }
        }
      });
}

}  // namespace reweigh::ad
