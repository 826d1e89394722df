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

#include "reweigh/causal/oracle.h"

#include <algorithm>
#include <cmath>
#include <span>

#include "fmt/format.h"
#include "reweigh/clf/losses.h"
#include "reweigh/core/autodiff.h"
#include "reweigh/core/errors.h"
#include "reweigh/core/rng.h"
#include "reweigh/debias/weights.h"

namespace reweigh::causal {
namespace {

constexpr double kSumTolerance = 1e-12;
constexpr double kInvarianceTolerance = 1e-12;
constexpr double kBoundSlack = 1e-9;

void CheckSize(std::size_t n, const char* what) {
  if (n == 0 || n > kMaxCardinality) {
    throw InvalidArgument(fmt::format("|{}| must be in [1, {}], got {}", what,
                                      kMaxCardinality, n));
  }
}

void CheckSlices(const Table3& t, const char* what) {
  for (std::size_t u = 0; u < t.nu(); ++u) {
    for (std::size_t b = 0; b < t.nb(); ++b) {
      double sum = 0.0;
      for (std::size_t y = 0; y < t.ny(); ++y) {
        const double v = t(u, b, y);
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
          throw InvalidArgument(fmt::format("{}({}|{},{}) = {} out of range",
                                            what, y, u, b, v));
        }
        sum += v;
      }
      if (std::abs(sum - 1.0) > kSumTolerance) {
        throw InvalidArgument(
            fmt::format("{}(.|{},{}) sums to {}", what, u, b, sum));
      }
    }
  }
}

// Draws a point of the probability simplex (flat Dirichlet).
std::vector<double> RandomSimplex(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  double sum = 0.0;
  for (double& x : v) {
    x = -std::log(1.0 - rng.Uniform());
    sum += x;
  }
  for (double& x : v) x /= sum;
  return v;
}

}  // namespace

Table3::Table3(std::size_t nu, std::size_t nb, std::size_t ny, double fill)
    : nu_(nu), nb_(nb), ny_(ny), data_(nu * nb * ny, fill) {}

DiscreteJoint DiscreteJoint::WithLabelEqualsU(Tensor p_ub) {
  DiscreteJoint j;
  const std::size_t nu = p_ub.rows(), nb = p_ub.cols();
  j.p_ub = std::move(p_ub);
  j.p_y_given_ub = Table3(nu, nb, nu);
  for (std::size_t u = 0; u < nu; ++u) {
    for (std::size_t b = 0; b < nb; ++b) j.p_y_given_ub(u, b, u) = 1.0;
  }
  return j;
}

void DiscreteJoint::Validate(bool require_positivity) const {
  CheckSize(nu(), "U");
  CheckSize(nb(), "B");
  CheckSize(ny(), "Y");
  if (p_y_given_ub.nu() != nu() || p_y_given_ub.nb() != nb()) {
    throw InvalidArgument("p(y|u,b) shape disagrees with p(u,b)");
  }
  double sum = 0.0;
  for (double v : p_ub.data()) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidArgument(fmt::format("p(u,b) entry {} is not a probability", v));
    }
    if (require_positivity && v <= 0.0) {
      throw InvalidArgument("positivity violated: some p(u,b) = 0");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw InvalidArgument(fmt::format("p(u,b) sums to {}", sum));
  }
  CheckSlices(p_y_given_ub, "p");
}

void ClassifierTable::Validate() const {
  CheckSize(q.nu(), "U");
  CheckSize(q.nb(), "B");
  CheckSize(q.ny(), "Y");
  CheckSlices(q, "q");
}

double ClassifierTable::BVariation() const {
  double worst = 0.0;
  for (std::size_t u = 0; u < q.nu(); ++u) {
    for (std::size_t y = 0; y < q.ny(); ++y) {
      double lo = q(u, 0, y), hi = lo;
      for (std::size_t b = 1; b < q.nb(); ++b) {
        lo = std::min(lo, q(u, b, y));
        hi = std::max(hi, q(u, b, y));
      }
      worst = std::max(worst, hi - lo);
    }
  }
  return worst;
}

namespace {

void CheckPair(const DiscreteJoint& j, const ClassifierTable& q,
               bool require_positivity) {
  j.Validate(require_positivity);
  q.Validate();
  if (q.q.nu() != j.nu() || q.q.nb() != j.nb() || q.q.ny() != j.ny()) {
    throw InvalidArgument("classifier table shape disagrees with the joint");
  }
}

}  // namespace

std::vector<double> MarginalB(const DiscreteJoint& j) {
  std::vector<double> pb(j.nb(), 0.0);
  for (std::size_t u = 0; u < j.nu(); ++u) {
    for (std::size_t b = 0; b < j.nb(); ++b) pb[b] += j.p_ub(u, b);
  }
  return pb;
}

std::vector<double> MarginalU(const DiscreteJoint& j) {
  std::vector<double> pu(j.nu(), 0.0);
  for (std::size_t u = 0; u < j.nu(); ++u) {
    for (std::size_t b = 0; b < j.nb(); ++b) pu[u] += j.p_ub(u, b);
  }
  return pu;
}

Tensor ConditionalUGivenB(const DiscreteJoint& j) {
  j.Validate(false);
  const std::vector<double> pb = MarginalB(j);
  Tensor out(j.nu(), j.nb());
  for (std::size_t b = 0; b < j.nb(); ++b) {
    if (!(pb[b] > 0.0)) {
      throw InvalidArgument(fmt::format("p(b={}) = 0; p(u|b) is undefined", b));
    }
    for (std::size_t u = 0; u < j.nu(); ++u) out(u, b) = j.p_ub(u, b) / pb[b];
  }
  return out;
}

Tensor InterventionalBackdoor(const DiscreteJoint& j, const ClassifierTable& q) {
  CheckPair(j, q, false);
  const std::vector<double> pb = MarginalB(j);
  Tensor out(j.nu(), j.ny());
  for (std::size_t u = 0; u < j.nu(); ++u) {
    for (std::size_t y = 0; y < j.ny(); ++y) {
      double s = 0.0;
      for (std::size_t b = 0; b < j.nb(); ++b) s += pb[b] * q.q(u, b, y);
      out(u, y) = s;
    }
  }
  return out;
}

Tensor InterventionalIpw(const DiscreteJoint& j, const ClassifierTable& q) {
  CheckPair(j, q, true);
  const Tensor pu_b = ConditionalUGivenB(j);
  Tensor out(j.nu(), j.ny());
  // b outermost: each bias value adds its weighted slice.
  for (std::size_t b = 0; b < j.nb(); ++b) {
    for (std::size_t y = 0; y < j.ny(); ++y) {
      for (std::size_t u = 0; u < j.nu(); ++u) {
        out(u, y) += j.p_ub(u, b) * q.q(u, b, y) / pu_b(u, b);
      }
    }
  }
  return out;
}

double Nill(const DiscreteJoint& j, const ClassifierTable& q) {
  const Tensor p_do = InterventionalBackdoor(j, q);
  double total = 0.0;
  for (std::size_t u = 0; u < j.nu(); ++u) {
    for (std::size_t b = 0; b < j.nb(); ++b) {
      for (std::size_t y = 0; y < j.ny(); ++y) {
        const double mass = j.p_ub(u, b) * j.p_y_given_ub(u, b, y);
        if (mass == 0.0) continue;
        if (!(p_do(u, y) > 0.0)) {
          throw NumericalError(
              fmt::format("p(y={}|do(u={})) = 0; NILL is infinite", y, u));
        }
        total += mass * -std::log(p_do(u, y));
      }
    }
  }
  return total;
}

LwLoss LwLossExact(const DiscreteJoint& j, const ClassifierTable& q) {
  CheckPair(j, q, true);
  const Tensor pu_b = ConditionalUGivenB(j);
  const std::vector<double> pu = MarginalU(j);
  LwLoss out;
  for (std::size_t u = 0; u < j.nu(); ++u) {
    for (std::size_t b = 0; b < j.nb(); ++b) {
      double xent = 0.0;
      for (std::size_t y = 0; y < j.ny(); ++y) {
        const double py = j.p_y_given_ub(u, b, y);
        if (py == 0.0) continue;
        if (!(q.q(u, b, y) > 0.0)) {
          throw NumericalError(fmt::format(
              "q(y={}|u={},b={}) = 0 on a cell with mass; LW loss is infinite",
              y, u, b));
        }
        xent += py * -std::log(q.q(u, b, y));
      }
      const double term = j.p_ub(u, b) * xent / pu_b(u, b);
      out.raw += term;
      out.stabilized += pu[u] * term;
    }
  }
  return out;
}

BoundReport VerifyBound(const DiscreteJoint& j, const ClassifierTable& q) {
  BoundReport r;
  r.nill = Nill(j, q);
  const LwLoss lw = LwLossExact(j, q);
  r.lw = lw.stabilized;
  r.lw_raw = lw.raw;
  r.gap = r.lw - r.nill;
  r.b_variation = q.BVariation();
  r.b_invariant = r.b_variation < kInvarianceTolerance;
  r.holds = r.nill <= r.lw + kBoundSlack &&
            (!r.b_invariant || std::abs(r.gap) < kBoundSlack);
  return r;
}

std::size_t OneHotWidth(const DiscreteJoint& j) { return j.nu() + j.nb(); }

EquivalenceReport VerifyLwWsEquivalence(const DiscreteJoint& j,
                                        const clf::MlpParams& params) {
  j.Validate(true);
  params.Validate();
  const std::size_t width = OneHotWidth(j);
  if (params.layer_sizes.front() != width ||
      params.layer_sizes.back() != j.ny()) {
    throw InvalidArgument(fmt::format(
        "MLP must map {} one-hot inputs to {} classes", width, j.ny()));
  }
  const Tensor pu_b = ConditionalUGivenB(j);
  const std::size_t cells = j.nu() * j.nb();
  const auto one_hot = [&](std::size_t u, std::size_t b) {
    Tensor x(1, width);
    x(0, u) = 1.0;
    x(0, j.nu() + b) = 1.0;
    return x;
  };

  // Loss weighting: one batch holding every (u, b, y) with its exact mass.
  std::vector<double> cell_weight(cells);
  double z = 0.0;
  for (std::size_t u = 0; u < j.nu(); ++u) {
    for (std::size_t b = 0; b < j.nb(); ++b) {
      cell_weight[u * j.nb() + b] = j.p_ub(u, b) / pu_b(u, b);
      z += cell_weight[u * j.nb() + b];
    }
  }
  Tensor xs(cells * j.ny(), width);
  std::vector<int> labels;
  std::vector<double> coef;
  std::size_t row = 0;
  for (std::size_t u = 0; u < j.nu(); ++u) {
    for (std::size_t b = 0; b < j.nb(); ++b) {
      for (std::size_t y = 0; y < j.ny(); ++y) {
        const double py = j.p_y_given_ub(u, b, y);
        if (py == 0.0) continue;
        xs(row, u) = 1.0;
        xs(row, j.nu() + b) = 1.0;
        labels.push_back(static_cast<int>(y));
        coef.push_back(cell_weight[u * j.nb() + b] * py / z);
        ++row;
      }
    }
  }
  std::vector<std::size_t> used(row);
  for (std::size_t i = 0; i < row; ++i) used[i] = i;
  std::vector<Tensor> lw;
  {
    ad::Tape tape;
    const clf::MlpVars vars = clf::BindMlp(tape, params);
    const clf::MlpOutput out =
        clf::MlpForward(vars, tape.Constant(xs.GatherRows(used)));
    const ad::Var loss = ad::Sum(ad::Mul(clf::SoftmaxXent(out.logits, labels),
                                         tape.Constant(Tensor::ColumnVector(coef))));
    tape.Backward(loss);
    lw = clf::CollectGrads(tape, vars);
  }

  // Weighted sampling: cells drawn with the sampler's probabilities, then the
  // per-cell expected gradient.
  const debias::WeightedSampler sampler(cell_weight);
  std::vector<Tensor> ws;
  for (const Tensor& t : params.tensors) ws.emplace_back(t.rows(), t.cols());
  for (std::size_t u = 0; u < j.nu(); ++u) {
    for (std::size_t b = 0; b < j.nb(); ++b) {
      const double pc = sampler.probability(u * j.nb() + b);
      for (std::size_t y = 0; y < j.ny(); ++y) {
        const double py = j.p_y_given_ub(u, b, y);
        if (py == 0.0) continue;
        ad::Tape tape;
        const clf::MlpVars vars = clf::BindMlp(tape, params);
        const clf::MlpOutput out =
            clf::MlpForward(vars, tape.Constant(one_hot(u, b)));
        const int label = static_cast<int>(y);
        tape.Backward(ad::Sum(clf::SoftmaxXent(out.logits, std::span(&label, 1))));
        const std::vector<Tensor> g = clf::CollectGrads(tape, vars);
        for (std::size_t t = 0; t < g.size(); ++t) {
          for (std::size_t k = 0; k < g[t].size(); ++k) {
            ws[t][k] += pc * py * g[t][k];
          }
        }
      }
    }
  }

  EquivalenceReport r;
  r.normalizer = z;
  r.cells = cells;
  double diff = 0.0, norm = 0.0;
  for (std::size_t t = 0; t < ws.size(); ++t) {
    for (std::size_t k = 0; k < ws[t].size(); ++k) {
      diff += (lw[t][k] - ws[t][k]) * (lw[t][k] - ws[t][k]);
      norm += ws[t][k] * ws[t][k];
    }
  }
  r.discrepancy = std::sqrt(diff);
  r.grad_norm = std::sqrt(norm);
  return r;
}

RandomInstance MakeRandomInstance(std::uint64_t seed, bool b_invariant,
                                  std::size_t max_size) {
  if (max_size < 2 || max_size > kMaxCardinality) {
    throw InvalidArgument(fmt::format("max_size must be in [2, {}]", kMaxCardinality));
  }
  Rng rng(seed);
  const std::size_t nu = 2 + rng.UniformInt(max_size - 1);
  const std::size_t nb = 2 + rng.UniformInt(max_size - 1);
  const std::vector<double> flat = RandomSimplex(rng, nu * nb);
  Tensor p_ub(nu, nb);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    // Keep every cell away from zero so 1/p(u|b) stays moderate.
    p_ub[i] = (flat[i] + 1e-3) / (1.0 + 1e-3 * static_cast<double>(flat.size()));
  }
  RandomInstance inst{DiscreteJoint::WithLabelEqualsU(std::move(p_ub)), {}};
  inst.classifier.q = Table3(nu, nb, nu);
  std::vector<double> logits(nu);
  for (std::size_t u = 0; u < nu; ++u) {
    std::vector<double> shared(nu);
    for (double& v : shared) v = rng.Normal();
    for (std::size_t b = 0; b < nb; ++b) {
      for (std::size_t y = 0; y < nu; ++y) {
        logits[y] = b_invariant ? shared[y] : 2.0 * rng.Normal();
      }
      const std::vector<double> p = clf::Softmax(logits);
      for (std::size_t y = 0; y < nu; ++y) inst.classifier.q(u, b, y) = p[y];
    }
  }
  return inst;
}

}  // namespace reweigh::causal
