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

#ifndef REWEIGH_CAUSAL_ORACLE_H_
#define REWEIGH_CAUSAL_ORACLE_H_

// Exact enumeration over small discrete (u, b, y) models: backdoor
// adjustment, the interventional log-likelihood and its loss-weighting upper
// bound, and the expected-gradient equivalence of loss weighting and weighted
// sampling.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "reweigh/clf/mlp.h"
#include "reweigh/core/tensor.h"

namespace reweigh::causal {

// Largest |U|, |B| or |Y| accepted; enumeration stays trivial.
inline constexpr std::size_t kMaxCardinality = 8;

// Dense |U| x |B| x |Y| table.
class Table3 {
 public:
  Table3() = default;
  Table3(std::size_t nu, std::size_t nb, std::size_t ny, double fill = 0.0);

  double& operator()(std::size_t u, std::size_t b, std::size_t y) {
    return data_[(u * nb_ + b) * ny_ + y];
  }
  double operator()(std::size_t u, std::size_t b, std::size_t y) const {
    return data_[(u * nb_ + b) * ny_ + y];
  }
  std::size_t nu() const { return nu_; }
  std::size_t nb() const { return nb_; }
  std::size_t ny() const { return ny_; }

 private:
  std::size_t nu_ = 0, nb_ = 0, ny_ = 0;
  std::vector<double> data_;
};

struct DiscreteJoint {
  Tensor p_ub;          // |U| x |B|, sums to 1
  Table3 p_y_given_ub;  // every (u, b) slice sums to 1

  // y = u with probability one (|Y| = |U|).
  static DiscreteJoint WithLabelEqualsU(Tensor p_ub);

  std::size_t nu() const { return p_ub.rows(); }
  std::size_t nb() const { return p_ub.cols(); }
  std::size_t ny() const { return p_y_given_ub.ny(); }

  // Throws InvalidArgument on a broken invariant. With require_positivity,
  // every p(u, b) must be > 0 so p(u|b) can be inverted.
  void Validate(bool require_positivity) const;
};

// q(y | u, b); every slice sums to 1. Zero entries are allowed; losses that
// need their logarithm throw NumericalError.
struct ClassifierTable {
  Table3 q;
  void Validate() const;
  // Largest |q(y|u,b) - q(y|u,b')| over all u, y, b, b'.
  double BVariation() const;
};

// p(b) and p(u) marginals.
std::vector<double> MarginalB(const DiscreteJoint& j);
std::vector<double> MarginalU(const DiscreteJoint& j);

// p(u|b) = p(u,b) / p(b). Throws InvalidArgument when some p(b) = 0.
Tensor ConditionalUGivenB(const DiscreteJoint& j);

// p(y | do(u)) as a |U| x |Y| table, by the adjustment formula
// sum_b p(b) q(y|u,b).
Tensor InterventionalBackdoor(const DiscreteJoint& j, const ClassifierTable& q);
// Same quantity in inverse-propensity form, sum_b p(u,b) q(y|u,b) / p(u|b),
// accumulated in a different order. Throws InvalidArgument without
// positivity.
Tensor InterventionalIpw(const DiscreteJoint& j, const ClassifierTable& q);

// E_{p(u,b,y)}[-log p_q(y | do(u))]. Throws NumericalError when a needed
// interventional probability is zero.
double Nill(const DiscreteJoint& j, const ClassifierTable& q);

// Exact loss-weighted cross-entropy E_{p(u,b,y)}[w(u,b) (-log q(y|u,b))].
// `stabilized` uses w = p(u) / p(u|b); `raw` uses w = 1 / p(u|b).
struct LwLoss {
  double stabilized = 0.0;
  double raw = 0.0;
};
// Throws InvalidArgument without positivity.
LwLoss LwLossExact(const DiscreteJoint& j, const ClassifierTable& q);

struct BoundReport {
  double nill = 0.0;
  double lw = 0.0;      // stabilized
  double lw_raw = 0.0;
  double gap = 0.0;     // lw - nill
  double b_variation = 0.0;
  bool b_invariant = false;  // b_variation < 1e-12
  bool holds = false;        // nill <= lw + 1e-9, and |gap| < 1e-9 if invariant
};
BoundReport VerifyBound(const DiscreteJoint& j, const ClassifierTable& q);

// Expected gradient of the MLP cross-entropy, one one-hot input [e_u, e_b]
// per cell. lw is sum_{u,b,y} p(u,b) p(y|u,b) w(u,b) grad / z with
// w = 1/p(u|b) and z = E_p[w]; ws is the same expectation under the
// distribution a weighted sampler draws cells from, computed cell by cell.
struct EquivalenceReport {
  double discrepancy = 0.0;  // || lw - ws ||_2 over all parameters
  double grad_norm = 0.0;    // || ws ||_2
  double normalizer = 0.0;   // z
  std::size_t cells = 0;
};
EquivalenceReport VerifyLwWsEquivalence(const DiscreteJoint& j,
                                        const clf::MlpParams& params);
// Input layer width the equivalence check expects: |U| + |B|.
std::size_t OneHotWidth(const DiscreteJoint& j);

// Random positive instance with sizes in [2, max_size] and y = u. The
// classifier is b-invariant when requested, otherwise strongly b-dependent.
struct RandomInstance {
  DiscreteJoint joint;
  ClassifierTable classifier;
};
RandomInstance MakeRandomInstance(std::uint64_t seed, bool b_invariant,
                                  std::size_t max_size = kMaxCardinality);

}  // namespace reweigh::causal

#endif  // REWEIGH_CAUSAL_ORACLE_H_
