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

#include "reweigh/exp/oracle_report.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "reweigh/causal/oracle.h"
#include "reweigh/clf/mlp.h"
#include "reweigh/core/errors.h"
#include "reweigh/core/rng.h"

namespace reweigh::experiment {
namespace {

using nlohmann::json;

constexpr std::uint64_t kBoundStream = 61;
constexpr std::uint64_t kIdentityStream = 62;
constexpr std::uint64_t kEquivalenceStream = 63;
constexpr std::uint64_t kMlpStream = 64;

constexpr double kBoundSlack = 1e-9;
constexpr double kIdentityTolerance = 1e-12;
constexpr double kEquivalenceTolerance = 1e-9;

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since)
      .count();
}

}  // namespace

OracleCheckSummary RunOracleChecks(const OracleCheckConfig& cfg, json* report) {
  if (cfg.bound_instances < 1 || cfg.identity_instances < 1 ||
      cfg.equivalence_instances < 1) {
    throw InvalidArgument("oracle check needs at least one instance per block");
  }
  OracleCheckSummary s;
  json bound = json::array(), identity = json::array(), equivalence = json::array();

  auto start = std::chrono::steady_clock::now();
  s.min_slack = std::numeric_limits<double>::infinity();
  s.bound_ok = true;
  for (int k = 0; k < cfg.bound_instances; ++k) {
    const bool invariant = k % 2 == 1;
    const causal::RandomInstance inst = causal::MakeRandomInstance(
        DeriveSeed(DeriveSeed(cfg.seed, kBoundStream), k), invariant);
    const causal::BoundReport r = causal::VerifyBound(inst.joint, inst.classifier);
    s.min_slack = std::min(s.min_slack, r.gap);
    if (r.b_invariant) s.max_invariant_gap = std::max(s.max_invariant_gap, std::abs(r.gap));
    s.bound_ok = s.bound_ok && r.holds && r.b_invariant == invariant;
    bound.push_back({{"instance", k},
                     {"nu", inst.joint.nu()},
                     {"nb", inst.joint.nb()},
                     {"b_invariant", r.b_invariant},
                     {"nill", r.nill},
                     {"lw", r.lw},
                     {"lw_raw", r.lw_raw},
                     {"gap", r.gap},
                     {"holds", r.holds}});
  }
  s.bound_ok = s.bound_ok && s.min_slack >= -kBoundSlack &&
               s.max_invariant_gap < kBoundSlack;
  s.bound_seconds = Seconds(start);

  start = std::chrono::steady_clock::now();
  for (int k = 0; k < cfg.identity_instances; ++k) {
    const causal::RandomInstance inst = causal::MakeRandomInstance(
        DeriveSeed(DeriveSeed(cfg.seed, kIdentityStream), k), k % 2 == 1);
    const Tensor a = causal::InterventionalBackdoor(inst.joint, inst.classifier);
    const Tensor b = causal::InterventionalIpw(inst.joint, inst.classifier);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
    s.max_identity_diff = std::max(s.max_identity_diff, diff);
    identity.push_back({{"instance", k}, {"max_abs_diff", diff}});
  }
  s.identity_ok = s.max_identity_diff <= kIdentityTolerance;
  s.identity_seconds = Seconds(start);

  start = std::chrono::steady_clock::now();
  for (int k = 0; k < cfg.equivalence_instances; ++k) {
    const causal::RandomInstance inst = causal::MakeRandomInstance(
        DeriveSeed(DeriveSeed(cfg.seed, kEquivalenceStream), k), false);
    const std::vector<std::size_t> hidden = {8};
    const clf::MlpParams params = clf::InitMlp(
        clf::LayerSizes(causal::OneHotWidth(inst.joint), hidden, inst.joint.ny()),
        DeriveSeed(DeriveSeed(cfg.seed, kMlpStream), k));
    const causal::EquivalenceReport r =
        causal::VerifyLwWsEquivalence(inst.joint, params);
    s.max_discrepancy = std::max(s.max_discrepancy, r.discrepancy);
    equivalence.push_back({{"instance", k},
                           {"cells", r.cells},
                           {"discrepancy", r.discrepancy},
                           {"grad_norm", r.grad_norm},
                           {"normalizer", r.normalizer}});
  }
  s.equivalence_ok = s.max_discrepancy < kEquivalenceTolerance;
  s.equivalence_seconds = Seconds(start);

  if (report != nullptr) {
    *report = {{"seed", cfg.seed},
               {"summary",
                {{"ok", s.ok()},
                 {"bound_ok", s.bound_ok},
                 {"min_slack", s.min_slack},
                 {"max_invariant_gap", s.max_invariant_gap},
                 {"identity_ok", s.identity_ok},
                 {"max_identity_diff", s.max_identity_diff},
                 {"equivalence_ok", s.equivalence_ok},
                 {"max_discrepancy", s.max_discrepancy}}},
               {"bound", bound},
               {"backdoor_ipw", identity},
               {"lw_ws_equivalence", equivalence}};
  }
  return s;
}

}  // namespace reweigh::experiment
