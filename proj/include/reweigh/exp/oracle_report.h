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

#ifndef REWEIGH_EXP_ORACLE_REPORT_H_
#define REWEIGH_EXP_ORACLE_REPORT_H_

#include <cstdint>

#include "json.hpp"

namespace reweigh::experiment {

struct OracleCheckConfig {
  std::uint64_t seed = 0;
  int bound_instances = 100;        // every other one has a b-invariant q
  int identity_instances = 100;     // backdoor vs inverse-propensity order
  int equivalence_instances = 50;   // LW vs WS expected gradients
};

struct OracleCheckSummary {
  bool bound_ok = false;
  double min_slack = 0.0;           // min of L_LW - L_NILL
  double max_invariant_gap = 0.0;   // max |gap| over b-invariant q
  bool identity_ok = false;
  double max_identity_diff = 0.0;
  bool equivalence_ok = false;
  double max_discrepancy = 0.0;
  // Wall-clock seconds per block; not written to the report.
  double bound_seconds = 0.0;
  double identity_seconds = 0.0;
  double equivalence_seconds = 0.0;

  bool ok() const { return bound_ok && identity_ok && equivalence_ok; }
};

// Runs every enumeration check. `report` receives a deterministic JSON
// document with one entry per instance and the summary block.
OracleCheckSummary RunOracleChecks(const OracleCheckConfig& cfg,
                                   nlohmann::json* report = nullptr);

}  // namespace reweigh::experiment

#endif  // REWEIGH_EXP_ORACLE_REPORT_H_
