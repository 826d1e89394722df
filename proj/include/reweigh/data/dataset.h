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

#ifndef REWEIGH_DATA_DATASET_H_
#define REWEIGH_DATA_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reweigh/core/tensor.h"

namespace reweigh::data {

enum class DatasetKind { kTwoFactor, kColoredGlyphs, kExternal };

std::string DatasetKindName(DatasetKind kind);
DatasetKind ParseDatasetKind(const std::string& name);

// Features with class labels y, optional bias labels b and bias-alignment
// flags. For generated data the class attribute u is identified with y.
struct LabeledDataset {
  Tensor features;                        // N x D
  std::vector<int> labels;                // y in [0, C)
  std::optional<std::vector<int>> bias;   // b in [0, C)
  std::vector<std::uint8_t> aligned;      // 1 iff b == y; empty without b
  int num_classes = 0;

  // Generation provenance, carried through Subset/Split.
  DatasetKind kind = DatasetKind::kExternal;
  double bc_ratio = 0.0;  // 0 when unknown
  std::uint64_t seed = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }
  bool has_bias() const { return bias.has_value(); }

  // Throws InvalidArgument when an invariant is broken: lengths differ,
  // a label is out of range, a feature is not finite, or a flag disagrees
  // with (b == y).
  void Validate() const;

  LabeledDataset Subset(std::span<const std::size_t> indices) const;
  std::vector<std::size_t> AlignedIndices() const;
  std::vector<std::size_t> ConflictingIndices() const;
};

// Sets `aligned` from labels and bias (clears it when bias is absent).
void RecomputeAlignment(LabeledDataset& ds);

}  // namespace reweigh::data

#endif  // REWEIGH_DATA_DATASET_H_
