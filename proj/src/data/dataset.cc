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

#include "reweigh/data/dataset.h"

#include "reweigh/core/errors.h"

namespace reweigh::data {

std::string DatasetKindName(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kTwoFactor: return "two-factor";
    case DatasetKind::kColoredGlyphs: return "colored-glyphs";
    case DatasetKind::kExternal: return "external";
  }
  return "external";
}

DatasetKind ParseDatasetKind(const std::string& name) {
  if (name == "two-factor") return DatasetKind::kTwoFactor;
  if (name == "colored-glyphs") return DatasetKind::kColoredGlyphs;
  if (name == "external") return DatasetKind::kExternal;
  throw InvalidArgument("unknown dataset kind '" + name + "'");
}

void LabeledDataset::Validate() const {
  const std::size_t n = labels.size();
  if (features.rows() != n) {
    throw InvalidArgument("dataset: feature rows != label count");
  }
  if (num_classes < 1) throw InvalidArgument("dataset: num_classes < 1");
  if (!features.AllFinite()) throw InvalidArgument("dataset: non-finite feature");
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw InvalidArgument("dataset: label out of range");
    }
  }
  if (!bias) {
    if (!aligned.empty()) {
      throw InvalidArgument("dataset: alignment flags without bias labels");
    }
    return;
  }
  if (bias->size() != n || aligned.size() != n) {
    throw InvalidArgument("dataset: bias/flag length != label count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const int b = (*bias)[i];
    if (b < 0 || b >= num_classes) {
      throw InvalidArgument("dataset: bias label out of range");
    }
    if ((aligned[i] != 0) != (b == labels[i])) {
      throw InvalidArgument("dataset: aligned flag disagrees with b == y");
    }
  }
}

LabeledDataset LabeledDataset::Subset(
    std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.features = features.GatherRows(indices);
  out.num_classes = num_classes;
  out.kind = kind;
  out.bc_ratio = bc_ratio;
  out.seed = seed;
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels.at(i));
  if (bias) {
    std::vector<int> b;
    b.reserve(indices.size());
    for (std::size_t i : indices) {
      b.push_back((*bias)[i]);
      out.aligned.push_back(aligned[i]);
    }
    out.bias = std::move(b);
  }
  return out;
}

std::vector<std::size_t> LabeledDataset::AlignedIndices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    if (aligned[i]) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> LabeledDataset::ConflictingIndices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    if (!aligned[i]) out.push_back(i);
  }
  return out;
}

void RecomputeAlignment(LabeledDataset& ds) {
  ds.aligned.clear();
  if (!ds.bias) return;
  ds.aligned.resize(ds.labels.size());
  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    ds.aligned[i] = (*ds.bias)[i] == ds.labels[i] ? 1 : 0;
  }
}

}  // namespace reweigh::data
