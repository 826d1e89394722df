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

#ifndef REWEIGH_DATA_DATASET_IO_H_
#define REWEIGH_DATA_DATASET_IO_H_

#include <filesystem>

#include "reweigh/data/dataset.h"

namespace reweigh::data {

// A dataset directory holds `meta.json` (shape, class count, bc_ratio, seed,
// kind and column roles) and `data.f64le`: little-endian doubles laid out as
// the N x D features row-major, then N labels, then N bias labels and N
// alignment flags (0.0 / 1.0) when bias labels are present. Round trips are
// bit-exact.
void SaveDataset(const LabeledDataset& ds, const std::filesystem::path& dir);
LabeledDataset LoadDataset(const std::filesystem::path& dir);

}  // namespace reweigh::data

#endif  // REWEIGH_DATA_DATASET_IO_H_
