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

#ifndef REWEIGH_CLF_CHECKPOINT_H_
#define REWEIGH_CLF_CHECKPOINT_H_

#include <filesystem>

#include "reweigh/clf/mlp.h"
#include "reweigh/core/optim.h"

namespace reweigh::clf {

struct Checkpoint {
  MlpParams params;
  OptimizerConfig optimizer;
};

// Writes <dir>/model.json and <dir>/params.f64le. The parameter file is the
// concatenation of MlpParams::tensors in order (W0, b0, W1, b1, ...), each
// row-major. Throws IoError.
void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);
Checkpoint LoadCheckpoint(const std::filesystem::path& dir);

}  // namespace reweigh::clf

#endif  // REWEIGH_CLF_CHECKPOINT_H_
