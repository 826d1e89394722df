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

#ifndef REWEIGH_DATA_GENERATE_H_
#define REWEIGH_DATA_GENERATE_H_

#include <array>
#include <bitset>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "reweigh/core/tensor.h"
#include "reweigh/data/dataset.h"

namespace reweigh::data {

struct GenConfig {
  DatasetKind kind = DatasetKind::kTwoFactor;
  int num_classes = 10;
  std::size_t num_samples = 1000;
  // Probability that a sample is bias-conflicting (b != y).
  double bc_ratio = 0.01;
  // Noise on the class attribute and on the bias attribute. The bias is
  // lower-noise by default so it is the easier shortcut to learn.
  double sigma_u = 0.5;
  double sigma_b = 0.1;
  std::uint64_t seed = 0;

  // Throws InvalidArgument unless 0 < bc_ratio < 1, num_classes >= 2,
  // num_samples >= 1 and both sigmas are >= 0.
  void Validate() const;
};

// Same recipe with b independent of y and uniform, which is bc_ratio
// (C-1)/C. Used for test sets, where BC samples are then (C-1)/C of the data.
GenConfig UnbiasedCompanion(const GenConfig& cfg, std::size_t num_samples,
                            std::uint64_t seed);

// y ~ U{0..C-1}; b = y with probability 1 - rho, otherwise uniform over the
// other C-1 classes; x = [onehot(y) + N(0, sigma_u^2), onehot(b) + N(0,
// sigma_b^2)] with D = 2C.
LabeledDataset GenerateTwoFactor(const GenConfig& cfg);

constexpr int kGlyphSide = 16;
constexpr int kGlyphPixels = kGlyphSide * kGlyphSide;
constexpr int kPaletteSize = 10;
constexpr std::size_t kGlyphDim = 3 * kGlyphPixels;

// Ten hue-equispaced, fully saturated RGB colors in [0, 1].
const std::array<std::array<double, 3>, kPaletteSize>& Palette();
// Seven-segment digit masks on a 16x16 grid, one per class.
const std::bitset<kGlyphPixels>& GlyphMask(int cls);

// 16x16 RGB images flattened HWC to 768 values in [0, 1]. Background pixels
// are Palette()[b] + N(0, sigma_b^2) and glyph pixels are white +
// N(0, sigma_u^2), both clipped. b is drawn as in GenerateTwoFactor.
LabeledDataset GenerateColoredGlyphs(const GenConfig& cfg);

// Dispatches on cfg.kind.
LabeledDataset Generate(const GenConfig& cfg);

// Empirical p(y | b) from co-occurrence counts.
struct EmpiricalConditional {
  Tensor table;                      // C x C; (y, b); columns sum to 1
  std::vector<std::int64_t> counts;  // C x C row-major, (y, b)
  int num_classes = 0;

  double operator()(int y, int b) const { return table(y, b); }
};

// Throws InvalidArgument if bias labels are missing or some bias value never
// occurs (p(y | b) cannot be conditioned on an empty cell).
EmpiricalConditional EstimatePYGivenB(const LabeledDataset& ds);

// The generator's exact p(y | b): 1 - rho on the diagonal and rho / (C - 1)
// elsewhere. Laid out like EmpiricalConditional::table.
Tensor AnalyticPYGivenB(int num_classes, double bc_ratio);

// Deterministic shuffled partition; the first round(N * fraction) shuffled
// indices form the first part. Throws InvalidArgument if either part would be
// empty or fraction is outside (0, 1).
std::pair<LabeledDataset, LabeledDataset> Split(const LabeledDataset& ds,
                                                double train_fraction,
                                                std::uint64_t seed);

}  // namespace reweigh::data

#endif  // REWEIGH_DATA_GENERATE_H_
