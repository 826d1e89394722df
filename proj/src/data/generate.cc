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

#include "reweigh/data/generate.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "reweigh/core/errors.h"
#include "reweigh/core/rng.h"

namespace reweigh::data {
namespace {

// Stream ids for DeriveSeed.
constexpr std::uint64_t kGenerateStream = 1;
constexpr std::uint64_t kSplitStream = 2;

// Draws (y, b) for one sample.
std::pair<int, int> DrawLabels(Rng& rng, int num_classes, double bc_ratio) {
  const int y = static_cast<int>(rng.UniformInt(num_classes));
  int b = y;
  if (rng.Uniform() < bc_ratio) {
    b = static_cast<int>(rng.UniformInt(num_classes - 1));
    if (b >= y) ++b;
  }
  return {y, b};
}

LabeledDataset Skeleton(const GenConfig& cfg, std::size_t dim) {
  LabeledDataset ds;
  ds.features = Tensor(cfg.num_samples, dim);
  ds.labels.resize(cfg.num_samples);
  ds.bias = std::vector<int>(cfg.num_samples);
  ds.aligned.resize(cfg.num_samples);
  ds.num_classes = cfg.num_classes;
  ds.kind = cfg.kind;
  ds.bc_ratio = cfg.bc_ratio;
  ds.seed = cfg.seed;
  return ds;
}

std::array<double, 3> HueToRgb(double hue_degrees) {
  // HSV with S = V = 1.
  const double h = hue_degrees / 60.0;
  const double x = 1.0 - std::abs(std::fmod(h, 2.0) - 1.0);
  switch (static_cast<int>(h) % 6) {
    case 0: return {1.0, x, 0.0};
    case 1: return {x, 1.0, 0.0};
    case 2: return {0.0, 1.0, x};
    case 3: return {0.0, x, 1.0};
    case 4: return {x, 0.0, 1.0};
    default: return {1.0, 0.0, x};
  }
}

struct Segment {
  int row0, row1, col0, col1;  // inclusive
};

// a, b, c, d, e, f, g of a seven-segment display.
constexpr std::array<Segment, 7> kSegments = {{
    {1, 2, 4, 11},    // a: top
    {1, 7, 10, 11},   // b: upper right
    {8, 14, 10, 11},  // c: lower right
    {13, 14, 4, 11},  // d: bottom
    {8, 14, 4, 5},    // e: lower left
    {1, 7, 4, 5},     // f: upper left
    {7, 8, 4, 11},    // g: middle
}};

constexpr std::array<const char*, 10> kDigitSegments = {
    "abcdef", "bc", "abdeg", "abcdg", "bcfg",
    "acdfg",  "acdefg", "abc", "abcdefg", "abcdfg"};

std::array<std::bitset<kGlyphPixels>, 10> BuildMasks() {
  std::array<std::bitset<kGlyphPixels>, 10> masks;
  for (int digit = 0; digit < 10; ++digit) {
    for (const char* s = kDigitSegments[digit]; *s; ++s) {
      const Segment& seg = kSegments[*s - 'a'];
      for (int r = seg.row0; r <= seg.row1; ++r) {
        for (int c = seg.col0; c <= seg.col1; ++c) {
          masks[digit].set(r * kGlyphSide + c);
        }
      }
    }
  }
  return masks;
}

}  // namespace

void GenConfig::Validate() const {
  if (!(bc_ratio > 0.0 && bc_ratio < 1.0)) {
    throw InvalidArgument("bc_ratio must lie in (0, 1), got " +
                          std::to_string(bc_ratio));
  }
  if (num_classes < 2) throw InvalidArgument("num_classes must be >= 2");
  if (num_samples < 1) throw InvalidArgument("num_samples must be >= 1");
  if (!(sigma_u >= 0.0) || !(sigma_b >= 0.0)) {
    throw InvalidArgument("noise standard deviations must be >= 0");
  }
}

GenConfig UnbiasedCompanion(const GenConfig& cfg, std::size_t num_samples,
                            std::uint64_t seed) {
  GenConfig out = cfg;
  out.num_samples = num_samples;
  out.seed = seed;
  out.bc_ratio = static_cast<double>(cfg.num_classes - 1) / cfg.num_classes;
  return out;
}

LabeledDataset GenerateTwoFactor(const GenConfig& cfg) {
  cfg.Validate();
  const int c = cfg.num_classes;
  LabeledDataset ds = Skeleton(cfg, 2 * static_cast<std::size_t>(c));
  ds.kind = DatasetKind::kTwoFactor;
  Rng rng(DeriveSeed(cfg.seed, kGenerateStream));
  for (std::size_t n = 0; n < cfg.num_samples; ++n) {
    const auto [y, b] = DrawLabels(rng, c, cfg.bc_ratio);
    ds.labels[n] = y;
    (*ds.bias)[n] = b;
    ds.aligned[n] = y == b ? 1 : 0;
    auto row = ds.features.row(n);
    for (int k = 0; k < c; ++k) {
      row[k] = (k == y ? 1.0 : 0.0) + cfg.sigma_u * rng.Normal();
    }
    for (int k = 0; k < c; ++k) {
      row[c + k] = (k == b ? 1.0 : 0.0) + cfg.sigma_b * rng.Normal();
    }
  }
  return ds;
}

const std::array<std::array<double, 3>, kPaletteSize>& Palette() {
  static const auto palette = [] {
    std::array<std::array<double, 3>, kPaletteSize> p;
    for (int k = 0; k < kPaletteSize; ++k) p[k] = HueToRgb(36.0 * k);
    return p;
  }();
  return palette;
}

const std::bitset<kGlyphPixels>& GlyphMask(int cls) {
  static const auto masks = BuildMasks();
  if (cls < 0 || cls >= 10) throw InvalidArgument("GlyphMask: class out of range");
  return masks[cls];
}

LabeledDataset GenerateColoredGlyphs(const GenConfig& cfg) {
  cfg.Validate();
  if (cfg.num_classes > kPaletteSize) {
    throw InvalidArgument("colored glyphs support at most 10 classes");
  }
  LabeledDataset ds = Skeleton(cfg, kGlyphDim);
  ds.kind = DatasetKind::kColoredGlyphs;
  Rng rng(DeriveSeed(cfg.seed, kGenerateStream));
  const auto clip = [](double v) { return std::clamp(v, 0.0, 1.0); };
  for (std::size_t n = 0; n < cfg.num_samples; ++n) {
    const auto [y, b] = DrawLabels(rng, cfg.num_classes, cfg.bc_ratio);
    ds.labels[n] = y;
    (*ds.bias)[n] = b;
    ds.aligned[n] = y == b ? 1 : 0;
    const auto& mask = GlyphMask(y);
    const auto& color = Palette()[b];
    auto row = ds.features.row(n);
    for (int p = 0; p < kGlyphPixels; ++p) {
      for (int ch = 0; ch < 3; ++ch) {
        row[3 * p + ch] = mask.test(p)
                              ? clip(1.0 + cfg.sigma_u * rng.Normal())
                              : clip(color[ch] + cfg.sigma_b * rng.Normal());
      }
    }
  }
  return ds;
}

LabeledDataset Generate(const GenConfig& cfg) {
  switch (cfg.kind) {
    case DatasetKind::kTwoFactor: return GenerateTwoFactor(cfg);
    case DatasetKind::kColoredGlyphs: return GenerateColoredGlyphs(cfg);
    case DatasetKind::kExternal: break;
  }
  throw InvalidArgument("Generate: external datasets are loaded, not generated");
}

EmpiricalConditional EstimatePYGivenB(const LabeledDataset& ds) {
  if (!ds.bias) throw InvalidArgument("p(y|b) estimation needs bias labels");
  const int c = ds.num_classes;
  EmpiricalConditional out;
  out.num_classes = c;
  out.counts.assign(static_cast<std::size_t>(c) * c, 0);
  std::vector<std::int64_t> per_bias(c, 0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int y = ds.labels[i], b = (*ds.bias)[i];
    ++out.counts[static_cast<std::size_t>(y) * c + b];
    ++per_bias[b];
  }
  out.table = Tensor(c, c);
  for (int b = 0; b < c; ++b) {
    if (per_bias[b] == 0) {
      throw InvalidArgument("p(y|b): bias value " + std::to_string(b) +
                            " never occurs; cannot condition on it");
    }
    for (int y = 0; y < c; ++y) {
      out.table(y, b) =
          static_cast<double>(out.counts[static_cast<std::size_t>(y) * c + b]) /
          static_cast<double>(per_bias[b]);
    }
  }
  return out;
}

Tensor AnalyticPYGivenB(int num_classes, double bc_ratio) {
  if (num_classes < 2) throw InvalidArgument("AnalyticPYGivenB: C < 2");
  Tensor t(num_classes, num_classes, bc_ratio / (num_classes - 1));
  for (int k = 0; k < num_classes; ++k) t(k, k) = 1.0 - bc_ratio;
  return t;
}

std::pair<LabeledDataset, LabeledDataset> Split(const LabeledDataset& ds,
                                                double train_fraction,
                                                std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("Split: fraction must lie in (0, 1)");
  }
  const std::size_t n = ds.size();
  const auto first =
      static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  if (first == 0 || first == n) {
    throw InvalidArgument("Split: fraction leaves one part empty");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(DeriveSeed(seed, kSplitStream));
  rng.Shuffle(order);
  const std::span<const std::size_t> all(order);
  return {ds.Subset(all.first(first)), ds.Subset(all.subspan(first))};
}

}  // namespace reweigh::data
