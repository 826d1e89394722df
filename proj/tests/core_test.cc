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

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "gtest/gtest.h"
#include "reweigh/core/errors.h"
#include "reweigh/core/f64le.h"
#include "reweigh/core/rng.h"
#include "reweigh/core/tensor.h"

namespace reweigh {
namespace {

TEST(Tensor, ShapeAndAccess) {
  Tensor t(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.shape()[0], 2u);
  EXPECT_EQ(t.shape()[1], 3u);
  EXPECT_EQ(t(1, 2), 6);
  EXPECT_EQ(t.row(1)[0], 4);
  EXPECT_THROW(Tensor(2, 2, std::vector<double>{1, 2, 3}), InvalidArgument);
  EXPECT_THROW(t.item(), InvalidArgument);
}

TEST(Tensor, GatherRows) {
  Tensor t(3, 2, std::vector<double>{0, 1, 10, 11, 20, 21});
  const std::vector<std::size_t> idx = {2, 0, 2};
  EXPECT_EQ(t.GatherRows(idx),
            Tensor(3, 2, std::vector<double>{20, 21, 0, 1, 20, 21}));
  const std::vector<std::size_t> bad = {3};
  EXPECT_THROW(t.GatherRows(bad), InvalidArgument);
}

TEST(Tensor, AllFinite) {
  Tensor t(1, 2);
  EXPECT_TRUE(t.AllFinite());
  t[1] = std::nan("");
  EXPECT_FALSE(t.AllFinite());
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(a.NextU64(), b.NextU64());
    EXPECT_EQ(a.Normal(), b.Normal());
  }
}

TEST(Rng, UniformMoments) {
  Rng rng(7);
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.Uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  // Mean 1/2 with sd sqrt(1/12 / n).
  EXPECT_NEAR(sum / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12, 1e-3);
}

TEST(Rng, NormalMoments) {
  Rng rng(8);
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.Normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 4 / std::sqrt(n));
  EXPECT_NEAR(sq / n, 1.0, 4 * std::sqrt(2.0 / n));
}

TEST(Rng, UniformIntCoversRange) {
  Rng rng(9);
  std::vector<int> counts(7);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[rng.UniformInt(7)];
  const double p = 1.0 / 7;
  for (int c : counts) EXPECT_NEAR(c, n * p, 4 * std::sqrt(n * p * (1 - p)));
  EXPECT_THROW(rng.UniformInt(0), InvalidArgument);
}

TEST(Rng, ShuffleIsPermutation) {
  Rng rng(10);
  std::vector<std::size_t> v(100);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
  rng.Shuffle(v);
  std::vector<std::size_t> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(sorted[i], i);
}

TEST(Rng, DerivedStreamsDiffer) {
  EXPECT_NE(DeriveSeed(1, 0), DeriveSeed(1, 1));
  EXPECT_NE(DeriveSeed(1, 0), DeriveSeed(2, 0));
  EXPECT_EQ(DeriveSeed(5, 3), DeriveSeed(5, 3));
}

TEST(Fnv1a64, KnownVectors) {
  EXPECT_EQ(Fnv1a64({}), 0xcbf29ce484222325ULL);
  const std::byte a[] = {std::byte{'a'}};
  EXPECT_EQ(Fnv1a64(a), 0xaf63dc4c8601ec8cULL);
}

TEST(F64Le, RoundTripIsBitExact) {
  const auto path = std::filesystem::path(::testing::TempDir()) / "rt.f64le";
  const std::vector<double> values = {0.0, -0.0, 1.0 / 3, 1e-310, -1e300,
                                      std::nextafter(1.0, 2.0)};
  WriteF64Le(path, values);
  const std::vector<double> back = ReadF64Le(path);
  ASSERT_EQ(back.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back[i]),
              std::bit_cast<std::uint64_t>(values[i]));
  }
  EXPECT_EQ(std::filesystem::file_size(path), values.size() * 8);
}

TEST(F64Le, MissingOrTruncatedFile) {
  const auto dir = std::filesystem::path(::testing::TempDir());
  EXPECT_THROW(ReadF64Le(dir / "does_not_exist.f64le"), IoError);
  const auto path = dir / "odd.f64le";
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("abc", f);
    std::fclose(f);
  }
  EXPECT_THROW(ReadF64Le(path), IoError);
}

}  // namespace
}  // namespace reweigh
