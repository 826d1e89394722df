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

#ifndef REWEIGH_CORE_RNG_H_
#define REWEIGH_CORE_RNG_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace reweigh {

// Seeded random source. The engine is std::mt19937_64, whose output sequence
// is fixed by the standard; the distributions are implemented here because the
// standard library ones are allowed to differ between implementations, and
// generated datasets must hash identically everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double Uniform();

  // Standard normal (Box-Muller; the second variate is cached).
  double Normal();

  // Uniform integer on [0, n). n must be > 0.
  std::size_t UniformInt(std::size_t n);

  // Fisher-Yates shuffle.
  void Shuffle(std::span<std::size_t> values);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// SplitMix64 finalizer applied to (seed, stream); used to give independent
// components (data, init, batches, noise) their own reproducible stream.
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream);

// 64-bit FNV-1a over raw bytes. Used for golden-file checks.
std::uint64_t Fnv1a64(std::span<const std::byte> bytes);

}  // namespace reweigh

#endif  // REWEIGH_CORE_RNG_H_
