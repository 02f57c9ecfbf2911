/*
 *    Copyright 2026 The qrelay Authors.
 *
 *    Licensed under the Apache License, Version 2.0 (the "License");
 *    you may not use this file except in compliance with the License.
 *    You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 *    Unless required by applicable law or agreed to in writing, software
 *    distributed under the License is distributed on an "AS IS" BASIS,
 *    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *    See the License for the specific language governing permissions and
 *    limitations under the License.
 */

#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace qrelay {

/// Deterministic generator: xoshiro256** whose 256-bit state is filled from
/// the 64-bit seed by SplitMix64. Child streams are derived from a seed and a
/// label (FNV-1a of the label mixed through SplitMix64), so streams depend
/// only on (seed, label) and never on how much a sibling stream was used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  static Rng derive(std::uint64_t master_seed, std::string_view label);
  static std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label);

  /// Child stream keyed on this generator's seed, not its current position.
  Rng fork(std::string_view label) const { return derive(seed_, label); }

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next();
  /// Uniform in [0, 1) with 53 bits of resolution. One draw.
  double uniform();
  /// One draw.
  std::uint8_t bit();
  /// True with probability p. Exactly one draw, for any p.
  bool bernoulli(double p);
  /// Uniform in [0, n), n > 0. Rejection sampling, so may take several draws.
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_{};
};

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t fnv1a64(std::string_view data);

}  // namespace qrelay
