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

#include <cstdint>
#include <string_view>

#include "qrelay/rng.hpp"

namespace qrelay {

/// Conjugate measurement settings. A qubit prepared in one basis and measured
/// in the other yields a uniformly random outcome.
enum class Basis : std::uint8_t { X = 0, Y = 1 };

constexpr Basis conjugate(Basis b) noexcept { return b == Basis::X ? Basis::Y : Basis::X; }
std::string_view to_string(Basis b);

/// Idealized single-photon state: (X,0)=+x, (X,1)=-x, (Y,0)=+y, (Y,1)=-y.
struct QubitState {
  Basis basis = Basis::X;
  std::uint8_t bit = 0;

  bool operator==(const QubitState&) const = default;
  std::string_view label() const;
};

/// Independent per-hop bit flip inside the preparation basis.
struct NoiseModel {
  double flip_probability = 0.0;

  static NoiseModel with_flip(double p);  // throws on p outside [0, 1]
  bool operator==(const NoiseModel&) const = default;
};

QubitState prepare_qubit(Basis basis, std::uint8_t bit);

/// Deterministic in the preparation basis; otherwise one draw decides.
std::uint8_t measure_qubit(QubitState state, Basis basis, Rng& rng);

/// Always consumes exactly one draw.
QubitState apply_noise(QubitState state, NoiseModel noise, Rng& rng);

struct InterceptResult {
  std::uint8_t bit;
  QubitState resent;

  bool operator==(const InterceptResult&) const = default;
};

/// Measure, then re-prepare what was observed. This is both what a relay
/// does to forward a qubit and what an intercept/resend eavesdropper does.
InterceptResult intercept_resend(QubitState state, Basis basis, Rng& rng);

}  // namespace qrelay
