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

#include "qrelay/quantum.hpp"

#include <string>

#include "qrelay/error.hpp"

namespace qrelay {

std::string_view to_string(Basis b) { return b == Basis::X ? "X" : "Y"; }

std::string_view QubitState::label() const {
  if (basis == Basis::X) return bit ? "-x" : "+x";
  return bit ? "-y" : "+y";
}

NoiseModel NoiseModel::with_flip(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    fail(ErrorCode::MalformedInput, "flip probability must lie in [0, 1], got " + std::to_string(p));
  }
  return NoiseModel{p};
}

QubitState prepare_qubit(Basis basis, std::uint8_t bit) {
  return QubitState{basis, static_cast<std::uint8_t>(bit & 1u)};
}

std::uint8_t measure_qubit(QubitState state, Basis basis, Rng& rng) {
  if (basis == state.basis) return state.bit;
  return rng.bit();
}

QubitState apply_noise(QubitState state, NoiseModel noise, Rng& rng) {
  if (rng.bernoulli(noise.flip_probability)) {
    state.bit ^= 1u;
  }
  return state;
}

InterceptResult intercept_resend(QubitState state, Basis basis, Rng& rng) {
  const std::uint8_t seen = measure_qubit(state, basis, rng);
  return InterceptResult{seen, prepare_qubit(basis, seen)};
}

}  // namespace qrelay
