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

#include <bit>
#include <cmath>

#include "qrelay/protocol.hpp"

namespace qrelay {

std::size_t default_compression(std::size_t n, double qber, std::size_t leakage) {
  // The small slack keeps products like 2 * 0.05 * 1000 from rounding up to 101.
  const double estimate_share = 2.0 * qber * static_cast<double>(n);
  const auto penalty = static_cast<std::size_t>(std::max(0.0, std::ceil(estimate_share - 1e-9)));
  const std::size_t removed = leakage + penalty;
  return removed >= n ? 0 : n - removed;
}

Bits multiply_random_matrix(const Bits& key, std::size_t output_length, std::uint64_t matrix_seed) {
  const auto words = pack_words(key);
  const std::size_t tail = key.size() % 64;
  const std::uint64_t tail_mask = tail == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << tail) - 1;

  Rng rows(matrix_seed);
  Bits out(output_length);
  for (std::size_t r = 0; r < output_length; ++r) {
    std::uint64_t acc = 0;
    for (std::size_t w = 0; w < words.size(); ++w) {
      std::uint64_t mask = rows.next();
      if (w + 1 == words.size()) mask &= tail_mask;
      acc ^= mask & words[w];
    }
    out[r] = static_cast<std::uint8_t>(std::popcount(acc) & 1);
  }
  return out;
}

Bits privacy_amplify(const Bits& key, std::size_t leakage, double qber, const AmplificationParams& params,
                     std::uint64_t matrix_seed) {
  const CompressionRule& rule = params.compression ? params.compression : CompressionRule(default_compression);
  const std::size_t m = std::min(rule(key.size(), qber, leakage), key.size());
  if (m == 0) return {};
  return multiply_random_matrix(key, m, matrix_seed);
}

}  // namespace qrelay
