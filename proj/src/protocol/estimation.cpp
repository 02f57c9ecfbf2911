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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qrelay/error.hpp"
#include "qrelay/protocol.hpp"

namespace qrelay {

QberEstimate estimate_qber(const Bits& key_a, const Bits& key_b, double sample_fraction, Rng& rng) {
  if (key_a.size() != key_b.size()) {
    fail(ErrorCode::MalformedInput, "estimate_qber: key lengths differ");
  }
  if (!(sample_fraction > 0.0 && sample_fraction < 1.0)) {
    fail(ErrorCode::MalformedInput, "estimate_qber: sample fraction must lie in (0, 1)");
  }
  const std::size_t n = key_a.size();
  const auto k = static_cast<std::size_t>(std::floor(static_cast<double>(n) * sample_fraction + 1e-9));
  if (k == 0) {
    fail(ErrorCode::DegenerateInput, "estimate_qber: sample of size 0 from " + std::to_string(n) + " bits");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(order[i], order[i + rng.below(n - i)]);
  }
  order.resize(k);
  std::sort(order.begin(), order.end());

  QberEstimate est;
  est.disclosed = k;
  est.sampled_positions = order;
  est.remaining_a.reserve(n - k);
  est.remaining_b.reserve(n - k);
  std::size_t next_sample = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (next_sample < k && order[next_sample] == i) {
      est.mismatches += (key_a[i] != key_b[i]) ? 1 : 0;
      ++next_sample;
      continue;
    }
    est.remaining_a.push_back(key_a[i]);
    est.remaining_b.push_back(key_b[i]);
  }
  est.qber = static_cast<double>(est.mismatches) / static_cast<double>(k);
  return est;
}

}  // namespace qrelay
