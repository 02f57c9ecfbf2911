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

#include <cmath>
#include <set>

#include "qrelay/auth.hpp"
#include "qrelay/error.hpp"

namespace qrelay {

RefreshAccounting refresh_pools(std::uint64_t session_id, std::span<const SessionKey> keys,
                                const NodePair& endpoints, PoolRegistry& pools, double final_key_reserve,
                                bool divert_endpoint_key) {
  if (!(final_key_reserve >= 0.0 && final_key_reserve <= 1.0)) {
    fail(ErrorCode::MalformedInput, "final_key_reserve must lie in [0, 1]");
  }
  RefreshAccounting acc;
  const bool endpoint_pool = pools.has(endpoints.first, endpoints.second);
  acc.effective_reserve = divert_endpoint_key ? 1.0 : (endpoint_pool ? final_key_reserve : 0.0);

  for (const auto& key : keys) {
    PoolRefresh entry;
    entry.pair = key.pair;
    entry.pair_key_bits = key.bits.size();
    entry.relay_pair = !(key.pair == endpoints);
    if (entry.relay_pair) {
      pools.append(key.pair, key.bits, session_id);
      entry.pool_growth = key.bits.size();
    } else {
      const auto reserved = divert_endpoint_key
                                ? key.bits.size()
                                : static_cast<std::size_t>(std::floor(acc.effective_reserve *
                                                                          static_cast<double>(key.bits.size()) +
                                                                      1e-9));
      const auto split = key.bits.begin() + static_cast<std::ptrdiff_t>(reserved);
      if (reserved > 0) pools.append(key.pair, std::span(key.bits.begin(), split), session_id);
      acc.secret_key.assign(split, key.bits.end());
      entry.pool_growth = reserved;
      entry.secret_output = acc.secret_key.size();
    }
    acc.entries.push_back(entry);
  }
  return acc;
}

bool RateReport::relay_pools_sustainable() const {
  for (const auto& p : pools) {
    if (!p.endpoint_pair && p.flag != RateFlag::Sustainable) return false;
  }
  return true;
}

const PoolRate* RateReport::find(const NodePair& pair) const {
  for (const auto& p : pools) {
    if (p.pair == pair) return &p;
  }
  return nullptr;
}

RateReport check_rate_compatibility(const std::map<NodePair, std::size_t>& consumption,
                                    const std::map<NodePair, std::size_t>& generation,
                                    const NodePair& endpoints) {
  std::set<NodePair> all;
  for (const auto& [p, _] : consumption) all.insert(p);
  for (const auto& [p, _] : generation) all.insert(p);

  RateReport report;
  for (const auto& pair : all) {
    PoolRate rate;
    rate.pair = pair;
    rate.endpoint_pair = pair == endpoints;
    if (auto it = consumption.find(pair); it != consumption.end()) rate.consumed = it->second;
    if (auto it = generation.find(pair); it != generation.end()) rate.generated = it->second;
    rate.net = static_cast<long long>(rate.generated) - static_cast<long long>(rate.consumed);
    if (rate.endpoint_pair) {
      rate.flag = rate.net > 0 ? RateFlag::Positive : RateFlag::Negative;
    } else {
      rate.flag = rate.consumed <= rate.generated ? RateFlag::Sustainable : RateFlag::Unsustainable;
    }
    report.pools.push_back(rate);
  }
  return report;
}

BootstrapDecision apply_bootstrap_policy(BootstrapPolicy policy, AuthScheme requested,
                                         std::span<const NodeId> route, PoolRegistry& pools,
                                         std::size_t preshared_bits, Rng& out_of_band, std::uint64_t session_id) {
  if (route.size() < 2) fail(ErrorCode::MalformedInput, "bootstrap needs a route");
  const NodeId& alice = route.front();
  const NodeId& bob = route.back();
  BootstrapDecision decision;
  decision.scheme = requested;

  switch (policy) {
    case BootstrapPolicy::TrustCarolAlways:
      if (requested != AuthScheme::RelayMediated) {
        fail(ErrorCode::NoKey, std::string(to_string(requested)) + " needs a key shared by " + alice + " and " +
                                   bob + ", which trust_carol_always never creates");
      }
      break;
    case BootstrapPolicy::FirstRunBootstrap:
      if (!pools.has(alice, bob)) {
        decision.scheme = AuthScheme::RelayMediated;
        decision.divert_endpoint_key = true;
      }
      break;
    case BootstrapPolicy::OutOfBandPreshared: {
      if (preshared_bits == 0) fail(ErrorCode::NoKey, "out_of_band_preshared needs preshared_bits > 0");
      std::vector<NodePair> wanted{NodePair::of(alice, bob)};
      if (requested == AuthScheme::FullChain) wanted = scheme_pools(requested, route);
      for (const auto& pair : wanted) {
        if (pools.has(pair.first, pair.second)) continue;
        Bits slip(preshared_bits);
        for (auto& b : slip) b = out_of_band.bit();
        pools.create(pair, std::move(slip), session_id);
        decision.seeded_pairs.push_back(pair);
      }
      break;
    }
  }
  require_scheme_pools(decision.scheme, route, pools);
  return decision;
}

}  // namespace qrelay
