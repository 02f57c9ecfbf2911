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

#include <set>
#include <string>

#include "qrelay/error.hpp"
#include "qrelay/protocol.hpp"

namespace qrelay {

void Chain::validate() const {
  if (nodes.size() < 2) {
    fail(ErrorCode::MalformedInput, "chain needs at least two nodes");
  }
  std::set<NodeId> seen(nodes.begin(), nodes.end());
  if (seen.size() != nodes.size()) {
    fail(ErrorCode::MalformedInput, "chain node ids must be distinct");
  }
  if (capabilities.empty()) return;
  if (capabilities.size() != nodes.size()) {
    fail(ErrorCode::MalformedInput, "chain capability list does not match node list");
  }
  if (!capabilities.front().can_transmit) {
    fail(ErrorCode::Capability, nodes.front() + " cannot transmit qubits");
  }
  if (!capabilities.back().can_receive) {
    fail(ErrorCode::Capability, nodes.back() + " cannot receive qubits");
  }
  for (std::size_t i = 1; i + 1 < nodes.size(); ++i) {
    if (!capabilities[i].can_transmit || !capabilities[i].can_receive) {
      fail(ErrorCode::Capability, nodes[i] + " cannot relay: needs both a receiver and a transmitter");
    }
  }
}

QuantumPhase::QuantumPhase(Chain chain, std::vector<HopChannel> hops, const Rng& session_rng)
    : chain_(std::move(chain)), hops_(std::move(hops)) {
  chain_.validate();
  if (hops_.size() != chain_.size() - 1) {
    fail(ErrorCode::MalformedInput, "need exactly one hop channel per chain link");
  }
  for (const auto& h : hops_) {
    NoiseModel::with_flip(h.noise.flip_probability);
    if (!(h.eve_fraction >= 0.0 && h.eve_fraction <= 1.0)) {
      fail(ErrorCode::MalformedInput, "eavesdropper fraction must lie in [0, 1]");
    }
  }
  for (const auto& id : chain_.nodes) {
    node_rngs_.push_back(session_rng.fork("node:" + id));
  }
  for (std::size_t h = 0; h < hops_.size(); ++h) {
    noise_rngs_.push_back(session_rng.fork("noise:" + std::to_string(h)));
    eve_rngs_.push_back(session_rng.fork("eve:" + std::to_string(h)));
  }
}

RoundRecord QuantumPhase::next() {
  const std::size_t n = chain_.size();
  RoundRecord rec;
  rec.round_index = produced_++;
  rec.bases.resize(n);
  rec.bits.resize(n);

  Rng& source = node_rngs_[0];
  rec.bases[0] = source.bit() ? Basis::Y : Basis::X;
  rec.bits[0] = source.bit();
  QubitState in_flight = prepare_qubit(rec.bases[0], rec.bits[0]);

  for (std::size_t hop = 0; hop + 1 < n; ++hop) {
    const HopChannel& channel = hops_[hop];
    if (channel.eve_fraction > 0.0) {
      Rng& eve = eve_rngs_[hop];
      if (eve.bernoulli(channel.eve_fraction)) {
        const Basis eve_basis = eve.bit() ? Basis::Y : Basis::X;
        in_flight = intercept_resend(in_flight, eve_basis, eve).resent;
      }
    }
    in_flight = apply_noise(in_flight, channel.noise, noise_rngs_[hop]);

    const std::size_t k = hop + 1;
    Rng& node = node_rngs_[k];
    rec.bases[k] = node.bit() ? Basis::Y : Basis::X;
    if (k + 1 < n) {
      auto forwarded = intercept_resend(in_flight, rec.bases[k], node);
      rec.bits[k] = forwarded.bit;
      in_flight = forwarded.resent;
    } else {
      rec.bits[k] = measure_qubit(in_flight, rec.bases[k], node);
    }
  }
  return rec;
}

std::vector<RoundRecord> run_quantum_phase(const Chain& chain, std::size_t n_rounds,
                                           std::span<const HopChannel> hops, const Rng& rng) {
  if (n_rounds == 0) fail(ErrorCode::MalformedInput, "quantum phase needs at least one round");
  QuantumPhase phase(chain, std::vector<HopChannel>(hops.begin(), hops.end()), rng);
  std::vector<RoundRecord> out;
  out.reserve(n_rounds);
  for (std::size_t i = 0; i < n_rounds; ++i) out.push_back(phase.next());
  return out;
}

std::vector<RoundRecord> run_quantum_phase(const Chain& chain, std::size_t n_rounds, NoiseModel noise,
                                           std::optional<EveAttack> eve, const Rng& rng) {
  if (chain.size() < 2) fail(ErrorCode::MalformedInput, "chain needs at least two nodes");
  std::vector<HopChannel> hops(chain.size() - 1, HopChannel{noise, 0.0});
  if (eve) {
    if (eve->hop >= hops.size()) fail(ErrorCode::MalformedInput, "eavesdropper hop outside the chain");
    hops[eve->hop].eve_fraction = eve->fraction;
  }
  return run_quantum_phase(chain, n_rounds, hops, rng);
}

}  // namespace qrelay
