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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "qrelay/bits.hpp"
#include "qrelay/quantum.hpp"
#include "qrelay/rng.hpp"
#include "qrelay/types.hpp"

namespace qrelay {

// ---------------------------------------------------------------------------
// Chain and quantum phase
// ---------------------------------------------------------------------------

/// Ordered participants of one relay run. Position 0 transmits, the last
/// position receives, interior positions are relays doing intercept/resend.
struct Chain {
  std::vector<NodeId> nodes;
  /// Optional per-node capabilities; empty means every node can do both.
  std::vector<Capabilities> capabilities;

  std::size_t size() const noexcept { return nodes.size(); }
  /// Throws Capability or MalformedInput.
  void validate() const;
};

/// What happens on the link between chain positions i and i+1.
struct HopChannel {
  NoiseModel noise;
  /// Per-round probability that an intercept/resend eavesdropper acts.
  double eve_fraction = 0.0;

  bool operator==(const HopChannel&) const = default;
};

struct EveAttack {
  std::size_t hop = 0;
  double fraction = 1.0;
};

struct RoundRecord {
  std::uint64_t round_index = 0;
  std::vector<Basis> bases;
  /// Prepared bit at position 0, measured (and re-sent) bit elsewhere.
  std::vector<std::uint8_t> bits;

  bool operator==(const RoundRecord&) const = default;
};

/// Round-at-a-time quantum phase. Each node and each hop owns a stream derived
/// from the session generator, so interleaving several instances (qubit by
/// qubit multiplexing) produces the same rounds as running them back to back.
class QuantumPhase {
 public:
  QuantumPhase(Chain chain, std::vector<HopChannel> hops, const Rng& session_rng);

  RoundRecord next();
  std::size_t produced() const noexcept { return produced_; }
  const Chain& chain() const noexcept { return chain_; }

 private:
  Chain chain_;
  std::vector<HopChannel> hops_;
  std::vector<Rng> node_rngs_;
  std::vector<Rng> noise_rngs_;
  std::vector<Rng> eve_rngs_;
  std::size_t produced_ = 0;
};

std::vector<RoundRecord> run_quantum_phase(const Chain& chain, std::size_t n_rounds,
                                           std::span<const HopChannel> hops, const Rng& rng);

/// Same noise on every hop, optional eavesdropper on a single hop.
std::vector<RoundRecord> run_quantum_phase(const Chain& chain, std::size_t n_rounds,
                                           NoiseModel noise, std::optional<EveAttack> eve,
                                           const Rng& rng);

// ---------------------------------------------------------------------------
// Sifting
// ---------------------------------------------------------------------------

/// Chain positions (first < last) of a pair that shares a raw bit.
struct PositionPair {
  std::size_t first = 0;
  std::size_t last = 0;

  auto operator<=>(const PositionPair&) const = default;
};

/// Endpoints of a maximal run of equal bases; interior members also know the bit.
struct Beneficiary {
  PositionPair pair;

  std::size_t interior_count() const noexcept { return pair.last - pair.first - 1; }
  bool operator==(const Beneficiary&) const = default;
};

struct RoundGroups {
  std::vector<Beneficiary> runs;

  bool unused() const noexcept { return runs.empty(); }
  bool operator==(const RoundGroups&) const = default;
};

RoundGroups classify_round(std::span<const Basis> bases);

struct GroupAssignment {
  std::size_t chain_length = 0;
  std::vector<RoundGroups> rounds;

  std::size_t used_rounds() const;
  std::size_t unused_rounds() const;
  double usable_fraction() const;
  /// Round indices feeding each beneficiary pair, in round order.
  std::map<PositionPair, std::vector<std::size_t>> rounds_by_pair() const;
};

GroupAssignment sift(std::span<const RoundRecord> records);
GroupAssignment sift_bases(std::span<const std::vector<Basis>> announced, std::size_t chain_length);

// ---------------------------------------------------------------------------
// Post-processing
// ---------------------------------------------------------------------------

struct QberEstimate {
  double qber = 0.0;
  std::size_t disclosed = 0;
  std::size_t mismatches = 0;
  /// Positions (into the input keys) that were published, ascending.
  std::vector<std::size_t> sampled_positions;
  Bits remaining_a;
  Bits remaining_b;
};

/// Publishes floor(n * sample_fraction) randomly chosen positions, compares
/// them and drops them from both keys.
QberEstimate estimate_qber(const Bits& key_a, const Bits& key_b, double sample_fraction, Rng& rng);

struct ReconciliationParams {
  std::size_t block_size_initial = 32;
  std::size_t passes = 4;
  std::size_t verification_tag_bits = 64;

  bool operator==(const ReconciliationParams&) const = default;
};

/// A position the responder flipped, with the initiator's bit there as
/// derived from the two innermost disclosed parities of the bisection.
struct Correction {
  std::size_t position = 0;
  std::uint8_t reference_bit = 0;

  bool operator==(const Correction&) const = default;
};

struct ReconciliationResult {
  bool success = false;
  Bits key_a;
  Bits key_b;
  /// Parities disclosed by the initiator: top-level blocks plus bisection steps.
  std::size_t leakage_bits = 0;
  std::size_t top_level_parities = 0;
  std::size_t verification_bits = 0;
  std::size_t messages = 0;
  std::vector<Correction> corrections;
};

/// Parity-block bisection with cascading back-tracking over shuffled passes,
/// followed by a random-parity verification tag. The responder (key_b) is
/// corrected toward the initiator (key_a).
ReconciliationResult reconcile(const Bits& key_a, const Bits& key_b, const ReconciliationParams& params,
                               Rng& public_rng, const PublicChannel& channel = {});

/// Output length m for an n-bit input.
using CompressionRule = std::function<std::size_t(std::size_t n, double qber, std::size_t leakage)>;

/// max(0, n - leakage - ceil(2 * qber * n)).
std::size_t default_compression(std::size_t n, double qber, std::size_t leakage);

struct AmplificationParams {
  CompressionRule compression = default_compression;
};

/// Multiplies the key by an m x n binary matrix whose rows are drawn from
/// Rng(matrix_seed). Both sides use the same published seed.
Bits privacy_amplify(const Bits& key, std::size_t leakage, double qber, const AmplificationParams& params,
                     std::uint64_t matrix_seed);
Bits multiply_random_matrix(const Bits& key, std::size_t output_length, std::uint64_t matrix_seed);

// ---------------------------------------------------------------------------
// Pair keys
// ---------------------------------------------------------------------------

struct DeriveParams {
  double sample_fraction = 0.25;
  ReconciliationParams reconciliation;
  AmplificationParams amplification;
  std::optional<double> qber_abort_threshold;
};

enum class PairOutcome { Ok, QberAbort, ReconciliationAbort, Degenerate };
std::string_view to_string(PairOutcome o);

/// Per-pair key accounting. raw_bits = estimation_disclosed + reconciliation_input,
/// amplification_input = reconciliation_input, final_bits = amplification_input - compression.
struct KeyAccounting {
  std::size_t raw_bits = 0;
  std::size_t estimation_disclosed = 0;
  std::size_t reconciliation_input = 0;
  std::size_t reconciliation_leakage = 0;
  std::size_t verification_bits = 0;
  std::size_t amplification_input = 0;
  std::size_t compression = 0;
  std::size_t final_bits = 0;

  bool operator==(const KeyAccounting&) const = default;
};

struct PairKey {
  PositionPair positions;
  NodePair pair;
  Bits bits;
  double qber_estimate = 0.0;
  /// Fraction of disagreeing raw bits over the whole sifted string. Simulator
  /// diagnostic; the protocol itself only sees qber_estimate.
  double sifted_qber = 0.0;
  /// Bits disclosed during estimation and reconciliation, verification included.
  std::size_t leakage_bits = 0;
  KeyAccounting accounting;
};

/// What the pair published, which is what a listening relay can replay.
struct PublicDiscussion {
  std::vector<std::size_t> rounds;
  std::vector<std::size_t> sampled_positions;
  std::vector<Correction> corrections;
  std::uint64_t matrix_seed = 0;
  std::size_t output_length = 0;
};

struct PairResult {
  PairOutcome outcome = PairOutcome::Ok;
  PairKey key;
  PublicDiscussion discussion;
  /// Initiator's string after estimation, before amplification (diagnostic).
  Bits reconciled;
};

using ChannelFactory = std::function<PublicChannel(PositionPair)>;

/// Runs estimation, reconciliation and amplification for every beneficiary
/// pair. An abort on one pair does not affect the others.
std::map<PositionPair, PairResult> derive_pair_keys(std::span<const RoundRecord> records,
                                                    const GroupAssignment& assignment, const Chain& chain,
                                                    const DeriveParams& params, const Rng& public_rng,
                                                    const ChannelFactory& channels = {});

struct ShadowReport {
  std::size_t carol_position = 0;
  bool available = false;
  Bits reconstruction;
  std::size_t pre_amplification_distance = 0;
  std::size_t distance = 0;
};

/// A relay interior to every end-to-end run replays the published estimation
/// positions, corrections and amplification seed over its own raw bits.
ShadowReport carol_shadow_key(std::span<const RoundRecord> records, std::size_t carol_position,
                              const PairResult& end_to_end);

}  // namespace qrelay
