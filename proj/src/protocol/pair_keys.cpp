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

#include <string>

#include "qrelay/error.hpp"
#include "qrelay/protocol.hpp"

namespace qrelay {

std::string_view to_string(PairOutcome o) {
  switch (o) {
    case PairOutcome::Ok: return "ok";
    case PairOutcome::QberAbort: return "qber_abort";
    case PairOutcome::ReconciliationAbort: return "reconciliation_abort";
    case PairOutcome::Degenerate: return "degenerate";
  }
  return "unknown";
}

namespace {

void publish(const PublicChannel& channel, Speaker who, PayloadType type, Bytes payload) {
  if (channel) channel(who, type, std::move(payload));
}

Bytes encode_sample(const std::vector<std::size_t>& positions, const Bits& key, bool with_positions) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(positions.size()));
  Bits values;
  values.reserve(positions.size());
  for (auto p : positions) {
    if (with_positions) w.u32(static_cast<std::uint32_t>(p));
    values.push_back(key[p]);
  }
  w.bytes(pack_bytes(values));
  return w.take();
}

PairResult derive_one(std::span<const RoundRecord> records, PositionPair pp, const std::vector<std::size_t>& rounds,
                      const Chain& chain, const DeriveParams& params, Rng rng, const PublicChannel& channel) {
  PairResult res;
  res.key.positions = pp;
  res.key.pair = NodePair::of(chain.nodes[pp.first], chain.nodes[pp.last]);
  res.discussion.rounds = rounds;

  Bits raw_a;
  Bits raw_b;
  raw_a.reserve(rounds.size());
  raw_b.reserve(rounds.size());
  for (auto r : rounds) {
    raw_a.push_back(records[r].bits[pp.first]);
    raw_b.push_back(records[r].bits[pp.last]);
  }
  KeyAccounting& acc = res.key.accounting;
  acc.raw_bits = raw_a.size();
  if (raw_a.empty()) {
    res.outcome = PairOutcome::Degenerate;
    return res;
  }
  res.key.sifted_qber =
      static_cast<double>(hamming_distance(raw_a, raw_b)) / static_cast<double>(raw_a.size());

  QberEstimate est;
  try {
    est = estimate_qber(raw_a, raw_b, params.sample_fraction, rng);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateInput) throw;
    res.outcome = PairOutcome::Degenerate;
    return res;
  }
  publish(channel, Speaker::Initiator, PayloadType::EstimationSample, encode_sample(est.sampled_positions, raw_a, true));
  publish(channel, Speaker::Responder, PayloadType::EstimationBits, encode_sample(est.sampled_positions, raw_b, false));

  res.discussion.sampled_positions = est.sampled_positions;
  res.key.qber_estimate = est.qber;
  acc.estimation_disclosed = est.disclosed;
  acc.reconciliation_input = est.remaining_a.size();
  res.key.leakage_bits = est.disclosed;

  if (params.qber_abort_threshold && est.qber > *params.qber_abort_threshold) {
    res.outcome = PairOutcome::QberAbort;
    return res;
  }
  if (est.remaining_a.empty()) {
    res.outcome = PairOutcome::Degenerate;
    return res;
  }

  auto rec = reconcile(est.remaining_a, est.remaining_b, params.reconciliation, rng, channel);
  acc.reconciliation_leakage = rec.leakage_bits;
  acc.verification_bits = rec.verification_bits;
  res.key.leakage_bits += rec.leakage_bits + rec.verification_bits;
  res.discussion.corrections = rec.corrections;
  if (!rec.success) {
    res.outcome = PairOutcome::ReconciliationAbort;
    return res;
  }

  acc.amplification_input = rec.key_a.size();
  const std::uint64_t seed = rng.next();
  const CompressionRule& rule =
      params.amplification.compression ? params.amplification.compression : CompressionRule(default_compression);
  const std::size_t m =
      std::min(rule(rec.key_a.size(), est.qber, rec.leakage_bits + rec.verification_bits), rec.key_a.size());
  Bits final_a = multiply_random_matrix(rec.key_a, m, seed);
  Bits final_b = multiply_random_matrix(rec.key_b, m, seed);
  if (final_a != final_b) {
    // Verification tag collided on unequal strings.
    res.outcome = PairOutcome::ReconciliationAbort;
    return res;
  }
  ByteWriter seed_msg;
  seed_msg.u64(seed);
  seed_msg.u32(static_cast<std::uint32_t>(m));
  publish(channel, Speaker::Initiator, PayloadType::AmplifySeed, seed_msg.take());

  res.discussion.matrix_seed = seed;
  res.discussion.output_length = m;
  acc.compression = acc.amplification_input - m;
  acc.final_bits = m;
  res.key.bits = std::move(final_a);
  res.reconciled = std::move(rec.key_a);
  return res;
}

}  // namespace

std::map<PositionPair, PairResult> derive_pair_keys(std::span<const RoundRecord> records,
                                                    const GroupAssignment& assignment, const Chain& chain,
                                                    const DeriveParams& params, const Rng& public_rng,
                                                    const ChannelFactory& channels) {
  if (assignment.rounds.size() != records.size() || assignment.chain_length != chain.size()) {
    fail(ErrorCode::MalformedInput, "derive_pair_keys: assignment does not match records");
  }
  std::map<PositionPair, PairResult> out;
  for (const auto& [pp, rounds] : assignment.rounds_by_pair()) {
    Rng rng = public_rng.fork("pair:" + std::to_string(pp.first) + "-" + std::to_string(pp.last));
    PublicChannel channel = channels ? channels(pp) : PublicChannel{};
    out.emplace(pp, derive_one(records, pp, rounds, chain, params, std::move(rng), channel));
  }
  return out;
}

ShadowReport carol_shadow_key(std::span<const RoundRecord> records, std::size_t carol_position,
                              const PairResult& end_to_end) {
  ShadowReport report;
  report.carol_position = carol_position;
  if (end_to_end.outcome != PairOutcome::Ok) return report;
  const auto& pp = end_to_end.key.positions;
  if (carol_position <= pp.first || carol_position >= pp.last) {
    fail(ErrorCode::MalformedInput, "shadow reconstruction needs a relay interior to the run");
  }

  const auto& talk = end_to_end.discussion;
  Bits mine;
  mine.reserve(talk.rounds.size());
  std::size_t next_sample = 0;
  for (std::size_t i = 0; i < talk.rounds.size(); ++i) {
    if (next_sample < talk.sampled_positions.size() && talk.sampled_positions[next_sample] == i) {
      ++next_sample;
      continue;
    }
    mine.push_back(records[talk.rounds[i]].bits[carol_position]);
  }
  for (const auto& c : talk.corrections) {
    mine[c.position] = c.reference_bit;
  }

  report.available = true;
  report.pre_amplification_distance = hamming_distance(mine, end_to_end.reconciled);
  report.reconstruction = multiply_random_matrix(mine, talk.output_length, talk.matrix_seed);
  report.distance = hamming_distance(report.reconstruction, end_to_end.key.bits);
  return report;
}

}  // namespace qrelay
