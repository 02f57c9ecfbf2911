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

#include "qrelay/auth.hpp"
#include "qrelay/error.hpp"

namespace qrelay {

namespace {

__extension__ using u128 = unsigned __int128;

constexpr std::uint64_t kPrime = (std::uint64_t{1} << 61) - 1;

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b) {
  const u128 prod = static_cast<u128>(a) * b;
  std::uint64_t lo = static_cast<std::uint64_t>(prod & kPrime);
  std::uint64_t hi = static_cast<std::uint64_t>(prod >> 61);
  std::uint64_t r = lo + hi;
  if (r >= kPrime) r -= kPrime;
  return r;
}

std::uint64_t addmod(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = a + b;
  if (r >= kPrime) r -= kPrime;
  return r;
}

}  // namespace

void AuthParams::validate() const {
  if (tag_bits < 1 || tag_bits > 64) fail(ErrorCode::MalformedInput, "tag_bits must lie in [1, 64]");
  if (key_bits_per_tag < 128) fail(ErrorCode::MalformedInput, "key_bits_per_tag must be at least 128");
}

std::span<const std::uint8_t> AuthKeyPool::segment(std::size_t offset, std::size_t length) const {
  if (offset + length > bits_.size()) {
    fail(ErrorCode::KeyExhaustion, "pool " + pair_.label() + " has " + std::to_string(bits_.size()) +
                                       " bits, segment ends at " + std::to_string(offset + length));
  }
  return std::span<const std::uint8_t>(bits_).subspan(offset, length);
}

void AuthKeyPool::advance_to(std::size_t offset) {
  if (offset < consumed_ || offset > bits_.size()) {
    fail(ErrorCode::MalformedInput, "pool offset may only move forward inside the pool");
  }
  consumed_ = offset;
}

void AuthKeyPool::append(std::span<const std::uint8_t> bits, std::uint64_t session_id) {
  bits_.insert(bits_.end(), bits.begin(), bits.end());
  log_.push_back(RefreshEvent{session_id, bits.size()});
}

std::uint64_t compute_tag(std::span<const std::uint8_t> key_segment, std::span<const std::uint8_t> input,
                          std::size_t tag_bits) {
  if (key_segment.size() < 128) fail(ErrorCode::MalformedInput, "tag key segment shorter than 128 bits");
  std::uint64_t point = read_word(key_segment, 0, 64) % kPrime;
  if (point == 0) point = 1;
  const std::uint64_t pad = read_word(key_segment, 64, 64);

  std::uint64_t h = 0;
  for (std::size_t i = 0; i < input.size(); i += 7) {
    std::uint64_t chunk = 0;
    const std::size_t end = std::min(input.size(), i + 7);
    for (std::size_t j = i; j < end; ++j) chunk |= static_cast<std::uint64_t>(input[j]) << (8 * (j - i));
    h = addmod(mulmod(h, point), chunk);
  }
  h = addmod(mulmod(h, point), static_cast<std::uint64_t>(input.size()) % kPrime);

  std::uint64_t tag = h + pad;
  if (tag_bits < 64) tag &= (std::uint64_t{1} << tag_bits) - 1;
  return tag;
}

AuthTag make_tag(AuthKeyPool& view, const NodeId& author, const NodeId& recipient,
                 std::span<const std::uint8_t> input, const AuthParams& params, TagScope scope) {
  if (view.remaining() < params.key_bits_per_tag) {
    fail(ErrorCode::KeyExhaustion, "pool " + view.pair().label() + " has " + std::to_string(view.remaining()) +
                                       " unused bits, a tag needs " + std::to_string(params.key_bits_per_tag));
  }
  AuthTag tag;
  tag.author = author;
  tag.recipient = recipient;
  tag.key_offset = view.consumed_offset();
  tag.covers = scope;
  tag.value = compute_tag(view.segment(tag.key_offset, params.key_bits_per_tag), input, params.tag_bits);
  view.advance_to(tag.key_offset + params.key_bits_per_tag);
  return tag;
}

bool verify_tag(AuthKeyPool& view, std::span<const std::uint8_t> input, const AuthTag& tag,
                const AuthParams& params) {
  if (tag.key_offset < view.consumed_offset()) return false;
  if (tag.key_offset + params.key_bits_per_tag > view.bits().size()) {
    fail(ErrorCode::KeyExhaustion, "pool " + view.pair().label() + " has no segment at offset " +
                                       std::to_string(tag.key_offset));
  }
  const auto expected =
      compute_tag(view.segment(tag.key_offset, params.key_bits_per_tag), input, params.tag_bits);
  if (expected != tag.value) return false;
  view.advance_to(tag.key_offset + params.key_bits_per_tag);
  return true;
}

Bytes ClassicalEnvelope::header_and_payload() const {
  ByteWriter w;
  w.u64(session_id);
  w.u64(sequence);
  w.str(origin);
  w.str(destination);
  w.u16(static_cast<std::uint16_t>(payload_type));
  w.bytes(payload);
  return w.take();
}

Bytes ClassicalEnvelope::digest_input(std::size_t tag_index) const {
  if (tag_index >= tag_chain.size()) fail(ErrorCode::MalformedInput, "digest_input: no such tag");
  const AuthTag& tag = tag_chain[tag_index];
  ByteWriter w;
  w.bytes(header_and_payload());
  w.str(tag.author);
  w.str(tag.recipient);
  w.u64(tag.key_offset);
  w.u8(static_cast<std::uint8_t>(tag.covers));
  if (tag.covers == TagScope::PayloadAndPriorTags) {
    for (std::size_t j = 0; j < tag_index; ++j) {
      const AuthTag& prior = tag_chain[j];
      if (prior.recipient != tag.recipient) continue;
      w.str(prior.author);
      w.u64(prior.key_offset);
      w.u64(prior.value);
    }
  }
  return w.take();
}

std::string_view to_string(AuthScheme s) {
  switch (s) {
    case AuthScheme::RelayMediated: return "relay_mediated";
    case AuthScheme::EndToEnd: return "end_to_end";
    case AuthScheme::FullChain: return "full_chain";
  }
  return "unknown";
}

std::string_view to_string(BootstrapPolicy p) {
  switch (p) {
    case BootstrapPolicy::TrustCarolAlways: return "trust_carol_always";
    case BootstrapPolicy::FirstRunBootstrap: return "first_run_bootstrap";
    case BootstrapPolicy::OutOfBandPreshared: return "out_of_band_preshared";
  }
  return "unknown";
}

std::optional<AuthScheme> parse_scheme(std::string_view s) {
  for (auto v : {AuthScheme::RelayMediated, AuthScheme::EndToEnd, AuthScheme::FullChain}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::optional<BootstrapPolicy> parse_policy(std::string_view s) {
  for (auto v : {BootstrapPolicy::TrustCarolAlways, BootstrapPolicy::FirstRunBootstrap,
                 BootstrapPolicy::OutOfBandPreshared}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::string_view to_string(Rejection r) {
  switch (r) {
    case Rejection::None: return "none";
    case Rejection::TamperAlarm: return "tamper_alarm";
    case Rejection::Replay: return "replay";
    case Rejection::MissingTag: return "missing_tag";
    case Rejection::NoKey: return "no_key";
    case Rejection::KeyExhaustion: return "key_exhaustion";
  }
  return "unknown";
}

std::string_view to_string(RateFlag f) {
  switch (f) {
    case RateFlag::Sustainable: return "SUSTAINABLE";
    case RateFlag::Unsustainable: return "UNSUSTAINABLE";
    case RateFlag::Positive: return "POSITIVE";
    case RateFlag::Negative: return "NEGATIVE";
  }
  return "unknown";
}

std::string_view to_string(PayloadType t) {
  switch (t) {
    case PayloadType::SessionRequest: return "session_request";
    case PayloadType::SessionAccept: return "session_accept";
    case PayloadType::SessionDecline: return "session_decline";
    case PayloadType::BasisAnnounce: return "basis_announce";
    case PayloadType::EstimationSample: return "estimation_sample";
    case PayloadType::EstimationBits: return "estimation_bits";
    case PayloadType::CascadeParities: return "cascade_parities";
    case PayloadType::CascadeMismatch: return "cascade_mismatch";
    case PayloadType::CascadeBisect: return "cascade_bisect";
    case PayloadType::CascadeChoice: return "cascade_choice";
    case PayloadType::VerifyTag: return "verify_tag";
    case PayloadType::AmplifySeed: return "amplify_seed";
    case PayloadType::SessionEnd: return "session_end";
    case PayloadType::RouteUpdate: return "route_update";
    case PayloadType::DirectoryRequest: return "directory_request";
    case PayloadType::DirectoryResponse: return "directory_response";
  }
  return "unknown";
}

}  // namespace qrelay
