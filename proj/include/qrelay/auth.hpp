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
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "qrelay/bits.hpp"
#include "qrelay/rng.hpp"
#include "qrelay/types.hpp"

namespace qrelay {

// ---------------------------------------------------------------------------
// Key pools and tags
// ---------------------------------------------------------------------------

struct AuthParams {
  std::size_t tag_bits = 64;
  /// Key bits consumed per tag. The first 128 bits key the digest; any
  /// surplus is consumed and discarded.
  std::size_t key_bits_per_tag = 128;

  void validate() const;
  bool operator==(const AuthParams&) const = default;
};

struct RefreshEvent {
  std::uint64_t session_id = 0;
  std::size_t bits_added = 0;

  bool operator==(const RefreshEvent&) const = default;
};

/// One owner's view of the secret bits shared with a peer. Segments before
/// consumed_offset have been used and are never used again.
class AuthKeyPool {
 public:
  AuthKeyPool() = default;
  AuthKeyPool(NodePair pair, Bits bits) : pair_(std::move(pair)), bits_(std::move(bits)) {}

  const NodePair& pair() const noexcept { return pair_; }
  const Bits& bits() const noexcept { return bits_; }
  std::size_t consumed_offset() const noexcept { return consumed_; }
  std::size_t remaining() const noexcept { return bits_.size() - consumed_; }
  const std::vector<RefreshEvent>& refresh_log() const noexcept { return log_; }

  std::span<const std::uint8_t> segment(std::size_t offset, std::size_t length) const;
  void advance_to(std::size_t offset);
  void append(std::span<const std::uint8_t> bits, std::uint64_t session_id);

  bool operator==(const AuthKeyPool&) const = default;

 private:
  NodePair pair_;
  Bits bits_;
  std::size_t consumed_ = 0;
  std::vector<RefreshEvent> log_;
};

enum class TagScope : std::uint8_t { Payload = 0, PayloadAndPriorTags = 1 };

struct AuthTag {
  NodeId author;
  NodeId recipient;
  /// Offset of the key segment in the shared pool. Public, like a message counter.
  std::uint64_t key_offset = 0;
  std::uint64_t value = 0;
  TagScope covers = TagScope::Payload;

  bool operator==(const AuthTag&) const = default;
};

/// Keyed digest: polynomial evaluation over GF(2^61 - 1) at the first key word,
/// masked by the second key word, truncated to tag_bits.
std::uint64_t compute_tag(std::span<const std::uint8_t> key_segment, std::span<const std::uint8_t> input,
                          std::size_t tag_bits);

/// Uses the next unconsumed segment of `view` and advances it.
/// Throws KeyExhaustion if fewer than key_bits_per_tag bits remain.
AuthTag make_tag(AuthKeyPool& view, const NodeId& author, const NodeId& recipient,
                 std::span<const std::uint8_t> input, const AuthParams& params,
                 TagScope scope = TagScope::Payload);

/// A tag naming an already consumed segment is rejected. On success the view
/// advances past the segment, so the verifier consumes what the author consumed.
/// A failed check leaves the view where it was.
bool verify_tag(AuthKeyPool& view, std::span<const std::uint8_t> input, const AuthTag& tag,
                const AuthParams& params);

// ---------------------------------------------------------------------------
// Envelopes
// ---------------------------------------------------------------------------

struct ClassicalEnvelope {
  std::uint64_t session_id = 0;
  std::uint64_t sequence = 0;
  NodeId origin;
  NodeId destination;
  PayloadType payload_type = PayloadType::SessionEnd;
  Bytes payload;
  std::vector<AuthTag> tag_chain;

  /// Canonical bytes covered by tag_chain[tag_index].
  Bytes digest_input(std::size_t tag_index) const;
  Bytes header_and_payload() const;

  bool operator==(const ClassicalEnvelope&) const = default;
};

enum class AuthScheme { RelayMediated, EndToEnd, FullChain };
enum class BootstrapPolicy { TrustCarolAlways, FirstRunBootstrap, OutOfBandPreshared };

std::string_view to_string(AuthScheme s);
std::string_view to_string(BootstrapPolicy p);
std::optional<AuthScheme> parse_scheme(std::string_view s);
std::optional<BootstrapPolicy> parse_policy(std::string_view s);

// ---------------------------------------------------------------------------
// Registry and delivery
// ---------------------------------------------------------------------------

/// Both owners' views of every shared pool.
class PoolRegistry {
 public:
  bool has(const NodeId& a, const NodeId& b) const;
  /// Creates the pool with identical views for both owners. Throws Conflict if present.
  void create(const NodePair& pair, Bits bits, std::uint64_t session_id = 0);
  /// Appends to both views, creating the pool if needed.
  void append(const NodePair& pair, std::span<const std::uint8_t> bits, std::uint64_t session_id);
  /// Throws NoKey when the two nodes share no pool.
  AuthKeyPool& view(const NodeId& owner, const NodeId& peer);
  const AuthKeyPool& view(const NodeId& owner, const NodeId& peer) const;

  std::vector<NodePair> pairs() const;
  /// Both views agree on bits and offset.
  bool symmetric(const NodePair& pair) const;

  bool operator==(const PoolRegistry&) const = default;

 private:
  std::map<NodePair, std::array<AuthKeyPool, 2>> pools_;
};

/// Highest sequence number accepted per (session, origin, destination).
class ReplayGuard {
 public:
  bool fresh(const ClassicalEnvelope& env) const;
  void accept(const ClassicalEnvelope& env);

 private:
  std::map<std::tuple<std::uint64_t, NodeId, NodeId>, std::uint64_t> last_;
};

/// Everything the classical control plane keeps about authentication.
struct AuthDomain {
  PoolRegistry pools;
  AuthParams params;
  std::map<NodeId, ReplayGuard> guards;
};

enum class Rejection { None, TamperAlarm, Replay, MissingTag, NoKey, KeyExhaustion };
std::string_view to_string(Rejection r);

struct HopContext {
  std::size_t hop = 0;
  const NodeId& from;
  const NodeId& to;
};

/// Called with each envelope as it crosses a link; may modify it.
using LinkTap = std::function<void(const HopContext&, ClassicalEnvelope&)>;

struct TagCheck {
  std::size_t tag_index = 0;
  NodeId author;
  std::uint64_t key_offset = 0;
  /// Verifier's key segment at key_offset; empty when the check never ran.
  Bits key_segment;
  /// The tag named a segment the verifier had already consumed.
  bool stale = false;
  bool ok = false;
};

struct HopRecord {
  NodeId from;
  NodeId to;
  /// Envelope as received by `to`, including every tag present on arrival.
  ClassicalEnvelope received;
  bool verified = false;
  std::vector<TagCheck> checks;
  Rejection rejection = Rejection::None;
  bool altered = false;
};

struct DeliveryOutcome {
  bool delivered = false;
  std::optional<NodeId> rejected_by;
  Rejection reason = Rejection::None;
  std::string detail;
  std::vector<HopRecord> hops;
  /// Tags checked by the destination.
  std::size_t destination_checks = 0;
  ClassicalEnvelope final_envelope;
};

/// Pools the scheme needs along `path`. Throws NoKey naming the first missing pair.
void require_scheme_pools(AuthScheme scheme, std::span<const NodeId> path, const PoolRegistry& pools);
std::vector<NodePair> scheme_pools(AuthScheme scheme, std::span<const NodeId> path);

/// Sends along path[0] -> ... -> path.back():
///  RelayMediated  each hop verifies its predecessor's tag, strips it and tags for the next hop;
///  EndToEnd       origin tags for the destination, relays forward untouched;
///  FullChain      every node verifies every tag addressed to it, then tags for each node
///                 downstream over payload plus the earlier tags to that recipient.
/// A verification failure drops the message at that node.
DeliveryOutcome send_authenticated(AuthScheme scheme, std::span<const NodeId> path, ClassicalEnvelope envelope,
                                   AuthDomain& domain, const LinkTap& tap = {});

/// Hands a forged envelope to path[receiver] as if it came from path[receiver - 1],
/// then continues delivery normally.
DeliveryOutcome deliver_forged(AuthScheme scheme, std::span<const NodeId> path, std::size_t receiver,
                               ClassicalEnvelope forged, AuthDomain& domain, const LinkTap& tap = {});

// ---------------------------------------------------------------------------
// Refresh, rates, bootstrap
// ---------------------------------------------------------------------------

struct SessionKey {
  NodePair pair;
  Bits bits;
};

struct PoolRefresh {
  NodePair pair;
  bool relay_pair = true;
  std::size_t pair_key_bits = 0;
  std::size_t pool_growth = 0;
  std::size_t secret_output = 0;

  bool operator==(const PoolRefresh&) const = default;
};

struct RefreshAccounting {
  std::vector<PoolRefresh> entries;
  /// End-to-end secret handed to the endpoints.
  Bits secret_key;
  double effective_reserve = 0.0;
};

/// Relay pairs feed their whole key to their pool. The endpoint pair moves
/// floor(reserve * length) bits to its pool and outputs the rest; with no
/// endpoint pool the reserve is 0, and divert_endpoint_key moves everything.
RefreshAccounting refresh_pools(std::uint64_t session_id, std::span<const SessionKey> keys,
                                const NodePair& endpoints, PoolRegistry& pools, double final_key_reserve,
                                bool divert_endpoint_key = false);

enum class RateFlag { Sustainable, Unsustainable, Positive, Negative };
std::string_view to_string(RateFlag f);

struct PoolRate {
  NodePair pair;
  bool endpoint_pair = false;
  std::size_t consumed = 0;
  std::size_t generated = 0;
  long long net = 0;
  RateFlag flag = RateFlag::Sustainable;
};

struct RateReport {
  std::vector<PoolRate> pools;

  bool relay_pools_sustainable() const;
  const PoolRate* find(const NodePair& pair) const;
};

/// Relay pools are sustainable iff consumption <= generation. For the endpoint
/// pair, consumption is what the session subtracts from the final key for
/// authentication; the net secret rate is generation - consumption, negative
/// when <= 0.
RateReport check_rate_compatibility(const std::map<NodePair, std::size_t>& consumption,
                                    const std::map<NodePair, std::size_t>& generation,
                                    const NodePair& endpoints);

struct BootstrapDecision {
  AuthScheme scheme = AuthScheme::RelayMediated;
  bool divert_endpoint_key = false;
  std::vector<NodePair> seeded_pairs;
};

/// Decides the scheme of one session and initializes pools as the policy
/// requires. Throws NoKey when the policy forbids the requested scheme.
BootstrapDecision apply_bootstrap_policy(BootstrapPolicy policy, AuthScheme requested,
                                         std::span<const NodeId> route, PoolRegistry& pools,
                                         std::size_t preshared_bits, Rng& out_of_band, std::uint64_t session_id);

}  // namespace qrelay
