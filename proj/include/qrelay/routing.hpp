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
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qrelay/auth.hpp"
#include "qrelay/event_loop.hpp"
#include "qrelay/types.hpp"

namespace qrelay {

struct NextHop {
  bool direct = true;
  /// Carol the endpoint is attached to when not direct.
  NodeId via;

  bool operator==(const NextHop&) const = default;
};

struct RouteEntry {
  NextHop hop;
  Capabilities capabilities;

  bool operator==(const RouteEntry&) const = default;
};

class RoutingTable {
 public:
  RoutingTable() = default;
  explicit RoutingTable(NodeId owner) : owner_(std::move(owner)) {}

  const NodeId& owner() const noexcept { return owner_; }
  std::uint64_t version() const noexcept { return version_; }
  const std::map<NodeId, RouteEntry>& entries() const noexcept { return entries_; }
  const RouteEntry* resolve(const NodeId& endpoint) const;

  void set(const NodeId& endpoint, RouteEntry entry);
  bool erase(const NodeId& endpoint);

 private:
  NodeId owner_;
  std::map<NodeId, RouteEntry> entries_;
  std::uint64_t version_ = 0;
};

/// Alice, the Carols in order, Bob.
struct Route {
  std::vector<NodeId> nodes;

  std::vector<NodeId> interior() const;
  std::size_t size() const noexcept { return nodes.size(); }
  Route reversed() const;
  bool operator==(const Route&) const = default;
};

struct TableDelta {
  /// Control-plane wide counter; a table ignores deltas older than what it applied.
  std::uint64_t serial = 0;
  NodeId source;
  NodeId endpoint;
  bool removed = false;
  Capabilities capabilities;

  Bytes encode() const;
  static TableDelta decode(std::span<const std::uint8_t> payload);
  bool operator==(const TableDelta&) const = default;
};

struct DirectoryEntry {
  NodeId endpoint;
  Capabilities capabilities;
  NodeId attachment;

  bool operator==(const DirectoryEntry&) const = default;
};

struct DirectoryListing {
  std::vector<DirectoryEntry> entries;

  Bytes encode() const;
  static DirectoryListing decode(std::span<const std::uint8_t> payload);
  bool operator==(const DirectoryListing&) const = default;
};

struct PropagationStats {
  std::size_t messages_sent = 0;
  std::size_t rejected = 0;
  std::size_t retransmitted = 0;
  bool stalled = false;
  std::string stall_reason;
};

/// Routing tables of every Carol over a full mesh, plus the registration log.
/// Deltas are flooded once per peer as authenticated messages.
class ControlPlane {
 public:
  ControlPlane() = default;
  explicit ControlPlane(std::vector<NodeId> carols);

  const std::vector<NodeId>& carols() const noexcept { return carols_; }
  bool is_carol(const NodeId& id) const;

  /// Throws Conflict if the endpoint is registered anywhere, NotFound for an unknown Carol.
  TableDelta register_endpoint(const NodeId& carol, const NodeId& endpoint, Capabilities capabilities);
  /// Throws NotFound unless the endpoint is registered at `carol`.
  TableDelta deregister_endpoint(const NodeId& carol, const NodeId& endpoint);

  /// Drains queued deltas through the event loop until quiescent. A rejected
  /// update is retransmitted up to max_retries times.
  PropagationStats propagate(AuthDomain& auth, EventLoop& loop, const LinkTap& tap = {},
                             std::size_t max_retries = 8);

  std::size_t pending() const noexcept { return pending_.size(); }
  bool converged() const;

  /// Throws NotFound when either endpoint does not resolve from source_carol.
  Route lookup_route(const NodeId& source_carol, const NodeId& alice, const NodeId& bob) const;

  /// Authenticated request/response between requester and carol. Throws NoKey
  /// without a shared pool.
  DirectoryListing directory_list(const NodeId& carol, const NodeId& requester, AuthDomain& auth,
                                  const LinkTap& tap = {});

  const RoutingTable& table(const NodeId& carol) const;
  std::optional<NodeId> attachment_of(const NodeId& endpoint) const;
  std::optional<Capabilities> capabilities_of(const NodeId& endpoint) const;
  const std::map<NodeId, NodeId>& registrations() const noexcept { return registered_; }
  /// Sequence number for the next control-plane envelope.
  std::uint64_t next_sequence() { return ++sequence_; }

 private:
  void apply(const NodeId& carol, const TableDelta& delta);

  std::vector<NodeId> carols_;
  std::map<NodeId, RoutingTable> tables_;
  std::map<NodeId, NodeId> registered_;
  std::map<NodeId, Capabilities> capabilities_;
  std::deque<TableDelta> pending_;
  std::map<std::pair<NodeId, NodeId>, std::uint64_t> applied_;
  std::uint64_t serial_ = 0;
  std::uint64_t sequence_ = 0;
};

/// Session identifiers used by control-plane traffic that is not part of a QKD run.
inline constexpr std::uint64_t kControlSession = 0;

struct SessionRequest {
  std::uint64_t session_id = 0;
  NodeId alice;
  NodeId bob;
  AuthScheme scheme = AuthScheme::RelayMediated;
  BootstrapPolicy policy = BootstrapPolicy::TrustCarolAlways;
};

struct SessionHandle {
  std::uint64_t session_id = 0;
  Route route;
  AuthScheme scheme = AuthScheme::RelayMediated;
  BootstrapDecision bootstrap;
  /// Qubits travel Bob -> Alice when only that orientation fits the hardware.
  bool quantum_reversed = false;
  std::vector<DeliveryOutcome> handshake;
};

struct EstablishmentContext {
  ControlPlane& control;
  AuthDomain& auth;
  std::function<bool(const NodeId& responder, const NodeId& initiator)> accepts;
  std::size_t preshared_bits = 0;
  Rng* out_of_band = nullptr;
  std::function<std::uint64_t()> next_sequence;
  LinkTap tap;
};

/// Looks up the route, checks hardware, applies the bootstrap policy, sends the
/// authenticated request and carries the acceptance back along the reverse route.
/// Throws Refused, Capability, NoKey or NotFound.
SessionHandle establish_session(EstablishmentContext& ctx, const SessionRequest& request);

struct RouteCheck {
  bool ok = true;
  std::vector<NodeId> extra;
  std::vector<NodeId> missing;
  bool order_mismatch = false;
};

/// Compares the relays that announced bases, in announced chain order, with the
/// interior of the agreed route.
RouteCheck verify_route_a_posteriori(std::span<const NodeId> announcing_relays, const Route& agreed);

}  // namespace qrelay
