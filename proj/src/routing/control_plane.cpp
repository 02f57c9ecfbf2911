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

#include "qrelay/error.hpp"
#include "qrelay/routing.hpp"

namespace qrelay {

namespace {

std::uint8_t encode_caps(const Capabilities& c) {
  return static_cast<std::uint8_t>((c.can_transmit ? 1 : 0) | (c.can_receive ? 2 : 0));
}

Capabilities decode_caps(std::uint8_t v) {
  if (v > 3) fail(ErrorCode::MalformedInput, "capability byte out of range");
  return Capabilities{(v & 1) != 0, (v & 2) != 0};
}

[[noreturn]] void raise_rejection(const DeliveryOutcome& out) {
  switch (out.reason) {
    case Rejection::NoKey: fail(ErrorCode::NoKey, out.detail);
    case Rejection::KeyExhaustion: fail(ErrorCode::KeyExhaustion, out.detail);
    default: fail(ErrorCode::TamperAlarm, out.detail);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Tables and encodings
// ---------------------------------------------------------------------------

const RouteEntry* RoutingTable::resolve(const NodeId& endpoint) const {
  auto it = entries_.find(endpoint);
  return it == entries_.end() ? nullptr : &it->second;
}

void RoutingTable::set(const NodeId& endpoint, RouteEntry entry) {
  if (endpoint == owner_) fail(ErrorCode::MalformedInput, "a table cannot route to its owner");
  if (!entry.hop.direct && entry.hop.via == owner_) {
    fail(ErrorCode::MalformedInput, "entry for " + endpoint + " points back at " + owner_);
  }
  entries_[endpoint] = std::move(entry);
  ++version_;
}

bool RoutingTable::erase(const NodeId& endpoint) {
  if (entries_.erase(endpoint) == 0) return false;
  ++version_;
  return true;
}

std::vector<NodeId> Route::interior() const {
  if (nodes.size() < 2) return {};
  return std::vector<NodeId>(nodes.begin() + 1, nodes.end() - 1);
}

Route Route::reversed() const { return Route{std::vector<NodeId>(nodes.rbegin(), nodes.rend())}; }

Bytes TableDelta::encode() const {
  ByteWriter w;
  w.u64(serial);
  w.str(source);
  w.str(endpoint);
  w.u8(removed ? 1 : 0);
  w.u8(encode_caps(capabilities));
  return w.take();
}

TableDelta TableDelta::decode(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  TableDelta d;
  d.serial = r.u64();
  d.source = r.str();
  d.endpoint = r.str();
  const auto removed = r.u8();
  if (removed > 1) fail(ErrorCode::MalformedInput, "route update flag out of range");
  d.removed = removed == 1;
  d.capabilities = decode_caps(r.u8());
  if (!r.done()) fail(ErrorCode::MalformedInput, "trailing bytes in route update");
  return d;
}

Bytes DirectoryListing::encode() const {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    w.str(e.endpoint);
    w.u8(encode_caps(e.capabilities));
    w.str(e.attachment);
  }
  return w.take();
}

DirectoryListing DirectoryListing::decode(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  DirectoryListing l;
  const auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    DirectoryEntry e;
    e.endpoint = r.str();
    e.capabilities = decode_caps(r.u8());
    e.attachment = r.str();
    l.entries.push_back(std::move(e));
  }
  if (!r.done()) fail(ErrorCode::MalformedInput, "trailing bytes in directory listing");
  return l;
}

// ---------------------------------------------------------------------------
// ControlPlane
// ---------------------------------------------------------------------------

ControlPlane::ControlPlane(std::vector<NodeId> carols) : carols_(std::move(carols)) {
  for (const auto& c : carols_) {
    if (tables_.contains(c)) fail(ErrorCode::Conflict, "carol " + c + " listed twice");
    tables_.emplace(c, RoutingTable(c));
  }
}

bool ControlPlane::is_carol(const NodeId& id) const { return tables_.contains(id); }

const RoutingTable& ControlPlane::table(const NodeId& carol) const {
  auto it = tables_.find(carol);
  if (it == tables_.end()) fail(ErrorCode::NotFound, "no carol named " + carol);
  return it->second;
}

std::optional<NodeId> ControlPlane::attachment_of(const NodeId& endpoint) const {
  auto it = registered_.find(endpoint);
  if (it == registered_.end()) return std::nullopt;
  return it->second;
}

std::optional<Capabilities> ControlPlane::capabilities_of(const NodeId& endpoint) const {
  auto it = capabilities_.find(endpoint);
  if (it == capabilities_.end()) return std::nullopt;
  return it->second;
}

TableDelta ControlPlane::register_endpoint(const NodeId& carol, const NodeId& endpoint,
                                           Capabilities capabilities) {
  if (!is_carol(carol)) fail(ErrorCode::NotFound, "no carol named " + carol);
  if (is_carol(endpoint)) fail(ErrorCode::Conflict, endpoint + " is a carol, not an endpoint");
  if (auto it = registered_.find(endpoint); it != registered_.end()) {
    fail(ErrorCode::Conflict, endpoint + " is already registered at " + it->second);
  }
  registered_[endpoint] = carol;
  capabilities_[endpoint] = capabilities;
  TableDelta d{++serial_, carol, endpoint, false, capabilities};
  apply(carol, d);
  pending_.push_back(d);
  return d;
}

TableDelta ControlPlane::deregister_endpoint(const NodeId& carol, const NodeId& endpoint) {
  auto it = registered_.find(endpoint);
  if (it == registered_.end() || it->second != carol) {
    fail(ErrorCode::NotFound, endpoint + " is not registered at " + carol);
  }
  TableDelta d{++serial_, carol, endpoint, true, capabilities_[endpoint]};
  registered_.erase(it);
  capabilities_.erase(endpoint);
  apply(carol, d);
  pending_.push_back(d);
  return d;
}

void ControlPlane::apply(const NodeId& carol, const TableDelta& delta) {
  auto& last = applied_[{carol, delta.endpoint}];
  if (delta.serial <= last) return;
  last = delta.serial;
  RoutingTable& t = tables_.at(carol);
  if (delta.removed) {
    t.erase(delta.endpoint);
    return;
  }
  NextHop hop;
  hop.direct = delta.source == carol;
  if (!hop.direct) hop.via = delta.source;
  t.set(delta.endpoint, RouteEntry{hop, delta.capabilities});
}

PropagationStats ControlPlane::propagate(AuthDomain& auth, EventLoop& loop, const LinkTap& tap,
                                         std::size_t max_retries) {
  PropagationStats stats;
  // Each in-flight update reschedules itself on rejection; shared state is the stats block.
  std::function<void(TableDelta, NodeId, std::size_t)> deliver;
  deliver = [&](TableDelta delta, NodeId peer, std::size_t attempt) {
    if (stats.stalled) return;
    ClassicalEnvelope env;
    env.session_id = kControlSession;
    env.sequence = next_sequence();
    env.origin = delta.source;
    env.destination = peer;
    env.payload_type = PayloadType::RouteUpdate;
    env.payload = delta.encode();
    const std::vector<NodeId> path{delta.source, peer};
    ++stats.messages_sent;
    DeliveryOutcome out = send_authenticated(AuthScheme::RelayMediated, path, std::move(env), auth, tap);
    if (out.delivered) {
      apply(peer, TableDelta::decode(out.final_envelope.payload));
      return;
    }
    if (out.reason == Rejection::NoKey || out.reason == Rejection::KeyExhaustion) {
      stats.stalled = true;
      stats.stall_reason = out.detail;
      return;
    }
    ++stats.rejected;
    if (attempt >= max_retries) {
      stats.stalled = true;
      stats.stall_reason = "update " + std::to_string(delta.serial) + " to " + peer + " rejected " +
                           std::to_string(attempt + 1) + " times";
      return;
    }
    ++stats.retransmitted;
    loop.schedule(1, [&deliver, delta, peer, attempt] { deliver(delta, peer, attempt + 1); });
  };

  while (!pending_.empty()) {
    TableDelta delta = pending_.front();
    pending_.pop_front();
    for (const auto& peer : carols_) {
      if (peer == delta.source) continue;
      loop.schedule(1, [&deliver, delta, peer] { deliver(delta, peer, 0); });
    }
  }
  loop.run();
  return stats;
}

bool ControlPlane::converged() const {
  if (!pending_.empty()) return false;
  for (const auto& [carol, t] : tables_) {
    if (t.entries().size() != registered_.size()) return false;
    for (const auto& [endpoint, attached] : registered_) {
      const RouteEntry* e = t.resolve(endpoint);
      if (!e) return false;
      const bool direct = attached == carol;
      if (e->hop.direct != direct || (!direct && e->hop.via != attached)) return false;
      if (!(e->capabilities == capabilities_.at(endpoint))) return false;
    }
  }
  return true;
}

Route ControlPlane::lookup_route(const NodeId& source_carol, const NodeId& alice, const NodeId& bob) const {
  if (alice == bob) fail(ErrorCode::MalformedInput, "a route needs two distinct endpoints");
  const RoutingTable& t = table(source_carol);
  const RouteEntry* a = t.resolve(alice);
  if (!a || !a->hop.direct) fail(ErrorCode::NotFound, alice + " is not attached to " + source_carol);
  const RouteEntry* b = t.resolve(bob);
  if (!b) fail(ErrorCode::NotFound, source_carol + " cannot resolve " + bob);
  if (b->hop.direct) return Route{{alice, source_carol, bob}};
  return Route{{alice, source_carol, b->hop.via, bob}};
}

DirectoryListing ControlPlane::directory_list(const NodeId& carol, const NodeId& requester, AuthDomain& auth,
                                              const LinkTap& tap) {
  const RoutingTable& t = table(carol);
  if (!auth.pools.has(requester, carol)) {
    fail(ErrorCode::NoKey, requester + " shares no authentication key with " + carol);
  }

  ClassicalEnvelope req;
  req.session_id = kControlSession;
  req.sequence = next_sequence();
  req.origin = requester;
  req.destination = carol;
  req.payload_type = PayloadType::DirectoryRequest;
  const std::vector<NodeId> up{requester, carol};
  auto sent = send_authenticated(AuthScheme::RelayMediated, up, std::move(req), auth, tap);
  if (!sent.delivered) raise_rejection(sent);

  DirectoryListing listing;
  for (const auto& [endpoint, entry] : t.entries()) {
    listing.entries.push_back(DirectoryEntry{endpoint, entry.capabilities, entry.hop.direct ? carol : entry.hop.via});
  }
  ClassicalEnvelope resp;
  resp.session_id = kControlSession;
  resp.sequence = next_sequence();
  resp.origin = carol;
  resp.destination = requester;
  resp.payload_type = PayloadType::DirectoryResponse;
  resp.payload = listing.encode();
  const std::vector<NodeId> down{carol, requester};
  auto back = send_authenticated(AuthScheme::RelayMediated, down, std::move(resp), auth, tap);
  if (!back.delivered) raise_rejection(back);
  return DirectoryListing::decode(back.final_envelope.payload);
}

// ---------------------------------------------------------------------------
// Route check
// ---------------------------------------------------------------------------

RouteCheck verify_route_a_posteriori(std::span<const NodeId> announcing_relays, const Route& agreed) {
  RouteCheck check;
  const auto expected = agreed.interior();
  std::vector<NodeId> remaining(expected);
  for (const auto& id : announcing_relays) {
    auto it = std::find(remaining.begin(), remaining.end(), id);
    if (it == remaining.end()) {
      check.extra.push_back(id);
    } else {
      remaining.erase(it);
    }
  }
  check.missing = std::move(remaining);
  if (check.extra.empty() && check.missing.empty()) {
    check.order_mismatch = !std::equal(announcing_relays.begin(), announcing_relays.end(), expected.begin(),
                                       expected.end());
  }
  check.ok = check.extra.empty() && check.missing.empty() && !check.order_mismatch;
  return check;
}

}  // namespace qrelay
