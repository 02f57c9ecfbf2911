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

#include "qrelay/error.hpp"
#include "qrelay/routing.hpp"

namespace qrelay {

namespace {

Bytes encode_request(const SessionRequest& req, const Route& route) {
  ByteWriter w;
  w.str(req.alice);
  w.str(req.bob);
  w.str(to_string(req.scheme));
  w.u16(static_cast<std::uint16_t>(route.nodes.size()));
  for (const auto& n : route.nodes) w.str(n);
  return w.take();
}

void check_delivery(const DeliveryOutcome& out, const char* what) {
  if (out.delivered) return;
  const std::string detail = std::string(what) + ": " + out.detail;
  switch (out.reason) {
    case Rejection::NoKey: fail(ErrorCode::NoKey, detail);
    case Rejection::KeyExhaustion: fail(ErrorCode::KeyExhaustion, detail);
    default: fail(ErrorCode::TamperAlarm, detail);
  }
}

}  // namespace

SessionHandle establish_session(EstablishmentContext& ctx, const SessionRequest& request) {
  const auto alice_at = ctx.control.attachment_of(request.alice);
  if (!alice_at) fail(ErrorCode::NotFound, request.alice + " is not registered");
  if (!ctx.control.attachment_of(request.bob)) fail(ErrorCode::NotFound, request.bob + " is not registered");

  SessionHandle handle;
  handle.session_id = request.session_id;
  handle.route = ctx.control.lookup_route(*alice_at, request.alice, request.bob);

  const Capabilities a = *ctx.control.capabilities_of(request.alice);
  const Capabilities b = *ctx.control.capabilities_of(request.bob);
  if (a.can_transmit && b.can_receive) {
    handle.quantum_reversed = false;
  } else if (b.can_transmit && a.can_receive) {
    handle.quantum_reversed = true;
  } else {
    fail(ErrorCode::Capability, request.alice + " and " + request.bob +
                                    " have no transmitter facing a receiver");
  }

  Rng fallback(request.session_id);
  Rng& oob = ctx.out_of_band ? *ctx.out_of_band : fallback;
  handle.bootstrap = apply_bootstrap_policy(request.policy, request.scheme, handle.route.nodes, ctx.auth.pools,
                                            ctx.preshared_bits, oob, request.session_id);
  handle.scheme = handle.bootstrap.scheme;

  auto next_seq = [&] { return ctx.next_sequence ? ctx.next_sequence() : ctx.control.next_sequence(); };

  ClassicalEnvelope req;
  req.session_id = request.session_id;
  req.sequence = next_seq();
  req.origin = request.alice;
  req.destination = request.bob;
  req.payload_type = PayloadType::SessionRequest;
  req.payload = encode_request(request, handle.route);
  handle.handshake.push_back(send_authenticated(handle.scheme, handle.route.nodes, std::move(req), ctx.auth, ctx.tap));
  check_delivery(handle.handshake.back(), "session request");

  const bool accepted = !ctx.accepts || ctx.accepts(request.bob, request.alice);
  const Route back = handle.route.reversed();
  ClassicalEnvelope reply;
  reply.session_id = request.session_id;
  reply.sequence = next_seq();
  reply.origin = request.bob;
  reply.destination = request.alice;
  reply.payload_type = accepted ? PayloadType::SessionAccept : PayloadType::SessionDecline;
  reply.payload = encode_request(request, handle.route);
  handle.handshake.push_back(send_authenticated(handle.scheme, back.nodes, std::move(reply), ctx.auth, ctx.tap));
  check_delivery(handle.handshake.back(), "session reply");
  if (!accepted) fail(ErrorCode::Refused, request.bob + " declined a session with " + request.alice);

  // Tables may have changed while the request was in flight.
  const auto now_at = ctx.control.attachment_of(request.bob);
  if (!now_at || !(ctx.control.lookup_route(*alice_at, request.alice, request.bob) == handle.route)) {
    fail(ErrorCode::RouteLost, "route to " + request.bob + " changed during establishment");
  }
  return handle;
}

}  // namespace qrelay
