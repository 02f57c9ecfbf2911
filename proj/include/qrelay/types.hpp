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

#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>

#include "qrelay/bits.hpp"

namespace qrelay {

using NodeId = std::string;

/// Unordered pair of node ids, stored sorted so (a,b) and (b,a) compare equal.
struct NodePair {
  NodeId first;
  NodeId second;

  static NodePair of(NodeId a, NodeId b);
  bool contains(std::string_view id) const { return first == id || second == id; }
  const NodeId& other(std::string_view id) const { return first == id ? second : first; }
  std::string label() const { return first + "-" + second; }

  auto operator<=>(const NodePair&) const = default;
};

inline NodePair NodePair::of(NodeId a, NodeId b) {
  if (b < a) std::swap(a, b);
  return NodePair{std::move(a), std::move(b)};
}

/// Hardware boxes available at a node: a transmitter (Alice-like box) and/or
/// a receiver (Bob-like box).
struct Capabilities {
  bool can_transmit = true;
  bool can_receive = true;

  bool operator==(const Capabilities&) const = default;
};

/// Payload type codes carried by classical envelopes. Values are part of the
/// transcript format and must not be renumbered.
enum class PayloadType : std::uint16_t {
  SessionRequest = 1,
  SessionAccept = 2,
  SessionDecline = 3,
  BasisAnnounce = 10,
  EstimationSample = 20,
  EstimationBits = 21,
  CascadeParities = 30,
  CascadeMismatch = 31,
  CascadeBisect = 32,
  CascadeChoice = 33,
  VerifyTag = 34,
  AmplifySeed = 40,
  SessionEnd = 50,
  RouteUpdate = 60,
  DirectoryRequest = 70,
  DirectoryResponse = 71,
};

std::string_view to_string(PayloadType t);

/// Which end of a two-party public discussion is speaking.
enum class Speaker { Initiator, Responder };

/// Public classical channel used by the post-processing steps. Implementations
/// may authenticate and route the message; they signal failure by throwing.
using PublicChannel = std::function<void(Speaker, PayloadType, Bytes)>;

}  // namespace qrelay
