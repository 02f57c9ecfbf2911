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

// Transcript record builders shared by the network, session and replay code.

#include <nlohmann/json.hpp>

#include "qrelay/auth.hpp"
#include "qrelay/netsim.hpp"

namespace qrelay::records {

using Json = nlohmann::ordered_json;

std::string bits_hex(std::span<const std::uint8_t> bits);
std::string bases_hex(std::span<const Basis> bases);
Bits hex_bits(const std::string& hex, std::size_t n_bits);

Json pair_json(const NodePair& p);
Json nodes_json(std::span<const NodeId> nodes);

Json tag_json(const AuthTag& t);
AuthTag tag_from_json(const Json& j);

/// Envelope as sent plus what every hop saw and checked.
Json envelope(const ClassicalEnvelope& sent, AuthScheme scheme, std::span<const NodeId> path,
              const DeliveryOutcome& out, const std::vector<bool>& tapped, bool forged);

std::optional<PayloadType> parse_payload_type(std::string_view s);

/// 64-bit fingerprint of a key, so transcripts can be compared without holding secrets.
std::string key_digest(std::span<const std::uint8_t> bits);

std::string line(const Json& j);

}  // namespace qrelay::records
