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

#include "records.hpp"

#include "qrelay/error.hpp"

namespace qrelay::records {

std::string bits_hex(std::span<const std::uint8_t> bits) { return to_hex(pack_bytes(bits)); }

std::string bases_hex(std::span<const Basis> bases) {
  Bits b(bases.size());
  for (std::size_t i = 0; i < bases.size(); ++i) b[i] = bases[i] == Basis::Y ? 1 : 0;
  return bits_hex(b);
}

Bits hex_bits(const std::string& hex, std::size_t n_bits) {
  const Bytes bytes = from_hex(hex);
  if (bytes.size() * 8 < n_bits) fail(ErrorCode::MalformedInput, "hex field shorter than its bit count");
  return unpack_bytes(bytes, n_bits);
}

Json pair_json(const NodePair& p) { return Json::array({p.first, p.second}); }

Json nodes_json(std::span<const NodeId> nodes) {
  Json a = Json::array();
  for (const auto& n : nodes) a.push_back(n);
  return a;
}

Json tag_json(const AuthTag& t) {
  Json j;
  j["author"] = t.author;
  j["recipient"] = t.recipient;
  j["offset"] = t.key_offset;
  j["value"] = to_hex64(t.value);
  j["covers"] = t.covers == TagScope::Payload ? "payload" : "payload+prior";
  return j;
}

AuthTag tag_from_json(const Json& j) {
  AuthTag t;
  t.author = j.at("author").get<std::string>();
  t.recipient = j.at("recipient").get<std::string>();
  t.key_offset = j.at("offset").get<std::uint64_t>();
  const Bytes v = from_hex(j.at("value").get<std::string>());
  if (v.size() != 8) fail(ErrorCode::MalformedInput, "tag value must be 16 hex digits");
  t.value = 0;
  for (auto b : v) t.value = (t.value << 8) | b;
  const auto covers = j.at("covers").get<std::string>();
  if (covers == "payload") {
    t.covers = TagScope::Payload;
  } else if (covers == "payload+prior") {
    t.covers = TagScope::PayloadAndPriorTags;
  } else {
    fail(ErrorCode::MalformedInput, "unknown tag scope " + covers);
  }
  return t;
}

Json envelope(const ClassicalEnvelope& sent, AuthScheme scheme, std::span<const NodeId> path,
              const DeliveryOutcome& out, const std::vector<bool>& tapped, bool forged) {
  Json j;
  j["type"] = "envelope";
  j["session"] = sent.session_id;
  j["seq"] = sent.sequence;
  j["origin"] = sent.origin;
  j["destination"] = sent.destination;
  j["payload_type"] = std::string(to_string(sent.payload_type));
  j["payload"] = to_hex(sent.payload);
  j["scheme"] = std::string(to_string(scheme));
  j["forged"] = forged;
  j["path"] = nodes_json(path);
  Json hops = Json::array();
  for (std::size_t h = 0; h < out.hops.size(); ++h) {
    const HopRecord& hop = out.hops[h];
    Json r;
    r["from"] = hop.from;
    r["to"] = hop.to;
    r["altered"] = hop.altered;
    r["tapped"] = h < tapped.size() && tapped[h];
    const ClassicalEnvelope& got = hop.received;
    if (got.header_and_payload() != sent.header_and_payload()) {
      Json hdr;
      hdr["seq"] = got.sequence;
      hdr["origin"] = got.origin;
      hdr["destination"] = got.destination;
      hdr["payload_type"] = std::string(to_string(got.payload_type));
      hdr["payload"] = to_hex(got.payload);
      r["received"] = std::move(hdr);
    }
    Json tags = Json::array();
    for (const auto& t : got.tag_chain) tags.push_back(tag_json(t));
    r["tags"] = std::move(tags);
    Json checks = Json::array();
    for (const auto& c : hop.checks) {
      Json cj;
      cj["tag"] = c.tag_index;
      cj["author"] = c.author;
      cj["offset"] = c.key_offset;
      cj["key"] = bits_hex(c.key_segment);
      cj["stale"] = c.stale;
      cj["ok"] = c.ok;
      checks.push_back(std::move(cj));
    }
    r["checks"] = std::move(checks);
    std::string outcome = hop.verified ? "verified" : "forwarded";
    if (hop.rejection != Rejection::None) outcome = std::string(to_string(hop.rejection));
    r["outcome"] = outcome;
    hops.push_back(std::move(r));
  }
  j["hops"] = std::move(hops);
  j["delivered"] = out.delivered;
  j["rejected_by"] = out.rejected_by ? Json(*out.rejected_by) : Json(nullptr);
  j["reason"] = std::string(to_string(out.reason));
  return j;
}

std::optional<PayloadType> parse_payload_type(std::string_view s) {
  static constexpr PayloadType all[] = {
      PayloadType::SessionRequest,   PayloadType::SessionAccept,   PayloadType::SessionDecline,
      PayloadType::BasisAnnounce,    PayloadType::EstimationSample, PayloadType::EstimationBits,
      PayloadType::CascadeParities,  PayloadType::CascadeMismatch, PayloadType::CascadeBisect,
      PayloadType::CascadeChoice,    PayloadType::VerifyTag,       PayloadType::AmplifySeed,
      PayloadType::SessionEnd,       PayloadType::RouteUpdate,     PayloadType::DirectoryRequest,
      PayloadType::DirectoryResponse,
  };
  for (auto t : all) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

std::string key_digest(std::span<const std::uint8_t> bits) {
  const Bytes packed = pack_bytes(bits);
  std::string s(packed.begin(), packed.end());
  s += ":" + std::to_string(bits.size());
  return to_hex64(fnv1a64(s));
}

std::string line(const Json& j) { return j.dump(); }

}  // namespace qrelay::records
