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

#include <set>

#include "qrelay/error.hpp"
#include "qrelay/netsim.hpp"
#include "records.hpp"

namespace qrelay {

std::string_view to_string(NodeRole r) { return r == NodeRole::Relay ? "relay" : "endpoint"; }

std::string_view to_string(LinkKind k) { return k == LinkKind::Quantum ? "quantum" : "classical"; }

std::string_view to_string(AdversaryKind k) {
  switch (k) {
    case AdversaryKind::EveInterceptResend: return "eve_intercept_resend";
    case AdversaryKind::PassiveTap: return "passive_tap";
    case AdversaryKind::Tamper: return "tamper";
    case AdversaryKind::Inject: return "inject";
  }
  return "unknown";
}

std::optional<AdversaryKind> parse_adversary_kind(std::string_view s) {
  for (auto k : {AdversaryKind::EveInterceptResend, AdversaryKind::PassiveTap, AdversaryKind::Tamper,
                 AdversaryKind::Inject}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::string Transcript::str() const {
  std::string out;
  for (const auto& l : lines_) {
    out += l;
    out += '\n';
  }
  return out;
}

namespace {

std::string at(std::string_view section, std::size_t i, std::string_view field = {}) {
  std::string s = "/network/" + std::string(section) + "/" + std::to_string(i);
  if (!field.empty()) s += "/" + std::string(field);
  return s;
}

bool probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

std::vector<Violation> validate_network(const NetworkConfig& config) {
  std::vector<Violation> v;
  std::map<NodeId, const NodeConfig*> by_id;
  for (std::size_t i = 0; i < config.nodes.size(); ++i) {
    const auto& n = config.nodes[i];
    if (n.id.empty()) v.push_back({at("nodes", i, "id"), "node id must not be empty"});
    if (!by_id.emplace(n.id, &n).second) v.push_back({at("nodes", i, "id"), "duplicate node id " + n.id});
  }
  auto is_relay = [&](const NodeId& id) {
    auto it = by_id.find(id);
    return it != by_id.end() && it->second->role == NodeRole::Relay;
  };

  for (std::size_t i = 0; i < config.nodes.size(); ++i) {
    const auto& n = config.nodes[i];
    if (n.role == NodeRole::Relay) {
      if (!n.capabilities.can_transmit || !n.capabilities.can_receive) {
        v.push_back({at("nodes", i, "capabilities"), "relay " + n.id + " needs both a transmitter and a receiver"});
      }
      if (!n.attachments.empty()) v.push_back({at("nodes", i, "attach"), "relay " + n.id + " cannot attach to a carol"});
      continue;
    }
    if (!n.capabilities.can_transmit && !n.capabilities.can_receive) {
      v.push_back({at("nodes", i, "capabilities"), "endpoint " + n.id + " has no quantum hardware"});
    }
    if (n.attachments.size() != 1) {
      v.push_back({at("nodes", i, "attach"), "endpoint " + n.id + " must attach to exactly one carol, found " +
                                                 std::to_string(n.attachments.size())});
    }
    for (const auto& a : n.attachments) {
      if (!by_id.contains(a)) {
        v.push_back({at("nodes", i, "attach"), "undefined carol " + a});
      } else if (!is_relay(a)) {
        v.push_back({at("nodes", i, "attach"), a + " is not a carol"});
      }
    }
  }

  // Star and mesh edges.
  std::set<NodePair> edges;
  std::vector<NodeId> carols;
  for (const auto& n : config.nodes) {
    if (n.role == NodeRole::Relay) carols.push_back(n.id);
  }
  for (std::size_t i = 0; i < carols.size(); ++i)
    for (std::size_t j = i + 1; j < carols.size(); ++j) edges.insert(NodePair::of(carols[i], carols[j]));
  for (const auto& n : config.nodes) {
    if (n.role == NodeRole::Endpoint && n.attachments.size() == 1 && is_relay(n.attachments[0])) {
      edges.insert(NodePair::of(n.id, n.attachments[0]));
    }
  }

  if (!probability(config.default_noise)) v.push_back({"/links/default_noise", "must lie in [0, 1]"});
  std::set<NodePair> noisy;
  for (std::size_t i = 0; i < config.link_noise.size(); ++i) {
    const auto& ln = config.link_noise[i];
    const std::string loc = "/links/quantum/" + std::to_string(i);
    if (!probability(ln.flip_probability)) v.push_back({loc + "/noise", "must lie in [0, 1]"});
    if (!edges.contains(ln.link)) v.push_back({loc + "/between", "no quantum link " + ln.link.label()});
    if (!noisy.insert(ln.link).second) v.push_back({loc + "/between", "link " + ln.link.label() + " listed twice"});
  }
  for (std::size_t i = 0; i < config.adversaries.size(); ++i) {
    const auto& a = config.adversaries[i];
    const std::string loc = "/adversaries/" + std::to_string(i);
    if (!edges.contains(a.link)) v.push_back({loc + "/link", "no link " + a.link.label()});
    if (!probability(a.fraction)) v.push_back({loc + "/fraction", "must lie in [0, 1]"});
    if (a.kind == AdversaryKind::Inject && a.attempts == 0) v.push_back({loc + "/attempts", "must be at least 1"});
  }
  try {
    config.auth.validate();
  } catch (const Error& e) {
    v.push_back({"/auth", e.what()});
  }
  return v;
}

namespace {

std::set<NodePair> star_and_mesh(const NetworkConfig& config, std::vector<NodeId>& carols) {
  std::set<NodePair> edges;
  for (const auto& n : config.nodes) {
    if (n.role == NodeRole::Relay) carols.push_back(n.id);
  }
  for (std::size_t i = 0; i < carols.size(); ++i)
    for (std::size_t j = i + 1; j < carols.size(); ++j) edges.insert(NodePair::of(carols[i], carols[j]));
  for (const auto& n : config.nodes) {
    if (n.role == NodeRole::Endpoint && n.attachments.size() == 1) edges.insert(NodePair::of(n.id, n.attachments[0]));
  }
  return edges;
}

}  // namespace

Network Network::build(const NetworkConfig& config) {
  if (auto v = validate_network(config); !v.empty()) throw ValidationError(std::move(v));
  std::vector<NodeId> carols;
  const std::set<NodePair> edges = star_and_mesh(config, carols);

  Network net;
  net.config_ = config;
  for (const auto& n : config.nodes) {
    net.index_[n.id] = net.nodes_.size();
    net.nodes_.push_back(Node{n.id, n.role, n.capabilities, n.attachments.empty() ? NodeId{} : n.attachments[0],
                              n.declines});
  }
  for (const auto& e : edges) {
    Link q{e, LinkKind::Quantum, NoiseModel{config.default_noise}, {}};
    for (const auto& ln : config.link_noise) {
      if (ln.link == e) q.noise = NoiseModel::with_flip(ln.flip_probability);
    }
    Link c{e, LinkKind::Classical, NoiseModel{}, {}};
    for (const auto& a : config.adversaries) {
      if (a.link != e) continue;
      (a.kind == AdversaryKind::EveInterceptResend ? q : c).adversaries.push_back(a);
    }
    net.links_.push_back(std::move(q));
    net.links_.push_back(std::move(c));
  }

  net.auth_.params = config.auth;
  records::Json pools = records::Json::array();
  for (const auto& e : edges) {
    Rng rng = Rng::derive(config.seed, "pool:" + e.label());
    Bits bits(config.initial_pool_bits);
    for (auto& b : bits) b = rng.bit();
    net.auth_.pools.create(e, std::move(bits), 0);
    records::Json p;
    p["pair"] = records::pair_json(e);
    p["bits"] = config.initial_pool_bits;
    pools.push_back(std::move(p));
  }

  net.control_ = ControlPlane(carols);
  for (const auto& n : net.nodes_) {
    if (n.role == NodeRole::Endpoint) net.control_.register_endpoint(n.attachment, n.id, n.capabilities);
  }
  net.setup_stats_ = net.control_.propagate(net.auth_, net.loop_);

  records::Json rec;
  rec["type"] = "network";
  rec["seed"] = config.seed;
  records::Json nodes = records::Json::array();
  for (const auto& n : net.nodes_) {
    records::Json nj;
    nj["id"] = n.id;
    nj["role"] = std::string(to_string(n.role));
    nj["transmit"] = n.capabilities.can_transmit;
    nj["receive"] = n.capabilities.can_receive;
    nj["attachment"] = n.attachment.empty() ? records::Json(nullptr) : records::Json(n.attachment);
    nodes.push_back(std::move(nj));
  }
  rec["nodes"] = std::move(nodes);
  rec["quantum_links"] = net.link_count(LinkKind::Quantum);
  rec["classical_links"] = net.link_count(LinkKind::Classical);
  rec["tag_bits"] = config.auth.tag_bits;
  rec["key_bits_per_tag"] = config.auth.key_bits_per_tag;
  rec["pools"] = std::move(pools);
  net.setup_.append(records::line(rec));

  records::Json tables;
  tables["type"] = "tables";
  tables["messages"] = net.setup_stats_.messages_sent;
  tables["rejected"] = net.setup_stats_.rejected;
  tables["retransmitted"] = net.setup_stats_.retransmitted;
  tables["stalled"] = net.setup_stats_.stalled;
  tables["converged"] = net.control_.converged();
  net.setup_.append(records::line(tables));
  return net;
}

Network build_network(const NetworkConfig& config) { return Network::build(config); }

const Node& Network::node(const NodeId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) fail(ErrorCode::NotFound, "no node named " + id);
  return nodes_[it->second];
}

bool Network::has_node(const NodeId& id) const { return index_.contains(id); }

const Link* Network::link(const NodeId& a, const NodeId& b, LinkKind kind) const {
  const NodePair p = NodePair::of(a, b);
  for (const auto& l : links_) {
    if (l.kind == kind && l.endpoints == p) return &l;
  }
  return nullptr;
}

std::size_t Network::link_count(LinkKind kind) const {
  std::size_t n = 0;
  for (const auto& l : links_) n += l.kind == kind ? 1 : 0;
  return n;
}

PropagationStats Network::deregister(const NodeId& endpoint) {
  const auto at = control_.attachment_of(endpoint);
  if (!at) fail(ErrorCode::NotFound, endpoint + " is not registered");
  control_.deregister_endpoint(*at, endpoint);
  return control_.propagate(auth_, loop_);
}

}  // namespace qrelay
