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
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "qrelay/error.hpp"
#include "qrelay/scenario.hpp"

namespace qrelay {

namespace {

using Json = nlohmann::ordered_json;

// Walks one JSON object, collecting violations instead of throwing, and
// reports every key that was never read.
class Fields {
 public:
  Fields(const Json& j, std::string loc, std::vector<Violation>& v) : j_(j), loc_(std::move(loc)), v_(v) {
    if (!j_.is_object()) {
      add("", "must be an object");
      ok_ = false;
    }
  }
  ~Fields() {
    if (!ok_) return;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) v_.push_back({loc_ + "/" + it.key(), "unknown key"});
    }
  }
  Fields(const Fields&) = delete;
  Fields& operator=(const Fields&) = delete;

  bool valid() const { return ok_; }
  std::string at(std::string_view key) const { return loc_ + "/" + std::string(key); }
  void add(std::string_view key, std::string message) {
    v_.push_back({key.empty() ? loc_ : at(key), std::move(message)});
  }

  const Json* find(const std::string& key) {
    if (!ok_) return nullptr;
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  const Json* require(const std::string& key) {
    const Json* p = find(key);
    if (!p && ok_) add(key, "required");
    return p;
  }

  void string(const std::string& key, std::string& out, bool required = false) {
    const Json* p = required ? require(key) : find(key);
    if (!p) return;
    if (!p->is_string()) return add(key, "must be a string");
    out = p->get<std::string>();
  }
  void boolean(const std::string& key, bool& out) {
    const Json* p = find(key);
    if (!p) return;
    if (!p->is_boolean()) return add(key, "must be true or false");
    out = p->get<bool>();
  }
  template <typename T>
  void integer(const std::string& key, T& out, std::uint64_t lo, std::uint64_t hi, bool required = false) {
    const Json* p = required ? require(key) : find(key);
    if (!p) return;
    if (p->is_number_integer() && !p->is_number_unsigned()) {
      return add(key, "out of range: must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got " +
                          p->dump());
    }
    if (!p->is_number_unsigned()) return add(key, "must be an integer");
    const auto x = p->get<std::uint64_t>();
    if (x < lo || x > hi) {
      return add(key, "out of range: must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got " +
                          std::to_string(x));
    }
    out = static_cast<T>(x);
  }
  void number(const std::string& key, double& out, double lo, double hi, bool open_lo = false, bool open_hi = false) {
    const Json* p = find(key);
    if (!p) return;
    if (!p->is_number()) return add(key, "must be a number");
    const double x = p->get<double>();
    const bool below = open_lo ? x <= lo : x < lo;
    const bool above = open_hi ? x >= hi : x > hi;
    if (below || above) {
      return add(key, std::string("out of range: must lie in ") + (open_lo ? "(" : "[") + Json(lo).dump() + ", " +
                          Json(hi).dump() + (open_hi ? ")" : "]") + ", got " + p->dump());
    }
    out = x;
  }
  /// [a, b] of two strings.
  bool pair(const std::string& key, NodePair& out) {
    const Json* p = require(key);
    if (!p) return false;
    if (!p->is_array() || p->size() != 2 || !(*p)[0].is_string() || !(*p)[1].is_string()) {
      add(key, "must be a list of two node ids");
      return false;
    }
    out = NodePair::of((*p)[0].get<std::string>(), (*p)[1].get<std::string>());
    return true;
  }

 private:
  const Json& j_;
  std::string loc_;
  std::vector<Violation>& v_;
  std::set<std::string> seen_;
  bool ok_ = true;
};

// Duplicate keys would otherwise be resolved silently by the parser.
class DuplicateKeys {
 public:
  explicit DuplicateKeys(std::vector<Violation>& v) : v_(v) {}

  bool operator()(int, Json::parse_event_t event, Json& parsed) {
    using E = Json::parse_event_t;
    switch (event) {
      case E::object_start:
      case E::array_start:
        frames_.push_back({event == E::object_start, {}, {}, 0});
        break;
      case E::object_end:
      case E::array_end:
        frames_.pop_back();
        next();
        break;
      case E::key: {
        auto& f = frames_.back();
        f.key = parsed.get<std::string>();
        if (!f.keys.insert(f.key).second) v_.push_back({pointer(), "duplicate key"});
        break;
      }
      case E::value:
        next();
        break;
    }
    return true;
  }

 private:
  struct Frame {
    bool object = true;
    std::set<std::string> keys;
    std::string key;
    std::size_t index = 0;
  };
  void next() {
    if (!frames_.empty() && !frames_.back().object) ++frames_.back().index;
  }
  std::string pointer() const {
    std::string s;
    for (const auto& f : frames_) s += "/" + (f.object ? f.key : std::to_string(f.index));
    return s;
  }

  std::vector<Violation>& v_;
  std::vector<Frame> frames_;
};

constexpr std::uint64_t kMaxU64 = ~std::uint64_t{0};
constexpr std::uint64_t kMaxBits = std::uint64_t{1} << 32;
constexpr std::uint64_t kMaxRounds = std::uint64_t{1} << 28;

void parse_nodes(const Json& nodes, std::vector<NodeConfig>& out, std::vector<Violation>& v) {
  if (!nodes.is_array() || nodes.empty()) {
    v.push_back({"/network/nodes", "must be a non-empty list"});
    return;
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    Fields f(nodes[i], "/network/nodes/" + std::to_string(i), v);
    if (!f.valid()) continue;
    NodeConfig n;
    f.string("id", n.id, true);
    std::string role;
    f.string("role", role, true);
    if (!role.empty() && role != "relay" && role != "endpoint") f.add("role", "must be relay or endpoint, got " + role);
    n.role = role == "relay" ? NodeRole::Relay : NodeRole::Endpoint;
    if (const Json* a = f.find("attach")) {
      if (a->is_string()) {
        n.attachments.push_back(a->get<std::string>());
      } else if (a->is_array() && std::all_of(a->begin(), a->end(), [](const Json& x) { return x.is_string(); })) {
        for (const auto& x : *a) n.attachments.push_back(x.get<std::string>());
      } else {
        f.add("attach", "must be a node id or a list of node ids");
      }
    }
    f.boolean("transmit", n.capabilities.can_transmit);
    f.boolean("receive", n.capabilities.can_receive);
    f.boolean("declines", n.declines);
    out.push_back(std::move(n));
  }
}

void parse_faults(Fields& parent, SessionFaults& out, std::vector<Violation>& v) {
  const Json* j = parent.find("faults");
  if (!j) return;
  Fields f(*j, parent.at("faults"), v);
  if (!f.valid()) return;
  if (const Json* d = f.find("detour")) {
    Fields df(*d, f.at("detour"), v);
    if (df.valid()) {
      std::string after, via;
      df.string("after", after, true);
      df.string("via", via, true);
      if (!after.empty()) out.detour_after = after;
      if (!via.empty()) out.detour_via = via;
    }
  }
  std::string silent;
  f.string("silent_relay", silent);
  if (!silent.empty()) out.silent_relay = silent;
  f.boolean("deregister_bob", out.deregister_bob);
}

void parse_run(const Json& j, std::size_t i, RunConfig& r, std::vector<Violation>& v) {
  Fields f(j, "/sessions/runs/" + std::to_string(i), v);
  if (!f.valid()) return;
  f.string("alice", r.alice, true);
  f.string("bob", r.bob, true);
  f.integer("rounds", r.rounds, 1, kMaxRounds);
  std::string s;
  f.string("scheme", s);
  if (!s.empty()) {
    if (auto x = parse_scheme(s)) r.scheme = *x;
    else f.add("scheme", "must be relay_mediated, end_to_end or full_chain, got " + s);
  }
  s.clear();
  f.string("policy", s);
  if (!s.empty()) {
    if (auto x = parse_policy(s)) r.policy = *x;
    else f.add("policy", "must be trust_carol_always, first_run_bootstrap or out_of_band_preshared, got " + s);
  }
  f.number("final_key_reserve", r.final_key_reserve, 0.0, 1.0);
  f.number("qber_threshold", r.qber_threshold, 0.0, 0.5);
  f.number("sample_fraction", r.sample_fraction, 0.0, 1.0, true, true);
  if (const Json* rc = f.find("reconciliation")) {
    Fields rf(*rc, f.at("reconciliation"), v);
    if (rf.valid()) {
      rf.integer("block_size", r.reconciliation.block_size_initial, 1, kMaxBits);
      rf.integer("passes", r.reconciliation.passes, 1, 64);
      rf.integer("verification_tag_bits", r.reconciliation.verification_tag_bits, 0, 64);
    }
  }
  f.integer("repeat", r.repeat, 1, 100000);
  parse_faults(f, r.faults, v);
}

// Ids referenced outside the node list.
void check_references(const ScenarioConfig& c, std::vector<Violation>& v) {
  std::map<NodeId, NodeRole> roles;
  for (const auto& n : c.network.nodes) roles.emplace(n.id, n.role);
  auto defined = [&](const NodeId& id, const std::string& loc) {
    if (roles.contains(id)) return true;
    v.push_back({loc, "undefined node " + id});
    return false;
  };
  auto relay = [&](const NodeId& id, const std::string& loc) {
    if (defined(id, loc) && roles[id] != NodeRole::Relay) v.push_back({loc, id + " is not a carol"});
  };
  for (std::size_t i = 0; i < c.network.link_noise.size(); ++i) {
    const auto& p = c.network.link_noise[i].link;
    const std::string loc = "/links/quantum/" + std::to_string(i) + "/between";
    defined(p.first, loc);
    defined(p.second, loc);
  }
  for (std::size_t i = 0; i < c.network.adversaries.size(); ++i) {
    const auto& p = c.network.adversaries[i].link;
    const std::string loc = "/adversaries/" + std::to_string(i) + "/link";
    defined(p.first, loc);
    defined(p.second, loc);
  }
  for (std::size_t i = 0; i < c.runs.size(); ++i) {
    const auto& r = c.runs[i];
    const std::string loc = "/sessions/runs/" + std::to_string(i);
    for (const auto& [key, id] : {std::pair{"alice", r.alice}, std::pair{"bob", r.bob}}) {
      if (id.empty()) continue;
      if (defined(id, loc + "/" + key) && roles[id] != NodeRole::Endpoint) {
        v.push_back({loc + "/" + key, id + " is not an endpoint"});
      }
    }
    if (!r.alice.empty() && r.alice == r.bob) v.push_back({loc + "/bob", "alice and bob must differ"});
    if (r.faults.detour_after) relay(*r.faults.detour_after, loc + "/faults/detour/after");
    if (r.faults.detour_via) relay(*r.faults.detour_via, loc + "/faults/detour/via");
    if (r.faults.silent_relay) relay(*r.faults.silent_relay, loc + "/faults/silent_relay");
  }
}

}  // namespace

std::vector<SessionSpec> ScenarioConfig::sessions() const {
  std::vector<SessionSpec> out;
  std::uint64_t id = 1;
  for (const auto& r : runs) {
    for (std::size_t k = 0; k < r.repeat; ++k) {
      SessionSpec s;
      s.id = id++;
      s.alice = r.alice;
      s.bob = r.bob;
      s.rounds = r.rounds;
      s.scheme = r.scheme;
      s.policy = r.policy;
      s.final_key_reserve = r.final_key_reserve;
      s.qber_threshold = r.qber_threshold;
      s.sample_fraction = r.sample_fraction;
      s.reconciliation = r.reconciliation;
      s.faults = r.faults;
      out.push_back(std::move(s));
    }
  }
  return out;
}

ScenarioConfig parse_config(std::string_view text) {
  std::vector<Violation> v;
  Json root;
  try {
    root = Json::parse(text.begin(), text.end(), DuplicateKeys(v));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::Syntax, std::string("config is not valid JSON: ") + e.what());
  }

  ScenarioConfig c;
  {
    Fields top(root, "", v);
    if (!top.valid()) throw ValidationError(std::move(v));
    top.string("name", c.name);
    top.integer("seed", c.seed, 0, kMaxU64, true);
    c.network.seed = c.seed;

    if (const Json* net = top.require("network")) {
      Fields f(*net, "/network", v);
      if (f.valid()) {
        if (const Json* nodes = f.require("nodes")) parse_nodes(*nodes, c.network.nodes, v);
        f.integer("initial_pool_bits", c.network.initial_pool_bits, 0, kMaxBits);
        f.integer("preshared_bits", c.network.preshared_bits, 128, kMaxBits);
      }
    }

    if (const Json* links = top.find("links")) {
      Fields f(*links, "/links", v);
      if (f.valid()) {
        f.number("default_noise", c.network.default_noise, 0.0, 1.0);
        if (const Json* q = f.find("quantum")) {
          if (!q->is_array()) {
            f.add("quantum", "must be a list");
          } else {
            for (std::size_t i = 0; i < q->size(); ++i) {
              Fields lf((*q)[i], "/links/quantum/" + std::to_string(i), v);
              if (!lf.valid()) continue;
              LinkNoise ln;
              lf.pair("between", ln.link);
              if (const Json* n = lf.require("noise"); n && !n->is_number()) {
                lf.add("noise", "must be a number");
              } else if (n) {
                ln.flip_probability = n->get<double>();
              }
              c.network.link_noise.push_back(std::move(ln));
            }
          }
        }
      }
    }

    if (const Json* auth = top.find("auth")) {
      Fields f(*auth, "/auth", v);
      if (f.valid()) {
        f.integer("tag_bits", c.network.auth.tag_bits, 1, 64);
        f.integer("key_bits_per_tag", c.network.auth.key_bits_per_tag, 128, kMaxBits);
      }
    }

    if (const Json* sessions = top.find("sessions")) {
      Fields f(*sessions, "/sessions", v);
      if (f.valid()) {
        std::string m;
        f.string("multiplex", m);
        if (!m.empty()) {
          if (auto p = parse_multiplex(m)) c.multiplex = *p;
          else f.add("multiplex", "must be run_by_run or qubit_by_qubit, got " + m);
        }
        if (const Json* runs = f.find("runs")) {
          if (!runs->is_array()) {
            f.add("runs", "must be a list");
          } else {
            for (std::size_t i = 0; i < runs->size(); ++i) {
              RunConfig r;
              parse_run((*runs)[i], i, r, v);
              c.runs.push_back(std::move(r));
            }
          }
        }
      }
    }

    if (const Json* adv = top.find("adversaries")) {
      if (!adv->is_array()) {
        top.add("adversaries", "must be a list");
      } else {
        for (std::size_t i = 0; i < adv->size(); ++i) {
          Fields f((*adv)[i], "/adversaries/" + std::to_string(i), v);
          if (!f.valid()) continue;
          AdversaryModel a;
          std::string kind;
          f.string("kind", kind, true);
          if (!kind.empty()) {
            if (auto k = parse_adversary_kind(kind)) a.kind = *k;
            else f.add("kind", "must be eve_intercept_resend, passive_tap, tamper or inject, got " + kind);
          }
          f.pair("link", a.link);
          f.number("fraction", a.fraction, 0.0, 1.0);
          std::string target;
          f.string("target", target);
          if (!target.empty()) {
            bool found = false;
            for (int code = 0; code < 128 && !found; ++code) {
              const auto t = static_cast<PayloadType>(code);
              if (to_string(t) == target) {
                a.target = t;
                found = true;
              }
            }
            if (!found) f.add("target", "unknown payload type " + target);
          }
          f.integer("attempts", a.attempts, 1, 100000);
          c.network.adversaries.push_back(std::move(a));
        }
      }
    }
  }

  std::set<std::string> reported;
  check_references(c, v);
  for (const auto& x : v) reported.insert(x.location);
  for (auto& x : validate_network(c.network)) {
    if (!reported.contains(x.location)) v.push_back(std::move(x));
  }
  if (c.multiplex == MultiplexPolicy::QubitByQubit) {
    for (std::size_t i = 1; i < c.runs.size(); ++i) {
      if (c.runs[i].alice != c.runs[0].alice) {
        v.push_back({"/sessions/runs/" + std::to_string(i) + "/alice", "qubit_by_qubit sessions must share one alice"});
      }
    }
  }
  if (!v.empty()) throw ValidationError(std::move(v));
  return c;
}

std::string render_config(const ScenarioConfig& c) {
  Json root;
  root["name"] = c.name;
  root["seed"] = c.seed;

  Json nodes = Json::array();
  for (const auto& n : c.network.nodes) {
    Json j;
    j["id"] = n.id;
    j["role"] = std::string(to_string(n.role));
    if (n.attachments.size() == 1) {
      j["attach"] = n.attachments[0];
    } else if (!n.attachments.empty()) {
      j["attach"] = n.attachments;
    }
    j["transmit"] = n.capabilities.can_transmit;
    j["receive"] = n.capabilities.can_receive;
    j["declines"] = n.declines;
    nodes.push_back(std::move(j));
  }
  root["network"]["nodes"] = std::move(nodes);
  root["network"]["initial_pool_bits"] = c.network.initial_pool_bits;
  root["network"]["preshared_bits"] = c.network.preshared_bits;

  root["links"]["default_noise"] = c.network.default_noise;
  Json quantum = Json::array();
  for (const auto& ln : c.network.link_noise) {
    Json j;
    j["between"] = {ln.link.first, ln.link.second};
    j["noise"] = ln.flip_probability;
    quantum.push_back(std::move(j));
  }
  root["links"]["quantum"] = std::move(quantum);

  root["auth"]["tag_bits"] = c.network.auth.tag_bits;
  root["auth"]["key_bits_per_tag"] = c.network.auth.key_bits_per_tag;

  root["sessions"]["multiplex"] = std::string(to_string(c.multiplex));
  Json runs = Json::array();
  for (const auto& r : c.runs) {
    Json j;
    j["alice"] = r.alice;
    j["bob"] = r.bob;
    j["rounds"] = r.rounds;
    j["scheme"] = std::string(to_string(r.scheme));
    j["policy"] = std::string(to_string(r.policy));
    j["final_key_reserve"] = r.final_key_reserve;
    j["qber_threshold"] = r.qber_threshold;
    j["sample_fraction"] = r.sample_fraction;
    j["reconciliation"]["block_size"] = r.reconciliation.block_size_initial;
    j["reconciliation"]["passes"] = r.reconciliation.passes;
    j["reconciliation"]["verification_tag_bits"] = r.reconciliation.verification_tag_bits;
    j["repeat"] = r.repeat;
    Json faults = Json::object();
    if (r.faults.detour_after || r.faults.detour_via) {
      faults["detour"]["after"] = r.faults.detour_after.value_or("");
      faults["detour"]["via"] = r.faults.detour_via.value_or("");
    }
    if (r.faults.silent_relay) faults["silent_relay"] = *r.faults.silent_relay;
    faults["deregister_bob"] = r.faults.deregister_bob;
    j["faults"] = std::move(faults);
    runs.push_back(std::move(j));
  }
  root["sessions"]["runs"] = std::move(runs);

  Json adv = Json::array();
  for (const auto& a : c.network.adversaries) {
    Json j;
    j["kind"] = std::string(to_string(a.kind));
    j["link"] = {a.link.first, a.link.second};
    j["fraction"] = a.fraction;
    if (a.target) j["target"] = std::string(to_string(*a.target));
    j["attempts"] = a.attempts;
    adv.push_back(std::move(j));
  }
  root["adversaries"] = std::move(adv);
  return root.dump(2) + "\n";
}

}  // namespace qrelay
