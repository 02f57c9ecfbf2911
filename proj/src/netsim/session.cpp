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
#include <memory>
#include <set>

#include "qrelay/error.hpp"
#include "qrelay/netsim.hpp"
#include "records.hpp"

namespace qrelay {

using records::Json;

std::string_view to_string(FailureKind k) {
  switch (k) {
    case FailureKind::None: return "none";
    case FailureKind::QberAbort: return "QBER_ABORT";
    case FailureKind::ReconciliationAbort: return "RECONCILIATION_ABORT";
    case FailureKind::TamperAlarm: return "TAMPER_ALARM";
    case FailureKind::KeyExhaustion: return "KEY_EXHAUSTION";
    case FailureKind::NoKey: return "NO_KEY";
    case FailureKind::RouteLost: return "ROUTE_LOST";
    case FailureKind::RouteMismatch: return "ROUTE_MISMATCH";
    case FailureKind::Refused: return "REFUSED";
    case FailureKind::Capability: return "CAPABILITY";
    case FailureKind::NotFound: return "NOT_FOUND";
    case FailureKind::Malformed: return "MALFORMED";
  }
  return "unknown";
}

std::optional<FailureKind> parse_failure_kind(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(FailureKind::Malformed); ++i) {
    const auto k = static_cast<FailureKind>(i);
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::string_view to_string(MultiplexPolicy p) {
  return p == MultiplexPolicy::RunByRun ? "run_by_run" : "qubit_by_qubit";
}

std::optional<MultiplexPolicy> parse_multiplex(std::string_view s) {
  if (s == "run_by_run") return MultiplexPolicy::RunByRun;
  if (s == "qubit_by_qubit") return MultiplexPolicy::QubitByQubit;
  return std::nullopt;
}

namespace {

FailureKind classify(ErrorCode code) {
  switch (code) {
    case ErrorCode::KeyExhaustion: return FailureKind::KeyExhaustion;
    case ErrorCode::NoKey: return FailureKind::NoKey;
    case ErrorCode::Refused: return FailureKind::Refused;
    case ErrorCode::Capability: return FailureKind::Capability;
    case ErrorCode::NotFound: return FailureKind::NotFound;
    case ErrorCode::RouteLost: return FailureKind::RouteLost;
    case ErrorCode::TamperAlarm: return FailureKind::TamperAlarm;
    default: return FailureKind::Malformed;
  }
}

ErrorCode code_of(Rejection r) {
  switch (r) {
    case Rejection::NoKey: return ErrorCode::NoKey;
    case Rejection::KeyExhaustion: return ErrorCode::KeyExhaustion;
    default: return ErrorCode::TamperAlarm;
  }
}

struct PhaseFailure {
  FailureKind kind;
  std::string detail;
};

Bytes encode_announcement(const NodeId& who, std::span<const RoundRecord> records, std::size_t position) {
  Bits bases(records.size());
  for (std::size_t r = 0; r < records.size(); ++r) bases[r] = records[r].bases[position] == Basis::Y ? 1 : 0;
  ByteWriter w;
  w.str(who);
  w.u32(static_cast<std::uint32_t>(records.size()));
  w.bytes(pack_bytes(bases));
  return w.take();
}

class SessionRun {
 public:
  SessionRun(Network& net, const SessionSpec& spec)
      : net_(net), rng_(Rng::derive(net.seed(), "session:" + std::to_string(spec.id))) {
    res_.spec = spec;
    res_.scheme = spec.scheme;
    for (std::size_t i = 0; i < net.config().adversaries.size(); ++i) {
      const auto& a = net.config().adversaries[i];
      if (a.kind == AdversaryKind::EveInterceptResend) continue;
      adversaries_.push_back(a);
      adversary_rngs_.push_back(rng_.fork("adversary:" + std::to_string(i)));
    }
  }

  bool failed() const noexcept { return res_.failure != FailureKind::None; }
  bool quantum_done() const noexcept { return !phase_ || res_.records.size() >= res_.spec.rounds; }
  std::uint64_t id() const noexcept { return res_.spec.id; }

  void start() {
    snapshot(before_);
    Json s;
    s["type"] = "session_start";
    s["session"] = res_.spec.id;
    s["alice"] = res_.spec.alice;
    s["bob"] = res_.spec.bob;
    s["rounds"] = res_.spec.rounds;
    s["scheme"] = std::string(to_string(res_.spec.scheme));
    s["policy"] = std::string(to_string(res_.spec.policy));
    s["final_key_reserve"] = res_.spec.final_key_reserve;
    s["qber_threshold"] = res_.spec.qber_threshold;
    s["tag_bits"] = net_.auth().params.tag_bits;
    s["key_bits_per_tag"] = net_.auth().params.key_bits_per_tag;
    emit(s);

    if (res_.spec.rounds == 0) return fail_phase("establish", {FailureKind::Malformed, "rounds must be at least 1"});
    try {
      establish();
      build_chain();
    } catch (const Error& e) {
      fail_phase(phase_name_, {classify(e.code()), e.what()});
    }
    snapshot_deltas();
  }

  void quantum_round() { res_.records.push_back(phase_->next()); }

  void finish() {
    snapshot(before_);
    if (!failed()) {
      try {
        post_quantum();
      } catch (const Error& e) {
        fail_phase(phase_name_, {classify(e.code()), e.what()});
      }
    }
    snapshot_deltas();
    Json end;
    end["type"] = "session_end";
    end["session"] = res_.spec.id;
    end["success"] = !failed();
    end["failure"] = std::string(to_string(res_.failure));
    end["secret_bits"] = res_.secret_key.size();
    end["envelopes"] = res_.envelopes;
    end["forgeries_attempted"] = res_.forgeries_attempted;
    end["forgeries_accepted"] = res_.forgeries_accepted;
    emit(end);
    res_.success = !failed();
    if (!res_.spec.keep_records) res_.records.clear();
  }

  SessionResult take() { return std::move(res_); }

 private:
  // -------------------------------------------------------------------------
  // Phases
  // -------------------------------------------------------------------------

  void establish() {
    phase_name_ = "establish";
    EstablishmentContext ctx{net_.control(), net_.auth(),
                             [this](const NodeId& responder, const NodeId&) {
                               return !(net_.has_node(responder) && net_.node(responder).declines);
                             },
                             net_.config().preshared_bits, nullptr, [this] { return ++sequence_; }, tap()};
    Rng oob = rng_.fork("out-of-band");
    ctx.out_of_band = &oob;
    SessionRequest req{res_.spec.id, res_.spec.alice, res_.spec.bob, res_.spec.scheme, res_.spec.policy};
    if (!net_.has_node(req.alice)) fail(ErrorCode::NotFound, "no node named " + req.alice);
    if (!net_.has_node(req.bob)) fail(ErrorCode::NotFound, "no node named " + req.bob);

    SessionHandle handle = establish_session(ctx, req);
    res_.route = handle.route;
    res_.scheme = handle.scheme;
    res_.bootstrap = handle.bootstrap;
    res_.quantum_reversed = handle.quantum_reversed;
    for (std::size_t i = 0; i < handle.handshake.size(); ++i) {
      const auto& out = handle.handshake[i];
      const auto& sent = out.hops.front().received;
      const std::vector<NodeId> path = i == 0 ? handle.route.nodes : handle.route.reversed().nodes;
      count(out, false);
      emit(records::envelope(sent, handle.scheme, path, out, {}, false));
    }

    Json r;
    r["type"] = "route";
    r["session"] = res_.spec.id;
    r["route"] = records::nodes_json(res_.route.nodes);
    r["scheme"] = std::string(to_string(res_.scheme));
    r["quantum_reversed"] = res_.quantum_reversed;
    r["divert_endpoint_key"] = res_.bootstrap.divert_endpoint_key;
    Json seeded = Json::array();
    for (const auto& p : res_.bootstrap.seeded_pairs) seeded.push_back(records::pair_json(p));
    r["seeded_pairs"] = std::move(seeded);
    emit(r);
  }

  void build_chain() {
    phase_name_ = "quantum";
    const SessionFaults& f = res_.spec.faults;
    std::vector<NodeId> chain = res_.route.nodes;
    if (res_.quantum_reversed) std::reverse(chain.begin(), chain.end());

    if (f.detour_after || f.detour_via) {
      if (!f.detour_after || !f.detour_via) fail(ErrorCode::MalformedInput, "a detour names both relays");
      auto it = std::find(chain.begin() + 1, chain.end() - 1, *f.detour_after);
      if (it == chain.end() - 1) fail(ErrorCode::MalformedInput, *f.detour_after + " is not a relay on the route");
      if (std::find(chain.begin(), chain.end(), *f.detour_via) != chain.end() || !net_.has_node(*f.detour_via) ||
          net_.node(*f.detour_via).role != NodeRole::Relay) {
        fail(ErrorCode::MalformedInput, *f.detour_via + " cannot serve as an off-route detour");
      }
      chain.insert(it + 1, *f.detour_via);
    }
    if (f.silent_relay && std::find(chain.begin() + 1, chain.end() - 1, *f.silent_relay) == chain.end() - 1) {
      fail(ErrorCode::MalformedInput, *f.silent_relay + " is not a relay on the route");
    }

    Chain c;
    c.nodes = chain;
    for (const auto& id : chain) c.capabilities.push_back(net_.node(id).capabilities);
    c.validate();

    std::vector<HopChannel> hops;
    Json hj = Json::array();
    for (std::size_t h = 0; h + 1 < chain.size(); ++h) {
      const Link* l = net_.link(chain[h], chain[h + 1], LinkKind::Quantum);
      if (!l) fail(ErrorCode::MalformedInput, "no quantum link " + NodePair::of(chain[h], chain[h + 1]).label());
      HopChannel ch{l->noise, 0.0};
      for (const auto& a : l->adversaries) ch.eve_fraction = std::max(ch.eve_fraction, a.fraction);
      Json x;
      x["from"] = chain[h];
      x["to"] = chain[h + 1];
      x["noise"] = ch.noise.flip_probability;
      x["eve_fraction"] = ch.eve_fraction;
      hj.push_back(std::move(x));
      hops.push_back(ch);
    }
    res_.physical = chain;
    chain_ = c;
    phase_ = std::make_unique<QuantumPhase>(c, hops, rng_);
    res_.records.reserve(res_.spec.rounds);

    Json r;
    r["type"] = "chain";
    r["session"] = res_.spec.id;
    r["physical"] = records::nodes_json(chain);
    r["hops"] = std::move(hj);
    emit(r);
  }

  void post_quantum() {
    const auto& chain = res_.physical;
    const std::size_t n = chain.size();
    phase_name_ = "quantum";
    for (std::size_t p = 0; p < n; ++p) {
      Json q;
      q["type"] = "quantum";
      q["session"] = res_.spec.id;
      q["node"] = chain[p];
      q["position"] = p;
      q["rounds"] = res_.records.size();
      std::vector<Basis> bases(res_.records.size());
      Bits bits(res_.records.size());
      for (std::size_t r = 0; r < res_.records.size(); ++r) {
        bases[r] = res_.records[r].bases[p];
        bits[r] = res_.records[r].bits[p];
      }
      q["bases"] = records::bases_hex(bases);
      q["bits"] = records::bits_hex(bits);
      emit(q);
    }

    if (res_.spec.faults.deregister_bob) {
      net_.deregister(res_.spec.bob);
      const auto alice_at = net_.control().attachment_of(res_.spec.alice);
      try {
        if (!alice_at || !(net_.control().lookup_route(*alice_at, res_.spec.alice, res_.spec.bob) == res_.route)) {
          fail(ErrorCode::RouteLost, "route to " + res_.spec.bob + " changed");
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NotFound) throw;
        fail(ErrorCode::RouteLost, res_.spec.bob + " left the network during the session");
      }
    }

    // Every participant announces its bases to every other participant.
    phase_name_ = "announce";
    for (std::size_t p = 0; p < n; ++p) {
      if (res_.spec.faults.silent_relay == chain[p]) continue;
      const Bytes payload = encode_announcement(chain[p], res_.records, p);
      for (std::size_t q = 0; q < n; ++q) {
        if (q == p) continue;
        send_between(p, q, PayloadType::BasisAnnounce, payload);
      }
      if (p != 0 && p + 1 != n) res_.announcers.push_back(chain[p]);
    }

    phase_name_ = "route_check";
    res_.route_check = verify_route_a_posteriori(res_.announcers, res_.route);
    {
      Json r;
      r["type"] = "route_check";
      r["session"] = res_.spec.id;
      r["agreed"] = records::nodes_json(res_.route.interior());
      r["announcers"] = records::nodes_json(res_.announcers);
      r["ok"] = res_.route_check->ok;
      r["extra"] = records::nodes_json(res_.route_check->extra);
      r["missing"] = records::nodes_json(res_.route_check->missing);
      r["order_mismatch"] = res_.route_check->order_mismatch;
      emit(r);
    }
    if (!res_.route_check->ok) {
      std::string detail = "relays announcing bases differ from the agreed route";
      for (const auto& x : res_.route_check->extra) detail += "; extra " + x;
      for (const auto& m : res_.route_check->missing) detail += "; missing " + m;
      return fail_phase("route_check", {FailureKind::RouteMismatch, detail});
    }

    phase_name_ = "sift";
    const GroupAssignment assignment = sift(res_.records);
    res_.used_rounds = assignment.used_rounds();
    res_.unused_rounds = assignment.unused_rounds();
    const auto by_pair = assignment.rounds_by_pair();
    {
      Json s;
      s["type"] = "sift";
      s["session"] = res_.spec.id;
      s["rounds"] = res_.records.size();
      s["used"] = res_.used_rounds;
      s["unused"] = res_.unused_rounds;
      Json groups = Json::array();
      for (const auto& [pp, rounds] : by_pair) {
        const NodePair pair = NodePair::of(chain[pp.first], chain[pp.last]);
        res_.group_counts[pair] = rounds.size();
        Json g;
        g["positions"] = Json::array({pp.first, pp.last});
        g["pair"] = records::pair_json(pair);
        g["rounds"] = rounds.size();
        groups.push_back(std::move(g));
      }
      s["groups"] = std::move(groups);
      emit(s);
    }

    phase_name_ = "post_processing";
    DeriveParams params;
    params.sample_fraction = res_.spec.sample_fraction;
    params.reconciliation = res_.spec.reconciliation;
    params.qber_abort_threshold = res_.spec.qber_threshold;
    ChannelFactory channels = [this](PositionPair pp) -> PublicChannel {
      return [this, pp](Speaker who, PayloadType type, Bytes payload) {
        if (who == Speaker::Initiator) {
          send_between(pp.first, pp.last, type, payload);
        } else {
          send_between(pp.last, pp.first, type, payload);
        }
      };
    };
    auto results = derive_pair_keys(res_.records, assignment, chain_, params, rng_.fork("public"), channels);

    bool qber_abort = false;
    bool recon_abort = false;
    const PositionPair ends{0, n - 1};
    const NodePair endpoints = NodePair::of(res_.spec.alice, res_.spec.bob);
    for (const auto& [pp, pr] : results) {
      PairSummary s;
      s.pair = NodePair::of(chain[pp.first], chain[pp.last]);
      s.positions = pp;
      s.outcome = pr.outcome;
      s.rounds = by_pair.at(pp).size();
      s.qber_estimate = pr.key.qber_estimate;
      s.sifted_qber = pr.key.sifted_qber;
      s.leakage_bits = pr.key.leakage_bits;
      s.accounting = pr.key.accounting;
      res_.pairs.push_back(s);
      qber_abort = qber_abort || pr.outcome == PairOutcome::QberAbort;
      recon_abort = recon_abort || pr.outcome == PairOutcome::ReconciliationAbort;
      if (pr.outcome == PairOutcome::Ok) res_.pair_keys[s.pair] = pr.key.bits;

      Json k;
      k["type"] = "pair_key";
      k["session"] = res_.spec.id;
      k["pair"] = records::pair_json(s.pair);
      k["positions"] = Json::array({pp.first, pp.last});
      k["outcome"] = std::string(to_string(pr.outcome));
      k["rounds"] = s.rounds;
      k["qber_estimate"] = s.qber_estimate;
      k["sifted_qber"] = s.sifted_qber;
      k["raw_bits"] = s.accounting.raw_bits;
      k["estimation_disclosed"] = s.accounting.estimation_disclosed;
      k["reconciliation_input"] = s.accounting.reconciliation_input;
      k["reconciliation_leakage"] = s.accounting.reconciliation_leakage;
      k["verification_bits"] = s.accounting.verification_bits;
      k["amplification_input"] = s.accounting.amplification_input;
      k["compression"] = s.accounting.compression;
      k["final_bits"] = s.accounting.final_bits;
      k["key_digest"] = records::key_digest(pr.key.bits);
      emit(k);
    }
    if (qber_abort || recon_abort) {
      return fail_phase("post_processing",
                        {qber_abort ? FailureKind::QberAbort : FailureKind::ReconciliationAbort,
                         qber_abort ? "estimated error rate above threshold" : "reconciliation verification failed"});
    }

    phase_name_ = "shadow";
    if (auto it = results.find(ends); it != results.end() && it->second.outcome == PairOutcome::Ok) {
      for (std::size_t p = 1; p + 1 < n; ++p) {
        ShadowSummary sh{chain[p], carol_shadow_key(res_.records, p, it->second)};
        Json j;
        j["type"] = "shadow";
        j["session"] = res_.spec.id;
        j["carol"] = sh.carol;
        j["available"] = sh.report.available;
        j["key_bits"] = sh.report.reconstruction.size();
        j["pre_amplification_distance"] = sh.report.pre_amplification_distance;
        j["distance"] = sh.report.distance;
        emit(j);
        res_.shadows.push_back(std::move(sh));
      }
    }

    phase_name_ = "session_end";
    Bytes bye;
    {
      ByteWriter w;
      w.u64(res_.spec.id);
      bye = w.take();
    }
    send_between(0, n - 1, PayloadType::SessionEnd, bye);

    phase_name_ = "refresh";
    std::vector<SessionKey> keys;
    for (const auto& [pair, bits] : res_.pair_keys) {
      if (!bits.empty()) keys.push_back(SessionKey{pair, bits});
    }
    RefreshAccounting acc = refresh_pools(res_.spec.id, keys, endpoints, net_.auth().pools,
                                          res_.spec.final_key_reserve, res_.bootstrap.divert_endpoint_key);
    res_.refresh = acc.entries;
    res_.secret_key = std::move(acc.secret_key);
    for (const auto& e : acc.entries) {
      const bool pooled = net_.auth().pools.has(e.pair.first, e.pair.second);
      Json j;
      j["type"] = "pool";
      j["session"] = res_.spec.id;
      j["pair"] = records::pair_json(e.pair);
      j["relay_pair"] = e.relay_pair;
      j["pair_key_bits"] = e.pair_key_bits;
      j["pool_growth"] = e.pool_growth;
      j["secret_output"] = e.secret_output;
      j["effective_reserve"] = e.relay_pair ? 1.0 : acc.effective_reserve;
      j["pool_bits"] = pooled ? net_.auth().pools.view(e.pair.first, e.pair.second).bits().size() : 0;
      j["consumed_offset"] = pooled ? net_.auth().pools.view(e.pair.first, e.pair.second).consumed_offset() : 0;
      emit(j);
    }

    phase_name_ = "rate";
    snapshot_deltas();
    std::map<NodePair, std::size_t> consumption;
    std::map<NodePair, std::size_t> generation;
    for (const auto& d : res_.pools) {
      if (d.pair == endpoints) continue;
      if (d.consumed() > 0) consumption[d.pair] = d.consumed();
    }
    for (const auto& e : acc.entries) {
      generation[e.pair] = e.pair_key_bits;
      if (!e.relay_pair) consumption[e.pair] = e.pool_growth;
    }
    res_.rates = check_rate_compatibility(consumption, generation, endpoints);
    for (const auto& r : res_.rates.pools) {
      Json j;
      j["type"] = "rate";
      j["session"] = res_.spec.id;
      j["pair"] = records::pair_json(r.pair);
      j["endpoint_pair"] = r.endpoint_pair;
      j["consumed"] = r.consumed;
      j["generated"] = r.generated;
      j["net"] = r.net;
      j["flag"] = std::string(to_string(r.flag));
      emit(j);
    }
  }

  // -------------------------------------------------------------------------
  // Classical messaging
  // -------------------------------------------------------------------------

  AuthScheme scheme_for(const NodeId& origin, const NodeId& destination, std::span<const NodeId> path) const {
    if (NodePair::of(origin, destination) == NodePair::of(res_.spec.alice, res_.spec.bob)) return res_.scheme;
    for (const auto& p : scheme_pools(res_.scheme, path)) {
      if (!net_.auth().pools.has(p.first, p.second)) return AuthScheme::RelayMediated;
    }
    return res_.scheme;
  }

  LinkTap tap() {
    return [this](const HopContext& ctx, ClassicalEnvelope& env) {
      const NodePair link = NodePair::of(ctx.from, ctx.to);
      for (std::size_t i = 0; i < adversaries_.size(); ++i) {
        const auto& a = adversaries_[i];
        if (!(a.link == link)) continue;
        if (a.target ? *a.target != env.payload_type : env.session_id == kControlSession) continue;
        if (a.kind == AdversaryKind::PassiveTap) {
          if (ctx.hop < tapped_.size()) tapped_[ctx.hop] = true;
        } else if (a.kind == AdversaryKind::Tamper && adversary_rngs_[i].bernoulli(a.fraction)) {
          if (!env.payload.empty()) {
            const auto bit = adversary_rngs_[i].below(env.payload.size() * 8);
            env.payload[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
          } else if (!env.tag_chain.empty()) {
            env.tag_chain.back().value ^= 1;
          }
        }
      }
    };
  }

  void count(const DeliveryOutcome& out, bool forged) {
    ++res_.envelopes;
    bool altered = false;
    for (const auto& h : out.hops) altered = altered || h.altered;
    if (altered) ++res_.altered_envelopes;
    if (std::any_of(tapped_.begin(), tapped_.end(), [](bool b) { return b; })) ++res_.tapped_envelopes;
    if (forged) {
      ++res_.forgeries_attempted;
      if (out.delivered) ++res_.forgeries_accepted;
    }
  }

  void send_between(std::size_t from, std::size_t to, PayloadType type, const Bytes& payload) {
    const auto& chain = res_.physical;
    std::vector<NodeId> path;
    if (from < to) {
      path.assign(chain.begin() + static_cast<std::ptrdiff_t>(from), chain.begin() + static_cast<std::ptrdiff_t>(to) + 1);
    } else {
      path.assign(chain.rbegin() + static_cast<std::ptrdiff_t>(chain.size() - 1 - from),
                  chain.rbegin() + static_cast<std::ptrdiff_t>(chain.size() - to));
    }
    ClassicalEnvelope env;
    env.session_id = res_.spec.id;
    env.sequence = ++sequence_;
    env.origin = chain[from];
    env.destination = chain[to];
    env.payload_type = type;
    env.payload = payload;
    const AuthScheme scheme = scheme_for(env.origin, env.destination, path);

    tapped_.assign(path.size() - 1, false);
    const ClassicalEnvelope sent = env;
    DeliveryOutcome out = send_authenticated(scheme, path, env, net_.auth(), tap());
    count(out, false);
    emit(records::envelope(sent, scheme, path, out, tapped_, false));
    inject(path, scheme, sent, out);
    if (!out.delivered) {
      fail(code_of(out.reason), std::string(to_string(type)) + " from " + sent.origin + " to " + sent.destination +
                                    " dropped at " + out.rejected_by.value_or("?") + ": " + out.detail);
    }
  }

  /// Forgeries handed to the receiver of each attacked link after the genuine message went by.
  void inject(std::span<const NodeId> path, AuthScheme scheme, const ClassicalEnvelope& sent,
              const DeliveryOutcome& genuine) {
    for (std::size_t i = 0; i < adversaries_.size(); ++i) {
      const auto& a = adversaries_[i];
      if (a.kind != AdversaryKind::Inject) continue;
      if (a.target && *a.target != sent.payload_type) continue;
      for (std::size_t h = 0; h + 1 < path.size(); ++h) {
        if (!(NodePair::of(path[h], path[h + 1]) == a.link)) continue;
        if (h >= genuine.hops.size()) continue;
        Rng& rng = adversary_rngs_[i];
        if (!rng.bernoulli(a.fraction)) continue;
        const ClassicalEnvelope& seen = genuine.hops[h].received;
        for (std::size_t k = 0; k < a.attempts; ++k) {
          ClassicalEnvelope forged = seen;
          switch (k % 3) {
            case 0:
              break;  // verbatim replay
            case 1:
              forged.sequence = sequence_ + 1 + k;
              if (!forged.payload.empty()) {
                const auto bit = rng.below(forged.payload.size() * 8);
                forged.payload[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
              }
              break;
            default:
              forged.sequence = sequence_ + 1 + k;
              for (auto& byte : forged.payload) byte = static_cast<std::uint8_t>(rng.next());
              for (auto& t : forged.tag_chain) {
                t.key_offset = net_.auth().pools.view(t.recipient, t.author).consumed_offset();
                t.value = rng.next();
              }
              break;
          }
          tapped_.assign(path.size() - 1, false);
          DeliveryOutcome out = deliver_forged(scheme, path, h + 1, forged, net_.auth(), tap());
          count(out, true);
          emit(records::envelope(forged, scheme, path, out, tapped_, true));
        }
      }
    }
  }

  // -------------------------------------------------------------------------
  // Bookkeeping
  // -------------------------------------------------------------------------

  using Snapshot = std::map<NodePair, std::pair<std::size_t, std::size_t>>;

  void snapshot(Snapshot& s) const {
    s.clear();
    for (const auto& p : net_.auth().pools.pairs()) {
      const AuthKeyPool& v = net_.auth().pools.view(p.first, p.second);
      s[p] = {v.bits().size(), v.consumed_offset()};
    }
  }

  // Closes the current attribution window: everything that changed since
  // before_ was caused by this session.
  void snapshot_deltas() {
    Snapshot after;
    snapshot(after);
    for (const auto& [pair, now] : after) {
      std::pair<std::size_t, std::size_t> was{0, 0};
      if (auto it = before_.find(pair); it != before_.end()) {
        was = it->second;
      } else if (std::find(res_.bootstrap.seeded_pairs.begin(), res_.bootstrap.seeded_pairs.end(), pair) !=
                 res_.bootstrap.seeded_pairs.end()) {
        // Out-of-band slips are not key growth.
        was.first = net_.config().preshared_bits;
      }
      auto& [consumed, growth] = own_[pair];
      consumed += now.second - was.second;
      growth += now.first - was.first;
    }
    res_.pools.clear();
    for (const auto& [pair, own] : own_) {
      if (own.first == 0 && own.second == 0) continue;
      const auto& now = after.at(pair);
      res_.pools.push_back(PoolDelta{pair, own.first, own.second, now.first, now.second});
    }
    before_ = std::move(after);
  }

  void fail_phase(const std::string& phase, PhaseFailure f) {
    res_.failure = f.kind;
    res_.failure_phase = phase;
    res_.failure_detail = f.detail;
    Json j;
    j["type"] = "failure";
    j["session"] = res_.spec.id;
    j["phase"] = phase;
    j["kind"] = std::string(to_string(f.kind));
    j["detail"] = f.detail;
    emit(j);
  }

  void emit(const Json& j) { res_.transcript.append(records::line(j)); }

  Network& net_;
  Rng rng_;
  SessionResult res_;
  Chain chain_;
  std::unique_ptr<QuantumPhase> phase_;
  std::string phase_name_ = "establish";
  std::uint64_t sequence_ = 0;
  std::vector<AdversaryModel> adversaries_;
  std::vector<Rng> adversary_rngs_;
  std::vector<bool> tapped_;
  Snapshot before_;
  std::map<NodePair, std::pair<std::size_t, std::size_t>> own_;
};

}  // namespace

SessionResult run_session(Network& network, const SessionSpec& spec) {
  SessionRun run(network, spec);
  run.start();
  while (!run.failed() && !run.quantum_done()) run.quantum_round();
  run.finish();
  return run.take();
}

MultiplexResult multiplex_sessions(Network& network, std::span<const SessionSpec> sessions,
                                   MultiplexPolicy policy) {
  MultiplexResult out;
  out.policy = policy;
  Json sched;
  sched["type"] = "schedule";
  sched["policy"] = std::string(to_string(policy));
  Json ids = Json::array();
  for (const auto& s : sessions) ids.push_back(s.id);
  sched["sessions"] = std::move(ids);

  if (policy == MultiplexPolicy::RunByRun) {
    out.transcript.append(records::line(sched));
    for (const auto& s : sessions) {
      out.order.push_back(s.id);
      out.sessions.push_back(run_session(network, s));
      out.transcript.extend(out.sessions.back().transcript);
    }
    return out;
  }

  std::set<std::uint64_t> seen;
  for (const auto& s : sessions) {
    if (s.alice != sessions.front().alice) {
      fail(ErrorCode::MalformedInput, "qubit by qubit multiplexing needs every session to share one alice");
    }
    if (!seen.insert(s.id).second) fail(ErrorCode::MalformedInput, "session id " + std::to_string(s.id) + " repeated");
  }
  std::vector<std::unique_ptr<SessionRun>> runs;
  for (const auto& s : sessions) {
    runs.push_back(std::make_unique<SessionRun>(network, s));
    runs.back()->start();
  }
  for (bool progress = true; progress;) {
    progress = false;
    for (auto& r : runs) {
      if (r->failed() || r->quantum_done()) continue;
      r->quantum_round();
      out.order.push_back(r->id());
      progress = true;
    }
  }
  sched["slots"] = out.order.size();
  out.transcript.append(records::line(sched));
  for (auto& r : runs) {
    r->finish();
    out.sessions.push_back(r->take());
    out.transcript.extend(out.sessions.back().transcript);
  }
  return out;
}

}  // namespace qrelay
