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

#include <cstdio>

#include <nlohmann/json.hpp>

#include "qrelay/error.hpp"
#include "qrelay/scenario.hpp"

namespace qrelay {

namespace {

using Json = nlohmann::ordered_json;

Json pair_json(const NodePair& p) { return Json::array({p.first, p.second}); }

NodePair pair_from(const Json& j) { return NodePair::of(j.at(0).get<std::string>(), j.at(1).get<std::string>()); }

std::vector<NodeId> ids(const Json& j) { return j.get<std::vector<NodeId>>(); }

Json accounting_json(const KeyAccounting& a) {
  Json j;
  j["raw_bits"] = a.raw_bits;
  j["estimation_disclosed"] = a.estimation_disclosed;
  j["reconciliation_input"] = a.reconciliation_input;
  j["reconciliation_leakage"] = a.reconciliation_leakage;
  j["verification_bits"] = a.verification_bits;
  j["amplification_input"] = a.amplification_input;
  j["compression"] = a.compression;
  j["final_bits"] = a.final_bits;
  return j;
}

KeyAccounting accounting_from(const Json& j) {
  KeyAccounting a;
  a.raw_bits = j.at("raw_bits").get<std::size_t>();
  a.estimation_disclosed = j.at("estimation_disclosed").get<std::size_t>();
  a.reconciliation_input = j.at("reconciliation_input").get<std::size_t>();
  a.reconciliation_leakage = j.at("reconciliation_leakage").get<std::size_t>();
  a.verification_bits = j.at("verification_bits").get<std::size_t>();
  a.amplification_input = j.at("amplification_input").get<std::size_t>();
  a.compression = j.at("compression").get<std::size_t>();
  a.final_bits = j.at("final_bits").get<std::size_t>();
  return a;
}

Json session_json(const SessionReport& s) {
  Json j;
  j["id"] = s.id;
  j["alice"] = s.alice;
  j["bob"] = s.bob;
  j["rounds"] = s.rounds;
  j["requested_scheme"] = s.requested_scheme;
  j["scheme"] = s.scheme;
  j["policy"] = s.policy;
  j["route"] = s.route;
  j["physical"] = s.physical;
  j["quantum_reversed"] = s.quantum_reversed;
  j["success"] = s.success;
  j["failure"] = s.failure;
  j["failure_phase"] = s.failure_phase;
  j["failure_detail"] = s.failure_detail;
  j["used_rounds"] = s.used_rounds;
  j["unused_rounds"] = s.unused_rounds;
  j["used_fraction"] = s.used_fraction;
  j["unused_fraction"] = s.unused_fraction;
  Json groups = Json::array();
  for (const auto& g : s.groups) {
    Json x;
    x["pair"] = pair_json(g.pair);
    x["rounds"] = g.rounds;
    x["fraction"] = g.fraction;
    groups.push_back(std::move(x));
  }
  j["groups"] = std::move(groups);
  Json pairs = Json::array();
  for (const auto& p : s.pairs) {
    Json x;
    x["pair"] = pair_json(p.pair);
    x["outcome"] = p.outcome;
    x["rounds"] = p.rounds;
    x["qber_estimate"] = p.qber_estimate;
    x["sifted_qber"] = p.sifted_qber;
    x["leakage_bits"] = p.leakage_bits;
    x["accounting"] = accounting_json(p.accounting);
    pairs.push_back(std::move(x));
  }
  j["pairs"] = std::move(pairs);
  j["secret_bits"] = s.secret_bits;
  Json pools = Json::array();
  for (const auto& p : s.pools) {
    Json x;
    x["pair"] = pair_json(p.pair);
    x["consumed"] = p.consumed;
    x["growth"] = p.growth;
    x["bits_after"] = p.bits_after;
    x["remaining_after"] = p.remaining_after;
    pools.push_back(std::move(x));
  }
  j["pools"] = std::move(pools);
  Json rates = Json::array();
  for (const auto& r : s.rates) {
    Json x;
    x["pair"] = pair_json(r.pair);
    x["endpoint_pair"] = r.endpoint_pair;
    x["consumed"] = r.consumed;
    x["generated"] = r.generated;
    x["net"] = r.net;
    x["flag"] = r.flag;
    rates.push_back(std::move(x));
  }
  j["rates"] = std::move(rates);
  j["relay_pools"] = s.relay_pools();
  if (s.route_check) {
    Json x;
    x["ok"] = s.route_check->ok;
    x["announcers"] = s.route_check->announcers;
    x["extra"] = s.route_check->extra;
    x["missing"] = s.route_check->missing;
    x["order_mismatch"] = s.route_check->order_mismatch;
    j["route_check"] = std::move(x);
  } else {
    j["route_check"] = nullptr;
  }
  Json shadows = Json::array();
  for (const auto& sh : s.shadows) {
    Json x;
    x["carol"] = sh.carol;
    x["available"] = sh.available;
    x["key_bits"] = sh.key_bits;
    x["pre_amplification_distance"] = sh.pre_amplification_distance;
    x["distance"] = sh.distance;
    shadows.push_back(std::move(x));
  }
  j["shadows"] = std::move(shadows);
  j["envelopes"] = s.envelopes;
  j["forgeries_attempted"] = s.forgeries_attempted;
  j["forgeries_accepted"] = s.forgeries_accepted;
  j["altered_envelopes"] = s.altered_envelopes;
  j["tapped_envelopes"] = s.tapped_envelopes;
  return j;
}

SessionReport session_from(const Json& j) {
  SessionReport s;
  s.id = j.at("id").get<std::uint64_t>();
  s.alice = j.at("alice").get<std::string>();
  s.bob = j.at("bob").get<std::string>();
  s.rounds = j.at("rounds").get<std::size_t>();
  s.requested_scheme = j.at("requested_scheme").get<std::string>();
  s.scheme = j.at("scheme").get<std::string>();
  s.policy = j.at("policy").get<std::string>();
  s.route = ids(j.at("route"));
  s.physical = ids(j.at("physical"));
  s.quantum_reversed = j.at("quantum_reversed").get<bool>();
  s.success = j.at("success").get<bool>();
  s.failure = j.at("failure").get<std::string>();
  s.failure_phase = j.at("failure_phase").get<std::string>();
  s.failure_detail = j.at("failure_detail").get<std::string>();
  s.used_rounds = j.at("used_rounds").get<std::size_t>();
  s.unused_rounds = j.at("unused_rounds").get<std::size_t>();
  s.used_fraction = j.at("used_fraction").get<double>();
  s.unused_fraction = j.at("unused_fraction").get<double>();
  for (const auto& x : j.at("groups")) {
    s.groups.push_back({pair_from(x.at("pair")), x.at("rounds").get<std::size_t>(), x.at("fraction").get<double>()});
  }
  for (const auto& x : j.at("pairs")) {
    PairReport p;
    p.pair = pair_from(x.at("pair"));
    p.outcome = x.at("outcome").get<std::string>();
    p.rounds = x.at("rounds").get<std::size_t>();
    p.qber_estimate = x.at("qber_estimate").get<double>();
    p.sifted_qber = x.at("sifted_qber").get<double>();
    p.leakage_bits = x.at("leakage_bits").get<std::size_t>();
    p.accounting = accounting_from(x.at("accounting"));
    s.pairs.push_back(std::move(p));
  }
  s.secret_bits = j.at("secret_bits").get<std::size_t>();
  for (const auto& x : j.at("pools")) {
    s.pools.push_back({pair_from(x.at("pair")), x.at("consumed").get<std::size_t>(), x.at("growth").get<std::size_t>(),
                       x.at("bits_after").get<std::size_t>(), x.at("remaining_after").get<std::size_t>()});
  }
  for (const auto& x : j.at("rates")) {
    s.rates.push_back({pair_from(x.at("pair")), x.at("endpoint_pair").get<bool>(), x.at("consumed").get<std::size_t>(),
                       x.at("generated").get<std::size_t>(), x.at("net").get<long long>(),
                       x.at("flag").get<std::string>()});
  }
  if (const auto& rc = j.at("route_check"); !rc.is_null()) {
    RouteReport r;
    r.ok = rc.at("ok").get<bool>();
    r.announcers = ids(rc.at("announcers"));
    r.extra = ids(rc.at("extra"));
    r.missing = ids(rc.at("missing"));
    r.order_mismatch = rc.at("order_mismatch").get<bool>();
    s.route_check = std::move(r);
  }
  for (const auto& x : j.at("shadows")) {
    s.shadows.push_back({x.at("carol").get<std::string>(), x.at("available").get<bool>(),
                         x.at("key_bits").get<std::size_t>(), x.at("pre_amplification_distance").get<std::size_t>(),
                         x.at("distance").get<std::size_t>()});
  }
  s.envelopes = j.at("envelopes").get<std::size_t>();
  s.forgeries_attempted = j.at("forgeries_attempted").get<std::size_t>();
  s.forgeries_accepted = j.at("forgeries_accepted").get<std::size_t>();
  s.altered_envelopes = j.at("altered_envelopes").get<std::size_t>();
  s.tapped_envelopes = j.at("tapped_envelopes").get<std::size_t>();
  return s;
}

std::string join(const std::vector<NodeId>& v, std::string_view sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += v[i];
  }
  return s;
}

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

}  // namespace

std::string SessionReport::relay_pools() const {
  bool any = false;
  for (const auto& r : rates) {
    if (r.endpoint_pair) continue;
    any = true;
    if (r.flag != "SUSTAINABLE") return "UNSUSTAINABLE";
  }
  return any ? "SUSTAINABLE" : "-";
}

const PairReport* SessionReport::endpoint_pair() const {
  const NodePair ab = NodePair::of(alice, bob);
  for (const auto& p : pairs) {
    if (p.pair == ab) return &p;
  }
  return nullptr;
}

SessionReport make_session_report(const SessionResult& r) {
  SessionReport s;
  s.id = r.spec.id;
  s.alice = r.spec.alice;
  s.bob = r.spec.bob;
  s.rounds = r.spec.rounds;
  s.requested_scheme = std::string(to_string(r.spec.scheme));
  s.scheme = std::string(to_string(r.scheme));
  s.policy = std::string(to_string(r.spec.policy));
  s.route = r.route.nodes;
  s.physical = r.physical;
  s.quantum_reversed = r.quantum_reversed;
  s.success = r.success;
  s.failure = std::string(to_string(r.failure));
  s.failure_phase = r.failure_phase;
  s.failure_detail = r.failure_detail;
  s.used_rounds = r.used_rounds;
  s.unused_rounds = r.unused_rounds;
  const std::size_t total = r.used_rounds + r.unused_rounds;
  if (total > 0) {
    s.used_fraction = static_cast<double>(r.used_rounds) / static_cast<double>(total);
    s.unused_fraction = static_cast<double>(r.unused_rounds) / static_cast<double>(total);
  }
  for (const auto& [pair, n] : r.group_counts) {
    s.groups.push_back({pair, n, total ? static_cast<double>(n) / static_cast<double>(total) : 0.0});
  }
  for (const auto& p : r.pairs) {
    s.pairs.push_back({p.pair, std::string(to_string(p.outcome)), p.rounds, p.qber_estimate, p.sifted_qber,
                       p.leakage_bits, p.accounting});
  }
  s.secret_bits = r.secret_key.size();
  for (const auto& d : r.pools) {
    s.pools.push_back({d.pair, d.consumed(), d.growth(), d.bits_after, d.bits_after - d.consumed_after});
  }
  for (const auto& p : r.rates.pools) {
    s.rates.push_back({p.pair, p.endpoint_pair, p.consumed, p.generated, p.net, std::string(to_string(p.flag))});
  }
  if (r.route_check) {
    s.route_check = RouteReport{r.route_check->ok, r.announcers, r.route_check->extra, r.route_check->missing,
                                r.route_check->order_mismatch};
  }
  for (const auto& sh : r.shadows) {
    s.shadows.push_back({sh.carol, sh.report.available, sh.report.reconstruction.size(),
                         sh.report.pre_amplification_distance, sh.report.distance});
  }
  s.envelopes = r.envelopes;
  s.forgeries_attempted = r.forgeries_attempted;
  s.forgeries_accepted = r.forgeries_accepted;
  s.altered_envelopes = r.altered_envelopes;
  s.tapped_envelopes = r.tapped_envelopes;
  return s;
}

std::string render_report(const ScenarioReport& report) {
  Json j;
  j["format"] = "qrelay-report/1";
  j["name"] = report.name;
  j["seed"] = report.seed;
  j["multiplex"] = report.multiplex;
  Json sessions = Json::array();
  for (const auto& s : report.sessions) sessions.push_back(session_json(s));
  j["sessions"] = std::move(sessions);
  return j.dump(2) + "\n";
}

ScenarioReport parse_report(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::Syntax, std::string("report is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "qrelay-report/1") fail(ErrorCode::MalformedInput, "unknown report format");
    ScenarioReport r;
    r.name = j.at("name").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.multiplex = j.at("multiplex").get<std::string>();
    for (const auto& s : j.at("sessions")) r.sessions.push_back(session_from(s));
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedInput, std::string("report is missing or mistypes a field: ") + e.what());
  }
}

std::string report_summary(const ScenarioReport& report) {
  struct Column {
    const char* name;
    int width;
  };
  static constexpr Column cols[] = {{"session", 7},    {"endpoints", 16}, {"route", 24},      {"status", 28},
                                    {"rounds", 8},     {"usable", 7},     {"qber_ab", 7},     {"ab_bits", 8},
                                    {"secret", 7},     {"relay_pools", 13}, {"route_check", 11}};
  auto row = [](const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      std::string c = cells[i];
      if (i + 1 < cells.size()) {
        if (c.size() < static_cast<std::size_t>(cols[i].width)) c.resize(static_cast<std::size_t>(cols[i].width), ' ');
        c += "  ";
      }
      line += c;
    }
    return line + "\n";
  };

  std::vector<std::string> header;
  for (const auto& c : cols) header.emplace_back(c.name);
  std::string out = row(header);

  for (const auto& s : report.sessions) {
    const PairReport* ab = s.endpoint_pair();
    std::string check = "-";
    if (s.route_check) check = s.route_check->ok ? "ok" : "MISMATCH";
    out += row({
        std::to_string(s.id),
        s.alice + "->" + s.bob,
        s.route.empty() ? "-" : join(s.route, ">"),
        s.success ? "ok" : "FAILED:" + s.failure,
        std::to_string(s.rounds),
        s.used_rounds + s.unused_rounds ? fixed(s.used_fraction, 4) : "-",
        ab ? fixed(ab->qber_estimate, 4) : "-",
        ab ? std::to_string(ab->accounting.final_bits) : "-",
        std::to_string(s.secret_bits),
        s.relay_pools(),
        check,
    });
  }
  return out;
}

}  // namespace qrelay
