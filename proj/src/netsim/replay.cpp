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

using records::Json;

namespace {

const std::set<std::string>& known_types() {
  static const std::set<std::string> t{"network", "tables",   "schedule", "session_start", "route",
                                       "chain",   "quantum",  "envelope", "route_check",   "sift",
                                       "pair_key", "shadow",  "pool",     "rate",          "failure",
                                       "session_end"};
  return t;
}

struct SessionState {
  std::size_t tag_bits = 64;
  std::size_t key_bits = 128;
  std::size_t rounds = 0;
  std::map<std::size_t, std::vector<Basis>> bases;
};

class Replayer {
 public:
  explicit Replayer(ReplayReport& report) : r_(report) {}

  void record(std::size_t index, const Json& j) {
    const std::string type = j.at("type").get<std::string>();
    index_ = index;
    type_ = type;
    if (type == "network") {
      tag_bits_ = j.at("tag_bits").get<std::size_t>();
      key_bits_ = j.at("key_bits_per_tag").get<std::size_t>();
    } else if (type == "session_start") {
      const auto id = j.at("session").get<std::uint64_t>();
      if (!open_.insert(id).second) malformed("session " + std::to_string(id) + " started twice");
      SessionState& s = sessions_[id];
      s = SessionState{};
      s.tag_bits = j.at("tag_bits").get<std::size_t>();
      s.key_bits = j.at("key_bits_per_tag").get<std::size_t>();
    } else if (type == "session_end") {
      const auto id = j.at("session").get<std::uint64_t>();
      if (open_.erase(id) == 0) malformed("session " + std::to_string(id) + " ended without starting");
    } else if (type == "quantum") {
      quantum(j);
    } else if (type == "sift") {
      sift_check(j);
    } else if (type == "envelope") {
      envelope(j);
    } else if (type == "pair_key") {
      pair_key(j);
    } else if (type == "pool") {
      pool(j);
    } else if (type == "rate") {
      rate(j);
    }
  }

  void finish() {
    for (auto id : open_) {
      r_.well_formed = false;
      r_.issues.push_back({r_.records, "session_end", "session " + std::to_string(id) + " never ended; transcript truncated"});
    }
  }

 private:
  void issue(const std::string& message) { r_.issues.push_back({index_, type_, message}); }
  void malformed(const std::string& message) {
    r_.well_formed = false;
    issue(message);
  }

  SessionState* session_of(const Json& j) {
    const auto id = j.at("session").get<std::uint64_t>();
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : &it->second;
  }

  void quantum(const Json& j) {
    SessionState* s = session_of(j);
    if (!s) return malformed("quantum record outside a session");
    const auto rounds = j.at("rounds").get<std::size_t>();
    const Bits b = records::hex_bits(j.at("bases").get<std::string>(), rounds);
    std::vector<Basis> bases(rounds);
    for (std::size_t i = 0; i < rounds; ++i) bases[i] = b[i] ? Basis::Y : Basis::X;
    s->rounds = rounds;
    s->bases[j.at("position").get<std::size_t>()] = std::move(bases);
  }

  void sift_check(const Json& j) {
    SessionState* s = session_of(j);
    if (!s) return malformed("sift record outside a session");
    ++r_.sift_checks;
    const std::size_t n = s->bases.size();
    std::vector<std::vector<Basis>> announced(s->rounds, std::vector<Basis>(n));
    for (const auto& [pos, bases] : s->bases) {
      if (pos >= n) return issue("quantum positions are not contiguous");
      for (std::size_t r = 0; r < s->rounds; ++r) announced[r][pos] = bases[r];
    }
    const GroupAssignment a = sift_bases(announced, n);
    if (a.used_rounds() != j.at("used").get<std::size_t>() || a.unused_rounds() != j.at("unused").get<std::size_t>()) {
      issue("recomputed used/unused rounds differ from the record");
    }
    const auto by_pair = a.rounds_by_pair();
    const auto& groups = j.at("groups");
    if (groups.size() != by_pair.size()) return issue("recomputed group list differs from the record");
    for (const auto& g : groups) {
      const PositionPair pp{g.at("positions").at(0).get<std::size_t>(), g.at("positions").at(1).get<std::size_t>()};
      auto it = by_pair.find(pp);
      if (it == by_pair.end() || it->second.size() != g.at("rounds").get<std::size_t>()) {
        issue("group " + std::to_string(pp.first) + "-" + std::to_string(pp.last) + " count differs");
      }
    }
  }

  static ClassicalEnvelope header(const Json& src, std::uint64_t session) {
    ClassicalEnvelope e;
    e.session_id = session;
    e.sequence = src.at("seq").get<std::uint64_t>();
    e.origin = src.at("origin").get<std::string>();
    e.destination = src.at("destination").get<std::string>();
    const auto pt = records::parse_payload_type(src.at("payload_type").get<std::string>());
    if (!pt) fail(ErrorCode::MalformedInput, "unknown payload type");
    e.payload_type = *pt;
    e.payload = from_hex(src.at("payload").get<std::string>());
    return e;
  }

  void envelope(const Json& j) {
    const auto session = j.at("session").get<std::uint64_t>();
    std::size_t tag_bits = tag_bits_;
    std::size_t key_bits = key_bits_;
    if (auto it = sessions_.find(session); it != sessions_.end()) {
      tag_bits = it->second.tag_bits;
      key_bits = it->second.key_bits;
    }
    const ClassicalEnvelope base = header(j, session);
    const auto& hops = j.at("hops");
    for (std::size_t h = 0; h < hops.size(); ++h) {
      const Json& hop = hops[h];
      ClassicalEnvelope env = hop.contains("received") ? header(hop.at("received"), session) : base;
      for (const auto& t : hop.at("tags")) env.tag_chain.push_back(records::tag_from_json(t));
      for (const auto& c : hop.at("checks")) {
        ++r_.tag_checks;
        const auto idx = c.at("tag").get<std::size_t>();
        const bool recorded = c.at("ok").get<bool>();
        const std::string key_hex = c.at("key").get<std::string>();
        if (idx >= env.tag_chain.size()) {
          issue("hop " + std::to_string(h) + " checks a tag that is not present");
          continue;
        }
        bool expected = false;
        if (!key_hex.empty() && !c.at("stale").get<bool>()) {
          const Bits key = records::hex_bits(key_hex, key_bits);
          expected = compute_tag(key, env.digest_input(idx), tag_bits) == env.tag_chain[idx].value;
        }
        if (expected != recorded) {
          issue("hop " + std::to_string(h) + " tag " + std::to_string(idx) + " recomputes to " +
                (expected ? "valid" : "invalid") + " but was recorded " + (recorded ? "valid" : "invalid"));
        }
      }
    }
  }

  void pair_key(const Json& j) {
    ++r_.accounting_checks;
    const auto raw = j.at("raw_bits").get<std::size_t>();
    const auto disclosed = j.at("estimation_disclosed").get<std::size_t>();
    const auto input = j.at("reconciliation_input").get<std::size_t>();
    const auto amp = j.at("amplification_input").get<std::size_t>();
    const auto compression = j.at("compression").get<std::size_t>();
    const auto final_bits = j.at("final_bits").get<std::size_t>();
    if (j.at("outcome").get<std::string>() != "ok") return;
    if (raw != disclosed + input) issue("raw bits differ from disclosed plus reconciliation input");
    if (amp != input) issue("amplification input differs from reconciliation input");
    if (amp < compression || final_bits != amp - compression) issue("final length differs from input minus compression");
  }

  void pool(const Json& j) {
    ++r_.accounting_checks;
    const auto key = j.at("pair_key_bits").get<std::size_t>();
    const auto growth = j.at("pool_growth").get<std::size_t>();
    const auto secret = j.at("secret_output").get<std::size_t>();
    if (j.at("relay_pair").get<bool>()) {
      if (growth != key || secret != 0) issue("relay pool growth differs from its pair key length");
    } else if (growth + secret != key) {
      issue("secret output plus reserve differs from the pair key length");
    }
  }

  void rate(const Json& j) {
    ++r_.accounting_checks;
    const auto consumed = j.at("consumed").get<long long>();
    const auto generated = j.at("generated").get<long long>();
    if (j.at("net").get<long long>() != generated - consumed) issue("net rate differs from generated minus consumed");
    const std::string flag = j.at("flag").get<std::string>();
    const bool endpoint = j.at("endpoint_pair").get<bool>();
    const std::string expect = endpoint ? (generated - consumed > 0 ? "POSITIVE" : "NEGATIVE")
                                        : (consumed <= generated ? "SUSTAINABLE" : "UNSUSTAINABLE");
    if (flag != expect) issue("rate flag " + flag + " should be " + expect);
  }

  ReplayReport& r_;
  std::size_t index_ = 0;
  std::string type_;
  std::size_t tag_bits_ = 64;
  std::size_t key_bits_ = 128;
  std::set<std::uint64_t> open_;
  std::map<std::uint64_t, SessionState> sessions_;
};

}  // namespace

ReplayReport replay_transcript(std::string_view jsonl) {
  ReplayReport report;
  Replayer replayer(report);
  std::size_t index = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    const auto nl = jsonl.find('\n', pos);
    const bool terminated = nl != std::string_view::npos;
    const std::string_view text = jsonl.substr(pos, terminated ? nl - pos : std::string_view::npos);
    pos = terminated ? nl + 1 : jsonl.size();
    if (text.empty()) continue;
    ++report.records;
    Json j;
    try {
      j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      report.well_formed = false;
      report.issues.push_back({index, "", std::string("record does not parse: ") + e.what()});
      break;
    }
    if (!terminated) {
      report.well_formed = false;
      report.issues.push_back({index, "", "final record is not newline terminated; transcript truncated"});
    }
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string() ||
        !known_types().contains(j["type"].get<std::string>())) {
      report.well_formed = false;
      report.issues.push_back({index, "", "record has no known type"});
      break;
    }
    try {
      replayer.record(index, j);
    } catch (const std::exception& e) {
      report.well_formed = false;
      report.issues.push_back({index, j["type"].get<std::string>(), std::string("record is malformed: ") + e.what()});
    }
    ++index;
  }
  replayer.finish();
  return report;
}

}  // namespace qrelay
