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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qrelay/netsim.hpp"

namespace qrelay {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// One entry of sessions.runs; `repeat` expands into consecutive sessions.
struct RunConfig {
  NodeId alice;
  NodeId bob;
  std::size_t rounds = 10000;
  AuthScheme scheme = AuthScheme::RelayMediated;
  BootstrapPolicy policy = BootstrapPolicy::TrustCarolAlways;
  double final_key_reserve = 0.1;
  double qber_threshold = 0.11;
  double sample_fraction = 0.25;
  ReconciliationParams reconciliation;
  SessionFaults faults;
  std::size_t repeat = 1;

  bool operator==(const RunConfig&) const = default;
};

struct ScenarioConfig {
  std::string name;
  std::uint64_t seed = 1;
  /// network.seed mirrors `seed`.
  NetworkConfig network;
  MultiplexPolicy multiplex = MultiplexPolicy::RunByRun;
  std::vector<RunConfig> runs;

  /// Session specs in execution order, ids starting at 1.
  std::vector<SessionSpec> sessions() const;
  bool operator==(const ScenarioConfig&) const = default;
};

/// Throws Error(Syntax) for text that is not JSON and ValidationError listing
/// every semantic violation.
ScenarioConfig parse_config(std::string_view text);

/// Canonical text with every field spelled out; parse_config(render_config(c)) == c.
std::string render_config(const ScenarioConfig& config);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct GroupReport {
  NodePair pair;
  std::size_t rounds = 0;
  double fraction = 0.0;

  bool operator==(const GroupReport&) const = default;
};

struct PairReport {
  NodePair pair;
  std::string outcome;
  std::size_t rounds = 0;
  double qber_estimate = 0.0;
  double sifted_qber = 0.0;
  std::size_t leakage_bits = 0;
  KeyAccounting accounting;

  bool operator==(const PairReport&) const = default;
};

struct PoolReport {
  NodePair pair;
  std::size_t consumed = 0;
  std::size_t growth = 0;
  std::size_t bits_after = 0;
  std::size_t remaining_after = 0;

  bool operator==(const PoolReport&) const = default;
};

struct RateEntry {
  NodePair pair;
  bool endpoint_pair = false;
  std::size_t consumed = 0;
  std::size_t generated = 0;
  long long net = 0;
  std::string flag;

  bool operator==(const RateEntry&) const = default;
};

struct RouteReport {
  bool ok = true;
  std::vector<NodeId> announcers;
  std::vector<NodeId> extra;
  std::vector<NodeId> missing;
  bool order_mismatch = false;

  bool operator==(const RouteReport&) const = default;
};

struct ShadowEntry {
  NodeId carol;
  bool available = false;
  std::size_t key_bits = 0;
  std::size_t pre_amplification_distance = 0;
  std::size_t distance = 0;

  bool operator==(const ShadowEntry&) const = default;
};

struct SessionReport {
  std::uint64_t id = 0;
  NodeId alice;
  NodeId bob;
  std::size_t rounds = 0;
  std::string requested_scheme;
  std::string scheme;
  std::string policy;
  std::vector<NodeId> route;
  std::vector<NodeId> physical;
  bool quantum_reversed = false;
  bool success = false;
  std::string failure = "none";
  std::string failure_phase;
  std::string failure_detail;
  std::size_t used_rounds = 0;
  std::size_t unused_rounds = 0;
  double used_fraction = 0.0;
  double unused_fraction = 0.0;
  std::vector<GroupReport> groups;
  std::vector<PairReport> pairs;
  std::size_t secret_bits = 0;
  std::vector<PoolReport> pools;
  std::vector<RateEntry> rates;
  std::optional<RouteReport> route_check;
  std::vector<ShadowEntry> shadows;
  std::size_t envelopes = 0;
  std::size_t forgeries_attempted = 0;
  std::size_t forgeries_accepted = 0;
  std::size_t altered_envelopes = 0;
  std::size_t tapped_envelopes = 0;

  /// Sustainability over relay pools: "SUSTAINABLE", "UNSUSTAINABLE" or "-" without rates.
  std::string relay_pools() const;
  const PairReport* endpoint_pair() const;
  bool operator==(const SessionReport&) const = default;
};

struct ScenarioReport {
  std::string name;
  std::uint64_t seed = 0;
  std::string multiplex = "run_by_run";
  std::vector<SessionReport> sessions;

  bool operator==(const ScenarioReport&) const = default;
};

SessionReport make_session_report(const SessionResult& result);

/// Machine-readable report; field order is fixed.
std::string render_report(const ScenarioReport& report);
/// Throws Error(Syntax) or Error(MalformedInput).
ScenarioReport parse_report(std::string_view text);

/// Fixed-column text table, one row per session. A failed session shows
/// FAILED with its classification; zero sessions gives the header only.
std::string report_summary(const ScenarioReport& report);

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

struct ScenarioOutcome {
  ScenarioReport report;
  /// Network setup records followed by every session's records.
  Transcript transcript;
  std::vector<SessionResult> sessions;
  int exit_code = 0;
};

ScenarioOutcome run_scenario(const ScenarioConfig& config);

/// Writes report.json, summary.txt and transcript.jsonl into `dir`, creating it.
/// Throws Error(Io).
void write_outputs(const std::filesystem::path& dir, const ScenarioOutcome& outcome);

/// Process exit codes of the command-line front end.
namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kValidation = 2;
inline constexpr int kAbort = 3;
inline constexpr int kTamper = 4;
inline constexpr int kKeyExhaustion = 5;
inline constexpr int kProtocol = 6;
inline constexpr int kIo = 7;
}  // namespace exit_code

int exit_code_for(FailureKind kind);

}  // namespace qrelay
