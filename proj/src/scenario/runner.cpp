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

#include <fstream>

#include "qrelay/error.hpp"
#include "qrelay/scenario.hpp"

namespace qrelay {

int exit_code_for(FailureKind kind) {
  switch (kind) {
    case FailureKind::None: return exit_code::kOk;
    case FailureKind::QberAbort:
    case FailureKind::ReconciliationAbort: return exit_code::kAbort;
    case FailureKind::TamperAlarm: return exit_code::kTamper;
    case FailureKind::KeyExhaustion: return exit_code::kKeyExhaustion;
    default: return exit_code::kProtocol;
  }
}

ScenarioOutcome run_scenario(const ScenarioConfig& config) {
  NetworkConfig nc = config.network;
  nc.seed = config.seed;
  Network net = Network::build(nc);

  ScenarioOutcome out;
  out.report.name = config.name;
  out.report.seed = config.seed;
  out.report.multiplex = std::string(to_string(config.multiplex));
  out.transcript.extend(net.setup_transcript());

  const std::vector<SessionSpec> specs = config.sessions();
  MultiplexResult m = multiplex_sessions(net, specs, config.multiplex);
  out.transcript.extend(m.transcript);
  for (auto& s : m.sessions) {
    out.report.sessions.push_back(make_session_report(s));
    if (out.exit_code == exit_code::kOk && !s.success) out.exit_code = exit_code_for(s.failure);
  }
  out.sessions = std::move(m.sessions);
  return out;
}

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::Io, "cannot open " + p.string() + " for writing");
  f << text;
  f.close();
  if (!f) fail(ErrorCode::Io, "failed writing " + p.string());
}

}  // namespace

void write_outputs(const std::filesystem::path& dir, const ScenarioOutcome& outcome) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "report.json", render_report(outcome.report));
  write_file(dir / "summary.txt", report_summary(outcome.report));
  write_file(dir / "transcript.jsonl", outcome.transcript.str());
}

}  // namespace qrelay
