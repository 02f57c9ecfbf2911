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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qrelay/error.hpp"
#include "qrelay/scenario.hpp"

using namespace qrelay;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "seed": 4,
  "network": {"nodes": [
    {"id": "alice", "role": "endpoint", "attach": "carol"},
    {"id": "carol", "role": "relay"},
    {"id": "bob", "role": "endpoint", "attach": "carol"}]},
  "sessions": {"runs": [{"alice": "alice", "bob": "bob"}]}
})";

std::string read(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<Violation> violations_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ValidationError& e) {
    return e.violations();
  }
  return {};
}

std::string with_run(const std::string& run_fields) {
  return R"({"seed": 1, "network": {"nodes": [
    {"id": "alice", "role": "endpoint", "attach": "carol"}, {"id": "carol", "role": "relay"},
    {"id": "bob", "role": "endpoint", "attach": "carol"}]},
    "sessions": {"runs": [{"alice": "alice", "bob": "bob")" +
         run_fields + "}]}}";
}

bool mentions(const std::vector<Violation>& v, const std::string& loc, const std::string& text) {
  for (const auto& x : v)
    if (x.location == loc && x.message.find(text) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(Config, MinimalAppliesDefaults) {
  const auto c = parse_config(kMinimal);
  EXPECT_EQ(c.seed, 4u);
  EXPECT_EQ(c.network.seed, 4u);
  ASSERT_EQ(c.runs.size(), 1u);
  const RunConfig defaults;
  EXPECT_EQ(c.runs[0].rounds, defaults.rounds);
  EXPECT_EQ(c.runs[0].final_key_reserve, 0.1);
  EXPECT_EQ(c.runs[0].qber_threshold, 0.11);
  EXPECT_EQ(c.network.auth.tag_bits, 64u);
  EXPECT_EQ(c.network.auth.key_bits_per_tag, 128u);
  EXPECT_EQ(c.multiplex, MultiplexPolicy::RunByRun);
  const auto sessions = c.sessions();
  ASSERT_EQ(sessions.size(), 1u);
  EXPECT_EQ(sessions[0].id, 1u);
}

TEST(Config, RepeatExpandsIntoConsecutiveSessions) {
  const auto c = parse_config(with_run(R"(, "repeat": 3, "rounds": 500)"));
  const auto s = c.sessions();
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[2].id, 3u);
  EXPECT_EQ(s[2].rounds, 500u);
}

TEST(Config, UndefinedCarolIsNamed) {
  const auto v = violations_of(R"({"seed": 1, "network": {"nodes": [
    {"id": "alice", "role": "endpoint", "attach": "carol7"}, {"id": "carol", "role": "relay"},
    {"id": "bob", "role": "endpoint", "attach": "carol"}]},
    "sessions": {"runs": [{"alice": "alice", "bob": "bob"}]}})");
  ASSERT_FALSE(v.empty());
  EXPECT_TRUE(mentions(v, "/network/nodes/0/attach", "carol7"));
}

TEST(Config, RangeErrorsAreLocated) {
  EXPECT_TRUE(mentions(violations_of(with_run(R"(, "rounds": -5)")), "/sessions/runs/0/rounds", "out of range"));
  EXPECT_TRUE(mentions(violations_of(with_run(R"(, "rounds": 0)")), "/sessions/runs/0/rounds", ""));
  EXPECT_TRUE(mentions(violations_of(with_run(R"(, "qber_threshold": 0.7)")), "/sessions/runs/0/qber_threshold", ""));
  EXPECT_TRUE(mentions(violations_of(with_run(R"(, "sample_fraction": 1.0)")), "/sessions/runs/0/sample_fraction", ""));
  EXPECT_TRUE(mentions(violations_of(with_run(R"(, "scheme": "bogus")")), "/sessions/runs/0/scheme", ""));
}

TEST(Config, UnknownAndDuplicateKeysReported) {
  EXPECT_TRUE(mentions(violations_of(with_run(R"(, "roundz": 5)")), "/sessions/runs/0/roundz", "unknown"));
  EXPECT_TRUE(mentions(violations_of(with_run(R"(, "rounds": 5, "rounds": 6)")), "/sessions/runs/0/rounds", "duplicate"));
}

TEST(Config, SeveralViolationsReportedTogether) {
  const auto v = violations_of(with_run(R"(, "rounds": -1, "qber_threshold": 2, "bad": 1)"));
  EXPECT_GE(v.size(), 3u);
}

TEST(Config, CrossChecks) {
  EXPECT_TRUE(mentions(violations_of(R"({"seed": 1, "network": {"nodes": [
    {"id": "alice", "role": "endpoint", "attach": "carol"}, {"id": "carol", "role": "relay"}]},
    "sessions": {"runs": [{"alice": "alice", "bob": "alice"}]}})"),
                       "/sessions/runs/0/bob", "differ"));
  EXPECT_TRUE(mentions(violations_of(with_run(R"(, "faults": {"silent_relay": "alice"})")),
                       "/sessions/runs/0/faults/silent_relay", ""));
  EXPECT_FALSE(violations_of(R"({"seed": 1, "network": {"nodes": [
    {"id": "alice", "role": "endpoint", "attach": "carol"}, {"id": "carol", "role": "relay"}]},
    "sessions": {"runs": [{"alice": "alice", "bob": "ghost"}]}})")
                   .empty());
}

TEST(Config, SyntaxErrorIsNotValidation) {
  try {
    parse_config("{\"seed\": ");
    FAIL();
  } catch (const ValidationError&) {
    FAIL() << "syntax errors are not validation errors";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Syntax);
  }
}

TEST(Config, PropertyRandomConfigsRoundTrip) {
  Rng rng(2026);
  for (int t = 0; t < 200; ++t) {
    ScenarioConfig c;
    c.name = "case" + std::to_string(t);
    c.seed = rng.next();
    c.network.seed = c.seed;
    const std::size_t carols = 1 + rng.below(4);
    for (std::size_t i = 0; i < carols; ++i) {
      NodeConfig n;
      n.id = "c" + std::to_string(i);
      n.role = NodeRole::Relay;
      c.network.nodes.push_back(n);
    }
    const std::size_t ends = 2 + rng.below(3);
    for (std::size_t i = 0; i < ends; ++i) {
      NodeConfig n;
      n.id = "e" + std::to_string(i);
      n.attachments = {"c" + std::to_string(rng.below(carols))};
      n.capabilities = Capabilities{true, rng.bit() == 1};
      n.declines = rng.bit() == 1;
      c.network.nodes.push_back(n);
    }
    c.network.default_noise = static_cast<double>(rng.below(100)) / 1000.0;
    c.network.auth.tag_bits = 1 + rng.below(64);
    c.network.auth.key_bits_per_tag = 128 + rng.below(200);
    c.network.initial_pool_bits = rng.below(1 << 20);
    c.multiplex = rng.bit() ? MultiplexPolicy::QubitByQubit : MultiplexPolicy::RunByRun;
    const std::size_t runs = 1 + rng.below(3);
    for (std::size_t i = 0; i < runs; ++i) {
      RunConfig r;
      r.alice = "e0";
      r.bob = "e" + std::to_string(1 + rng.below(ends - 1));
      r.rounds = 1 + rng.below(100000);
      r.scheme = static_cast<AuthScheme>(rng.below(3));
      r.policy = static_cast<BootstrapPolicy>(rng.below(3));
      r.final_key_reserve = static_cast<double>(rng.below(101)) / 100.0;
      r.qber_threshold = static_cast<double>(rng.below(51)) / 100.0;
      r.sample_fraction = static_cast<double>(1 + rng.below(98)) / 100.0;
      r.reconciliation.passes = 1 + rng.below(8);
      r.repeat = 1 + rng.below(3);
      r.faults.deregister_bob = rng.bit() == 1;
      c.runs.push_back(r);
    }
    const std::string text = render_config(c);
    ScenarioConfig back;
    ASSERT_NO_THROW(back = parse_config(text)) << text;
    ASSERT_EQ(back, c) << text;
    ASSERT_EQ(render_config(back), text);
  }
}

TEST(Report, RenderParseRoundTrip) {
  const auto outcome = run_scenario(parse_config(with_run(R"(, "rounds": 4000, "repeat": 2)")));
  const std::string text = render_report(outcome.report);
  const auto back = parse_report(text);
  EXPECT_EQ(back, outcome.report);
  EXPECT_EQ(render_report(back), text);
  EXPECT_THROW(parse_report("{"), Error);
  EXPECT_THROW(parse_report("{\"format\": \"qrelay-report/1\"}"), Error);
}

TEST(Summary, HeaderOnlyForEmptyReport) {
  ScenarioReport r;
  const std::string s = report_summary(r);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1);
  EXPECT_EQ(s.rfind("session", 0), 0u);
  EXPECT_NE(s.find("relay_pools"), std::string::npos);
}

TEST(Summary, FailedRowShowsKind) {
  const auto config = parse_config(R"({"seed": 11, "network": {"nodes": [
    {"id": "alice", "role": "endpoint", "attach": "carol1"}, {"id": "carol1", "role": "relay"},
    {"id": "carol2", "role": "relay"}, {"id": "bob", "role": "endpoint", "attach": "carol2"}]},
    "adversaries": [{"kind": "eve_intercept_resend", "link": ["carol1", "carol2"], "fraction": 1.0}],
    "sessions": {"runs": [{"alice": "alice", "bob": "bob", "rounds": 30000}]}})");
  const auto outcome = run_scenario(config);
  EXPECT_EQ(outcome.exit_code, exit_code::kAbort);
  EXPECT_NE(report_summary(outcome.report).find("FAILED:QBER_ABORT"), std::string::npos);
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(FailureKind::None), 0);
  EXPECT_EQ(exit_code_for(FailureKind::QberAbort), 3);
  EXPECT_EQ(exit_code_for(FailureKind::ReconciliationAbort), 3);
  EXPECT_EQ(exit_code_for(FailureKind::TamperAlarm), 4);
  EXPECT_EQ(exit_code_for(FailureKind::KeyExhaustion), 5);
  EXPECT_EQ(exit_code_for(FailureKind::RouteMismatch), 6);
}

TEST(Outputs, WritesThreeFiles) {
  const auto outcome = run_scenario(parse_config(with_run(R"(, "rounds": 2000)")));
  const fs::path dir = fs::temp_directory_path() / "qrelay_outputs_test";
  fs::remove_all(dir);
  write_outputs(dir / "nested", outcome);
  EXPECT_EQ(read(dir / "nested" / "report.json"), render_report(outcome.report));
  EXPECT_EQ(read(dir / "nested" / "summary.txt"), report_summary(outcome.report));
  EXPECT_EQ(read(dir / "nested" / "transcript.jsonl"), outcome.transcript.str());
  fs::remove_all(dir);
}

// Golden reports of the shipped scenarios, frozen from a reviewed run.
class Golden : public ::testing::TestWithParam<std::string> {};

TEST_P(Golden, ReportAndTranscriptDigestMatch) {
  const fs::path root = QRELAY_SOURCE_DIR;
  const std::string name = GetParam();
  const auto outcome = run_scenario(parse_config(read(root / "scenarios" / (name + ".json"))));
  EXPECT_EQ(render_report(outcome.report), read(root / "tests" / "golden" / (name + ".report.json")));
  std::string digest = read(root / "tests" / "golden" / (name + ".transcript.fnv"));
  while (!digest.empty() && digest.back() == '\n') digest.pop_back();
  EXPECT_EQ(to_hex64(fnv1a64(outcome.transcript.str())), digest);
  EXPECT_TRUE(replay_transcript(outcome.transcript.str()).ok());
}

INSTANTIATE_TEST_SUITE_P(Scenarios, Golden,
                         ::testing::Values("desk_four_chain", "three_chain", "eve_full", "bootstrap", "multiplex",
                                           "silent_reroute", "tamper"));

TEST(Scenario, DeskFourChainSummaryShowsUsableFraction) {
  const fs::path root = QRELAY_SOURCE_DIR;
  const auto outcome = run_scenario(parse_config(read(root / "scenarios" / "desk_four_chain.json")));
  ASSERT_EQ(outcome.exit_code, 0);
  const auto& s = outcome.report.sessions.at(0);
  EXPECT_NEAR(s.used_fraction, 0.875, 0.005);
  EXPECT_EQ(s.relay_pools(), "SUSTAINABLE");
  EXPECT_NE(report_summary(outcome.report).find("0.87"), std::string::npos);
}

TEST(Scenario, SameSeedSameBytes) {
  const auto c = parse_config(with_run(R"(, "rounds": 3000)"));
  const auto a = run_scenario(c);
  const auto b = run_scenario(c);
  EXPECT_EQ(render_report(a.report), render_report(b.report));
  EXPECT_EQ(a.transcript.str(), b.transcript.str());
}
