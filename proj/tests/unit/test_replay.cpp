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

#include <nlohmann/json.hpp>
#include <sstream>

#include "qrelay/netsim.hpp"
#include "qrelay/scenario.hpp"

using namespace qrelay;
using Json = nlohmann::ordered_json;

namespace {

const std::string& transcript() {
  static const std::string text = [] {
    const auto config = parse_config(R"({
      "name": "replay", "seed": 21,
      "network": {"nodes": [
        {"id": "alice", "role": "endpoint", "attach": "carol1"},
        {"id": "carol1", "role": "relay"}, {"id": "carol2", "role": "relay"},
        {"id": "bob", "role": "endpoint", "attach": "carol2"}]},
      "links": {"default_noise": 0.01},
      "sessions": {"runs": [{"alice": "alice", "bob": "bob", "rounds": 6000}]}
    })");
    return run_scenario(config).transcript.str();
  }();
  return text;
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string join(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

// First record of `type` satisfying `pick`, as (index, json).
std::pair<std::size_t, Json> find_record(const std::vector<std::string>& lines, const std::string& type,
                                         const std::function<bool(const Json&)>& pick = {}) {
  for (std::size_t i = 0; i < lines.size(); ++i) {
    Json j = Json::parse(lines[i]);
    if (j["type"] == type && (!pick || pick(j))) return {i, j};
  }
  ADD_FAILURE() << "no record of type " << type;
  return {0, {}};
}

}  // namespace

TEST(Replay, CleanTranscriptVerifies) {
  const auto r = replay_transcript(transcript());
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.records, lines_of(transcript()).size());
  EXPECT_GT(r.tag_checks, 0u);
  EXPECT_GT(r.sift_checks, 0u);
  EXPECT_GT(r.accounting_checks, 0u);
}

TEST(Replay, FlippedTagBitIsReportedAtItsRecord) {
  auto lines = lines_of(transcript());
  auto [idx, j] = find_record(lines, "envelope", [](const Json& e) { return e["session"] == 1; });
  auto& tag = j["hops"][0]["tags"][0]["value"];
  std::string v = tag.get<std::string>();
  v.back() = v.back() == '0' ? '1' : '0';
  tag = v;
  lines[idx] = j.dump();
  const auto r = replay_transcript(join(lines));
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.issues.front().record, idx);
  EXPECT_EQ(r.issues.front().type, "envelope");
}

TEST(Replay, AlteredAccountingIsReported) {
  auto lines = lines_of(transcript());
  auto [idx, j] = find_record(lines, "pair_key", [](const Json& e) { return e["outcome"] == "ok"; });
  j["final_bits"] = j["final_bits"].get<std::size_t>() + 1;
  lines[idx] = j.dump();
  const auto r = replay_transcript(join(lines));
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.issues.front().record, idx);
}

TEST(Replay, TruncatedTranscriptIsCaught) {
  const std::string& t = transcript();
  const auto mid = replay_transcript(std::string_view(t).substr(0, t.size() / 2));
  EXPECT_FALSE(mid.well_formed);
  const auto no_newline = replay_transcript(std::string_view(t).substr(0, t.size() - 1));
  EXPECT_FALSE(no_newline.well_formed);
  auto lines = lines_of(t);
  lines.pop_back();
  const auto dropped = replay_transcript(join(lines));
  EXPECT_FALSE(dropped.ok()) << "a session without its end record is incomplete";
}

TEST(Replay, GarbageIsNotWellFormed) {
  EXPECT_FALSE(replay_transcript("{\"type\":\"nonsense\"}\n").well_formed);
  EXPECT_FALSE(replay_transcript("not json\n").well_formed);
}
