#   Copyright 2026 The qrelay Authors.
#
#   Licensed under the Apache License, Version 2.0 (the "License");
#   you may not use this file except in compliance with the License.
#   You may obtain a copy of the License at
#
#   http://www.apache.org/licenses/LICENSE-2.0
#
#   Unless required by applicable law or agreed to in writing, software
#   distributed under the License is distributed on an "AS IS" BASIS,
#   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#   See the License for the specific language governing permissions and
#   limitations under the License.

import json
import os
from pathlib import Path

import pytest

import qrelay

ROOT = Path(os.environ.get("QRELAY_SOURCE_DIR", Path(__file__).resolve().parents[2]))
SCENARIOS = ROOT / "scenarios"

MINIMAL = {
    "seed": 9,
    "network": {
        "nodes": [
            {"id": "alice", "role": "endpoint", "attach": "carol"},
            {"id": "carol", "role": "relay"},
            {"id": "bob", "role": "endpoint", "attach": "carol"},
        ]
    },
    "sessions": {"runs": [{"alice": "alice", "bob": "bob", "rounds": 4000}]},
}


def test_run_minimal_mapping():
    out = qrelay.run(MINIMAL)
    assert out.exit_code == 0
    session = out.report["sessions"][0]
    assert session["success"]
    assert session["secret_bits"] > 0
    assert out.summary.startswith("session")
    assert qrelay.replay_transcript(out.transcript)["ok"]


def test_scenario_file_matches_golden_report():
    out = qrelay.run(SCENARIOS / "three_chain.json")
    golden = (ROOT / "tests" / "golden" / "three_chain.report.json").read_text()
    assert out.report_text == golden
    assert qrelay.report_summary(out.report_text) == out.summary


def test_seed_override_changes_keys_not_shape():
    a = qrelay.run(MINIMAL, seed=1).report["sessions"][0]
    b = qrelay.run(MINIMAL, seed=2).report["sessions"][0]
    assert a["route"] == b["route"]
    assert a["pairs"] != b["pairs"]


def test_failure_exit_codes():
    assert qrelay.run(SCENARIOS / "eve_full.json").exit_code == 3
    assert qrelay.run(SCENARIOS / "tamper.json").exit_code == 4
    assert qrelay.exit_code_for("KEY_EXHAUSTION") == 5


def test_validation_errors_are_located():
    bad = json.loads(json.dumps(MINIMAL))
    bad["network"]["nodes"][0]["attach"] = "carol5"
    bad["sessions"]["runs"][0]["rounds"] = -1
    problems = dict(qrelay.validate_config(json.dumps(bad)))
    assert "/network/nodes/0/attach" in problems
    assert "carol5" in problems["/network/nodes/0/attach"]
    assert "/sessions/runs/0/rounds" in problems
    with pytest.raises(qrelay.ConfigError) as info:
        qrelay.run(bad)
    assert info.value.code == "validation"
    assert len(info.value.violations) >= 2


def test_syntax_error_raises_base_error():
    with pytest.raises(qrelay.QrelayError) as info:
        qrelay.run("{ not json")
    assert not isinstance(info.value, qrelay.ConfigError)


def test_normalize_round_trips():
    text = qrelay.normalize_config(json.dumps(MINIMAL))
    assert qrelay.normalize_config(text) == text
    assert json.loads(text)["sessions"]["runs"][0]["qber_threshold"] == 0.11


def test_primitives():
    assert qrelay.classify_round(["X", "X", "X"]) == [(0, 2)]
    assert qrelay.classify_round(["X", "Y", "X"]) == []
    assert abs(qrelay.usable_fraction(4, 40000, seed=3) - 0.875) < 0.01
    key = [1, 0] * 64
    assert qrelay.compute_tag(key, b"abc") != qrelay.compute_tag(key, b"abd")
    assert qrelay.compute_tag(key, b"abc", 8) < 256
