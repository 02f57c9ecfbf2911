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

"""Trusted-relay QKD network simulator.

Scenario configs and reports are JSON; ``run`` returns parsed reports.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Any, Mapping, Union

from ._qrelay import (
    ConfigError,
    QrelayError,
    __version__,
    classify_round,
    compute_tag,
    exit_code_for,
    normalize_config,
    replay_transcript,
    report_summary,
    usable_fraction,
    validate_config,
)
from ._qrelay import run_scenario as _run_scenario

__all__ = [
    "ConfigError",
    "QrelayError",
    "Outcome",
    "classify_round",
    "compute_tag",
    "exit_code_for",
    "load_config",
    "normalize_config",
    "replay_transcript",
    "report_summary",
    "run",
    "usable_fraction",
    "validate_config",
]

Config = Union[str, os.PathLike, Mapping[str, Any]]


@dataclass
class Outcome:
    report: dict
    report_text: str
    summary: str
    transcript: str
    exit_code: int


def load_config(config: Config) -> str:
    """Config text from a mapping, a path, or JSON text."""
    if isinstance(config, Mapping):
        return json.dumps(config)
    if isinstance(config, os.PathLike) or (isinstance(config, str) and not config.lstrip().startswith("{")):
        with open(config, encoding="utf-8") as f:
            return f.read()
    return config


def run(config: Config, seed: int | None = None) -> Outcome:
    out = _run_scenario(load_config(config), seed)
    return Outcome(
        report=json.loads(out["report"]),
        report_text=out["report"],
        summary=out["summary"],
        transcript=out["transcript"],
        exit_code=out["exit_code"],
    )
