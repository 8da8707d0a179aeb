#!/usr/bin/env python3
"""Record the WebSocket transcripts the dashboard tests replay.

Runs tc1 (defense on) and tc2 (defense on, approval left pending) with a
recording subscriber and writes the per-connection message streams to
frontend/fixtures/. The dashboard's transcript-replay tests consume these
files verbatim, so regenerate them whenever scenario output changes.

Run: python demos/05_record_dashboard_transcripts.py
"""

import json
from pathlib import Path

from netsentinel.harness import ScenarioConfig, execute_tc1, execute_tc2

FIXTURES = Path(__file__).resolve().parent.parent / "frontend" / "fixtures"


class Recorder:
    def __init__(self):
        self.seq = 0
        self.messages = []

    def __call__(self, msg_type: str, payload: dict) -> None:
        self.seq += 1
        self.messages.append({"type": msg_type, "seq": self.seq, "payload": payload})


def record(name: str, execute, config: ScenarioConfig) -> None:
    recorder = Recorder()
    recorder("scenario_status", {"scenario": name, "defense": config.defense, "state": "running"})
    outcome = execute(config, agent_hook=lambda agent: agent.subscribe(recorder))
    recorder(
        "scenario_status",
        {
            "scenario": name,
            "defense": config.defense,
            "state": "finished",
            "validated": outcome.report.validated,
        },
    )
    FIXTURES.mkdir(parents=True, exist_ok=True)
    target = FIXTURES / f"{name}_transcript.json"
    target.write_text(json.dumps(recorder.messages, indent=2) + "\n", encoding="utf-8")
    print(f"{target}: {len(recorder.messages)} messages")


record("tc1", execute_tc1, ScenarioConfig(defense="on"))
# leave the rollback proposal pending: the dashboard test approves it
record("tc2", execute_tc2, ScenarioConfig(defense="on", auto_approve=False))
