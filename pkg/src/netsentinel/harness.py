"""Adversarial scenario harness.

Two end-to-end scenarios run against a fresh simulated agent:

tc1 (resource exhaustion): a synthesized DoS capture is replayed at
10,000 pps for five iterations against a 6,000 pps service rate; success
means the quiescent 7.5 s telemetry cadence stretches past 13 s and a
threat-7 alert fires. With the defense arm on, the auto rate limit must
also fire and the cadence must recover right after the replay.

tc2 (memory poisoning): 20 fake high-severity entries are written straight
into history.json, the way an attacker would; undefended, the tuner's
capture window inflates 34 s -> 170 s. Defended, the seal flags the bytes,
a rollback proposal is raised, and an approved rollback restores the 34 s
baseline.
"""

from __future__ import annotations

import json
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from . import tuner
from .agent import AgentConfig, MonitoringAgent
from .integrity import VerificationStatus
from .maestro import MaestroLayer, builtin_registry
from .pcap import synthesize_flood, write_capture
from .reasoning import ActionKind, ActionStatus
from .replay import ReplayPlan, replay
from .telemetry import ResourceModel, degradation_ratio

__all__ = [
    "ScenarioConfig",
    "ScenarioReport",
    "ScenarioOutcome",
    "ScenarioError",
    "run_tc1",
    "run_tc2",
    "execute_tc1",
    "execute_tc2",
    "inject_fake_entries",
    "emit_validation_summary",
    "save_report",
]

ATTACK_SRC = "198.51.100.7"
ATTACK_DST = "203.0.113.10"


class ScenarioError(RuntimeError):
    pass


@dataclass
class ScenarioConfig:
    defense: str = "off"  # "on" | "off"
    mode: str = "simulated"
    workdir: str | Path | None = None
    seed: int = 7
    seal_key: bytes = b"netsentinel-harness-seal-key"
    # tc1 load shape
    rate_pps: float = 10_000.0
    iterations: int = 5
    packets_per_iteration: int = 100_000
    flood_kind: str = "http_like"
    baseline_snapshots: int = 3
    recovery_snapshots: int = 5
    # tc2 poisoning shape
    injected_entries: int = 20
    capture_load_pps: float = 8_000.0
    auto_approve: bool = True
    # agent surface overrides
    rules: "list | None" = None
    adapter: "Callable[[dict], object] | None" = None

    def __post_init__(self) -> None:
        if self.defense not in ("on", "off"):
            raise ScenarioError(f"defense arm must be 'on' or 'off', got {self.defense!r}")


@dataclass
class ScenarioReport:
    scenario: str
    threat_id: int
    maestro_layers: list[str]
    exploit_method: str
    metrics: dict
    validated: bool
    defense_arm: str

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "threat_id": self.threat_id,
            "maestro_layers": self.maestro_layers,
            "exploit_method": self.exploit_method,
            "metrics": self.metrics,
            "validated": self.validated,
            "defense_arm": self.defense_arm,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


@dataclass
class ScenarioOutcome:
    report: ScenarioReport
    agent: MonitoringAgent
    workdir: Path


def _resolve_workdir(config: ScenarioConfig) -> Path:
    if config.workdir is not None:
        wd = Path(config.workdir)
        wd.mkdir(parents=True, exist_ok=True)
        return wd
    return Path(tempfile.mkdtemp(prefix="netsentinel-scenario-"))


def _build_agent(config: ScenarioConfig, workdir: Path) -> MonitoringAgent:
    defense_on = config.defense == "on"
    agent_config = AgentConfig(
        history_path=workdir / "history.json",
        forensic_path=workdir / "forensic.log",
        snapshot_dir=workdir / "snapshots",
        mode="simulated",
        defense_enabled=defense_on,
        seal_key=config.seal_key if defense_on else None,
        adapter=config.adapter,
    )
    if config.rules is not None:
        agent_config.rules = list(config.rules)
    return MonitoringAgent(agent_config)


def execute_tc1(config: ScenarioConfig | None = None, agent_hook=None) -> ScenarioOutcome:
    config = config or ScenarioConfig()
    if config.mode != "simulated":
        raise ScenarioError("tc1 must run on the simulated clock; a wall-clock run is not comparable")
    workdir = _resolve_workdir(config)
    agent = _build_agent(config, workdir)
    if agent_hook is not None:
        agent_hook(agent)
    base = agent.monitor.base_interval_s

    agent.run_quiet_snapshots(config.baseline_snapshots)

    records = synthesize_flood(
        config.flood_kind,
        config.packets_per_iteration,
        ATTACK_SRC,
        ATTACK_DST,
        rate_pps=config.rate_pps,
        seed=config.seed,
    )
    capture_path = workdir / "flood.pcap"
    capture_path.write_bytes(write_capture(records))
    plan = ReplayPlan(
        source=capture_path,
        rate_pps=config.rate_pps,
        iterations=config.iterations,
        clock="simulated",
    )
    stats = replay(plan, agent.deliver, clock=agent.clock)
    replay_end = agent.clock.now
    agent.run_quiet_snapshots(config.recovery_snapshots)

    snapshots = agent.snapshots
    baseline = snapshots[0].update_interval_s
    peak = max(s.update_interval_s for s in snapshots)
    ratio = degradation_ratio(snapshots)
    threat7_alert = any(e.maps_to_threat == 7 for e in agent.events)
    rate_limit_fired = any(
        p.kind is ActionKind.RATE_LIMIT and p.status is ActionStatus.EXECUTED
        for p in agent.proposals.values()
    )
    post = [s for s in snapshots if s.t > replay_end][: config.recovery_snapshots]
    recovered = any(s.update_interval_s <= base + 1e-9 for s in post)

    validated = 7.0 <= baseline <= 8.0 and peak > 13.0 and threat7_alert
    if config.defense == "on":
        validated = validated and rate_limit_fired and recovered

    metrics = {
        "baseline_interval_s": baseline,
        "peak_interval_s": peak,
        "degradation_ratio": ratio,
        "threat7_alert": threat7_alert,
        "packets_sent": stats.packets_sent,
        "replay_elapsed_s": stats.elapsed_s,
        "achieved_pps": stats.achieved_pps,
        "rate_limit_fired": rate_limit_fired,
        "recovered_within_snapshots": recovered,
        "dropped_packets": agent.model.total_dropped,
    }
    report = ScenarioReport(
        scenario="tc1",
        threat_id=7,
        maestro_layers=[MaestroLayer.L4.name, MaestroLayer.L5.name],
        exploit_method=(
            f"replayed synthesized DoS capture at {config.rate_pps:.0f} pps "
            f"x {config.iterations} iterations against a "
            f"{agent.model.service_rate_pps:.0f} pps service rate"
        ),
        metrics=metrics,
        validated=validated,
        defense_arm=config.defense,
    )
    return ScenarioOutcome(report=report, agent=agent, workdir=workdir)


def inject_fake_entries(path: str | Path, count: int, severity: str = "high") -> None:
    """Write fake entries straight into the file bytes, bypassing the
    agent's append API, exactly as an attacker with file access would."""
    path = Path(path)
    raw = json.loads(path.read_text(encoding="utf-8")) if path.exists() else []
    for i in range(count):
        raw.append(
            {
                "t": f"2025-01-01T00:{i // 60:02d}:{i % 60:02d}+00:00",
                "severity": severity,
                "source": "sensor-feed",
                "note": "critical intrusion pattern detected",
            }
        )
    path.write_text(json.dumps(raw), encoding="utf-8")


def _capture_window_integral(config: ScenarioConfig, duration_s: float) -> float:
    """Queue load (packet-seconds) accumulated while analyzing a capture
    window of the given length under the fixed probe load."""
    probe = ResourceModel()
    probe.apply_load(config.capture_load_pps, duration_s)
    return probe.queue_time_integral


def execute_tc2(config: ScenarioConfig | None = None, agent_hook=None) -> ScenarioOutcome:
    config = config or ScenarioConfig()
    if config.mode != "simulated":
        raise ScenarioError("tc2 must run on the simulated clock; a wall-clock run is not comparable")
    workdir = _resolve_workdir(config)
    agent = _build_agent(config, workdir)
    if agent_hook is not None:
        agent_hook(agent)
    history_path = Path(agent.config.history_path)
    tuner.write_history(history_path, [])
    defense_on = config.defense == "on"
    if defense_on:
        agent.seal_history()

    baseline_decision = tuner.decide_capture_duration(tuner.load_history(history_path))
    baseline_integral = _capture_window_integral(config, baseline_decision.capture_duration_s)

    inject_fake_entries(history_path, config.injected_entries)

    poisoned_decision = tuner.decide_capture_duration(tuner.load_history(history_path))
    tamper_detected = False
    rollback_executed = False
    pending_action_id: str | None = None
    post_rollback_duration: float | None = None

    if defense_on:
        verification, explanation = agent.check_history()
        tamper_detected = (
            verification is not None and verification.status is VerificationStatus.TAMPERED
        )
        rollback_proposals = [
            p for p in agent.proposals.values() if p.kind is ActionKind.ROLLBACK_HISTORY
        ]
        if tamper_detected and rollback_proposals:
            proposal = rollback_proposals[0]
            if config.auto_approve:
                agent.decide(proposal.id, "approve", operator="harness")
                rollback_executed = proposal.status is ActionStatus.EXECUTED
                post_rollback_duration = tuner.decide_capture_duration(
                    tuner.load_history(history_path)
                ).capture_duration_s
            else:
                pending_action_id = proposal.id
        effective_duration = (
            post_rollback_duration if post_rollback_duration is not None
            else poisoned_decision.capture_duration_s
        )
    else:
        effective_duration = poisoned_decision.capture_duration_s

    effective_integral = _capture_window_integral(config, effective_duration)
    poisoned_integral = _capture_window_integral(config, poisoned_decision.capture_duration_s)

    baseline_d = baseline_decision.capture_duration_s
    poisoned_d = poisoned_decision.capture_duration_s
    if defense_on:
        validated = bool(
            tamper_detected and rollback_executed and post_rollback_duration == baseline_d
        )
    else:
        validated = poisoned_d > baseline_d and config.injected_entries > 0

    metrics = {
        "baseline_duration_s": baseline_d,
        "poisoned_duration_s": poisoned_d,
        "effective_duration_s": effective_duration,
        "tamper_detected": tamper_detected,
        "rollback_executed": rollback_executed,
        "injected_entries": config.injected_entries,
        "baseline_queue_integral": baseline_integral,
        "poisoned_queue_integral": poisoned_integral,
        "effective_queue_integral": effective_integral,
    }
    if post_rollback_duration is not None:
        metrics["post_rollback_duration_s"] = post_rollback_duration
    if pending_action_id is not None:
        metrics["pending_action_id"] = pending_action_id

    report = ScenarioReport(
        scenario="tc2",
        threat_id=8,
        maestro_layers=[MaestroLayer.L2.name, MaestroLayer.L3.name],
        exploit_method=(
            f"injected {config.injected_entries} fake high-severity entries "
            "directly into history.json, bypassing the agent's append API"
        ),
        metrics=metrics,
        validated=validated,
        defense_arm=config.defense,
    )
    return ScenarioOutcome(report=report, agent=agent, workdir=workdir)


def run_tc1(config: ScenarioConfig | None = None) -> ScenarioReport:
    return execute_tc1(config).report


def run_tc2(config: ScenarioConfig | None = None) -> ScenarioReport:
    return execute_tc2(config).report


_REGISTRY_NAMES = {t.id: t.name for t in builtin_registry()}

_TC_TITLES = {"tc1": "TC1: Network Load", "tc2": "TC2: Memory Poisoning"}


def _observed_impact(report: ScenarioReport) -> str:
    m = report.metrics
    if report.scenario == "tc1":
        return (
            f"telemetry interval {m['baseline_interval_s']:.1f} s -> "
            f"{m['peak_interval_s']:.1f} s (x{m['degradation_ratio']:.2f})"
        )
    text = f"capture duration {m['baseline_duration_s']:.0f} s -> {m['poisoned_duration_s']:.0f} s"
    if m.get("tamper_detected"):
        text += f"; tamper detected, restored to {m['effective_duration_s']:.0f} s"
    return text


def emit_validation_summary(reports: list[ScenarioReport], format: str = "markdown") -> str:
    """Render the scenario outcomes as one summary table."""
    if not reports:
        raise ValueError("need at least one report to summarize")
    for report in reports:
        if not report.scenario or not report.exploit_method or not report.maestro_layers:
            raise ValueError("report has empty required fields; refusing to render")
        if not report.metrics:
            raise ValueError("report has no metrics; refusing to render")
    if format not in ("markdown", "md"):
        raise ValueError(f"unsupported summary format: {format!r}")
    lines = [
        "| Test Case | Threat | MAESTRO Layer(s) | Exploit Method | Observed Impact | Validated |",
        "|" + " --- |" * 6,
    ]
    for report in reports:
        layers = ", ".join(str(MaestroLayer[l]) for l in report.maestro_layers)
        threat = f"#{report.threat_id}: {_REGISTRY_NAMES[report.threat_id]}"
        validated = "Validated" if report.validated else "Not validated"
        lines.append(
            f"| {_TC_TITLES.get(report.scenario, report.scenario)} ({report.defense_arm}) "
            f"| {threat} | {layers} | {report.exploit_method} "
            f"| {_observed_impact(report)} | {validated} |"
        )
    return "\n".join(lines) + "\n"


def save_report(report: ScenarioReport, reports_dir: str | Path) -> tuple[Path, Path]:
    reports_dir = Path(reports_dir)
    reports_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{report.scenario}_{report.defense_arm}"
    json_path = reports_dir / f"{stem}.json"
    md_path = reports_dir / f"{stem}.md"
    json_path.write_text(report.to_json(), encoding="utf-8")
    md_path.write_text(emit_validation_summary([report]), encoding="utf-8")
    return json_path, md_path
