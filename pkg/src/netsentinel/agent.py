"""The monitoring agent pipeline.

Wires the resource model, telemetry cadence, detection rules, reasoner,
history integrity, and the proposal/approval state machine into one
simulated-time loop. Packets arrive through deliver() (the replay sink);
quiescent stretches advance through advance_to(). Every proposal state
transition lands in the forensic log and is fanned out to subscribers.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from . import detection, integrity, maestro, reasoning, telemetry, tuner
from .pcap import PacketRecord
from .replay import SimClock

__all__ = [
    "AgentConfig",
    "MonitoringAgent",
    "UnknownActionError",
    "AlreadyDecidedError",
    "ProposalExpiredError",
    "DEFAULT_PROPOSAL_EXPIRY_S",
]

log = logging.getLogger(__name__)

DEFAULT_PROPOSAL_EXPIRY_S = 120.0


def _sim_iso(sim_t: float) -> str:
    """Simulated seconds rendered as a deterministic ISO-8601 timestamp."""
    from datetime import datetime, timezone

    return datetime.fromtimestamp(sim_t, tz=timezone.utc).isoformat()

Subscriber = Callable[[str, dict], None]


class UnknownActionError(KeyError):
    pass


class AlreadyDecidedError(RuntimeError):
    def __init__(self, action_id: str, status: reasoning.ActionStatus):
        self.status = status
        super().__init__(f"action {action_id} already decided: {status.value}")


class ProposalExpiredError(RuntimeError):
    pass


@dataclass
class AgentConfig:
    history_path: str | Path = "history.json"
    forensic_path: str | Path = "forensic.log"
    snapshot_dir: str | Path = "snapshots"
    mode: str = "simulated"
    base_interval_s: float = telemetry.DEFAULT_BASE_INTERVAL_S
    service_rate_pps: float = telemetry.DEFAULT_SERVICE_RATE_PPS
    queue_capacity: float = telemetry.DEFAULT_QUEUE_CAPACITY
    defense_enabled: bool = True
    seal_key: bytes | None = None
    auto_threshold: float = reasoning.DEFAULT_AUTO_THRESHOLD
    proposal_expiry_s: float = DEFAULT_PROPOSAL_EXPIRY_S
    rules: list[detection.DetectionRule] = field(default_factory=detection.default_rules)
    adapter: Callable[[dict], object] | None = None
    adapter_timeout_s: float = reasoning.DEFAULT_ADAPTER_TIMEOUT_S


class MonitoringAgent:
    """Single-task agent loop over simulated time."""

    def __init__(self, config: AgentConfig):
        self.config = config
        self.clock = SimClock()
        self.model = telemetry.ResourceModel(
            service_rate_pps=config.service_rate_pps,
            queue_capacity=config.queue_capacity,
            mode=config.mode if config.mode in ("simulated", "host") else "simulated",
        )
        self.monitor = telemetry.TelemetryMonitor(self.model, config.base_interval_s)
        self.rules = list(config.rules)
        self.registry = maestro.builtin_registry()
        self.matrix = maestro.build_risk_matrix(self.registry)
        self.forensic = integrity.ForensicLog(config.forensic_path)
        self.snapshot_store = integrity.SnapshotStore(config.snapshot_dir)
        self.reasoner = reasoning.RuleBasedReasoner(self.registry, config.auto_threshold)
        self.runner = reasoning.AdapterRunner(
            self.reasoner,
            adapter=config.adapter,
            timeout_s=config.adapter_timeout_s,
            forensic_hook=self.forensic.append,
        )
        if config.defense_enabled and config.seal_key is None:
            log.warning(
                "defense enabled but no seal key provided: history sealing is OFF "
                "and memory poisoning will not be detected"
            )

        self.snapshots: list[telemetry.TelemetrySnapshot] = []
        self.events: list[detection.AnomalyEvent] = []
        self.explanations: list[reasoning.Explanation] = []
        self.proposals: dict[str, reasoning.ActionProposal] = {}
        self.blocklist: set[str] = set()
        self.blocked_packets = 0
        self.capture_override: float | None = None

        self._window = detection.WindowStats()
        self._subscribers: list[Subscriber] = []
        self._prev_suspected: set[int] = set()
        self._active_incident_keys: set[tuple[str, int]] = set()
        self._proposal_threat: dict[str, int] = {}

    # -- plumbing -------------------------------------------------------

    def subscribe(self, fn: Subscriber) -> None:
        self._subscribers.append(fn)

    def _broadcast(self, msg_type: str, payload: dict) -> None:
        for fn in list(self._subscribers):
            fn(msg_type, payload)

    def history_digest(self) -> str:
        path = Path(self.config.history_path)
        data = path.read_bytes() if path.exists() else b""
        return hashlib.sha256(data).hexdigest()

    @property
    def sealing_enabled(self) -> bool:
        return self.config.defense_enabled and self.config.seal_key is not None

    def seal_history(self) -> integrity.IntegritySeal:
        if self.config.seal_key is None:
            raise RuntimeError("no seal key configured")
        path = Path(self.config.history_path)
        if not path.exists():
            path.write_text("[]\n", encoding="utf-8")
        s = integrity.seal(path, self.config.seal_key, snapshot_store=self.snapshot_store)
        self.forensic.append({"event": "seal", "path": str(path), "mac": s.mac_hex})
        return s

    def verify_history(self) -> integrity.VerificationResult | None:
        if not self.sealing_enabled:
            return None
        return integrity.verify(self.config.history_path, self.config.seal_key)

    # -- packet path ------------------------------------------------------

    def deliver(self, record: PacketRecord, t: float) -> None:
        """Replay sink: runs any due telemetry wakes, then ingests."""
        self._run_due_wakes(t)
        if record.src_addr in self.blocklist:
            self.blocked_packets += 1
            return
        self.model.ingest(record, t)
        self._window.observe(record)
        if t > self.clock.now:
            self.clock.advance_to(t)

    def advance_to(self, t: float) -> None:
        """Move simulated time forward through a packet-free stretch."""
        self._run_due_wakes(t)
        self.model.advance(t)
        if t > self.clock.now:
            self.clock.advance_to(t)

    def run_quiet_snapshots(self, count: int) -> list[telemetry.TelemetrySnapshot]:
        """Advance far enough to emit `count` more snapshots."""
        emitted: list[telemetry.TelemetrySnapshot] = []
        for _ in range(count):
            wake = self.monitor.next_wake
            self.advance_to(wake)
            emitted.append(self.snapshots[-1])
        return emitted

    def _run_due_wakes(self, t: float) -> None:
        while self.monitor.next_wake <= t:
            self._wake(self.monitor.next_wake)

    def _record_observation(self, events: list[detection.AnomalyEvent], wt: float) -> None:
        """Persist the window's worst violation so the adaptive tuner sees
        it; legitimate writes re-seal the file when sealing is on."""
        worst = max(events, key=lambda e: (int(e.severity), e.observed / e.threshold))
        entry = tuner.HistoryEntry(
            t=_sim_iso(wt),
            severity=worst.severity.label.lower(),
            source="detector",
            note=f"{worst.rule_id} observed {worst.observed:.0f} against {worst.threshold:.0f}",
            threat_id=worst.maps_to_threat,
        )
        resealer = (lambda path: self.seal_history()) if self.sealing_enabled else None
        tuner.append_entry(self.config.history_path, entry, resealer=resealer)

    # -- the wake pipeline -------------------------------------------------

    def _wake(self, wt: float) -> None:
        self._window.duration_s = wt - self.model.window_start
        stats = self._window
        snap = self.monitor.next_snapshot(wt)
        self.snapshots.append(snap)
        self._broadcast("telemetry", snap.to_dict())

        events = detection.evaluate_stats(stats, self.rules, wt)
        self._window = detection.WindowStats()
        for event in events:
            self.events.append(event)
            self._broadcast("alert", _event_payload(event))

        verification = self.verify_history()
        tampered = (
            verification is not None
            and verification.status is integrity.VerificationStatus.TAMPERED
        )
        # never append (and re-seal) over a file that fails verification:
        # that would bless the attacker's bytes
        if events and not tampered:
            self._record_observation(events, wt)

        if events or tampered:
            explanation = self.runner.explain(
                events, tuple(self.snapshots), verification, self.history_digest()
            )
            self._ingest_explanation(explanation, wt)
        else:
            self._prev_suspected = set()
            self._active_incident_keys = set()

        self._expire_stale(wt)

    def _ingest_explanation(self, explanation: reasoning.Explanation, now: float) -> None:
        self.explanations.append(explanation)
        self._broadcast("explanation", explanation.to_dict())
        current = {s.threat_id for s in explanation.suspected_threats}

        for proposal in explanation.recommended_actions:
            threat_id = _proposal_threat_id(proposal, explanation)
            key = (proposal.kind.value, threat_id)
            if key in self._active_incident_keys:
                continue
            self._register(proposal, threat_id, now)

        # auto actions run only when the suspicion survived two consecutive
        # windows: a single spike never triggers an automatic intervention
        sustained = current & self._prev_suspected
        if self.config.defense_enabled:
            for proposal in list(self.proposals.values()):
                if (
                    proposal.status is reasoning.ActionStatus.PENDING
                    and proposal.policy is reasoning.ActionPolicy.AUTO
                    and self._proposal_threat.get(proposal.id) in sustained
                ):
                    self._execute(proposal, now)
        self._prev_suspected = current

    def _register(self, proposal: reasoning.ActionProposal, threat_id: int, now: float) -> None:
        proposal.created_t = now
        self.proposals[proposal.id] = proposal
        self._proposal_threat[proposal.id] = threat_id
        self._active_incident_keys.add((proposal.kind.value, threat_id))
        self.forensic.append(
            {
                "event": "proposal_created",
                "action_id": proposal.id,
                "kind": proposal.kind.value,
                "policy": proposal.policy.value,
                "confidence": proposal.confidence,
                "t": now,
            }
        )
        self._broadcast("action_proposal", proposal.to_dict())

    def register_explanation(self, explanation: reasoning.Explanation) -> None:
        """Entry point for explanations produced outside the wake loop
        (e.g. an explicit history check)."""
        self._ingest_explanation(explanation, self.clock.now)

    def check_history(self) -> tuple[integrity.VerificationResult | None, reasoning.Explanation | None]:
        """Explicit memory-integrity check; raises proposals on tampering."""
        verification = self.verify_history()
        if verification is None or verification.status is not integrity.VerificationStatus.TAMPERED:
            return verification, None
        explanation = self.runner.explain((), tuple(self.snapshots), verification, self.history_digest())
        self._ingest_explanation(explanation, self.clock.now)
        return verification, explanation

    # -- proposal state machine --------------------------------------------

    def _execute(self, proposal: reasoning.ActionProposal, now: float) -> None:
        kind = proposal.kind
        result: dict = {}
        if kind is reasoning.ActionKind.RATE_LIMIT:
            self.model.set_rate_limit(float(proposal.params["limit_pps"]))
            result["limit_pps"] = proposal.params["limit_pps"]
        elif kind is reasoning.ActionKind.BLOCK_SOURCE:
            self.blocklist.add(str(proposal.params["source"]))
            result["blocked"] = proposal.params["source"]
        elif kind is reasoning.ActionKind.ROLLBACK_HISTORY:
            if self.config.seal_key is None:
                raise RuntimeError("cannot roll back without a seal key")
            count = integrity.rollback(
                self.config.history_path, self.snapshot_store, self.config.seal_key, self.forensic
            )
            result["restored_entries"] = count
        elif kind is reasoning.ActionKind.EXTEND_CAPTURE:
            self.capture_override = float(proposal.params.get("duration_s", 0)) or None
            result["duration_s"] = self.capture_override
        elif kind is reasoning.ActionKind.RAISE_ALERT:
            result["raised"] = True
        proposal.status = reasoning.ActionStatus.EXECUTED
        proposal.decided_t = now
        proposal.params = {**proposal.params, **result}
        self.forensic.append(
            {"event": "proposal_executed", "action_id": proposal.id, "kind": kind.value, "t": now}
        )
        self._broadcast("action_status", proposal.to_dict())

    def _expire_stale(self, now: float) -> None:
        for proposal in self.proposals.values():
            if (
                proposal.status is reasoning.ActionStatus.PENDING
                and now - proposal.created_t > self.config.proposal_expiry_s
            ):
                proposal.status = reasoning.ActionStatus.EXPIRED
                proposal.decided_t = now
                self.forensic.append(
                    {"event": "proposal_expired", "action_id": proposal.id, "t": now}
                )
                self._broadcast("action_status", proposal.to_dict())

    def decide(
        self, action_id: str, verdict: str, operator: str = "operator", now: float | None = None
    ) -> reasoning.ActionProposal:
        """Operator approve/override of a pending proposal."""
        if verdict not in ("approve", "override"):
            raise ValueError(f"verdict must be approve or override, got {verdict!r}")
        if action_id not in self.proposals:
            raise UnknownActionError(action_id)
        proposal = self.proposals[action_id]
        now = self.clock.now if now is None else now
        if proposal.status is not reasoning.ActionStatus.PENDING:
            raise AlreadyDecidedError(action_id, proposal.status)
        if now - proposal.created_t > self.config.proposal_expiry_s:
            proposal.status = reasoning.ActionStatus.EXPIRED
            proposal.decided_t = now
            self.forensic.append({"event": "proposal_expired", "action_id": action_id, "t": now})
            self._broadcast("action_status", proposal.to_dict())
            raise ProposalExpiredError(f"action {action_id} expired before the decision")
        proposal.operator = operator
        event_name = "proposal_approved" if verdict == "approve" else "proposal_overridden"
        self.forensic.append(
            {"event": event_name, "action_id": action_id, "operator": operator, "t": now}
        )
        if verdict == "approve":
            proposal.status = reasoning.ActionStatus.APPROVED
            self._execute(proposal, now)
        else:
            proposal.status = reasoning.ActionStatus.OVERRIDDEN
            proposal.decided_t = now
            self._broadcast("action_status", proposal.to_dict())
        return proposal


def _event_payload(event: detection.AnomalyEvent) -> dict:
    return {
        "t": event.t,
        "rule_id": event.rule_id,
        "severity": event.severity.label,
        "observed": event.observed,
        "threshold": event.threshold,
        "subject": event.subject,
        "maps_to_threat": event.maps_to_threat,
    }


def _proposal_threat_id(
    proposal: reasoning.ActionProposal, explanation: reasoning.Explanation
) -> int:
    kind_defaults = {
        reasoning.ActionKind.RATE_LIMIT: 7,
        reasoning.ActionKind.BLOCK_SOURCE: 7,
        reasoning.ActionKind.ROLLBACK_HISTORY: 8,
        reasoning.ActionKind.RAISE_ALERT: 1,
        reasoning.ActionKind.EXTEND_CAPTURE: 7,
    }
    if "threat_id" in proposal.params:
        return int(proposal.params["threat_id"])
    if explanation.suspected_threats:
        by_kind = kind_defaults.get(proposal.kind)
        ids = {s.threat_id for s in explanation.suspected_threats}
        if by_kind in ids:
            return by_kind
        return max(explanation.suspected_threats, key=lambda s: s.confidence).threat_id
    return kind_defaults.get(proposal.kind, 7)
