"""Rule-based reasoning core and the guarded adapter contract for an
external LLM.

correlate() is a deterministic rule table from observed evidence to
suspected threats and remediation proposals. An external model can replace
it only through the adapter contract: whatever the adapter returns is
schema-validated and policy-recomputed, and any violation, timeout, or
garbage falls back to the rule-based result. Destructive action kinds are
never eligible for auto-execution, no matter who proposed them.
"""

from __future__ import annotations

import concurrent.futures
import enum
import itertools
import json
from dataclasses import dataclass
from typing import Callable, Sequence

from .detection import AnomalyEvent, RuleKind
from .integrity import VerificationResult, VerificationStatus
from .maestro import ThreatRecord
from .telemetry import TelemetrySnapshot

__all__ = [
    "ActionKind",
    "ActionPolicy",
    "ActionStatus",
    "ActionProposal",
    "SuspectedThreat",
    "Explanation",
    "RuleBasedReasoner",
    "AdapterRunner",
    "HttpAdapter",
    "ExplanationSchemaError",
    "AUTO_KINDS",
    "DESTRUCTIVE_KINDS",
    "DEFAULT_AUTO_THRESHOLD",
    "DEFAULT_ADAPTER_TIMEOUT_S",
    "classify_policy",
    "validate_explanation",
    "build_adapter_request",
]

RATE_RULE_KINDS = {RuleKind.RATE_DOS.value, RuleKind.ICMP_FLOOD.value, RuleKind.SYN_FLOOD.value}

DEFAULT_AUTO_THRESHOLD = 0.9
DEFAULT_ADAPTER_TIMEOUT_S = 10.0


class ActionKind(str, enum.Enum):
    RAISE_ALERT = "raise_alert"
    BLOCK_SOURCE = "block_source"
    EXTEND_CAPTURE = "extend_capture"
    ROLLBACK_HISTORY = "rollback_history"
    RATE_LIMIT = "rate_limit"


# Only these may ever run without an operator; everything else needs approval.
AUTO_KINDS = frozenset({ActionKind.RAISE_ALERT, ActionKind.RATE_LIMIT})
DESTRUCTIVE_KINDS = frozenset(
    {ActionKind.BLOCK_SOURCE, ActionKind.ROLLBACK_HISTORY, ActionKind.EXTEND_CAPTURE}
)


class ActionPolicy(str, enum.Enum):
    AUTO = "auto"
    NEEDS_APPROVAL = "needs_approval"


class ActionStatus(str, enum.Enum):
    PENDING = "pending"
    APPROVED = "approved"
    OVERRIDDEN = "overridden"
    EXECUTED = "executed"
    EXPIRED = "expired"


def classify_policy(
    kind: ActionKind, confidence: float, auto_threshold: float = DEFAULT_AUTO_THRESHOLD
) -> ActionPolicy:
    if kind in AUTO_KINDS and confidence >= auto_threshold:
        return ActionPolicy.AUTO
    return ActionPolicy.NEEDS_APPROVAL


@dataclass
class ActionProposal:
    """A remediation the reasoner suggests; execution is gated by policy."""

    id: str
    kind: ActionKind
    params: dict
    confidence: float
    policy: ActionPolicy
    status: ActionStatus = ActionStatus.PENDING
    created_t: float = 0.0
    decided_t: float | None = None
    operator: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "params": self.params,
            "confidence": self.confidence,
            "policy": self.policy.value,
            "status": self.status.value,
            "created_t": self.created_t,
            "decided_t": self.decided_t,
            "operator": self.operator,
        }


@dataclass(frozen=True)
class SuspectedThreat:
    threat_id: int
    confidence: float

    def to_dict(self) -> dict:
        return {"threat_id": self.threat_id, "confidence": self.confidence}


@dataclass(frozen=True)
class Explanation:
    """What the reasoner concluded and what it wants done about it."""

    summary: str
    suspected_threats: tuple[SuspectedThreat, ...] = ()
    evidence: tuple[str, ...] = ()
    recommended_actions: tuple[ActionProposal, ...] = ()

    def to_dict(self) -> dict:
        return {
            "summary": self.summary,
            "suspected_threats": [s.to_dict() for s in self.suspected_threats],
            "evidence": list(self.evidence),
            "recommended_actions": [a.to_dict() for a in self.recommended_actions],
        }


class ExplanationSchemaError(ValueError):
    pass


class RuleBasedReasoner:
    """Deterministic correlation from events, snapshots, and memory
    integrity to suspected threats plus proposals."""

    def __init__(
        self,
        registry: Sequence[ThreatRecord],
        auto_threshold: float = DEFAULT_AUTO_THRESHOLD,
    ):
        self.registry = {t.id: t for t in registry}
        self.auto_threshold = auto_threshold
        self._ids = itertools.count(1)

    def _next_id(self) -> str:
        return f"ap-{next(self._ids):04d}"

    def _proposal(self, kind: ActionKind, params: dict, confidence: float, t: float) -> ActionProposal:
        return ActionProposal(
            id=self._next_id(),
            kind=kind,
            params=params,
            confidence=confidence,
            policy=classify_policy(kind, confidence, self.auto_threshold),
            created_t=t,
        )

    def correlate(
        self,
        events: Sequence[AnomalyEvent],
        snapshots: Sequence[TelemetrySnapshot],
        history_verification: VerificationResult | None = None,
    ) -> Explanation:
        """Map observed evidence to suspected threats.

        Rate-style violations point at resource exhaustion (threat 7) with
        confidence min(1, overshoot/2); a tampered history is knowledge-base
        poisoning (threat 8) at full confidence; a port-scan burst is input
        manipulation context (threat 1).
        """
        now = snapshots[-1].t if snapshots else (events[-1].t if events else 0.0)
        suspected: list[SuspectedThreat] = []
        evidence: list[str] = []
        actions: list[ActionProposal] = []

        rate_events = [e for e in events if e.rule_id in RATE_RULE_KINDS or _rule_kind(e) in RATE_RULE_KINDS]
        scan_events = [e for e in events if _rule_kind(e) == RuleKind.PORT_SCAN.value]

        if rate_events:
            top = max(rate_events, key=lambda e: e.observed / e.threshold)
            confidence = min(1.0, (top.observed / top.threshold) / 2.0)
            suspected.append(SuspectedThreat(threat_id=7, confidence=confidence))
            evidence.extend(f"event:{e.rule_id}@{e.t:.3f}" for e in rate_events)
            degraded = [
                s for s in snapshots
                if s.update_interval_s > snapshots[0].update_interval_s * 1.25
            ]
            evidence.extend(f"snapshot:{s.seq}" for s in degraded[-3:])
            actions.append(
                self._proposal(
                    ActionKind.RATE_LIMIT,
                    {"limit_pps": top.threshold, "rule_id": top.rule_id},
                    confidence,
                    now,
                )
            )
            actions.append(
                self._proposal(
                    ActionKind.BLOCK_SOURCE, {"source": top.subject}, confidence, now
                )
            )

        if history_verification is not None and history_verification.status is VerificationStatus.TAMPERED:
            suspected.append(SuspectedThreat(threat_id=8, confidence=1.0))
            evidence.append("history:tampered")
            actions.append(
                self._proposal(ActionKind.ROLLBACK_HISTORY, {"target": "history"}, 1.0, now)
            )

        if scan_events:
            top = max(scan_events, key=lambda e: e.observed / e.threshold)
            confidence = min(1.0, (top.observed / top.threshold) / 2.0)
            suspected.append(SuspectedThreat(threat_id=1, confidence=confidence))
            evidence.extend(f"event:{e.rule_id}@{e.t:.3f}" for e in scan_events)
            actions.append(
                self._proposal(
                    ActionKind.RAISE_ALERT,
                    {"reason": "port scan burst", "source": top.subject},
                    confidence,
                    now,
                )
            )

        if not suspected:
            return Explanation(summary="no anomalies observed; all signals within thresholds")

        names = ", ".join(
            f"{s.threat_id} ({self.registry[s.threat_id].name})" for s in suspected
            if s.threat_id in self.registry
        )
        return Explanation(
            summary=f"suspected threats: {names}",
            suspected_threats=tuple(suspected),
            evidence=tuple(evidence),
            recommended_actions=tuple(actions),
        )


def _rule_kind(event: AnomalyEvent) -> str:
    # rule ids default to their kind name; custom ids still match by prefix
    for kind in RuleKind:
        if event.rule_id == kind.value or event.rule_id.startswith(kind.value + ":"):
            return kind.value
    return event.rule_id


def validate_explanation(
    payload: object,
    registry: Sequence[ThreatRecord] | dict[int, ThreatRecord],
    auto_threshold: float = DEFAULT_AUTO_THRESHOLD,
) -> Explanation:
    """Parse an untrusted explanation payload into a safe Explanation.

    Raises ExplanationSchemaError on any structural violation. Policies are
    recomputed from kind and confidence; the payload's own policy claims
    are ignored so the no-auto-destructive floor always holds.
    """
    known_ids = (
        set(registry.keys()) if isinstance(registry, dict) else {t.id for t in registry}
    )
    if not isinstance(payload, dict):
        raise ExplanationSchemaError("explanation must be a JSON object")
    summary = payload.get("summary")
    if not isinstance(summary, str) or not summary:
        raise ExplanationSchemaError("summary must be a non-empty string")

    suspected = []
    for raw in _expect_list(payload, "suspected_threats"):
        if not isinstance(raw, dict):
            raise ExplanationSchemaError("suspected threat entries must be objects")
        tid = raw.get("threat_id")
        conf = raw.get("confidence")
        if not isinstance(tid, int) or isinstance(tid, bool) or tid not in known_ids:
            raise ExplanationSchemaError(f"unknown threat id: {tid!r}")
        if not isinstance(conf, (int, float)) or isinstance(conf, bool) or not 0.0 <= conf <= 1.0:
            raise ExplanationSchemaError(f"confidence out of range: {conf!r}")
        suspected.append(SuspectedThreat(threat_id=tid, confidence=float(conf)))

    evidence = []
    for item in _expect_list(payload, "evidence"):
        if not isinstance(item, str):
            raise ExplanationSchemaError("evidence entries must be strings")
        evidence.append(item)

    actions = []
    for raw in _expect_list(payload, "recommended_actions"):
        if not isinstance(raw, dict):
            raise ExplanationSchemaError("action entries must be objects")
        try:
            kind = ActionKind(raw.get("kind"))
        except ValueError:
            raise ExplanationSchemaError(f"unknown action kind: {raw.get('kind')!r}") from None
        conf = raw.get("confidence")
        if not isinstance(conf, (int, float)) or isinstance(conf, bool) or not 0.0 <= conf <= 1.0:
            raise ExplanationSchemaError(f"action confidence out of range: {conf!r}")
        params = raw.get("params", {})
        if not isinstance(params, dict):
            raise ExplanationSchemaError("action params must be an object")
        actions.append(
            ActionProposal(
                id=str(raw.get("id", f"ap-ext-{len(actions) + 1:04d}")),
                kind=kind,
                params=params,
                confidence=float(conf),
                policy=classify_policy(kind, float(conf), auto_threshold),
                created_t=float(raw.get("created_t", 0.0)),
            )
        )

    return Explanation(
        summary=summary,
        suspected_threats=tuple(suspected),
        evidence=tuple(evidence),
        recommended_actions=tuple(actions),
    )


def _expect_list(payload: dict, key: str) -> list:
    value = payload.get(key, [])
    if not isinstance(value, list):
        raise ExplanationSchemaError(f"{key} must be a list")
    return value


def build_adapter_request(
    events: Sequence[AnomalyEvent],
    snapshots: Sequence[TelemetrySnapshot],
    history_digest: str,
    registry_version: str,
) -> dict:
    return {
        "events": [
            {
                "t": e.t,
                "rule_id": e.rule_id,
                "severity": e.severity.label,
                "observed": e.observed,
                "threshold": e.threshold,
                "subject": e.subject,
                "maps_to_threat": e.maps_to_threat,
            }
            for e in events
        ],
        "snapshots": [s.to_dict() for s in snapshots],
        "history_digest": history_digest,
        "registry_version": registry_version,
    }


class HttpAdapter:
    """POSTs the context bundle to an HTTP endpoint and returns its JSON.

    Transport-level problems surface as exceptions; the AdapterRunner turns
    them into fallbacks.
    """

    def __init__(self, url: str, token: str = "", timeout_s: float = DEFAULT_ADAPTER_TIMEOUT_S, client=None):
        import httpx

        self.url = url
        self.timeout_s = timeout_s
        headers = {"Authorization": f"Bearer {token}"} if token else {}
        self._client = client or httpx.Client(headers=headers, timeout=timeout_s)

    def __call__(self, request: dict) -> object:
        response = self._client.post(self.url, json=request)
        response.raise_for_status()
        return response.json()


class AdapterRunner:
    """Runs an external adapter under the fallback contract.

    The adapter must return a schema-valid explanation payload within the
    timeout; otherwise the rule-based result is used and the failure is
    recorded in the forensic log when one is attached.
    """

    def __init__(
        self,
        reasoner: RuleBasedReasoner,
        adapter: Callable[[dict], object] | None = None,
        timeout_s: float = DEFAULT_ADAPTER_TIMEOUT_S,
        forensic_hook: Callable[[dict], object] | None = None,
    ):
        self.reasoner = reasoner
        self.adapter = adapter
        self.timeout_s = timeout_s
        self.forensic_hook = forensic_hook

    def _fallback(self, reason: str, fallback: Explanation) -> Explanation:
        if self.forensic_hook is not None:
            self.forensic_hook({"event": "adapter_fallback", "reason": reason})
        return fallback

    def explain(
        self,
        events: Sequence[AnomalyEvent],
        snapshots: Sequence[TelemetrySnapshot],
        history_verification: VerificationResult | None = None,
        history_digest: str = "",
    ) -> Explanation:
        rule_based = self.reasoner.correlate(events, snapshots, history_verification)
        if self.adapter is None:
            return rule_based

        from .maestro import REGISTRY_VERSION

        request = build_adapter_request(events, snapshots, history_digest, REGISTRY_VERSION)
        # no context manager: shutdown must not join a still-running adapter,
        # or a timeout would block for the adapter's full duration
        pool = concurrent.futures.ThreadPoolExecutor(max_workers=1)
        try:
            future = pool.submit(self.adapter, request)
            try:
                payload = future.result(timeout=self.timeout_s)
            except concurrent.futures.TimeoutError:
                return self._fallback(f"adapter timed out after {self.timeout_s}s", rule_based)
            except Exception as exc:
                return self._fallback(f"adapter raised: {exc}", rule_based)
        finally:
            pool.shutdown(wait=False, cancel_futures=True)

        if isinstance(payload, (bytes, str)):
            try:
                payload = json.loads(payload)
            except (json.JSONDecodeError, UnicodeDecodeError):
                return self._fallback("adapter returned non-JSON bytes", rule_based)
        try:
            return validate_explanation(payload, self.reasoner.registry, self.reasoner.auto_threshold)
        except ExplanationSchemaError as exc:
            return self._fallback(f"adapter schema violation: {exc}", rule_based)
