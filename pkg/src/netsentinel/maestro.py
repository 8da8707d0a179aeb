"""MAESTRO seven-layer model, the ten-threat registry, and ordinal risk scoring.

The registry ships the threat landscape of an LLM-driven network monitoring
agent: each threat carries its primary MAESTRO layer, the layers it spills
into, and a likelihood/impact/exploitability assessment whose product is the
threat's risk score.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

__all__ = [
    "MaestroLayer",
    "OrdinalLevel",
    "RiskAssessment",
    "ThreatRecord",
    "RiskMatrix",
    "DuplicateThreatIdError",
    "ReportError",
    "score",
    "builtin_registry",
    "build_risk_matrix",
    "report_payload",
    "emit_report",
]


class MaestroLayer(enum.IntEnum):
    """The seven MAESTRO layers, totally ordered L1 < ... < L7."""

    L1 = 1
    L2 = 2
    L3 = 3
    L4 = 4
    L5 = 5
    L6 = 6
    L7 = 7

    @property
    def title(self) -> str:
        return _LAYER_TITLES[self]

    def __str__(self) -> str:  # "L4 - Deployment & Infrastructure"
        return f"{self.name} - {self.title}"


_LAYER_TITLES: dict[MaestroLayer, str] = {
    MaestroLayer.L1: "Foundation Models",
    MaestroLayer.L2: "Data Operations",
    MaestroLayer.L3: "Agent Frameworks",
    MaestroLayer.L4: "Deployment & Infrastructure",
    MaestroLayer.L5: "Evaluation & Observability",
    MaestroLayer.L6: "Security & Compliance",
    MaestroLayer.L7: "Agent Ecosystem",
}


class OrdinalLevel(enum.IntEnum):
    """Qualitative assessment mapped bijectively onto an ordinal value."""

    LOW = 1
    MEDIUM = 2
    HIGH = 3

    @property
    def label(self) -> str:
        return self.name.capitalize()

    @classmethod
    def from_label(cls, label: str) -> "OrdinalLevel":
        try:
            return cls[label.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown ordinal label: {label!r}") from None


def score(likelihood: OrdinalLevel, impact: OrdinalLevel, exploitability: OrdinalLevel) -> int:
    """Risk score: the product of the three ordinal values."""
    return int(likelihood) * int(impact) * int(exploitability)


@dataclass(frozen=True)
class RiskAssessment:
    """(P, I, E) triple; the score is always the live product, never stored."""

    likelihood: OrdinalLevel
    impact: OrdinalLevel
    exploitability: OrdinalLevel

    @property
    def score(self) -> int:
        return score(self.likelihood, self.impact, self.exploitability)


@dataclass(frozen=True)
class ThreatRecord:
    """One registry entry.

    `alias` keeps an alternate name where the taxonomy and the operational
    risk matrix disagree; `notes` keeps a divergent layer mapping the same
    way. Neither participates in scoring or reports.
    """

    id: int
    name: str
    definition: str
    primary_layer: MaestroLayer
    cross_layer_impacts: frozenset[MaestroLayer]
    example_use_case: str
    assessment: RiskAssessment
    alias: str | None = None
    notes: str | None = None

    def __post_init__(self) -> None:
        if not 1 <= self.id <= 10:
            raise ValueError(f"threat id must be in 1..10, got {self.id}")
        if self.primary_layer in self.cross_layer_impacts:
            raise ValueError(
                f"threat {self.id}: primary layer {self.primary_layer.name} "
                "must not appear in its own cross-layer impacts"
            )

    @property
    def cross_layers_sorted(self) -> list[MaestroLayer]:
        return sorted(self.cross_layer_impacts)


class DuplicateThreatIdError(ValueError):
    def __init__(self, threat_id: int):
        self.threat_id = threat_id
        super().__init__(f"duplicate threat id in registry: {threat_id}")


class ReportError(ValueError):
    pass


def _layers(*nums: int) -> frozenset[MaestroLayer]:
    return frozenset(MaestroLayer(n) for n in nums)


def _pie(p: int, i: int, e: int) -> RiskAssessment:
    return RiskAssessment(OrdinalLevel(p), OrdinalLevel(i), OrdinalLevel(e))


_BUILTIN_THREATS: tuple[ThreatRecord, ...] = (
    ThreatRecord(
        id=1,
        name="Input-Induced Behavior Manipulation",
        alias="Instruction Manipulation",
        definition="Crafted inputs or log entries steer the agent's behavior away from its intent.",
        primary_layer=MaestroLayer.L3,
        cross_layer_impacts=_layers(2, 5),
        example_use_case="A forged log line shifts the anomaly thresholds the agent applies.",
        assessment=_pie(3, 2, 2),
        notes="Taxonomy variant: primary L7, cross-layer L1, L3.",
    ),
    ThreatRecord(
        id=2,
        name="Goal Manipulation",
        definition="Gradual redirection of the agent's objectives through ambiguous or poisoned feedback.",
        primary_layer=MaestroLayer.L3,
        cross_layer_impacts=_layers(1, 2),
        example_use_case="Drift leads the agent to favor throughput over security checks.",
        assessment=_pie(3, 3, 1),
        notes="Taxonomy variant: cross-layer L1, L6.",
    ),
    ThreatRecord(
        id=3,
        name="Chain-of-Thought Manipulation",
        definition="Corruption of the model's stepwise inference so conclusions are attacker-chosen.",
        primary_layer=MaestroLayer.L1,
        cross_layer_impacts=_layers(2, 5),
        example_use_case="An intrusion is reasoned about as a routine backup job.",
        assessment=_pie(3, 3, 2),
        notes="Taxonomy variant: cross-layer L3 only.",
    ),
    ThreatRecord(
        id=4,
        name="Memory & Context Manipulation",
        definition="Injection or alteration of episodic memory that future analysis relies on.",
        primary_layer=MaestroLayer.L3,
        cross_layer_impacts=_layers(2, 5),
        example_use_case="Edited alert history hides a repeating attack pattern.",
        assessment=_pie(2, 3, 2),
        notes="Taxonomy variant: primary L1, cross-layer L2, L3, L5.",
    ),
    ThreatRecord(
        id=5,
        name="Critical System Interaction",
        definition="Abuse of the agent's tool or API invocations to act destructively on the host system.",
        primary_layer=MaestroLayer.L4,
        cross_layer_impacts=_layers(3, 7),
        example_use_case="A spoofed trigger pushes a malicious firewall update.",
        assessment=_pie(2, 3, 2),
        notes="Taxonomy variant: cross-layer L6, L7.",
    ),
    ThreatRecord(
        id=6,
        name="Planning & Reasoning Exploitation",
        alias="Planning & Reasoning Exploit",
        definition="Shaped observations that degrade long-horizon planning and decision quality.",
        primary_layer=MaestroLayer.L3,
        cross_layer_impacts=_layers(5, 6),
        example_use_case="Fake load-balancing signals mask an ongoing DDoS.",
        assessment=_pie(3, 3, 2),
        notes="Taxonomy variant: cross-layer L1, L5.",
    ),
    ThreatRecord(
        id=7,
        name="Resource Exhaustion",
        definition="Overload of compute, memory, or queue capacity until monitoring and inference degrade.",
        primary_layer=MaestroLayer.L4,
        cross_layer_impacts=_layers(5, 7),
        example_use_case="A traffic flood saturates the packet queue and starves telemetry.",
        assessment=_pie(3, 3, 3),
        notes="Taxonomy variant: cross-layer L2, L5.",
    ),
    ThreatRecord(
        id=8,
        name="Knowledge Base Poisoning",
        definition="Poisoning of stored knowledge or retrieval sources that ground the agent's decisions.",
        primary_layer=MaestroLayer.L2,
        cross_layer_impacts=_layers(1, 3),
        example_use_case="False threat intel causes benign traffic to be flagged and real attacks missed.",
        assessment=_pie(3, 3, 1),
    ),
    ThreatRecord(
        id=9,
        name="Supply Chain Compromise",
        definition="Compromised models, libraries, or plugins introduced before deployment.",
        primary_layer=MaestroLayer.L2,
        cross_layer_impacts=_layers(1, 4),
        example_use_case="A tainted plugin exfiltrates sensitive telemetry.",
        assessment=_pie(2, 3, 2),
        notes="Taxonomy variant: primary L6, cross-layer L1-L4.",
    ),
    ThreatRecord(
        id=10,
        name="Multi-Agent Exploitation",
        definition="One agent abuses shared memory or coordination channels to mislead its peers.",
        primary_layer=MaestroLayer.L3,
        cross_layer_impacts=_layers(4, 7),
        example_use_case="Poisoned shared state misguides a downstream classifier.",
        assessment=_pie(2, 3, 3),
        notes="Taxonomy variant: primary L7, cross-layer L1-L6.",
    ),
)

REGISTRY_VERSION = "builtin-1"


def builtin_registry() -> list[ThreatRecord]:
    """The ten built-in threats, in id order."""
    return list(_BUILTIN_THREATS)


def _rank_key(threat: ThreatRecord) -> tuple[int, int, int, int]:
    a = threat.assessment
    return (-a.score, -int(a.impact), -int(a.likelihood), threat.id)


@dataclass(frozen=True)
class RiskMatrix:
    """Scored registry rows plus the ranking permutation of their ids."""

    rows: tuple[ThreatRecord, ...]
    ranking: tuple[int, ...] = field(default=())

    def row(self, threat_id: int) -> ThreatRecord:
        for r in self.rows:
            if r.id == threat_id:
                return r
        raise KeyError(threat_id)

    def ranked_rows(self) -> list[ThreatRecord]:
        by_id = {r.id: r for r in self.rows}
        return [by_id[i] for i in self.ranking]


def build_risk_matrix(registry: list[ThreatRecord]) -> RiskMatrix:
    """Score every row and rank by score desc, ties by impact desc,
    likelihood desc, then id asc."""
    if not registry:
        raise ValueError("registry must not be empty")
    seen: set[int] = set()
    for threat in registry:
        if threat.id in seen:
            raise DuplicateThreatIdError(threat.id)
        seen.add(threat.id)
    ranking = tuple(t.id for t in sorted(registry, key=_rank_key))
    return RiskMatrix(rows=tuple(registry), ranking=ranking)


def report_payload(matrix: RiskMatrix) -> dict:
    """Report content as plain data; rows appear in ranking order."""
    threats = []
    for threat in matrix.ranked_rows():
        a = threat.assessment
        threats.append(
            {
                "id": threat.id,
                "name": threat.name,
                "primary_layer": threat.primary_layer.name,
                "cross_layers": [l.name for l in threat.cross_layers_sorted],
                "likelihood": a.likelihood.label,
                "impact": a.impact.label,
                "exploitability": a.exploitability.label,
                "score": a.score,
            }
        )
    return {"threats": threats, "ranking": list(matrix.ranking)}


_MD_HEADER = (
    "| Threat | Primary Layer | Cross-Layer Impact | Likelihood | Impact | Exploitability | Risk Score |"
)


def _markdown_report(matrix: RiskMatrix) -> str:
    lines = [_MD_HEADER, "|" + " --- |" * 7]
    for threat in matrix.ranked_rows():
        a = threat.assessment
        cross = ", ".join(str(l) for l in threat.cross_layers_sorted)
        lines.append(
            f"| {threat.id}. {threat.name} | {threat.primary_layer} | {cross} "
            f"| {a.likelihood.label} ({int(a.likelihood)}) "
            f"| {a.impact.label} ({int(a.impact)}) "
            f"| {a.exploitability.label} ({int(a.exploitability)}) "
            f"| {a.score} |"
        )
    return "\n".join(lines) + "\n"


def emit_report(matrix: RiskMatrix, format: str = "json") -> bytes:
    """Deterministic serialization of the matrix; rows in ranking order."""
    if not matrix.rows:
        raise ReportError("cannot emit a report for a matrix with no rows")
    if format == "json":
        return (json.dumps(report_payload(matrix), indent=2) + "\n").encode("utf-8")
    if format in ("markdown", "md"):
        return _markdown_report(matrix).encode("utf-8")
    raise ReportError(f"unsupported report format: {format!r}")
