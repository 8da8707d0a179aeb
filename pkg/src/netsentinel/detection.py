"""Threshold- and pattern-based anomaly detection over packet windows.

Four rule kinds cover the attack classes the agent recognizes: overall
packet-rate DoS, icmp floods, syn floods (SYN-without-ACK dominance plus a
rate floor), and port scans (distinct destination ports from one source).
Severity grades by how far the observation overshoots the threshold:
>= 2x is High, >= 1.25x Medium, anything above the line but below that Low.
"""

from __future__ import annotations

import enum
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .maestro import OrdinalLevel
from .pcap import PacketRecord, Protocol, TcpFlags
from .telemetry import TelemetrySnapshot

__all__ = [
    "RuleKind",
    "DetectionRule",
    "AnomalyEvent",
    "WindowStats",
    "collect_stats",
    "evaluate",
    "evaluate_stats",
    "default_rules",
    "severity_for",
    "load_rules",
    "rules_from_json",
]

HIGH_BAND = 2.0
MEDIUM_BAND = 1.25


class RuleKind(str, enum.Enum):
    RATE_DOS = "rate_dos"
    ICMP_FLOOD = "icmp_flood"
    SYN_FLOOD = "syn_flood"
    PORT_SCAN = "port_scan"


@dataclass(frozen=True)
class DetectionRule:
    """One threshold rule; `unit` is documentation for humans and reports."""

    id: str
    kind: RuleKind
    threshold: float
    unit: str
    window_s: float
    maps_to_threat: int
    min_syn_ratio: float = 0.8  # only consulted by syn_flood

    def __post_init__(self) -> None:
        if self.threshold <= 0:
            raise ValueError(f"rule {self.id}: threshold must be > 0")
        if self.window_s <= 0:
            raise ValueError(f"rule {self.id}: window_s must be > 0")
        if not 1 <= self.maps_to_threat <= 10:
            raise ValueError(f"rule {self.id}: maps_to_threat must be in 1..10")


@dataclass(frozen=True)
class AnomalyEvent:
    """A rule violation: observed strictly exceeded the threshold."""

    t: float
    rule_id: str
    severity: OrdinalLevel
    observed: float
    threshold: float
    subject: str
    maps_to_threat: int


def severity_for(observed: float, threshold: float) -> OrdinalLevel:
    ratio = observed / threshold
    if ratio >= HIGH_BAND:
        return OrdinalLevel.HIGH
    if ratio >= MEDIUM_BAND:
        return OrdinalLevel.MEDIUM
    return OrdinalLevel.LOW


@dataclass
class WindowStats:
    """Aggregates the rules consume; built per evaluation window.

    Can be filled incrementally (observe) so the agent never has to buffer
    raw packets for a whole window.
    """

    duration_s: float = 0.0
    packet_count: int = 0
    byte_count: int = 0
    protocol_counts: Counter = field(default_factory=Counter)
    tcp_count: int = 0
    syn_only_count: int = 0
    src_counts: Counter = field(default_factory=Counter)
    dst_ports_by_src: dict = field(default_factory=lambda: defaultdict(set))

    def observe(self, record: PacketRecord) -> None:
        self.packet_count += 1
        self.byte_count += record.original_len
        self.protocol_counts[record.protocol.value] += 1
        self.src_counts[record.src_addr] += 1
        if record.protocol is Protocol.TCP:
            self.tcp_count += 1
            flags = record.tcp_flags
            if flags & TcpFlags.SYN and not flags & TcpFlags.ACK:
                self.syn_only_count += 1
        if record.protocol in (Protocol.TCP, Protocol.UDP):
            self.dst_ports_by_src[record.src_addr].add(record.dst_port)

    def reset(self) -> None:
        self.duration_s = 0.0
        self.packet_count = 0
        self.byte_count = 0
        self.protocol_counts.clear()
        self.tcp_count = 0
        self.syn_only_count = 0
        self.src_counts.clear()
        self.dst_ports_by_src.clear()

    def top_source(self) -> str:
        if not self.src_counts:
            return "unknown"
        # most packets wins; ties break to the lexicographically smallest
        return min(self.src_counts, key=lambda s: (-self.src_counts[s], s))


def collect_stats(packets: Iterable[PacketRecord], duration_s: float) -> WindowStats:
    stats = WindowStats(duration_s=duration_s)
    for record in packets:
        stats.observe(record)
    return stats


def evaluate_stats(stats: WindowStats, rules: Sequence[DetectionRule], t: float) -> list[AnomalyEvent]:
    """Apply every rule to one window's aggregates; one event per violation."""
    if stats.packet_count == 0 or stats.duration_s <= 0:
        return []
    events: list[AnomalyEvent] = []
    span = stats.duration_s
    for rule in rules:
        observed: float | None = None
        subject = stats.top_source()
        if rule.kind is RuleKind.RATE_DOS:
            observed = stats.packet_count / span
        elif rule.kind is RuleKind.ICMP_FLOOD:
            observed = stats.protocol_counts.get(Protocol.ICMP.value, 0) / span
        elif rule.kind is RuleKind.SYN_FLOOD:
            if stats.tcp_count > 0 and stats.syn_only_count / stats.tcp_count > rule.min_syn_ratio:
                observed = stats.syn_only_count / span
            else:
                observed = 0.0
        elif rule.kind is RuleKind.PORT_SCAN:
            if stats.dst_ports_by_src:
                subject, ports = max(
                    stats.dst_ports_by_src.items(), key=lambda kv: (len(kv[1]), kv[0])
                )
                observed = float(len(ports))
            else:
                observed = 0.0
        if observed is not None and observed > rule.threshold:
            events.append(
                AnomalyEvent(
                    t=t,
                    rule_id=rule.id,
                    severity=severity_for(observed, rule.threshold),
                    observed=observed,
                    threshold=rule.threshold,
                    subject=subject,
                    maps_to_threat=rule.maps_to_threat,
                )
            )
    return events


def evaluate(
    packets: Iterable[PacketRecord],
    snapshot: TelemetrySnapshot | None,
    rules: Sequence[DetectionRule],
    window_duration_s: float,
) -> list[AnomalyEvent]:
    """Evaluate rules over an explicit packet window.

    Pure: identical window and rules yield an identical event list. The
    snapshot, when given, only supplies the event timestamp.
    """
    stats = collect_stats(packets, window_duration_s)
    t = snapshot.t if snapshot is not None else window_duration_s
    return evaluate_stats(stats, rules, t)


def default_rules() -> list[DetectionRule]:
    """The built-in rule set; thresholds sized so ordinary traffic stays
    quiet while the scenario floods trip them."""
    return [
        DetectionRule("rate_dos", RuleKind.RATE_DOS, 5_000.0, "pps", 1.0, maps_to_threat=7),
        DetectionRule("icmp_flood", RuleKind.ICMP_FLOOD, 1_000.0, "pps", 1.0, maps_to_threat=7),
        DetectionRule(
            "syn_flood", RuleKind.SYN_FLOOD, 1_000.0, "syn pps", 1.0, maps_to_threat=7, min_syn_ratio=0.8
        ),
        DetectionRule("port_scan", RuleKind.PORT_SCAN, 100.0, "distinct dst ports", 10.0, maps_to_threat=1),
    ]


def rules_from_json(text: str) -> list[DetectionRule]:
    raw = json.loads(text)
    if not isinstance(raw, list):
        raise ValueError("rule config must be a JSON array of rule objects")
    rules = []
    for i, item in enumerate(raw):
        try:
            rules.append(
                DetectionRule(
                    id=item["id"],
                    kind=RuleKind(item["kind"]),
                    threshold=float(item["threshold"]),
                    unit=item.get("unit", ""),
                    window_s=float(item["window_s"]),
                    maps_to_threat=int(item["maps_to_threat"]),
                    min_syn_ratio=float(item.get("min_syn_ratio", 0.8)),
                )
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ValueError(f"invalid rule at index {i}: {exc}") from exc
    return rules


def load_rules(path: str | Path) -> list[DetectionRule]:
    return rules_from_json(Path(path).read_text(encoding="utf-8"))
