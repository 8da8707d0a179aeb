"""Adaptive capture-duration tuning from persisted severity history.

history.json is a JSON array of observations; the tuner averages the most
recent entries into a normalized threat index S (low=0, medium=0.5, high=1)
and stretches the next capture window linearly: D = min(Dmax, D0 * (1 + g*S)).
Because the file is the decision input, it is also the memory-poisoning
attack surface; integrity sealing lives in the integrity module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from datetime import datetime
from pathlib import Path
from typing import Callable, Sequence

__all__ = [
    "HistoryEntry",
    "TuningDecision",
    "HistoryFormatError",
    "HistoryEntryError",
    "SEVERITY_WEIGHTS",
    "DEFAULT_BASE_DURATION_S",
    "DEFAULT_GAIN",
    "DEFAULT_MAX_DURATION_S",
    "DEFAULT_RECENCY_WINDOW",
    "load_history",
    "write_history",
    "append_entry",
    "threat_index",
    "decide_capture_duration",
]

SEVERITY_WEIGHTS = {"low": 0.0, "medium": 0.5, "high": 1.0}

DEFAULT_BASE_DURATION_S = 34.0
DEFAULT_GAIN = 4.0
DEFAULT_MAX_DURATION_S = 300.0
DEFAULT_RECENCY_WINDOW = 50


class HistoryFormatError(ValueError):
    """The history file as a whole is not parseable."""


class HistoryEntryError(ValueError):
    """A single entry is invalid; carries its index in the file."""

    def __init__(self, index: int, message: str):
        self.index = index
        super().__init__(f"history entry {index}: {message}")


@dataclass(frozen=True)
class HistoryEntry:
    """One persisted severity observation."""

    t: str
    severity: str
    source: str = "agent"
    note: str = ""
    threat_id: int | None = None

    def validate(self) -> None:
        if self.severity not in SEVERITY_WEIGHTS:
            raise ValueError(f"unknown severity label {self.severity!r}")
        try:
            datetime.fromisoformat(self.t.replace("Z", "+00:00"))
        except ValueError:
            raise ValueError(f"timestamp not ISO-8601: {self.t!r}") from None
        if self.threat_id is not None and not 1 <= int(self.threat_id) <= 10:
            raise ValueError(f"threat_id out of range: {self.threat_id}")

    def to_dict(self) -> dict:
        d = {"t": self.t, "severity": self.severity, "source": self.source, "note": self.note}
        if self.threat_id is not None:
            d["threat_id"] = self.threat_id
        return d


def _entry_from_dict(raw: object, index: int) -> HistoryEntry:
    if not isinstance(raw, dict):
        raise HistoryEntryError(index, f"expected an object, got {type(raw).__name__}")
    try:
        entry = HistoryEntry(
            t=str(raw["t"]),
            severity=str(raw["severity"]),
            source=str(raw.get("source", "agent")),
            note=str(raw.get("note", "")),
            threat_id=raw.get("threat_id"),
        )
        entry.validate()
    except KeyError as exc:
        raise HistoryEntryError(index, f"missing field {exc}") from None
    except ValueError as exc:
        raise HistoryEntryError(index, str(exc)) from None
    return entry


def load_history(path: str | Path) -> list[HistoryEntry]:
    """Read the history file; a missing file is an empty history."""
    path = Path(path)
    if not path.exists():
        return []
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise HistoryFormatError(f"history file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise HistoryFormatError(f"history file {path} must contain a JSON array")
    return [_entry_from_dict(item, i) for i, item in enumerate(raw)]


def write_history(path: str | Path, entries: Sequence[HistoryEntry]) -> None:
    payload = json.dumps([e.to_dict() for e in entries], indent=2) + "\n"
    Path(path).write_text(payload, encoding="utf-8")


def append_entry(
    path: str | Path,
    entry: HistoryEntry,
    resealer: Callable[[Path], None] | None = None,
) -> None:
    """Append one entry and rewrite the file; invokes the resealer hook so
    an integrity seal can track legitimate writes."""
    entry.validate()
    entries = load_history(path)
    entries.append(entry)
    write_history(path, entries)
    if resealer is not None:
        resealer(Path(path))


def threat_index(history: Sequence[HistoryEntry], recency_window: int = DEFAULT_RECENCY_WINDOW) -> float:
    """Mean severity weight over the most recent min(N, len) entries."""
    if recency_window < 1:
        raise ValueError("recency_window must be >= 1")
    if not history:
        return 0.0
    recent = history[-recency_window:]
    return sum(SEVERITY_WEIGHTS[e.severity] for e in recent) / len(recent)


@dataclass(frozen=True)
class TuningDecision:
    capture_duration_s: float
    threat_index: float
    entries_considered: int
    rationale: str

    def to_dict(self) -> dict:
        return asdict(self)


def decide_capture_duration(
    history: Sequence[HistoryEntry],
    *,
    base_duration_s: float = DEFAULT_BASE_DURATION_S,
    gain: float = DEFAULT_GAIN,
    max_duration_s: float = DEFAULT_MAX_DURATION_S,
    recency_window: int = DEFAULT_RECENCY_WINDOW,
) -> TuningDecision:
    """Stretch the capture window proportionally to the threat index."""
    considered = min(recency_window, len(history))
    index = threat_index(history, recency_window)
    duration = min(max_duration_s, base_duration_s * (1.0 + gain * index))
    rationale = (
        f"threat index {index:.3f} over the {considered} most recent "
        f"severity observations; window {base_duration_s:.0f}s stretched by "
        f"factor {duration / base_duration_s:.2f} (cap {max_duration_s:.0f}s)"
    )
    return TuningDecision(
        capture_duration_s=duration,
        threat_index=index,
        entries_considered=considered,
        rationale=rationale,
    )
