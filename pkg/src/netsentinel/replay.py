"""Rate-controlled replay of capture files into a packet consumer.

Simulated-clock mode spaces packets at exactly 1/rate_pps in simulated time
and is the default for scenario runs; wall-clock mode exists for demos.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol as TypingProtocol

from .pcap import PacketRecord, parse_capture

__all__ = ["Clock", "SimClock", "WallClock", "ReplayPlan", "ReplayStats", "ReplayError", "replay"]

PacketSink = Callable[[PacketRecord, float], None]


class Clock(TypingProtocol):
    @property
    def now(self) -> float: ...

    def sleep(self, seconds: float) -> None: ...


class SimClock:
    """Simulated time: sleep() advances instantly."""

    def __init__(self, start: float = 0.0):
        self._now = float(start)

    @property
    def now(self) -> float:
        return self._now

    def sleep(self, seconds: float) -> None:
        if seconds < 0:
            raise ValueError("cannot sleep a negative duration")
        self._now += seconds

    def advance_to(self, t: float) -> None:
        if t < self._now:
            raise ValueError(f"cannot move simulated time backwards ({t} < {self._now})")
        self._now = t


class WallClock:
    def __init__(self):
        self._origin = time.monotonic()

    @property
    def now(self) -> float:
        return time.monotonic() - self._origin

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)


@dataclass(frozen=True)
class ReplayPlan:
    """How to replay a capture: source file, target rate, loop count."""

    source: str | Path
    rate_pps: float
    iterations: int = 1
    clock: str = "simulated"

    def __post_init__(self) -> None:
        if self.rate_pps <= 0:
            raise ValueError("rate_pps must be > 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.clock not in ("simulated", "wall"):
            raise ValueError(f"unknown clock mode: {self.clock!r}")


@dataclass(frozen=True)
class ReplayStats:
    packets_sent: int
    elapsed_s: float
    achieved_pps: float


class ReplayError(RuntimeError):
    """Replay aborted; carries how many packets had been delivered."""

    def __init__(self, message: str, packets_sent: int):
        self.packets_sent = packets_sent
        super().__init__(message)


def replay(plan: ReplayPlan, sink: PacketSink, clock: Clock | None = None) -> ReplayStats:
    """Deliver every record of the plan's capture `iterations` times to the
    sink, spaced 1/rate_pps apart on the given clock.

    The sink is called as sink(record, arrival_time). A sink exception
    aborts the replay and surfaces as ReplayError with the count delivered
    so far.
    """
    try:
        data = Path(plan.source).read_bytes()
    except OSError as exc:
        raise ReplayError(f"cannot read capture source {plan.source}: {exc}", 0) from exc
    records = parse_capture(data)
    if clock is None:
        clock = SimClock() if plan.clock == "simulated" else WallClock()

    start = clock.now
    spacing = 1.0 / plan.rate_pps
    sent = 0
    for _ in range(plan.iterations):
        for record in records:
            clock.sleep(spacing)
            try:
                sink(record, clock.now)
            except Exception as exc:
                raise ReplayError(f"sink refused packet {sent}: {exc}", sent) from exc
            sent += 1
    elapsed = clock.now - start
    achieved = sent / elapsed if elapsed > 0 else 0.0
    return ReplayStats(packets_sent=sent, elapsed_s=elapsed, achieved_pps=achieved)
