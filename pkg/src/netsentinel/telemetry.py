"""Resource model and periodic telemetry snapshots.

The simulated resource model is a fluid queue: arrivals enqueue one packet
each, the service process drains `service_rate_pps` continuously, and the
queue is bounded by `queue_capacity` (overflow counts as drops). The
snapshot interval degrades additively with backlog, which is the measurable
symptom of a resource-exhaustion attack: interval = base + queue/service
at emission; that same value schedules the next emission.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, asdict

from .pcap import PacketRecord

__all__ = [
    "ResourceModel",
    "TelemetrySnapshot",
    "TelemetryMonitor",
    "NotEnoughDataError",
    "degradation_ratio",
    "DEFAULT_BASE_INTERVAL_S",
    "DEFAULT_SERVICE_RATE_PPS",
    "DEFAULT_QUEUE_CAPACITY",
]

DEFAULT_BASE_INTERVAL_S = 7.5
DEFAULT_SERVICE_RATE_PPS = 6_000.0
DEFAULT_QUEUE_CAPACITY = 40_000.0


@dataclass(frozen=True)
class TelemetrySnapshot:
    """One periodic report of traffic and resource state."""

    seq: int
    t: float
    pps: float
    bytes_per_s: float
    top_protocol: str
    cpu_util: float
    mem_util: float
    queue_len: float
    update_interval_s: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


class ResourceModel:
    """Packet-processing capacity model.

    In simulated mode the whole state is driven by the caller's timeline:
    advance(t) drains the queue up to time t, ingest() enqueues. Host mode
    samples real process metrics for demos and is excluded from scenario
    determinism.
    """

    def __init__(
        self,
        service_rate_pps: float = DEFAULT_SERVICE_RATE_PPS,
        queue_capacity: float = DEFAULT_QUEUE_CAPACITY,
        mode: str = "simulated",
        start_t: float = 0.0,
    ):
        if service_rate_pps <= 0:
            raise ValueError("service_rate_pps must be > 0")
        if queue_capacity <= 0:
            raise ValueError("queue_capacity must be > 0")
        if mode not in ("simulated", "host"):
            raise ValueError(f"unknown mode: {mode!r}")
        self.service_rate_pps = service_rate_pps
        self.queue_capacity = queue_capacity
        self.mode = mode
        self.queue_len = 0.0
        self.admitted_rate_limit: float | None = None
        self._tokens = 0.0  # admission tokens when rate-limited
        self._t = start_t
        # lifetime counters (fluid, so floats)
        self.total_arrived = 0.0
        self.total_admitted = 0.0
        self.total_drained = 0.0
        self.total_dropped = 0.0
        self.queue_time_integral = 0.0  # packet-seconds of backlog
        self.reset_window(start_t)

    # -- window bookkeeping -------------------------------------------------

    def reset_window(self, t: float) -> None:
        self._window_start = t
        self._window_packets = 0.0
        self._window_bytes = 0.0
        self._window_protocols: Counter[str] = Counter()

    @property
    def now(self) -> float:
        return self._t

    @property
    def window_start(self) -> float:
        return self._window_start

    @property
    def window_duration(self) -> float:
        return self._t - self._window_start

    @property
    def window_packets(self) -> float:
        return self._window_packets

    # -- dynamics -----------------------------------------------------------

    def _fluid_segment(self, arrival_pps: float, dt: float) -> None:
        """Exact fluid evolution over dt with a constant arrival rate.

        The queue rises or falls linearly, saturating at the capacity
        (overflow drops) or at zero (arrivals served on arrival); the
        backlog integral accumulates the exact piecewise-linear area.
        """
        mu = self.service_rate_pps
        effective = arrival_pps
        if self.admitted_rate_limit is not None and effective > self.admitted_rate_limit:
            self.total_dropped += (effective - self.admitted_rate_limit) * dt
            effective = self.admitted_rate_limit
        net = effective - mu
        q0 = self.queue_len
        if net > 0:
            t_cap = min(dt, (self.queue_capacity - q0) / net)
            self.queue_time_integral += q0 * t_cap + 0.5 * net * t_cap**2
            q_at_cap = q0 + net * t_cap
            rest = dt - t_cap
            self.queue_time_integral += q_at_cap * rest
            self.queue_len = q_at_cap
            self.total_drained += mu * dt  # service stays busy: queue > 0 throughout
            self.total_admitted += effective * t_cap + mu * rest
            self.total_dropped += net * rest
        else:
            t_empty = dt if net == 0 else min(dt, q0 / -net) if q0 > 0 else 0.0
            self.queue_time_integral += q0 * t_empty + 0.5 * net * t_empty**2
            q_end = q0 + net * t_empty
            rest = dt - t_empty
            # past t_empty the queue is empty and arrivals are served directly
            self.total_drained += (mu * t_empty if q0 > 0 else effective * t_empty) + effective * rest
            self.queue_len = max(0.0, q_end)
            self.total_admitted += effective * dt

    def advance(self, t: float) -> None:
        """Drain the queue continuously up to time t."""
        if t < self._t:
            raise ValueError(f"cannot advance model backwards ({t} < {self._t})")
        dt = t - self._t
        if dt > 0:
            drainable = self.service_rate_pps * dt
            drained = min(self.queue_len, drainable)
            # backlog area: linear decay while the queue is non-empty
            drain_time = drained / self.service_rate_pps
            self.queue_time_integral += self.queue_len * drain_time - 0.5 * self.service_rate_pps * drain_time**2
            self.queue_time_integral += (self.queue_len - drained) * (dt - drain_time)
            self.queue_len -= drained
            self.total_drained += drained
            if self.admitted_rate_limit is not None:
                self._tokens = min(
                    self.admitted_rate_limit,
                    self._tokens + self.admitted_rate_limit * dt,
                )
        self._t = t

    def ingest(self, record: PacketRecord, t: float) -> None:
        """Account one arriving packet at time t."""
        self.advance(t)
        self.total_arrived += 1
        self._window_packets += 1
        self._window_bytes += record.original_len
        self._window_protocols[record.protocol.value] += 1
        if self.admitted_rate_limit is not None:
            if self._tokens >= 1.0:
                self._tokens -= 1.0
            else:
                self.total_dropped += 1
                return
        if self.queue_len + 1 > self.queue_capacity:
            self.total_dropped += 1
            return
        self.queue_len += 1
        self.total_admitted += 1

    def apply_load(self, rate_pps: float, duration_s: float) -> None:
        """Fluid bulk arrivals: `rate_pps` held for `duration_s`. Used for
        coarse load windows where per-packet fidelity is not needed."""
        if rate_pps < 0 or duration_s < 0:
            raise ValueError("rate and duration must be non-negative")
        if duration_s == 0:
            return
        self.total_arrived += rate_pps * duration_s
        self._window_packets += rate_pps * duration_s
        self._fluid_segment(rate_pps, duration_s)
        self._t += duration_s

    def set_rate_limit(self, limit_pps: float | None) -> None:
        """Cap admission into the queue (defense action); None lifts it."""
        if limit_pps is not None and limit_pps <= 0:
            raise ValueError("rate limit must be > 0")
        self.admitted_rate_limit = limit_pps
        self._tokens = 0.0

    # -- metrics ------------------------------------------------------------

    def backlog_seconds(self) -> float:
        return self.queue_len / self.service_rate_pps

    def cpu_util(self) -> float:
        if self.mode == "host":
            return _host_cpu_util()
        span = self.window_duration
        if span <= 0:
            return 0.0
        return min(1.0, (self._window_packets / span) / self.service_rate_pps)

    def mem_util(self) -> float:
        if self.mode == "host":
            return _host_mem_util()
        return min(1.0, self.queue_len / self.queue_capacity)

    def window_metrics(self) -> tuple[float, float, str]:
        span = self.window_duration
        if span <= 0 or self._window_packets == 0:
            return 0.0, 0.0, "none"
        top = max(self._window_protocols.items(), key=lambda kv: (kv[1], kv[0]))[0]
        return self._window_packets / span, self._window_bytes / span, top

    def conservation_error(self) -> float:
        """|arrived - (drained + dropped + queued)|; ~0 at all times."""
        return abs(self.total_arrived - (self.total_drained + self.total_dropped + self.queue_len))


def _host_cpu_util() -> float:
    import psutil

    return psutil.cpu_percent(interval=None) / 100.0


def _host_mem_util() -> float:
    import psutil

    return psutil.virtual_memory().percent / 100.0


class TelemetryMonitor:
    """Emits snapshots on a backlog-stretched cadence.

    The baseline cadence is base_interval_s; each emission records
    base + backlog_seconds() and schedules the next wake that far ahead,
    so a loaded agent visibly reports less often.
    """

    def __init__(self, model: ResourceModel, base_interval_s: float = DEFAULT_BASE_INTERVAL_S):
        if base_interval_s <= 0:
            raise ValueError("base_interval_s must be > 0")
        self.model = model
        self.base_interval_s = base_interval_s
        self._seq = 0
        self.next_wake = model.now + base_interval_s

    def due(self, t: float) -> bool:
        return t >= self.next_wake

    def next_snapshot(self, now: float) -> TelemetrySnapshot:
        """Emit the snapshot for the wake at `now` and schedule the next."""
        self.model.advance(now)
        self._seq += 1
        pps, bps, top = self.model.window_metrics()
        interval = self.base_interval_s + self.model.backlog_seconds()
        snap = TelemetrySnapshot(
            seq=self._seq,
            t=now,
            pps=pps,
            bytes_per_s=bps,
            top_protocol=top,
            cpu_util=self.model.cpu_util(),
            mem_util=self.model.mem_util(),
            queue_len=self.model.queue_len,
            update_interval_s=interval,
        )
        self.model.reset_window(now)
        self.next_wake = now + interval
        return snap


class NotEnoughDataError(ValueError):
    pass


def degradation_ratio(snapshots: list[TelemetrySnapshot]) -> float:
    """Max observed update interval over the baseline (first) interval."""
    if len(snapshots) < 2:
        raise NotEnoughDataError("need at least 2 snapshots to compute a degradation ratio")
    baseline = snapshots[0].update_interval_s
    peak = max(s.update_interval_s for s in snapshots)
    return peak / baseline
