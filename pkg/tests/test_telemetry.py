"""Queue model, snapshot cadence degradation, and the degradation ratio."""

import pytest
from hypothesis import given, settings, strategies as st

from netsentinel.pcap import synthesize_flood
from netsentinel.telemetry import (
    NotEnoughDataError,
    ResourceModel,
    TelemetryMonitor,
    TelemetrySnapshot,
    degradation_ratio,
)


def discrete_queue_oracle(arrival_pps, service_pps, duration_s, dt=0.001, capacity=None):
    """Independent step-by-step queue simulation."""
    q = 0.0
    for _ in range(int(round(duration_s / dt))):
        q = max(0.0, q - service_pps * dt)
        q += arrival_pps * dt
        if capacity is not None:
            q = min(q, capacity)
    return q


def ingest_flood(model, count, rate_pps, start=0.0, kind="http_like"):
    records = synthesize_flood(kind, count, "10.0.0.1", "10.0.0.2", rate_pps=rate_pps)
    spacing = 1.0 / rate_pps
    for i, record in enumerate(records):
        model.ingest(record, start + (i + 1) * spacing)


class TestQueueDynamics:
    def test_overload_queue_matches_discrete_oracle(self):
        # 10,000 pps against 6,000 pps of service for 10 simulated seconds
        model = ResourceModel()
        ingest_flood(model, 100_000, 10_000.0)
        expected = discrete_queue_oracle(10_000, 6_000, 10.0, capacity=model.queue_capacity)
        assert model.queue_len == pytest.approx(expected, abs=2.0)
        assert model.queue_len == pytest.approx(40_000, abs=2.0)

    def test_stable_queue_returns_to_zero(self):
        model = ResourceModel()
        ingest_flood(model, 4_000, 1_000.0)  # 1,000 pps for 4 s, well under service
        model.advance(5.0)
        assert model.queue_len == 0.0

    def test_apply_load_matches_per_packet_path(self):
        per_packet = ResourceModel()
        ingest_flood(per_packet, 50_000, 10_000.0)
        fluid = ResourceModel()
        fluid.apply_load(10_000.0, 5.0)
        assert fluid.queue_len == pytest.approx(per_packet.queue_len, rel=0.01)

    def test_conservation_with_overflow(self):
        model = ResourceModel(queue_capacity=1_000)
        ingest_flood(model, 30_000, 10_000.0)
        model.advance(10.0)
        assert model.conservation_error() < 1e-6
        assert model.total_dropped > 0

    @given(
        bursts=st.lists(
            st.tuples(st.floats(100, 20_000), st.floats(0.1, 3.0)), min_size=1, max_size=5
        )
    )
    @settings(max_examples=30, deadline=None)
    def test_conservation_under_arbitrary_load(self, bursts):
        model = ResourceModel()
        for rate, duration in bursts:
            model.apply_load(rate, duration)
        assert model.conservation_error() < 1e-6

    def test_queue_integral_for_capture_window(self):
        # 8,000 pps vs 6,000: grows 2,000/s, caps at 40,000 after 20 s
        model = ResourceModel()
        model.apply_load(8_000.0, 34.0)
        analytic = 0.5 * 20 * 40_000 + 14 * 40_000
        assert model.queue_time_integral == pytest.approx(analytic, rel=0.02)

    def test_rate_limit_caps_admission(self):
        model = ResourceModel()
        model.set_rate_limit(5_000.0)
        model.apply_load(10_000.0, 4.0)
        # admitted 5,000 pps < 6,000 service: queue stays near zero, rest dropped
        assert model.queue_len < 1_500
        assert model.total_dropped == pytest.approx(20_000, rel=0.01)


class TestSnapshots:
    def test_empty_window_has_zero_pps(self):
        model = ResourceModel()
        monitor = TelemetryMonitor(model)
        snap = monitor.next_snapshot(7.5)
        assert snap.pps == 0.0
        assert snap.top_protocol == "none"
        assert snap.update_interval_s == 7.5
        assert snap.seq == 1

    def test_backlog_stretches_interval(self):
        model = ResourceModel()
        monitor = TelemetryMonitor(model)
        model.advance(7.5)
        model.queue_len = 40_000.0
        snap = monitor.next_snapshot(7.5)
        assert snap.update_interval_s == pytest.approx(7.5 + 40_000 / 6_000)
        assert snap.update_interval_s == pytest.approx(14.1667, abs=1e-3)
        assert snap.update_interval_s > 13
        assert monitor.next_wake == pytest.approx(7.5 + snap.update_interval_s)

    def test_organic_overload_exceeds_13s(self):
        model = ResourceModel()
        monitor = TelemetryMonitor(model)
        ingest_flood(model, 100_000, 10_000.0)
        snap = monitor.next_snapshot(10.0)
        assert snap.update_interval_s == pytest.approx(14.1667, abs=0.01)
        assert snap.cpu_util == 1.0
        assert snap.mem_util == pytest.approx(1.0, abs=0.01)

    def test_recovery_back_to_base(self):
        model = ResourceModel()
        monitor = TelemetryMonitor(model)
        ingest_flood(model, 100_000, 10_000.0)
        monitor.next_snapshot(10.0)
        model.advance(20.0)  # 40,000 backlog drains in ~6.7 s
        snap = monitor.next_snapshot(20.0)
        assert snap.update_interval_s == 7.5
        assert snap.seq == 2

    def test_interval_monotone_in_queue(self):
        intervals = []
        for queue in (0, 1_000, 10_000, 25_000, 40_000):
            model = ResourceModel()
            model.queue_len = float(queue)
            intervals.append(TelemetryMonitor(model).next_snapshot(0.0).update_interval_s)
        assert intervals == sorted(intervals)

    def test_stable_window_interval_exactly_base(self):
        model = ResourceModel()
        monitor = TelemetryMonitor(model)
        ingest_flood(model, 6_000, 1_000.0)  # below service rate for 6 s
        snap = monitor.next_snapshot(7.5)
        assert snap.update_interval_s == 7.5
        assert snap.pps == pytest.approx(800, rel=0.01)

    def test_seq_strictly_increases(self):
        model = ResourceModel()
        monitor = TelemetryMonitor(model)
        seqs = [monitor.next_snapshot(monitor.next_wake).seq for _ in range(5)]
        assert seqs == [1, 2, 3, 4, 5]


def _snap(seq, interval, t=None):
    return TelemetrySnapshot(
        seq=seq, t=t if t is not None else seq * 7.5, pps=0.0, bytes_per_s=0.0,
        top_protocol="none", cpu_util=0.0, mem_util=0.0, queue_len=0.0,
        update_interval_s=interval,
    )


class TestDegradationRatio:
    def test_flat_intervals(self):
        assert degradation_ratio([_snap(1, 7.5), _snap(2, 7.5), _snap(3, 7.5)]) == 1.0

    def test_tc1_like_peak(self):
        ratio = degradation_ratio([_snap(1, 7.5), _snap(2, 14.2)])
        assert ratio == pytest.approx(14.2 / 7.5)
        assert ratio == pytest.approx(1.89, abs=0.01)

    def test_13s_peak(self):
        assert degradation_ratio([_snap(1, 7.5), _snap(2, 13.0)]) == pytest.approx(1.7333, abs=1e-3)

    def test_not_enough_data(self):
        with pytest.raises(NotEnoughDataError):
            degradation_ratio([_snap(1, 7.5)])


class TestValidation:
    @pytest.mark.parametrize("kwargs", [
        {"service_rate_pps": 0}, {"service_rate_pps": -1},
        {"queue_capacity": 0}, {"mode": "quantum"},
    ])
    def test_model_rejects_bad_config(self, kwargs):
        with pytest.raises(ValueError):
            ResourceModel(**kwargs)

    def test_model_rejects_time_reversal(self):
        model = ResourceModel()
        model.advance(5.0)
        with pytest.raises(ValueError):
            model.advance(4.0)
