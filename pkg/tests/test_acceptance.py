"""Acceptance suite: one test per criterion, each at its stated tolerance,
each printing a PASS line when it holds. Run with `pytest -s` to see the
per-criterion lines; failures surface as ordinary assertion errors.
"""

import json
import random
import time

import pytest
from click.testing import CliRunner

from netsentinel import integrity
from netsentinel.cli import main as cli_main
from netsentinel.detection import AnomalyEvent
from netsentinel.harness import ScenarioConfig, execute_tc2, run_tc1, run_tc2
from netsentinel.maestro import OrdinalLevel, builtin_registry
from netsentinel.pcap import parse_capture, write_capture
from netsentinel.reasoning import (
    AdapterRunner,
    DESTRUCTIVE_KINDS,
    ActionPolicy,
    RuleBasedReasoner,
    validate_explanation,
)
from netsentinel.tuner import HistoryEntry, decide_capture_duration, threat_index
from test_pcap import random_record

EXPECTED_SCORES = [12, 9, 18, 12, 12, 18, 27, 9, 12, 18]


def report_pass(name: str, detail: str = "") -> None:
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {name}: PASS{suffix}")


def test_risk_matrix_fidelity():
    """All ten scores exact, Resource Exhaustion ranked first, < 1 s."""
    start = time.monotonic()
    result = CliRunner().invoke(cli_main, ["report", "risk-matrix", "--format", "json"])
    elapsed = time.monotonic() - start
    assert result.exit_code == 0
    payload = json.loads(result.output)
    by_id = sorted(payload["threats"], key=lambda t: t["id"])
    assert [t["score"] for t in by_id] == EXPECTED_SCORES
    assert payload["threats"][0]["name"] == "Resource Exhaustion"
    assert payload["ranking"][0] == 7
    assert elapsed < 1.0
    report_pass("risk-matrix-fidelity", f"{elapsed * 1000:.0f} ms")


def test_risk_equation_worked_examples():
    """score(1,1,3)=3, score(2,2,2)=8, score(3,3,1)=9. Exact."""
    from netsentinel.maestro import score

    L, M, H = OrdinalLevel.LOW, OrdinalLevel.MEDIUM, OrdinalLevel.HIGH
    assert score(L, L, H) == 3
    assert score(M, M, M) == 8
    assert score(H, H, L) == 9
    report_pass("risk-equation-worked-examples")


def test_tc1_desk_scale_reproduction(tmp_path):
    """10,000 pps x 5 vs 6,000 pps service: baseline in [7,8] s, peak > 13 s,
    threat-7 alert; wall clock < 60 s."""
    start = time.monotonic()
    report = run_tc1(ScenarioConfig(defense="off", workdir=tmp_path / "tc1"))
    elapsed = time.monotonic() - start
    m = report.metrics
    assert 7.0 <= m["baseline_interval_s"] <= 8.0
    assert m["peak_interval_s"] > 13.0
    assert m["threat7_alert"] is True
    assert report.validated
    assert elapsed < 60.0
    report_pass(
        "tc1-desk-scale",
        f"baseline {m['baseline_interval_s']:.2f} s, peak {m['peak_interval_s']:.2f} s, "
        f"wall {elapsed:.1f} s",
    )


def test_tc2_defense_off(tmp_path):
    """Injecting exactly 20 high entries: 34 s -> 170 s, exact, < 5 s."""
    start = time.monotonic()
    report = run_tc2(ScenarioConfig(defense="off", workdir=tmp_path / "tc2off"))
    elapsed = time.monotonic() - start
    assert report.metrics["baseline_duration_s"] == 34.0
    assert report.metrics["poisoned_duration_s"] == 170.0
    assert report.validated
    assert elapsed < 5.0
    report_pass("tc2-defense-off", f"34 s -> 170 s in {elapsed:.2f} s")


def test_tc2_defense_on(tmp_path):
    """Same injection against a sealed history: tampered, threat-8
    explanation with a rollback proposal, post-approval 34 s. Exact, < 5 s."""
    start = time.monotonic()
    outcome = execute_tc2(ScenarioConfig(defense="on", workdir=tmp_path / "tc2on"))
    elapsed = time.monotonic() - start
    m = outcome.report.metrics
    assert m["tamper_detected"] is True
    explanation = outcome.agent.explanations[-1]
    assert any(s.threat_id == 8 for s in explanation.suspected_threats)
    assert any(a.kind.value == "rollback_history" for a in explanation.recommended_actions)
    assert m["post_rollback_duration_s"] == 34.0
    assert outcome.report.validated
    assert elapsed < 5.0
    report_pass("tc2-defense-on", f"tamper detected, restored to 34 s in {elapsed:.2f} s")


def test_integrity_property_suite(tmp_path):
    """Every single-byte mutation of a sealed 1 KiB file and every
    single-bit mutation of a 100-record chain detected, < 30 s."""
    start = time.monotonic()
    key = b"acceptance-key"

    # sealed file: exhaust all 1024 positions x 255 differing byte values
    payload = {"entries": ["x" * 40 for _ in range(20)]}
    blob = json.dumps(payload).encode()
    blob = blob + b" " * (1024 - len(blob))
    assert len(blob) == 1024
    history = tmp_path / "sealed.json"
    history.write_bytes(blob)
    seal = integrity.seal(history, key)
    for position in range(1024):
        original = blob[position]
        for delta in range(1, 256):
            mutated = bytearray(blob)
            mutated[position] = (original + delta) % 256
            result = integrity.verify_bytes(bytes(mutated), seal, key)
            assert result.status is integrity.VerificationStatus.TAMPERED, (
                f"byte {position} -> {(original + delta) % 256} undetected"
            )

    # forensic chain: exhaust every bit of a 100-record log
    log_path = tmp_path / "chain.log"
    log = integrity.ForensicLog(log_path)
    for i in range(100):
        log.append({"n": i})
    data = log_path.read_bytes()
    lines = data.split(b"\n")[:-1]
    assert len(lines) == 100
    line_starts = []
    offset = 0
    for line in lines:
        line_starts.append(offset)
        offset += len(line) + 1

    def record_for(byte_offset: int) -> int:
        for idx in range(99, -1, -1):
            if byte_offset >= line_starts[idx]:
                return idx
        return 0

    for position in range(len(data)):
        expected_index = record_for(position)
        for bit in range(8):
            mutated = bytearray(data)
            mutated[position] ^= 1 << bit
            check = integrity.chain_verify(bytes(mutated))
            assert not check.ok, f"bit {bit} of byte {position} undetected"
            assert check.first_bad_index == expected_index, (
                f"bit {bit} of byte {position}: reported index "
                f"{check.first_bad_index}, expected {expected_index}"
            )

    elapsed = time.monotonic() - start
    assert elapsed < 30.0
    report_pass(
        "integrity-property-suite",
        f"261,120 byte mutations + {len(data) * 8} bit flips in {elapsed:.1f} s",
    )


def test_packet_round_trip_property():
    """1,000 randomized records survive write->parse, both endiannesses
    agree, and 10,000 fuzz inputs produce structured errors only, < 60 s."""
    start = time.monotonic()
    rng = random.Random(20250810)
    records = [random_record(rng) for _ in range(1_000)]

    little = write_capture(records, byte_order="little")
    parsed = parse_capture(little)
    assert parsed == records
    assert write_capture(parsed, byte_order="little") == little  # byte-identical rewrite

    big = write_capture(records, byte_order="big")
    assert parse_capture(big) == records

    from netsentinel.pcap import CaptureError

    valid_prefix = little[:200]
    for i in range(10_000):
        size = rng.randrange(0, 300)
        blob = bytes(rng.randrange(256) for _ in range(size))
        if i % 3 == 0:
            blob = valid_prefix[: rng.randrange(0, len(valid_prefix))] + blob
        try:
            out = parse_capture(blob)
            assert isinstance(out, list)
        except Exception as exc:
            assert isinstance(exc, CaptureError), f"unstructured failure: {exc!r}"
    elapsed = time.monotonic() - start
    assert elapsed < 60.0
    report_pass("packet-round-trip", f"1,000 records + 10,000 fuzz inputs in {elapsed:.1f} s")


def test_tuner_properties():
    """Monotone in threat index over 1,000 random histories; duration
    always in [34, 300]; empty history exactly 34 s."""
    assert decide_capture_duration([]).capture_duration_s == 34.0
    rng = random.Random(99)
    samples = []
    for _ in range(1_000):
        labels = [rng.choice(["low", "medium", "high"]) for _ in range(rng.randrange(0, 80))]
        history = [
            HistoryEntry(t=f"2025-05-01T00:{i // 60:02d}:{i % 60:02d}+00:00", severity=label)
            for i, label in enumerate(labels)
        ]
        decision = decide_capture_duration(history)
        assert 34.0 <= decision.capture_duration_s <= 300.0
        samples.append((threat_index(history), decision.capture_duration_s))
    samples.sort()
    durations = [d for _, d in samples]
    assert durations == sorted(durations), "duration not monotone in threat index"
    report_pass("tuner-properties", "1,000 histories, bounds [34, 300] held")


def test_reasoner_safety_floor():
    """Destructive kinds never auto across 1,000 randomized event mixes;
    adapter fuzzing always falls back to a schema-valid explanation."""
    rng = random.Random(4242)
    registry = builtin_registry()
    reasoner = RuleBasedReasoner(registry)
    rules = ["rate_dos", "icmp_flood", "syn_flood", "port_scan"]
    for _ in range(1_000):
        events = []
        for _ in range(rng.randrange(0, 6)):
            rule = rng.choice(rules)
            threshold = rng.choice([100.0, 1_000.0, 5_000.0])
            observed = threshold * rng.uniform(1.01, 8.0)
            events.append(
                AnomalyEvent(
                    t=rng.uniform(0, 100), rule_id=rule,
                    severity=rng.choice(list(OrdinalLevel)),
                    observed=observed, threshold=threshold,
                    subject="10.0.0.1", maps_to_threat=7 if rule != "port_scan" else 1,
                )
            )
        tampered = rng.random() < 0.5
        verification = integrity.VerificationResult(
            integrity.VerificationStatus.TAMPERED if tampered
            else integrity.VerificationStatus.VALID
        )
        explanation = reasoner.correlate(events, [], verification)
        for action in explanation.recommended_actions:
            if action.kind in DESTRUCTIVE_KINDS:
                assert action.policy is ActionPolicy.NEEDS_APPROVAL

    for _ in range(200):
        blob = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 400)))
        runner = AdapterRunner(reasoner, adapter=lambda request, blob=blob: blob)
        result = runner.explain([], [])
        validate_explanation(result.to_dict(), registry)  # schema-valid or raises
    report_pass("reasoner-safety-floor", "1,000 event mixes + 200 adapter fuzz payloads")
