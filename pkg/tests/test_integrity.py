"""Seals, snapshots, rollback, and the forensic hash chain."""

import json

import pytest
from hypothesis import given, settings, strategies as st

from netsentinel.integrity import (
    ChainVerification,
    ForensicLog,
    GENESIS_HASH,
    RollbackError,
    SnapshotStore,
    VerificationStatus,
    chain_verify,
    key_fingerprint,
    rollback,
    seal,
    verify,
    verify_bytes,
)
from netsentinel.tuner import HistoryEntry, load_history, write_history

KEY_A = b"key-alpha"
KEY_B = b"key-beta"


@pytest.fixture
def sealed_history(tmp_path):
    path = tmp_path / "history.json"
    entries = [
        HistoryEntry(t=f"2025-04-01T00:00:{i:02d}+00:00", severity="low") for i in range(5)
    ]
    write_history(path, entries)
    store = SnapshotStore(tmp_path / "snapshots")
    seal(path, KEY_A, snapshot_store=store)
    return path, store


class TestSealVerify:
    def test_seal_then_verify_valid(self, sealed_history):
        path, _ = sealed_history
        result = verify(path, KEY_A)
        assert result.status is VerificationStatus.VALID
        assert bool(result)

    def test_single_flipped_byte_detected(self, sealed_history):
        path, _ = sealed_history
        data = bytearray(path.read_bytes())
        data[17] ^= 0xFF
        path.write_bytes(bytes(data))
        result = verify(path, KEY_A)
        assert result.status is VerificationStatus.TAMPERED
        assert result.expected_mac != result.computed_mac
        assert result.expected_mac and result.computed_mac

    def test_wrong_key_is_distinct_from_tamper(self, sealed_history):
        path, _ = sealed_history
        result = verify(path, KEY_B)
        assert result.status is VerificationStatus.KEY_MISMATCH

    def test_missing_seal(self, tmp_path):
        path = tmp_path / "naked.json"
        path.write_text("[]\n")
        assert verify(path, KEY_A).status is VerificationStatus.MISSING_SEAL

    def test_key_fingerprint_is_not_the_key(self):
        assert key_fingerprint(KEY_A) != KEY_A.hex()
        assert len(key_fingerprint(KEY_A)) == 16

    def test_every_single_byte_mutation_detected_small_file(self, tmp_path):
        path = tmp_path / "blob.json"
        original = b'{"v": "0123456789abcdef"}\n'
        path.write_bytes(original)
        s = seal(path, KEY_A)
        for i in range(len(original)):
            mutated = bytearray(original)
            mutated[i] ^= 0x01
            assert verify_bytes(bytes(mutated), s, KEY_A).status is VerificationStatus.TAMPERED

    def test_injection_after_sealing_detected(self, sealed_history):
        # the memory-poisoning manipulation: append entries out of band
        path, _ = sealed_history
        raw = json.loads(path.read_text())
        raw.extend({"t": "2025-04-02T00:00:00+00:00", "severity": "high"} for _ in range(20))
        path.write_text(json.dumps(raw))
        assert verify(path, KEY_A).status is VerificationStatus.TAMPERED


class TestRollback:
    def test_restore_after_tamper(self, sealed_history):
        path, store = sealed_history
        path.write_text('[{"t": "2025-04-02T00:00:00+00:00", "severity": "high"}]')
        assert verify(path, KEY_A).status is VerificationStatus.TAMPERED
        restored = rollback(path, store, KEY_A)
        assert restored == 5
        assert verify(path, KEY_A).status is VerificationStatus.VALID
        assert len(load_history(path)) == 5

    def test_unrecoverable_when_snapshots_tampered(self, sealed_history, tmp_path):
        path, store = sealed_history
        path.write_text("[]")
        for snap in (tmp_path / "snapshots").glob("snapshot-*.json"):
            snap.write_text("[]")
        with pytest.raises(RollbackError):
            rollback(path, store, KEY_A)

    def test_noop_on_valid_file(self, sealed_history):
        path, store = sealed_history
        before = path.read_bytes()
        assert rollback(path, store, KEY_A) == 5
        assert path.read_bytes() == before

    def test_idempotent(self, sealed_history):
        path, store = sealed_history
        path.write_text("[]")
        first = rollback(path, store, KEY_A)
        bytes_after_first = path.read_bytes()
        second = rollback(path, store, KEY_A)
        assert first == second == 5
        assert path.read_bytes() == bytes_after_first

    def test_forensic_record_appended(self, sealed_history, tmp_path):
        path, store = sealed_history
        log = ForensicLog(tmp_path / "forensic.log")
        path.write_text("[]")
        rollback(path, store, KEY_A, forensic=log)
        events = [r.payload["event"] for r in log.records()]
        assert "rollback" in events

    def test_snapshot_store_caps_retention(self, tmp_path):
        path = tmp_path / "file.json"
        store = SnapshotStore(tmp_path / "snaps", cap=3)
        for i in range(6):
            path.write_text(f"[{i}]")
            seal(path, KEY_A, snapshot_store=store)
        assert len(store) == 3


class TestForensicChain:
    def test_genesis_prev_hash_is_zero(self, tmp_path):
        log = ForensicLog(tmp_path / "log")
        record = log.append({"event": "first"})
        assert record.index == 0
        assert record.prev_hash_hex == GENESIS_HASH.hex() == "00" * 32

    def test_three_records_verify(self, tmp_path):
        log = ForensicLog(tmp_path / "log")
        for i in range(3):
            log.append({"event": "e", "n": i})
        check = chain_verify((tmp_path / "log").read_bytes())
        assert check == ChainVerification(ok=True, records=3, last_hash_hex=check.last_hash_hex)

    def test_flip_in_record_50_detected_there(self, tmp_path):
        path = tmp_path / "log"
        log = ForensicLog(path)
        for i in range(100):
            log.append({"n": i})
        data = path.read_bytes()
        lines = data.split(b"\n")
        offset = sum(len(l) + 1 for l in lines[:50]) + len(lines[50]) // 2
        mutated = bytearray(data)
        mutated[offset] ^= 0x04
        check = chain_verify(bytes(mutated))
        assert not check.ok
        assert check.first_bad_index == 50

    def test_reopened_log_continues_chain(self, tmp_path):
        path = tmp_path / "log"
        first = ForensicLog(path)
        first.append({"n": 0})
        second = ForensicLog(path)
        record = second.append({"n": 1})
        assert record.index == 1
        assert chain_verify(path).ok

    def test_reopen_refuses_corrupt_log(self, tmp_path):
        path = tmp_path / "log"
        ForensicLog(path).append({"n": 0})
        data = bytearray(path.read_bytes())
        data[5] ^= 0x10
        path.write_bytes(bytes(data))
        with pytest.raises(ValueError):
            ForensicLog(path)

    def test_truncation_detected(self, tmp_path):
        path = tmp_path / "log"
        log = ForensicLog(path)
        for i in range(5):
            log.append({"n": i})
        lines = path.read_bytes().split(b"\n")
        # drop record 2: record 3 no longer chains
        truncated = b"\n".join(lines[:2] + lines[3:])
        check = chain_verify(truncated)
        assert not check.ok
        assert check.first_bad_index == 2

    def test_empty_log_verifies(self):
        check = chain_verify(b"")
        assert check.ok and check.records == 0

    @given(
        record_idx=st.integers(0, 9),
        bit=st.integers(0, 7),
        within=st.floats(0, 0.999),
    )
    @settings(max_examples=120, deadline=None)
    def test_any_single_bit_flip_detected_at_its_record(self, tmp_path_factory, record_idx, bit, within):
        path = tmp_path_factory.mktemp("chain") / "log"
        log = ForensicLog(path)
        for i in range(10):
            log.append({"n": i, "tag": "x*J"})
        data = path.read_bytes()
        lines = data.split(b"\n")[:-1]
        start = sum(len(l) + 1 for l in lines[:record_idx])
        offset = start + int(within * (len(lines[record_idx]) + 1))
        mutated = bytearray(data)
        mutated[offset] ^= 1 << bit
        check = chain_verify(bytes(mutated))
        assert not check.ok
        assert check.first_bad_index == record_idx
