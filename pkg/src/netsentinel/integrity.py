"""Tamper evidence for the agent's persisted memory.

Three mechanisms: an HMAC-SHA-256 seal over the exact bytes of a file
(sidecar `<file>.seal`), a capped store of sealed snapshots for rollback,
and an append-only forensic log where each record hashes its predecessor
so any alteration or deletion is detectable at the offending index.
The sealed file itself stays plain JSON: tampering is detectable, not
prevented, which is the honest contract for an on-disk attack surface.
"""

from __future__ import annotations

import enum
import functools
import hashlib
import hmac
import json
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

__all__ = [
    "IntegritySeal",
    "VerificationStatus",
    "VerificationResult",
    "SnapshotStore",
    "RollbackError",
    "ForensicRecord",
    "ForensicLog",
    "ChainVerification",
    "SEAL_ALGORITHM",
    "GENESIS_HASH",
    "canonical_json",
    "key_fingerprint",
    "seal",
    "verify",
    "verify_bytes",
    "rollback",
    "chain_verify",
]

SEAL_ALGORITHM = "HMAC-SHA-256"
GENESIS_HASH = bytes(32)

_HEX64 = re.compile(r"^[0-9a-f]{64}$")
_REQUIRED_KEYS = {"index", "prev_hash_hex", "payload", "hash_hex"}


def canonical_json(obj: object) -> bytes:
    """Stable byte serialization: sorted keys, no whitespace, ASCII-safe."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True).encode("ascii")


def key_fingerprint(key: bytes) -> str:
    """Public identifier for a secret key (not usable to verify MACs)."""
    return hashlib.sha256(b"seal-key-id:" + key).hexdigest()[:16]


def _mac_hex(data: bytes, key: bytes) -> str:
    return hmac.new(key, data, hashlib.sha256).hexdigest()


@dataclass(frozen=True)
class IntegritySeal:
    algorithm: str
    key_id: str
    mac_hex: str
    sealed_at: str

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "key_id": self.key_id,
            "mac_hex": self.mac_hex,
            "sealed_at": self.sealed_at,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "IntegritySeal":
        return cls(
            algorithm=raw["algorithm"],
            key_id=raw["key_id"],
            mac_hex=raw["mac_hex"],
            sealed_at=raw["sealed_at"],
        )


class VerificationStatus(str, enum.Enum):
    VALID = "valid"
    TAMPERED = "tampered"
    MISSING_SEAL = "missing_seal"
    KEY_MISMATCH = "key_mismatch"


@dataclass(frozen=True)
class VerificationResult:
    status: VerificationStatus
    expected_mac: str | None = None
    computed_mac: str | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.status is VerificationStatus.VALID


def seal_path_for(path: str | Path) -> Path:
    return Path(str(path) + ".seal")


def seal(
    path: str | Path,
    key: bytes,
    snapshot_store: "SnapshotStore | None" = None,
    sealed_at: str | None = None,
) -> IntegritySeal:
    """Write `<path>.seal` binding the file's current bytes to the key;
    takes a snapshot of the sealed state when a store is given."""
    path = Path(path)
    data = path.read_bytes()
    s = IntegritySeal(
        algorithm=SEAL_ALGORITHM,
        key_id=key_fingerprint(key),
        mac_hex=_mac_hex(data, key),
        sealed_at=sealed_at or datetime.now(timezone.utc).isoformat(),
    )
    seal_path_for(path).write_text(json.dumps(s.to_dict(), indent=2) + "\n", encoding="utf-8")
    if snapshot_store is not None:
        snapshot_store.take(data, s)
    return s


def verify_bytes(data: bytes, s: IntegritySeal, key: bytes) -> VerificationResult:
    """Classify file bytes against a seal; pure, all outcomes are values."""
    if s.algorithm != SEAL_ALGORITHM:
        return VerificationResult(
            VerificationStatus.TAMPERED, detail=f"unknown seal algorithm {s.algorithm!r}"
        )
    if s.key_id != key_fingerprint(key):
        return VerificationResult(
            VerificationStatus.KEY_MISMATCH,
            detail=f"seal was made under key {s.key_id}, not the provided key",
        )
    computed = _mac_hex(data, key)
    if hmac.compare_digest(computed, s.mac_hex):
        return VerificationResult(VerificationStatus.VALID, s.mac_hex, computed)
    return VerificationResult(
        VerificationStatus.TAMPERED, expected_mac=s.mac_hex, computed_mac=computed,
        detail="file bytes do not match the sealed digest",
    )


def read_seal(path: str | Path) -> IntegritySeal | None:
    sp = seal_path_for(path)
    if not sp.exists():
        return None
    try:
        return IntegritySeal.from_dict(json.loads(sp.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, KeyError, TypeError):
        return None


def verify(path: str | Path, key: bytes) -> VerificationResult:
    path = Path(path)
    sp = seal_path_for(path)
    if not sp.exists():
        return VerificationResult(VerificationStatus.MISSING_SEAL, detail=f"no seal at {sp}")
    s = read_seal(path)
    if s is None:
        return VerificationResult(VerificationStatus.TAMPERED, detail="seal sidecar is unreadable")
    if not path.exists():
        return VerificationResult(
            VerificationStatus.TAMPERED, expected_mac=s.mac_hex, detail="sealed file is missing"
        )
    return verify_bytes(path.read_bytes(), s, key)


class SnapshotStore:
    """Keeps the last `cap` sealed copies of a file, newest first."""

    def __init__(self, directory: str | Path, cap: int = 10):
        if cap < 1:
            raise ValueError("cap must be >= 1")
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.cap = cap

    def _entries(self) -> list[Path]:
        return sorted(self.directory.glob("snapshot-*.json"), reverse=True)

    def take(self, data: bytes, s: IntegritySeal) -> Path:
        n = 0
        existing = self._entries()
        if existing:
            n = int(existing[0].stem.split("-")[1]) + 1
        target = self.directory / f"snapshot-{n:06d}.json"
        target.write_bytes(data)
        target.with_suffix(".json.seal").write_text(
            json.dumps(s.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
        for stale in self._entries()[self.cap :]:
            stale.unlink(missing_ok=True)
            stale.with_suffix(".json.seal").unlink(missing_ok=True)
        return target

    def newest_verifiable(self, key: bytes) -> tuple[Path, bytes] | None:
        for snap in self._entries():
            s = read_seal(snap)
            if s is None:
                continue
            data = snap.read_bytes()
            if verify_bytes(data, s, key):
                return snap, data
        return None

    def __len__(self) -> int:
        return len(self._entries())


class RollbackError(RuntimeError):
    """No verifiable snapshot exists; the caller must fall back to an
    empty history."""


def rollback(
    path: str | Path,
    store: SnapshotStore,
    key: bytes,
    forensic: "ForensicLog | None" = None,
) -> int:
    """Restore the most recent snapshot whose seal verifies.

    Returns the restored entry count (length of the JSON array). A file
    that already verifies is left untouched. Idempotent for a fixed store.
    """
    path = Path(path)

    def entry_count() -> int:
        try:
            parsed = json.loads(path.read_text(encoding="utf-8"))
            return len(parsed) if isinstance(parsed, list) else 0
        except (OSError, json.JSONDecodeError, UnicodeDecodeError):
            return 0

    current = verify(path, key)
    if current.status is VerificationStatus.VALID:
        return entry_count()

    found = store.newest_verifiable(key)
    if found is None:
        raise RollbackError(f"no verifiable snapshot available to restore {path}")
    snap, data = found
    path.write_bytes(data)
    restored_seal = seal(path, key)
    if forensic is not None:
        forensic.append(
            {
                "event": "rollback",
                "path": str(path),
                "snapshot": snap.name,
                "reason": current.status.value,
                "restored_mac": restored_seal.mac_hex,
            }
        )
    return entry_count()


@dataclass(frozen=True)
class ForensicRecord:
    index: int
    prev_hash_hex: str
    payload: dict
    hash_hex: str

    def to_line(self) -> str:
        return json.dumps(
            {
                "index": self.index,
                "prev_hash_hex": self.prev_hash_hex,
                "payload": self.payload,
                "hash_hex": self.hash_hex,
            },
            sort_keys=True,
            separators=(",", ":"),
            ensure_ascii=True,
        )


def _record_hash(prev_hash: bytes, payload: dict) -> str:
    return hashlib.sha256(prev_hash + canonical_json(payload)).hexdigest()


class ForensicLog:
    """Append-only hash chain, one JSON record per line.

    record.hash = SHA-256(prev_hash || canonical payload bytes); the genesis
    record chains from 32 zero bytes.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._index = 0
        self._prev_hash = GENESIS_HASH
        if self.path.exists():
            check = chain_verify(self.path.read_bytes())
            if not check.ok:
                raise ValueError(
                    f"existing forensic log {self.path} fails verification at index {check.first_bad_index}"
                )
            self._index = check.records
            if check.last_hash_hex is not None:
                self._prev_hash = bytes.fromhex(check.last_hash_hex)

    def append(self, payload: dict) -> ForensicRecord:
        record = ForensicRecord(
            index=self._index,
            prev_hash_hex=self._prev_hash.hex(),
            payload=payload,
            hash_hex=_record_hash(self._prev_hash, payload),
        )
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(record.to_line() + "\n")
        self._index += 1
        self._prev_hash = bytes.fromhex(record.hash_hex)
        return record

    def records(self) -> list[ForensicRecord]:
        check = chain_verify(self.path.read_bytes()) if self.path.exists() else None
        if check is not None and not check.ok:
            raise ValueError(f"forensic log fails verification at index {check.first_bad_index}")
        out = []
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                raw = json.loads(line)
                out.append(
                    ForensicRecord(raw["index"], raw["prev_hash_hex"], raw["payload"], raw["hash_hex"])
                )
        return out


@dataclass(frozen=True)
class ChainVerification:
    ok: bool
    records: int
    first_bad_index: int | None = None
    reason: str | None = None
    last_hash_hex: str | None = None


class _LineError(ValueError):
    pass


@functools.lru_cache(maxsize=8192)
def _validate_line(raw_line: bytes, index: int, prev_hash_hex: str) -> str:
    """Validate one chain line in its position; returns the line's hash.

    Pure in (bytes, position, predecessor hash), so results are memoized:
    repeated verifications of an unchanged prefix cost one pass. Raises
    _LineError with the reason otherwise.
    """
    try:
        rec = json.loads(raw_line.decode("utf-8", errors="strict"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise _LineError("record line does not parse") from None
    if not isinstance(rec, dict) or set(rec.keys()) != _REQUIRED_KEYS:
        raise _LineError("record does not have exactly the chain fields")
    if not isinstance(rec["index"], int) or isinstance(rec["index"], bool) or rec["index"] != index:
        raise _LineError(f"record index {rec['index']!r} does not match position {index}")
    if not isinstance(rec["prev_hash_hex"], str) or not _HEX64.match(rec["prev_hash_hex"]):
        raise _LineError("prev_hash_hex is not 64 lowercase hex chars")
    if not isinstance(rec["hash_hex"], str) or not _HEX64.match(rec["hash_hex"]):
        raise _LineError("hash_hex is not 64 lowercase hex chars")
    if rec["prev_hash_hex"] != prev_hash_hex:
        raise _LineError("prev_hash_hex does not chain to the previous record")
    if not isinstance(rec["payload"], dict):
        raise _LineError("payload is not an object")
    if _record_hash(bytes.fromhex(prev_hash_hex), rec["payload"]) != rec["hash_hex"]:
        raise _LineError("stored hash does not match recomputed hash")
    return rec["hash_hex"]


def chain_verify(source: bytes | str | Path) -> ChainVerification:
    """Walk a forensic log and report the first index where it breaks.

    Accepts raw bytes or a path. Every line must parse as a record object
    with exactly the chain fields, carry its own position as `index`, link
    to its predecessor's hash, and hash to its stored digest.
    """
    if isinstance(source, (str, Path)):
        data = Path(source).read_bytes()
    else:
        data = source

    prev_hash_hex = GENESIS_HASH.hex()
    index = 0
    lines = data.split(b"\n")
    # a well-formed log ends with a newline, leaving one empty fragment;
    # an unterminated final line stays in place and fails validation below
    if lines and lines[-1] == b"":
        lines.pop()

    for raw_line in lines:
        try:
            prev_hash_hex = _validate_line(raw_line, index, prev_hash_hex)
        except _LineError as exc:
            return ChainVerification(
                ok=False, records=index, first_bad_index=index, reason=str(exc)
            )
        index += 1

    return ChainVerification(
        ok=True,
        records=index,
        last_hash_hex=prev_hash_hex if index > 0 else None,
    )
