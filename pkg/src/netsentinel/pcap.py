"""Classic capture-file codec and synthetic flood generation.

Bit-exact surface: 24-byte global header (magic 0xa1b2c3d4, version 2.4,
snaplen 65535, linktype 1 = Ethernet), 16-byte record headers. The writer
emits little-endian; the parser accepts both byte orders. IPv4 over Ethernet
is decoded into tcp/udp/icmp records; anything else becomes protocol=other
with zeroed addresses. No pcapng, no IPv6, no payload reassembly.
"""

from __future__ import annotations

import enum
import random
import struct
from dataclasses import dataclass
from typing import Iterable, Sequence

__all__ = [
    "Protocol",
    "TcpFlags",
    "PacketRecord",
    "CaptureError",
    "SNAP_LEN",
    "parse_capture",
    "write_capture",
    "synthesize_flood",
]

MAGIC = 0xA1B2C3D4
SNAP_LEN = 65535
LINKTYPE_ETHERNET = 1
GLOBAL_HEADER_LEN = 24
RECORD_HEADER_LEN = 16

ETHERTYPE_IPV4 = 0x0800
ETHERTYPE_UNKNOWN = 0xFFFF

_ETH_HEADER_LEN = 14
_IP_HEADER_LEN = 20
_TCP_HEADER_LEN = 20
_UDP_HEADER_LEN = 8


class Protocol(str, enum.Enum):
    TCP = "tcp"
    UDP = "udp"
    ICMP = "icmp"
    OTHER = "other"


class TcpFlags(enum.IntFlag):
    """TCP flag bits as they appear in the header's flags byte."""

    NONE = 0
    FIN = 0x01
    SYN = 0x02
    RST = 0x04
    PSH = 0x08
    ACK = 0x10
    URG = 0x20


# Minimum frame bytes needed so the parser can recover all record fields.
_MIN_FRAME = {
    Protocol.TCP: _ETH_HEADER_LEN + _IP_HEADER_LEN + _TCP_HEADER_LEN,
    Protocol.UDP: _ETH_HEADER_LEN + _IP_HEADER_LEN + _UDP_HEADER_LEN,
    Protocol.ICMP: _ETH_HEADER_LEN + _IP_HEADER_LEN,
    Protocol.OTHER: 0,
}


class CaptureError(ValueError):
    """Structural problem in a capture byte stream, located by offset."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (at byte offset {offset})")


@dataclass(slots=True, frozen=True)
class PacketRecord:
    """One decoded capture record."""

    ts_sec: int
    ts_usec: int
    captured_len: int
    original_len: int
    protocol: Protocol = Protocol.OTHER
    src_addr: str = "0.0.0.0"
    dst_addr: str = "0.0.0.0"
    src_port: int = 0
    dst_port: int = 0
    tcp_flags: TcpFlags = TcpFlags.NONE

    @property
    def timestamp(self) -> float:
        return self.ts_sec + self.ts_usec / 1_000_000


def _ip_to_str(raw: bytes) -> str:
    return ".".join(str(b) for b in raw)


def _ip_from_str(addr: str) -> bytes:
    parts = addr.split(".")
    if len(parts) != 4:
        raise ValueError(f"not an IPv4 address: {addr!r}")
    out = bytes(int(p) for p in parts)
    return out


def _decode_frame(frame: bytes) -> tuple[Protocol, str, str, int, int, TcpFlags]:
    """Best-effort Ethernet/IPv4 decode; never raises."""
    other = (Protocol.OTHER, "0.0.0.0", "0.0.0.0", 0, 0, TcpFlags.NONE)
    if len(frame) < _ETH_HEADER_LEN:
        return other
    ethertype = struct.unpack_from("!H", frame, 12)[0]
    if ethertype != ETHERTYPE_IPV4:
        return other
    ip = frame[_ETH_HEADER_LEN:]
    if len(ip) < _IP_HEADER_LEN:
        return other
    version = ip[0] >> 4
    ihl = (ip[0] & 0x0F) * 4
    if version != 4 or ihl < _IP_HEADER_LEN or len(ip) < ihl:
        return other
    proto_num = ip[9]
    src = _ip_to_str(ip[12:16])
    dst = _ip_to_str(ip[16:20])
    l4 = ip[ihl:]
    if proto_num == 6:
        if len(l4) < _TCP_HEADER_LEN:
            return (Protocol.TCP, src, dst, 0, 0, TcpFlags.NONE)
        sport, dport = struct.unpack_from("!HH", l4, 0)
        flags = TcpFlags(l4[13] & 0x3F)
        return (Protocol.TCP, src, dst, sport, dport, flags)
    if proto_num == 17:
        if len(l4) < _UDP_HEADER_LEN:
            return (Protocol.UDP, src, dst, 0, 0, TcpFlags.NONE)
        sport, dport = struct.unpack_from("!HH", l4, 0)
        return (Protocol.UDP, src, dst, sport, dport, TcpFlags.NONE)
    if proto_num == 1:
        return (Protocol.ICMP, src, dst, 0, 0, TcpFlags.NONE)
    return other


def parse_capture(data: bytes) -> list[PacketRecord]:
    """Decode a classic capture byte stream into records.

    Raises CaptureError (with the byte offset) on a bad magic, a truncated
    global header, an unsupported link type, or a record that overruns the
    file. Unknown payloads inside intact records decode as protocol=other;
    decoding never aborts mid-file on an unknown protocol.
    """
    if len(data) < 4:
        raise CaptureError("truncated global header", 0)
    magic_le = struct.unpack_from("<I", data, 0)[0]
    magic_be = struct.unpack_from(">I", data, 0)[0]
    if magic_le == MAGIC:
        order = "<"
    elif magic_be == MAGIC:
        order = ">"
    else:
        raise CaptureError(f"bad capture magic 0x{magic_le:08x}", 0)
    if len(data) < GLOBAL_HEADER_LEN:
        raise CaptureError("truncated global header", 0)
    _, _, _, _, snaplen, linktype = struct.unpack_from(order + "HHiIII", data, 4)
    if linktype != LINKTYPE_ETHERNET:
        raise CaptureError(f"unsupported link type {linktype}", 20)

    records: list[PacketRecord] = []
    offset = GLOBAL_HEADER_LEN
    total = len(data)
    while offset < total:
        if total - offset < RECORD_HEADER_LEN:
            raise CaptureError("truncated record header", offset)
        ts_sec, ts_usec, incl_len, orig_len = struct.unpack_from(order + "IIII", data, offset)
        if incl_len > SNAP_LEN:
            raise CaptureError(f"record length {incl_len} exceeds snap length", offset)
        frame_start = offset + RECORD_HEADER_LEN
        if total - frame_start < incl_len:
            raise CaptureError("record data overruns the file", offset)
        frame = data[frame_start : frame_start + incl_len]
        protocol, src, dst, sport, dport, flags = _decode_frame(frame)
        records.append(
            PacketRecord(
                ts_sec=ts_sec,
                ts_usec=ts_usec,
                captured_len=incl_len,
                original_len=orig_len,
                protocol=protocol,
                src_addr=src,
                dst_addr=dst,
                src_port=sport,
                dst_port=dport,
                tcp_flags=flags,
            )
        )
        offset = frame_start + incl_len
    return records


def _build_frame(record: PacketRecord) -> bytes:
    """Synthesize a frame of exactly captured_len bytes that decodes back
    to the record's fields."""
    n = record.captured_len
    if record.protocol is Protocol.OTHER:
        frame = bytearray(n)
        if n >= _ETH_HEADER_LEN:
            struct.pack_into("!H", frame, 12, ETHERTYPE_UNKNOWN)
        return bytes(frame)

    frame = bytearray(n)
    struct.pack_into("!H", frame, 12, ETHERTYPE_IPV4)
    proto_num = {Protocol.TCP: 6, Protocol.UDP: 17, Protocol.ICMP: 1}[record.protocol]
    ip_total = min(n - _ETH_HEADER_LEN, 0xFFFF)
    struct.pack_into(
        "!BBHHHBBH4s4s",
        frame,
        _ETH_HEADER_LEN,
        0x45,  # version 4, ihl 5
        0,
        ip_total,
        0,
        0,
        64,
        proto_num,
        0,
        _ip_from_str(record.src_addr),
        _ip_from_str(record.dst_addr),
    )
    l4_off = _ETH_HEADER_LEN + _IP_HEADER_LEN
    if record.protocol is Protocol.TCP:
        struct.pack_into(
            "!HHIIBBHHH",
            frame,
            l4_off,
            record.src_port,
            record.dst_port,
            0,
            0,
            5 << 4,
            int(record.tcp_flags) & 0x3F,
            8192,
            0,
            0,
        )
    elif record.protocol is Protocol.UDP:
        udp_len = min(n - l4_off, 0xFFFF)
        struct.pack_into("!HHHH", frame, l4_off, record.src_port, record.dst_port, udp_len, 0)
    return bytes(frame)


def _validate_for_write(record: PacketRecord, index: int) -> None:
    if record.captured_len > SNAP_LEN:
        raise CaptureError(
            f"record {index}: captured_len {record.captured_len} exceeds snap length {SNAP_LEN}",
            index,
        )
    if record.captured_len < _MIN_FRAME[record.protocol]:
        raise CaptureError(
            f"record {index}: captured_len {record.captured_len} too small to carry "
            f"{record.protocol.value} headers ({_MIN_FRAME[record.protocol]} bytes minimum)",
            index,
        )
    if record.captured_len > record.original_len:
        raise CaptureError(f"record {index}: captured_len exceeds original_len", index)
    if not (0 <= record.ts_sec <= 0xFFFFFFFF and 0 <= record.ts_usec <= 0xFFFFFFFF):
        raise CaptureError(f"record {index}: timestamp outside 32-bit range", index)
    for port in (record.src_port, record.dst_port):
        if not 0 <= port <= 65535:
            raise CaptureError(f"record {index}: port {port} out of range", index)
    if record.protocol in (Protocol.ICMP, Protocol.OTHER) and (record.src_port or record.dst_port):
        raise CaptureError(f"record {index}: {record.protocol.value} records must have zero ports", index)


def write_capture(records: Iterable[PacketRecord], byte_order: str = "little") -> bytes:
    """Encode records as a classic capture byte stream (little-endian by
    default; "big" exists as a parser test oracle)."""
    order = {"little": "<", "big": ">"}[byte_order]
    out = bytearray()
    out += struct.pack(order + "IHHiIII", MAGIC, 2, 4, 0, 0, SNAP_LEN, LINKTYPE_ETHERNET)
    for index, record in enumerate(records):
        _validate_for_write(record, index)
        frame = _build_frame(record)
        out += struct.pack(
            order + "IIII", record.ts_sec, record.ts_usec, record.captured_len, record.original_len
        )
        out += frame
    return bytes(out)


@dataclass(slots=True)
class EndpointSpec:
    """Address pool for one side of a synthesized flood."""

    addrs: tuple[str, ...]

    @classmethod
    def of(cls, spec: "str | Sequence[str] | EndpointSpec") -> "EndpointSpec":
        if isinstance(spec, EndpointSpec):
            return spec
        if isinstance(spec, str):
            return cls(addrs=(spec,))
        return cls(addrs=tuple(spec))


_FLOOD_SIZES = {"icmp": 74, "syn": 54, "http_like": 433}


def synthesize_flood(
    kind: str,
    count: int,
    src_spec: "str | Sequence[str] | EndpointSpec",
    dst_spec: "str | Sequence[str] | EndpointSpec",
    *,
    rate_pps: float = 10_000.0,
    start_ts: float = 0.0,
    seed: int = 0,
) -> list[PacketRecord]:
    """Deterministic attack-traffic generator.

    icmp: echo-style icmp records. syn: tcp with SYN set and ACK clear.
    http_like: tcp to dst port 80 with PSH|ACK. Timestamps are spaced
    uniformly at 1/rate_pps from start_ts.
    """
    if kind not in _FLOOD_SIZES:
        raise ValueError(f"unknown flood kind: {kind!r}")
    if count < 1:
        raise ValueError("count must be >= 1")
    if rate_pps <= 0:
        raise ValueError("rate_pps must be > 0")
    srcs = EndpointSpec.of(src_spec).addrs
    dsts = EndpointSpec.of(dst_spec).addrs
    rng = random.Random(seed)
    spacing = 1.0 / rate_pps
    size = _FLOOD_SIZES[kind]

    records = []
    for i in range(count):
        ts = start_ts + i * spacing
        ts_sec = int(ts)
        ts_usec = int(round((ts - ts_sec) * 1_000_000))
        if ts_usec >= 1_000_000:
            ts_sec, ts_usec = ts_sec + 1, ts_usec - 1_000_000
        src = srcs[i % len(srcs)]
        dst = dsts[i % len(dsts)]
        if kind == "icmp":
            records.append(
                PacketRecord(ts_sec, ts_usec, size, size, Protocol.ICMP, src, dst, 0, 0)
            )
        elif kind == "syn":
            records.append(
                PacketRecord(
                    ts_sec,
                    ts_usec,
                    size,
                    size,
                    Protocol.TCP,
                    src,
                    dst,
                    rng.randint(1024, 65535),
                    80,
                    TcpFlags.SYN,
                )
            )
        else:  # http_like
            records.append(
                PacketRecord(
                    ts_sec,
                    ts_usec,
                    size,
                    size,
                    Protocol.TCP,
                    src,
                    dst,
                    rng.randint(1024, 65535),
                    80,
                    TcpFlags.PSH | TcpFlags.ACK,
                )
            )
    return records
