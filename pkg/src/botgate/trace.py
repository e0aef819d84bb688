"""Canonical packet-trace data model and its line-oriented text format.

Format: first line ``#trace v1 subnet=<CIDR> epoch=<unix-seconds>``, then one
packet per line::

    <ts> <src_ip> <dst_ip> <src_port> <dst_port> <proto> <flags-hex> <ip_len> <payload_len>

IPv4 only; timestamps are seconds since the trace epoch with millisecond
resolution.
"""
from __future__ import annotations

import ipaddress
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .errors import ConfigError, TraceParseError

# TCP flag bits (standard assignments)
FIN = 0x01
SYN = 0x02
RST = 0x04
PSH = 0x08
ACK = 0x10
URG = 0x20

HEADER_PREFIX = "#trace v1"


class Proto(str, Enum):
    TCP = "TCP"
    UDP = "UDP"
    OTHER = "OTHER"


def quantize_ts(ts: float) -> float:
    """Snap a timestamp to the millisecond grid the text format can hold."""
    return float(f"{ts:.3f}")


@dataclass(slots=True)
class PacketRecord:
    ts: float
    src_ip: str
    dst_ip: str
    src_port: int
    dst_port: int
    proto: Proto
    tcp_flags: int
    ip_len: int
    payload_len: int

    def __post_init__(self):
        if self.ts < 0:
            raise ValueError(f"negative timestamp {self.ts}")
        if not (0 <= self.src_port <= 65535 and 0 <= self.dst_port <= 65535):
            raise ValueError(f"port out of range: {self.src_port}/{self.dst_port}")
        if self.payload_len > self.ip_len:
            raise ValueError(f"payload_len {self.payload_len} > ip_len {self.ip_len}")
        if self.payload_len < 0 or self.ip_len < 0:
            raise ValueError("negative length")
        if self.proto is not Proto.TCP and self.tcp_flags != 0:
            raise ValueError("tcp_flags must be 0 for non-TCP packets")
        if self.proto is Proto.OTHER and (self.src_port != 0 or self.dst_port != 0):
            raise ValueError("ports must be 0 for proto OTHER")
        if not (0 <= self.tcp_flags <= 0xFF):
            raise ValueError(f"tcp_flags out of range: {self.tcp_flags:#x}")


@dataclass(slots=True)
class Trace:
    packets: list[PacketRecord]
    internal_subnet: str
    epoch: int = 0

    def __post_init__(self):
        try:
            ipaddress.IPv4Network(self.internal_subnet)
        except (ValueError, ipaddress.AddressValueError) as exc:
            raise ConfigError(f"invalid internal subnet {self.internal_subnet!r}: {exc}") from exc

    def is_internal(self, ip: str) -> bool:
        return ipaddress.IPv4Address(ip) in ipaddress.IPv4Network(self.internal_subnet)

    def span(self) -> float:
        """Timestamp of the last packet (0.0 for an empty trace)."""
        return self.packets[-1].ts if self.packets else 0.0


def _parse_header(line: str) -> tuple[str, int]:
    if not line.startswith(HEADER_PREFIX):
        raise TraceParseError(f"line 1: missing '{HEADER_PREFIX}' header")
    subnet = epoch = None
    for token in line[len(HEADER_PREFIX):].split():
        key, _, value = token.partition("=")
        if key == "subnet":
            subnet = value
        elif key == "epoch":
            epoch = value
        else:
            raise TraceParseError(f"line 1: unknown header key {key!r}")
    if subnet is None or epoch is None:
        raise TraceParseError("line 1: header must carry subnet= and epoch=")
    try:
        epoch_i = int(epoch)
    except ValueError as exc:
        raise TraceParseError(f"line 1: bad epoch {epoch!r}") from exc
    return subnet, epoch_i


def parse_trace(stream: Iterable[str] | str | bytes) -> Trace:
    """Parse the canonical text format into a Trace.

    Body lines may arrive in any timestamp order; the result is stably
    sorted by ts (ties keep input order).
    """
    if isinstance(stream, bytes):
        stream = stream.decode("ascii")
    if isinstance(stream, str):
        lines = stream.splitlines()
    else:
        lines = [ln.rstrip("\n") for ln in stream]
    if not lines:
        raise TraceParseError("empty input: missing header")
    subnet, epoch = _parse_header(lines[0])
    packets: list[PacketRecord] = []
    seen_ips: set[str] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 9:
            raise TraceParseError(f"line {lineno}: expected 9 fields, got {len(parts)}")
        try:
            ts = float(parts[0])
            src_ip, dst_ip = parts[1], parts[2]
            for ip in (src_ip, dst_ip):
                if ip not in seen_ips:
                    ipaddress.IPv4Address(ip)
                    seen_ips.add(ip)
            proto = Proto(parts[5])
            if not parts[6].startswith("0x"):
                raise ValueError(f"flags must be hex, got {parts[6]!r}")
            pkt = PacketRecord(
                ts=ts,
                src_ip=src_ip,
                dst_ip=dst_ip,
                src_port=int(parts[3]),
                dst_port=int(parts[4]),
                proto=proto,
                tcp_flags=int(parts[6], 16),
                ip_len=int(parts[7]),
                payload_len=int(parts[8]),
            )
        except (ValueError, ipaddress.AddressValueError) as exc:
            raise TraceParseError(f"line {lineno}: {exc}") from exc
        packets.append(pkt)
    packets.sort(key=lambda p: p.ts)  # stable: equal-ts packets keep input order
    return Trace(packets=packets, internal_subnet=subnet, epoch=epoch)


def format_packet(p: PacketRecord) -> str:
    return (
        f"{p.ts:.3f} {p.src_ip} {p.dst_ip} {p.src_port} {p.dst_port} "
        f"{p.proto.value} 0x{p.tcp_flags:02X} {p.ip_len} {p.payload_len}"
    )


def write_trace(trace: Trace) -> str:
    lines = [f"{HEADER_PREFIX} subnet={trace.internal_subnet} epoch={trace.epoch}"]
    lines.extend(format_packet(p) for p in trace.packets)
    return "\n".join(lines) + "\n"


def load_trace(path) -> Trace:
    with open(path, "r", encoding="ascii") as fh:
        return parse_trace(fh)


def save_trace(trace: Trace, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(write_trace(trace))
