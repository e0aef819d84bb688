"""Session windowing, TCP filtering, per-device splitting and sub-sampling."""
from __future__ import annotations

import ipaddress
import math
from dataclasses import dataclass, replace

from .errors import ConfigError
from .trace import PacketRecord, Proto, Trace


@dataclass(slots=True)
class TrafficSession:
    index: int
    t_start: float
    t_end: float
    packets: list[PacketRecord]


@dataclass(slots=True)
class DeviceTrace:
    device_ip: str
    packets: list[PacketRecord]


def sessionize(trace: Trace, duration_s: float, span_s: float | None = None) -> list[TrafficSession]:
    """Split a trace into consecutive [i*d, (i+1)*d) windows aligned to t=0.

    A trailing partial window is dropped. ``span_s`` is the nominal capture
    duration; it defaults to the last packet timestamp when the caller does
    not know it.
    """
    if duration_s <= 0:
        raise ConfigError(f"session duration must be positive, got {duration_s}")
    span = trace.span() if span_s is None else span_s
    n_sessions = int(math.floor(span / duration_s))
    sessions = [
        TrafficSession(index=i, t_start=i * duration_s, t_end=(i + 1) * duration_s, packets=[])
        for i in range(n_sessions)
    ]
    for pkt in trace.packets:
        i = int(pkt.ts // duration_s)
        if i < n_sessions:
            sessions[i].packets.append(pkt)
    return sessions


def filter_tcp(session: TrafficSession) -> TrafficSession:
    return replace(session, packets=[p for p in session.packets if p.proto is Proto.TCP])


def split_by_device(trace: Trace) -> dict[str, DeviceTrace]:
    """One DeviceTrace per internal IP seen in the trace.

    A packet between two internal IPs shows up in both device traces.
    """
    net = ipaddress.IPv4Network(trace.internal_subnet)
    cache: dict[str, bool] = {}

    def internal(ip: str) -> bool:
        hit = cache.get(ip)
        if hit is None:
            hit = cache[ip] = ipaddress.IPv4Address(ip) in net
        return hit

    devices: dict[str, DeviceTrace] = {}
    for pkt in trace.packets:
        for ip in (pkt.src_ip, pkt.dst_ip):
            if internal(ip):
                dev = devices.get(ip)
                if dev is None:
                    dev = devices[ip] = DeviceTrace(device_ip=ip, packets=[])
                dev.packets.append(pkt)
    return devices


def subsample(session: TrafficSession, rate: float) -> TrafficSession:
    """Deterministic systematic sampling: keep packet j (1-based) iff
    floor(j*rate) > floor((j-1)*rate). Keeps exactly floor(n*rate) packets."""
    if not 0 < rate <= 1:
        raise ConfigError(f"sub-sampling rate must be in (0, 1], got {rate}")
    kept = [
        pkt
        for j, pkt in enumerate(session.packets, start=1)
        if math.floor(j * rate) > math.floor((j - 1) * rate)
    ]
    return replace(session, packets=kept)
