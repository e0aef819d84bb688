"""Session windowing, filtering, device splitting and sub-sampling."""
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from botgate.errors import ConfigError
from botgate.sessions import (
    TrafficSession, filter_tcp, sessionize, split_by_device, subsample,
)
from botgate.trace import ACK, SYN, PacketRecord, Proto, Trace


def tcp(ts, src="192.168.1.10", dst="8.8.8.8"):
    return PacketRecord(ts, src, dst, 40000, 80, Proto.TCP, SYN, 40, 0)


def udp(ts):
    return PacketRecord(ts, "192.168.1.10", "8.8.8.8", 5000, 53, Proto.UDP, 0, 60, 10)


def make_trace(packets, subnet="192.168.1.0/24"):
    return Trace(packets=sorted(packets, key=lambda p: p.ts), internal_subnet=subnet)


def test_sessionize_window_assignment():
    trace = make_trace([tcp(0.0), tcp(9.999), tcp(10.0), tcp(25.0), tcp(31.0)])
    sessions = sessionize(trace, 10.0, span_s=30.0)
    assert [s.index for s in sessions] == [0, 1, 2]
    assert [len(s.packets) for s in sessions] == [2, 1, 1]  # 31.0 is past the span
    assert sessions[1].packets[0].ts == 10.0  # boundary goes to the next window
    assert (sessions[0].t_start, sessions[0].t_end) == (0.0, 10.0)


def test_sessionize_span_defaults_to_last_packet():
    trace = make_trace([tcp(1.0), tcp(29.0)])
    assert len(sessionize(trace, 10.0)) == 2  # floor(29/10); partial window dropped


def test_sessionize_rejects_bad_duration():
    trace = make_trace([tcp(1.0)])
    with pytest.raises(ConfigError):
        sessionize(trace, 0.0)


def test_filter_tcp():
    s = TrafficSession(0, 0.0, 10.0, [tcp(1.0), udp(2.0), tcp(3.0)])
    kept = filter_tcp(s)
    assert all(p.proto is Proto.TCP for p in kept.packets)
    assert len(kept.packets) == 2
    assert len(s.packets) == 3  # input untouched


def test_split_by_device():
    trace = make_trace([
        tcp(1.0, src="192.168.1.10", dst="8.8.8.8"),
        tcp(2.0, src="8.8.8.8", dst="192.168.1.11"),
        tcp(3.0, src="192.168.1.10", dst="192.168.1.11"),  # internal-to-internal
    ])
    devices = split_by_device(trace)
    assert set(devices) == {"192.168.1.10", "192.168.1.11"}
    assert len(devices["192.168.1.10"].packets) == 2
    assert len(devices["192.168.1.11"].packets) == 2


def test_subsample_examples():
    s = TrafficSession(0, 0.0, 10.0, [tcp(float(i)) for i in range(10)])
    half = subsample(s, 0.5)
    assert [p.ts for p in half.packets] == [1.0, 3.0, 5.0, 7.0, 9.0]
    assert len(subsample(s, 1.0).packets) == 10
    assert len(subsample(s, 0.3).packets) == 3
    with pytest.raises(ConfigError):
        subsample(s, 0.0)
    with pytest.raises(ConfigError):
        subsample(s, 1.5)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 200), st.floats(min_value=0.01, max_value=1.0, allow_nan=False))
def test_subsample_keeps_floor_n_rate(n, rate):
    s = TrafficSession(0, 0.0, float(n), [tcp(float(i)) for i in range(n)])
    assert len(subsample(s, rate).packets) == math.floor(n * rate)
