"""Trace model and text-format tests."""
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from botgate.errors import ConfigError, TraceParseError
from botgate.trace import (
    ACK, PSH, SYN, PacketRecord, Proto, Trace, parse_trace, quantize_ts,
    write_trace,
)

HEADER = "#trace v1 subnet=192.168.1.0/24 epoch=0"


def tcp(ts, src="192.168.1.10", dst="8.8.8.8", sport=40000, dport=80,
        flags=SYN, ip_len=40, payload=0):
    return PacketRecord(ts, src, dst, sport, dport, Proto.TCP, flags, ip_len, payload)


def test_round_trip_fixed():
    trace = Trace(
        packets=[
            tcp(0.001),
            tcp(1.5, flags=PSH | ACK, ip_len=140, payload=100),
            PacketRecord(2.0, "192.168.1.11", "1.1.1.1", 5000, 53, Proto.UDP, 0, 60, 32),
        ],
        internal_subnet="192.168.1.0/24",
        epoch=1700000000,
    )
    text = write_trace(trace)
    back = parse_trace(text)
    assert back.internal_subnet == trace.internal_subnet
    assert back.epoch == trace.epoch
    assert back.packets == trace.packets
    assert write_trace(back) == text


def test_quantize_ts_millisecond_grid():
    assert quantize_ts(1.23456) == 1.235
    assert quantize_ts(0.0) == 0.0
    # the grid survives formatting
    assert f"{quantize_ts(17.0009):.3f}" == "17.001"


def test_header_errors():
    with pytest.raises(TraceParseError, match="line 1"):
        parse_trace("not a header\n")
    with pytest.raises(TraceParseError, match="subnet"):
        parse_trace("#trace v1 epoch=0\n")
    with pytest.raises(TraceParseError, match="epoch"):
        parse_trace("#trace v1 subnet=10.0.0.0/8 epoch=xyz\n")
    with pytest.raises(TraceParseError):
        parse_trace("")


def test_body_errors_carry_line_numbers():
    with pytest.raises(TraceParseError, match="line 2"):
        parse_trace(HEADER + "\n1.0 too few fields\n")
    with pytest.raises(TraceParseError, match="line 3"):
        parse_trace(HEADER + "\n\n1.0 192.168.1.10 999.999.1.1 1 2 TCP 0x02 40 0\n")
    with pytest.raises(TraceParseError, match="hex"):
        parse_trace(HEADER + "\n1.0 192.168.1.10 8.8.8.8 1 2 TCP 2 40 0\n")
    with pytest.raises(TraceParseError):
        parse_trace(HEADER + "\n1.0 192.168.1.10 8.8.8.8 1 2 SCTP 0x00 40 0\n")


def test_blank_lines_skipped_and_out_of_order_sorted():
    text = HEADER + (
        "\n5.000 192.168.1.10 8.8.8.8 40000 80 TCP 0x02 40 0"
        "\n\n1.000 192.168.1.10 8.8.8.8 40001 80 TCP 0x02 40 0\n"
    )
    trace = parse_trace(text)
    assert [p.ts for p in trace.packets] == [1.0, 5.0]


def test_packet_validation():
    with pytest.raises(ValueError):
        tcp(-1.0)
    with pytest.raises(ValueError):
        tcp(0.0, sport=70000)
    with pytest.raises(ValueError):
        tcp(0.0, ip_len=40, payload=50)
    with pytest.raises(ValueError):
        PacketRecord(0.0, "1.1.1.1", "2.2.2.2", 1, 2, Proto.UDP, SYN, 28, 0)
    with pytest.raises(ValueError):
        PacketRecord(0.0, "1.1.1.1", "2.2.2.2", 1, 2, Proto.OTHER, 0, 20, 0)


def test_trace_subnet_validation_and_span():
    with pytest.raises(ConfigError):
        Trace(packets=[], internal_subnet="not-a-cidr")
    t = Trace(packets=[], internal_subnet="10.0.0.0/8")
    assert t.span() == 0.0
    assert t.is_internal("10.1.2.3")
    assert not t.is_internal("11.1.2.3")


_ips = st.sampled_from(["192.168.1.10", "192.168.1.100", "8.8.8.8", "203.0.113.9"])
_ports = st.integers(min_value=0, max_value=65535)


@st.composite
def packets(draw):
    proto = draw(st.sampled_from(list(Proto)))
    payload = draw(st.integers(min_value=0, max_value=1400))
    kwargs = dict(
        ts=quantize_ts(draw(st.floats(min_value=0, max_value=3600, allow_nan=False))),
        src_ip=draw(_ips), dst_ip=draw(_ips),
        proto=proto, ip_len=payload + 40, payload_len=payload,
    )
    if proto is Proto.OTHER:
        kwargs.update(src_port=0, dst_port=0, tcp_flags=0)
    else:
        kwargs.update(src_port=draw(_ports), dst_port=draw(_ports),
                      tcp_flags=draw(st.integers(0, 0x3F)) if proto is Proto.TCP else 0)
    return PacketRecord(**kwargs)


@settings(max_examples=60, deadline=None)
@given(st.lists(packets(), max_size=30), st.integers(0, 2**31 - 1))
def test_round_trip_property(pkts, epoch):
    pkts = sorted(pkts, key=lambda p: p.ts)
    trace = Trace(packets=pkts, internal_subnet="192.168.1.0/24", epoch=epoch)
    back = parse_trace(write_trace(trace))
    assert back.packets == pkts
    assert back.epoch == epoch
