"""Scanning-feature extraction against hand-counted fixtures."""
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from botgate.features import (
    BENIGN, CSV_HEADER, MALICIOUS, FeatureVector, count_half_open,
    extract_features, read_feature_csv, write_feature_csv,
)
from botgate.sessions import TrafficSession
from botgate.trace import ACK, FIN, PSH, SYN, PacketRecord, Proto


def tcp(ts, src, dst, sport, dport, flags, ip_len=40, payload=0):
    return PacketRecord(ts, src, dst, sport, dport, Proto.TCP, flags, ip_len, payload)


def session(packets):
    return TrafficSession(0, 0.0, 900.0, sorted(packets, key=lambda p: p.ts))


DEV = "192.168.1.10"


def handshake(t0, src, dst, sport):
    return [
        tcp(t0, src, dst, sport, 443, SYN),
        tcp(t0 + 0.01, dst, src, 443, sport, SYN | ACK),
        tcp(t0 + 0.02, src, dst, sport, 443, ACK),
    ]


def test_hand_counted_scan_fixture():
    # 3 lone SYNs to distinct targets + one completed handshake
    pkts = [
        tcp(1.0, DEV, "5.5.5.1", 40000, 23, SYN, ip_len=44),
        tcp(2.0, DEV, "5.5.5.2", 40001, 23, SYN, ip_len=44),
        tcp(3.0, DEV, "5.5.5.3", 40002, 23, SYN, ip_len=44),
        *handshake(10.0, DEV, "9.9.9.9", 50000),
    ]
    fv = extract_features(session(pkts))
    # SYN-only packets went to 4 distinct destinations (incl. the handshake SYN)
    assert fv.n_uniq_syn_dst == 4
    assert fv.n_half_open == 3  # the handshake completed
    # per-destination packet counts: 1,1,1 scan targets; 9.9.9.9 saw 2, DEV saw 1
    assert fv.pkts_per_dst_max == 2
    assert fv.pkts_per_dst_min == 1
    assert fv.pkts_per_dst_mean == pytest.approx(6 / 5)
    assert fv.tcp_len_max == 44
    assert fv.tcp_len_min == 40
    assert fv.tcp_len_mean == pytest.approx((3 * 44 + 3 * 40) / 6)


def test_half_open_semantics():
    # retransmitted SYN on one key counts once
    s = session([
        tcp(1.0, DEV, "5.5.5.1", 40000, 23, SYN),
        tcp(1.3, DEV, "5.5.5.1", 40000, 23, SYN),
    ])
    assert count_half_open(s) == 1
    # responder's SYN+ACK alone does not complete the handshake
    s = session([
        tcp(1.0, DEV, "5.5.5.1", 40000, 23, SYN),
        tcp(1.1, "5.5.5.1", DEV, 23, 40000, SYN | ACK),
    ])
    assert count_half_open(s) == 1
    # any later initiator packet with ACK does (even FIN+ACK)
    s = session([
        tcp(1.0, DEV, "5.5.5.1", 40000, 23, SYN),
        tcp(1.2, DEV, "5.5.5.1", 40000, 23, FIN | ACK),
    ])
    assert count_half_open(s) == 0


def test_empty_session_is_all_zero():
    fv = extract_features(session([]))
    assert fv.values() == [0, 0, 0, 0.0, 0, 0, 0, 0.0]


def test_udp_ignored():
    pkts = [
        tcp(1.0, DEV, "5.5.5.1", 40000, 23, SYN),
        PacketRecord(2.0, DEV, "5.5.5.2", 5000, 53, Proto.UDP, 0, 1200, 1172),
    ]
    fv = extract_features(session(pkts))
    assert fv.n_uniq_syn_dst == 1
    assert fv.tcp_len_max == 40  # the UDP length never enters


def test_csv_round_trip(tmp_path):
    vecs = [
        FeatureVector(3, 2, 1, 1.5, 3, 60, 40, 50.0, label=MALICIOUS),
        FeatureVector(0, 5, 1, 2.0, 0, 1500, 40, 400.25, label=BENIGN),
    ]
    path = tmp_path / "features.csv"
    write_feature_csv(vecs, path)
    assert path.read_text().splitlines()[0] == ",".join(CSV_HEADER)
    assert read_feature_csv(path) == vecs


def test_csv_rejects_foreign_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        read_feature_csv(path)


_flag_sets = st.sampled_from([SYN, SYN | ACK, ACK, PSH | ACK, FIN | ACK])


@st.composite
def tcp_sessions(draw):
    n = draw(st.integers(1, 25))
    pkts = []
    for i in range(n):
        payload = draw(st.integers(0, 500))
        pkts.append(tcp(
            float(i), DEV, draw(st.sampled_from(["5.5.5.1", "5.5.5.2", "9.9.9.9"])),
            draw(st.integers(40000, 40005)), draw(st.sampled_from([23, 80, 443])),
            draw(_flag_sets), ip_len=40 + payload, payload=payload,
        ))
    return session(pkts)


@settings(max_examples=80, deadline=None)
@given(tcp_sessions())
def test_feature_sanity_properties(sess):
    fv = extract_features(sess)
    assert all(v >= 0 for v in fv.values())
    assert fv.pkts_per_dst_min <= fv.pkts_per_dst_mean <= fv.pkts_per_dst_max
    assert fv.tcp_len_min <= fv.tcp_len_mean <= fv.tcp_len_max
    assert fv.n_uniq_syn_dst <= len({p.dst_ip for p in sess.packets})
