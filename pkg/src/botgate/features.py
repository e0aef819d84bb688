"""Per-session scanning features for stage-1 classification.

Eight features per session: unique SYN destination count, per-destination
packet-count max/min/mean, half-open connection count, and TCP packet length
max/min/mean. Computed from TCP headers only.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Optional

from .sessions import TrafficSession, filter_tcp
from .trace import ACK, SYN

BENIGN = "BENIGN"
MALICIOUS = "MALICIOUS"

FEATURE_NAMES = [
    "n_uniq_syn_dst",
    "pkts_max",
    "pkts_min",
    "pkts_mean",
    "n_half_open",
    "len_max",
    "len_min",
    "len_mean",
]

CSV_HEADER = FEATURE_NAMES + ["label"]


@dataclass(slots=True)
class FeatureVector:
    n_uniq_syn_dst: int
    pkts_per_dst_max: int
    pkts_per_dst_min: int
    pkts_per_dst_mean: float
    n_half_open: int
    tcp_len_max: int
    tcp_len_min: int
    tcp_len_mean: float
    label: Optional[str] = None

    def values(self) -> list[float]:
        return [
            self.n_uniq_syn_dst,
            self.pkts_per_dst_max,
            self.pkts_per_dst_min,
            self.pkts_per_dst_mean,
            self.n_half_open,
            self.tcp_len_max,
            self.tcp_len_min,
            self.tcp_len_mean,
        ]


def _is_syn_only(flags: int) -> bool:
    return bool(flags & SYN) and not flags & ACK


def count_half_open(session: TrafficSession) -> int:
    """Count connections opened by a SYN the initiator never ACKed.

    A connection key is (initiator_ip, initiator_port, responder_ip,
    responder_port), established by the first SYN-only packet on it;
    retransmitted SYNs on the same key count once.
    """
    half_open: dict[tuple, bool] = {}
    for pkt in session.packets:
        fwd = (pkt.src_ip, pkt.src_port, pkt.dst_ip, pkt.dst_port)
        if _is_syn_only(pkt.tcp_flags):
            half_open.setdefault(fwd, True)
        elif pkt.tcp_flags & ACK and fwd in half_open:
            # later packet from the initiator carrying ACK completes the handshake
            half_open[fwd] = False
    return sum(half_open.values())


def extract_features(session: TrafficSession, label: Optional[str] = None) -> FeatureVector:
    """Compute the 8 scanning features; an empty session maps to all zeros."""
    session = filter_tcp(session)  # defensive; idempotent
    if not session.packets:
        return FeatureVector(0, 0, 0, 0.0, 0, 0, 0, 0.0, label=label)

    syn_dsts: set[str] = set()
    per_dst: dict[str, int] = {}
    lengths = []
    for pkt in session.packets:
        if _is_syn_only(pkt.tcp_flags):
            syn_dsts.add(pkt.dst_ip)
        per_dst[pkt.dst_ip] = per_dst.get(pkt.dst_ip, 0) + 1
        lengths.append(pkt.ip_len)

    counts = list(per_dst.values())
    return FeatureVector(
        n_uniq_syn_dst=len(syn_dsts),
        pkts_per_dst_max=max(counts),
        pkts_per_dst_min=min(counts),
        pkts_per_dst_mean=sum(counts) / len(counts),
        n_half_open=count_half_open(session),
        tcp_len_max=max(lengths),
        tcp_len_min=min(lengths),
        tcp_len_mean=sum(lengths) / len(lengths),
        label=label,
    )


def write_feature_csv(vectors: Iterable[FeatureVector], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for vec in vectors:
            writer.writerow([*vec.values(), vec.label if vec.label is not None else ""])


def read_feature_csv(path) -> list[FeatureVector]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected feature CSV header: {header}")
        for row in reader:
            out.append(
                FeatureVector(
                    n_uniq_syn_dst=int(float(row[0])),
                    pkts_per_dst_max=int(float(row[1])),
                    pkts_per_dst_min=int(float(row[2])),
                    pkts_per_dst_mean=float(row[3]),
                    n_half_open=int(float(row[4])),
                    tcp_len_max=int(float(row[5])),
                    tcp_len_min=int(float(row[6])),
                    tcp_len_mean=float(row[7]),
                    label=row[8] or None,
                )
            )
    return out
