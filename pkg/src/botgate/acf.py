"""Per-device beacon-periodicity detection.

Pipeline: filter candidate command-channel packets (UDP, or TCP PSH+ACK with
a tiny payload), bin arrival times into a binary sequence, compute the
unbiased autocorrelation, find dominant peaks, and declare periodicity when
at least ``min_peaks`` peaks sit at (almost) equal gaps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError, DegenerateSignalError
from .sessions import DeviceTrace
from .trace import ACK, PSH, Proto


class Verdict(str, Enum):
    PERIOD_DETECTED = "PERIOD_DETECTED"
    PERIOD_NOT_DETECTED = "PERIOD_NOT_DETECTED"


@dataclass
class PeriodicityParams:
    sample_t: float = 10.0            # bin width in seconds (0.1 Hz sampling)
    peak_height_frac: float = 0.7     # relative to the tallest ACF peak past lag 0
    gap_variance_thresh: float = 0.01
    payload_cutoff_bytes: int = 10
    min_peaks: int = 3
    max_lag_frac: float = 0.75

    def __post_init__(self):
        if self.sample_t <= 0 or self.payload_cutoff_bytes <= 0 or self.min_peaks <= 0:
            raise ConfigError("periodicity parameters must be positive")
        if not 0 < self.peak_height_frac <= 1:
            raise ConfigError("peak_height_frac must be in (0, 1]")
        if not 0 < self.max_lag_frac < 1:
            raise ConfigError("max_lag_frac must be in (0, 1)")
        if self.gap_variance_thresh <= 0:
            raise ConfigError("gap_variance_thresh must be positive")


@dataclass
class EncodedSequence:
    e: np.ndarray  # K binary values
    T: float
    K: int


@dataclass
class AcfSeries:
    r: np.ndarray  # values at lags 0..max_lag
    max_lag: int


@dataclass
class PeriodicityResult:
    verdict: Verdict
    peak_lags: list[int] = field(default_factory=list)
    gap_variance: float | None = None
    n_candidates: int = 0
    reason: str = ""


def filter_cnc_candidates(device_trace: DeviceTrace, payload_cutoff: int = 10) -> list[float]:
    """Arrival times of likely command-channel packets, sorted ascending.

    Keeps UDP packets and TCP packets with both PSH and ACK set, excluding
    anything whose transport payload exceeds the cutoff (application data)."""
    times = []
    for pkt in device_trace.packets:
        if pkt.payload_len > payload_cutoff:
            continue
        if pkt.proto is Proto.UDP or (
            pkt.proto is Proto.TCP and pkt.tcp_flags & PSH and pkt.tcp_flags & ACK
        ):
            times.append(pkt.ts)
    times.sort()
    return times


def encode(arrivals: list[float], T: float, duration: float) -> EncodedSequence:
    """Bin arrival times into K = floor(duration/T) half-open [iT, (i+1)T) bins."""
    if T <= 0:
        raise ConfigError(f"sampling interval must be positive, got {T}")
    K = int(math.floor(duration / T))
    if K == 0:
        raise ConfigError(f"duration {duration} shorter than sampling interval {T}")
    e = np.zeros(K, dtype=np.int8)
    for t in arrivals:
        i = int(t // T)
        if 0 <= i < K:
            e[i] = 1
    return EncodedSequence(e=e, T=T, K=K)


def acf(sequence: EncodedSequence, max_lag: int) -> AcfSeries:
    """Unbiased autocorrelation at lags 0..max_lag:
    R(l) = K/(K-l) * sum_{i}(e_i - mean)(e_{i+l} - mean) / sum_i (e_i - mean)^2
    """
    e = np.asarray(sequence.e, dtype=float)
    K = len(e)
    if max_lag >= K:
        raise ConfigError(f"max_lag {max_lag} must be below sequence length {K}")
    d = e - e.mean()
    denom = float(d @ d)
    if denom == 0.0:
        raise DegenerateSignalError("constant sequence has no autocorrelation")
    r = np.empty(max_lag + 1)
    for l in range(max_lag + 1):
        r[l] = (K / (K - l)) * float(d[: K - l] @ d[l:]) / denom
    return AcfSeries(r=r, max_lag=max_lag)


def find_peaks(series: AcfSeries, height_frac: float) -> list[int]:
    """Strict local maxima at lags >= 1 whose height reaches ``height_frac``
    times the tallest local maximum (boundary lag tested one-sided)."""
    r = series.r
    L = series.max_lag
    maxima = []
    for l in range(1, L + 1):
        left_ok = r[l] > r[l - 1]
        right_ok = r[l] > r[l + 1] if l < L else True
        if left_ok and right_ok:
            maxima.append(l)
    if not maxima:
        return []
    thresh = height_frac * max(r[l] for l in maxima)
    return [l for l in maxima if r[l] >= thresh]


def detect_periodicity(device_trace: DeviceTrace, params: PeriodicityParams,
                       duration: float) -> PeriodicityResult:
    """Full per-device check; degenerate traffic yields PERIOD_NOT_DETECTED
    with a diagnostic reason rather than an error."""
    arrivals = filter_cnc_candidates(device_trace, params.payload_cutoff_bytes)
    result = PeriodicityResult(verdict=Verdict.PERIOD_NOT_DETECTED, n_candidates=len(arrivals))
    try:
        seq = encode(arrivals, params.sample_t, duration)
    except ConfigError as exc:
        result.reason = str(exc)
        return result
    max_lag = int(math.floor(seq.K * params.max_lag_frac))
    if max_lag < 2:
        result.reason = "sequence too short for peak analysis"
        return result
    try:
        series = acf(seq, max_lag)
    except DegenerateSignalError as exc:
        result.reason = str(exc)
        return result
    peaks = find_peaks(series, params.peak_height_frac)
    result.peak_lags = peaks
    if len(peaks) < params.min_peaks:
        result.reason = f"only {len(peaks)} qualifying peaks (need {params.min_peaks})"
        return result
    gaps = np.diff(peaks)
    gap_var = float(np.var(gaps))  # population variance, lag units
    result.gap_variance = gap_var
    if gap_var < params.gap_variance_thresh:
        result.verdict = Verdict.PERIOD_DETECTED
    else:
        result.reason = f"inter-peak gap variance {gap_var:.4f} above threshold"
    return result
