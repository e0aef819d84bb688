"""Walker's largest sample test: periodogram-maximum significance baseline."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, DataError


class WalkerVerdict(str, Enum):
    DETECTED = "DETECTED"
    NOT_DETECTED = "NOT_DETECTED"


@dataclass
class WalkerParams:
    gamma: float = 0.1  # false-positive probability

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ConfigError("gamma must be in (0, 1)")


@dataclass
class WalkerResult:
    verdict: WalkerVerdict
    statistic: float | None = None
    threshold: float | None = None
    note: str = ""


def walker_test(sequence: np.ndarray, gamma: float = 0.1) -> WalkerResult:
    """Compare the largest mean-subtracted periodogram ordinate (scaled by the
    sample variance) against z = -ln(1 - (1-gamma)^(1/M))."""
    if not 0 < gamma < 1:
        raise ConfigError("gamma must be in (0, 1)")
    e = np.asarray(sequence, dtype=float)
    K = len(e)
    if K < 8:
        raise DataError(f"need at least 8 samples, got {K}")
    d = e - e.mean()
    var = float(d @ d) / K
    if var == 0.0:
        return WalkerResult(WalkerVerdict.NOT_DETECTED, note="degenerate (constant) sequence")
    M = (K - 1) // 2
    spectrum = np.fft.fft(d)
    periodogram = np.abs(spectrum[1 : M + 1]) ** 2 / K
    g = float(periodogram.max()) / var
    z = -math.log(1.0 - (1.0 - gamma) ** (1.0 / M))
    verdict = WalkerVerdict.DETECTED if g > z else WalkerVerdict.NOT_DETECTED
    return WalkerResult(verdict=verdict, statistic=g, threshold=z)
