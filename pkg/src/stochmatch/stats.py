"""Confidence intervals used by the experiment harness."""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

Z99 = NormalDist().inv_cdf(0.995)  # 2.5758...


@dataclass(frozen=True)
class Estimate:
    mean: float
    half_width: float  # 99% normal-approximation half width
    sd: float
    n: int

    @property
    def sigma(self) -> float:
        """Standard error of the mean."""
        return self.sd / math.sqrt(self.n) if self.n else math.inf

    @property
    def interval(self) -> tuple[float, float]:
        return (self.mean - self.half_width, self.mean + self.half_width)


def estimate(values) -> Estimate:
    a = np.asarray(values, dtype=float)
    n = a.size
    sd = float(a.std(ddof=1)) if n > 1 else 0.0
    return Estimate(float(a.mean()) if n else math.nan, Z99 * sd / math.sqrt(n) if n else math.inf, sd, n)


def ratio_estimate(num, den) -> Estimate:
    """Ratio of two means from paired samples, delta-method interval."""
    x = np.asarray(num, dtype=float)
    y = np.asarray(den, dtype=float)
    n = x.size
    mx, my = x.mean(), y.mean()
    r = mx / my
    resid = (x - r * y) / my
    sd = float(resid.std(ddof=1)) if n > 1 else 0.0
    return Estimate(float(r), Z99 * sd / math.sqrt(n), sd, n)
