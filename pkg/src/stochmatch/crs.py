"""Contention resolution for a single item (rank-1 uniform matroid).

Each element ``i`` is active independently with probability ``z[i]`` and
``sum(z) <= 1``. A scheme sees elements one by one and may accept at most one
active element. Schemes only ever read ``z``, the arrival order or time and the
active flags.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Sequence

import numpy as np

Z_TOL = 1e-9
Z99 = NormalDist().inv_cdf(0.995)


def _check(z):
    z = np.asarray(z, dtype=float)
    if np.any(z < -Z_TOL) or np.any(z > 1 + Z_TOL):
        raise ValueError("marginals must lie in [0, 1]")
    if z.sum() > 1 + Z_TOL:
        raise ValueError(f"marginals sum to {z.sum()} > 1")
    return np.clip(z, 0.0, 1.0)


class OcrsHalf:
    """Online scheme: accept active ``i`` w.p. (1/2) / (1 - (1/2) * z-mass already seen)."""

    def __init__(self, z: Sequence[float] | None = None):
        self.seen = 0.0
        self.done = False
        self.z = None if z is None else _check(z)

    def offer(self, z_i: float, active: bool, rng) -> bool:
        prob = 0.5 / (1.0 - 0.5 * self.seen)
        assert 0.0 <= prob <= 1.0 + 1e-12, prob
        self.seen += z_i
        if self.done or not active:
            return False
        if rng.random() < prob:
            self.done = True
            return True
        return False


class RcrsExp:
    """Random-order scheme: accept active ``i`` arriving at time ``t`` w.p. exp(-z_i * t)."""

    def __init__(self):
        self.done = False

    def offer(self, z_i: float, t: float, active: bool, rng) -> bool:
        if self.done or not active:
            return False
        if rng.random() < math.exp(-z_i * t):
            self.done = True
            return True
        return False


def ocrs_half(z, order, active, rng) -> int | None:
    """Accepted index (or None) for one run in the given order."""
    z = _check(z)
    scheme = OcrsHalf()
    for i in order:
        if scheme.offer(z[i], bool(active[i]), rng):
            return int(i)
    return None


def rcrs_one_minus_inv_e(z, times, active, rng) -> int | None:
    z = _check(z)
    scheme = RcrsExp()
    for i in np.argsort(times, kind="stable"):
        if scheme.offer(z[i], times[i], bool(active[i]), rng):
            return int(i)
    return None


def greedy_crs(z, order, active, rng=None) -> int | None:
    """Baseline: accept the first active element."""
    for i in order:
        if active[i]:
            return int(i)
    return None


# ---------------------------------------------------------------------------
# vectorised runs: arrays of shape (trials, k)
# ---------------------------------------------------------------------------


def _batch_inputs(z, trials, rng):
    z = _check(z)
    active = rng.random((trials, len(z))) < z
    coins = rng.random((trials, len(z)))
    return z, active, coins


def batch_ocrs(z, order, trials, rng):
    """Returns (active, accepted) boolean arrays, columns in element order."""
    z, active, coins = _batch_inputs(z, trials, rng)
    accepted = np.zeros_like(active)
    free = np.ones(trials, dtype=bool)
    seen = 0.0
    for i in order:
        take = free & active[:, i] & (coins[:, i] < 0.5 / (1.0 - 0.5 * seen))
        accepted[:, i] = take
        free &= ~take
        seen += z[i]
    return active, accepted


def batch_rcrs(z, trials, rng):
    z, active, coins = _batch_inputs(z, trials, rng)
    times = rng.random((trials, len(z)))
    keep = active & (coins < np.exp(-z * times))
    # the earliest keep-able element is the one accepted
    t_keep = np.where(keep, times, np.inf)
    first = np.argmin(t_keep, axis=1)
    accepted = np.zeros_like(active)
    rows = np.flatnonzero(np.isfinite(t_keep[np.arange(trials), first]))
    accepted[rows, first[rows]] = True
    return active, accepted


def batch_greedy_random(z, trials, rng):
    z, active, _ = _batch_inputs(z, trials, rng)
    times = rng.random((trials, len(z)))
    t_act = np.where(active, times, np.inf)
    first = np.argmin(t_act, axis=1)
    accepted = np.zeros_like(active)
    rows = np.flatnonzero(np.isfinite(t_act[np.arange(trials), first]))
    accepted[rows, first[rows]] = True
    return active, accepted


# ---------------------------------------------------------------------------
# verifier
# ---------------------------------------------------------------------------


def wilson(successes: int, n: int, z: float = Z99) -> tuple[float, float]:
    if n == 0:
        return (0.0, 1.0)
    ph = successes / n
    den = 1 + z * z / n
    mid = (ph + z * z / (2 * n)) / den
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    return (mid - half, mid + half)


@dataclass
class Selectability:
    estimate: np.ndarray  # per element (or per pooled group) conditional acceptance
    lower: np.ndarray
    upper: np.ndarray
    n_active: np.ndarray
    order: tuple | None = None
    groups: list | None = None

    @property
    def worst(self) -> float:
        return float(np.min(self.estimate))


def _summarise(active, accepted, pool=None, z=None):
    if pool:
        # elements with equal marginals are exchangeable under random order
        keys = sorted(set(np.round(z, 12)))
        groups = [np.flatnonzero(np.isclose(z, k, rtol=0, atol=1e-12)) for k in keys]
    else:
        groups = [np.array([i]) for i in range(active.shape[1])]
    n_act = np.array([int(active[:, g].sum()) for g in groups])
    n_acc = np.array([int(accepted[:, g].sum()) for g in groups])
    est = np.where(n_act > 0, n_acc / np.maximum(n_act, 1), np.nan)
    bounds = [wilson(a, n) for a, n in zip(n_acc, n_act)]
    return est, np.array([b[0] for b in bounds]), np.array([b[1] for b in bounds]), n_act, groups


def verify_selectability(scheme: str, z, mode: str = "adversarial", trials: int = 100_000, rng=None, max_orders: int = 40_320):
    """Per-element conditional acceptance with 99% Wilson intervals.

    ``scheme`` is ``ocrs``, ``rcrs`` or ``greedy``. In adversarial mode every
    order is tried when k <= 8 (otherwise a sample) and the order with the
    smallest estimate is reported. Random mode pools elements with equal z.
    """
    rng = np.random.default_rng(rng)
    z = _check(z)
    k = len(z)
    if mode == "adversarial":
        if scheme != "ocrs":
            raise ValueError("adversarial mode applies to the online scheme")
        if k <= 8:
            orders = list(dict.fromkeys(itertools.permutations(range(k))))
        else:
            orders = [tuple(rng.permutation(k)) for _ in range(min(max_orders, 200))]
        worst = None
        for order in orders:
            active, accepted = batch_ocrs(z, order, trials, rng)
            est, lo, hi, n_act, groups = _summarise(active, accepted)
            res = Selectability(est, lo, hi, n_act, tuple(int(i) for i in order), groups)
            if worst is None or np.nanmin(est) < np.nanmin(worst.estimate):
                worst = res
        return worst
    batch = {"rcrs": batch_rcrs, "greedy": batch_greedy_random}[scheme]
    active, accepted = batch(z, trials, rng)
    est, lo, hi, n_act, groups = _summarise(active, accepted, pool=True, z=z)
    return Selectability(est, lo, hi, n_act, None, groups)


def rcrs_exact(z) -> np.ndarray:
    """Closed-form conditional acceptance of the exponential scheme: (1 - e^-Z) / Z for every element."""
    z = _check(z)
    Z = z.sum()
    val = 1.0 if Z == 0 else (1 - math.exp(-Z)) / Z
    return np.full(len(z), val)
