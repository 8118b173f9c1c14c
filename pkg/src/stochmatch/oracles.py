"""Exact benchmarks for tiny instances and the adaptivity-gap experiment.

The adaptive benchmark state keeps, for each online vertex, either "matched"
or the set of its edges probed so far (all inactive). Sets suffice because
every constraint here is closed under permutation and inactive outcomes carry
no further information. An active probe is matched at once: declining it is
never better for an optimal offline algorithm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from .configlp import ConfigLpSolution, solve_lp_config
from .model import StochasticGraph
from .rounding import proposal_law
from .star import star_opt
from .stats import Z99, Estimate, estimate

MAX_EDGES = 9
MATCHED = -1


class TooLarge(ValueError):
    pass


def _guard(g: StochasticGraph, limit=MAX_EDGES):
    m = len(g.probeable_edges())
    if m > limit:
        raise TooLarge(f"{m} probeable edges; exact oracles stop at {limit}")


def brute_force_opt(g: StochasticGraph, max_edges: int = MAX_EDGES) -> float:
    """Offline adaptive benchmark OPT(G) by full recursion over probe choices."""
    _guard(g, max_edges)
    U = {u: j for j, u in enumerate(g.offline_ids)}
    online = [v for v in g.online]
    local = [list(v.probeable) for v in online]

    @lru_cache(maxsize=None)
    def best(avail: int, status: tuple) -> float:
        out = 0.0
        for k, st in enumerate(status):
            if st == MATCHED:
                continue
            probed_ids = [local[k][j].u for j in range(len(local[k])) if st >> j & 1]
            for j, e in enumerate(local[k]):
                if st >> j & 1 or not avail >> U[e.u] & 1:
                    continue
                if not online[k].constraint.allows(probed_ids + [e.u]):
                    continue
                hit = status[:k] + (MATCHED,) + status[k + 1:]
                miss = status[:k] + (st | 1 << j,) + status[k + 1:]
                value = e.p * (e.w + best(avail & ~(1 << U[e.u]), hit)) if e.p > 0 else 0.0
                if e.p < 1:
                    value += (1 - e.p) * best(avail, miss)
                out = max(out, value)
        return out

    return best((1 << len(U)) - 1, tuple(0 for _ in online))


def brute_force_nonadaptive(g: StochasticGraph, max_edges: int = MAX_EDGES) -> float:
    """Best deterministic non-adaptive plan: a fixed global probe sequence.

    Edges whose endpoints are already matched are skipped when their turn
    comes; everything else on the list is probed. With unit patience each
    offline vertex's edges are simply probed in nonincreasing weight order.
    """
    _guard(g, max_edges)
    if all(getattr(v.constraint, "limit", None) == 1 for v in g.online):
        return _nonadaptive_unit(g)
    return _nonadaptive_general(g)


def _nonadaptive_unit(g):
    choices = [[None] + list(v.probeable) for v in g.online]
    best = 0.0
    for pick in product(*choices):
        by_u: dict = {}
        for e in pick:
            if e is not None:
                by_u.setdefault(e.u, []).append(e)
        total = 0.0
        for edges in by_u.values():
            edges.sort(key=lambda e: -e.w)
            survive = 1.0
            for e in edges:
                total += survive * e.p * e.w
                survive *= 1 - e.p
        best = max(best, total)
    return best


def _nonadaptive_general(g):
    edges = g.probeable_edges()
    U = {u: j for j, u in enumerate(g.offline_ids)}
    V = {v.id: j for j, v in enumerate(g.online)}
    cons = {v.id: v.constraint for v in g.online}
    best = [0.0]

    # dist: {(u_mask, v_mask): prob}; value accumulates expected weight so far
    def dfs(used, per_v, dist, value):
        best[0] = max(best[0], value)
        for idx, e in enumerate(edges):
            if used >> idx & 1:
                continue
            chosen = per_v.get(e.v, ())
            if not cons[e.v].allows(chosen + (e.u,)):
                continue
            bu, bv = 1 << U[e.u], 1 << V[e.v]
            nxt: dict = {}
            gain = 0.0
            for (um, vm), pr in dist.items():
                if um & bu or vm & bv:
                    nxt[(um, vm)] = nxt.get((um, vm), 0.0) + pr
                    continue
                gain += pr * e.p * e.w
                if e.p > 0:
                    key = (um | bu, vm | bv)
                    nxt[key] = nxt.get(key, 0.0) + pr * e.p
                if e.p < 1:
                    nxt[(um, vm)] = nxt.get((um, vm), 0.0) + pr * (1 - e.p)
            dfs(used | 1 << idx, {**per_v, e.v: chosen + (e.u,)}, nxt, value + gain)

    dfs(0, {}, {(0, 0): 1.0}, 0.0)
    return best[0]


# ---------------------------------------------------------------------------
# exact expectation of online policies
# ---------------------------------------------------------------------------


def exact_expectation(policy: str, g: StochasticGraph, order=None, sol: ConfigLpSolution | None = None) -> float:
    """Exact E[w(M)] of ``greedy-dp`` or ``known-graph`` for one arrival order."""
    order = list(range(len(g.online))) if order is None else list(order)
    _guard(g)
    if policy == "greedy-dp":
        return _greedy_dp_exact(g, order)
    if policy == "known-graph":
        return _known_graph_exact(g, order, sol if sol is not None else solve_lp_config(g))
    raise ValueError(f"unknown policy {policy!r}")


def _greedy_dp_exact(g, order):
    if not g.is_vertex_weighted():
        raise ValueError("Greedy-DP needs a vertex-weighted graph")
    weight = g.offline_weight

    @lru_cache(maxsize=None)
    def value(t: int, R: frozenset) -> float:
        if t == len(order):
            return 0.0
        v = g.online[order[t]]
        plan = star_opt(v, R, weight).string
        out = 0.0
        survive = 1.0
        for e in plan:
            out += survive * e.p * (weight[e.u] + value(t + 1, R - {e.u}))
            survive *= 1 - e.p
        return out + survive * value(t + 1, R)

    return value(0, frozenset(g.offline_ids))


def _known_graph_exact(g, order, sol, max_support=50):
    laws = []
    for i in order:
        v = g.online[i]
        dist = sol.distribution(v.id)
        if len(dist) > max_support:
            raise TooLarge(f"{v.id} has {len(dist)} support strings")
        laws.append({k: pr for k, pr in proposal_law(dist).items() if k is not None})
    wmap = {e.key: e.w for e in g.edges()}

    @lru_cache(maxsize=None)
    def value(t: int, taken: frozenset) -> float:
        if t == len(laws):
            return 0.0
        out = 0.0
        rest = 1.0
        for (u, v), pr in laws[t].items():
            rest -= pr
            if u in taken:
                out += pr * value(t + 1, taken)
            else:
                out += pr * (wmap[(u, v)] + value(t + 1, taken | {u}))
        return out + rest * value(t + 1, taken)

    return value(0, frozenset())


# ---------------------------------------------------------------------------
# adaptivity gap on G(s, n, p)
# ---------------------------------------------------------------------------


@dataclass
class GapResult:
    n: int
    p: float
    s: int
    adaptive: Estimate
    nonadaptive: Estimate
    ratio: Estimate
    exact_adaptive: float
    exact_nonadaptive: float
    poisson_limit: float  # s(1 - e^{-pn/s}), the small-p limit of the balanced value (a lower bound on it)

    @property
    def exact_ratio(self) -> float:
        return self.exact_nonadaptive / self.exact_adaptive


def balanced_loads(n: int, s: int) -> np.ndarray:
    k = np.full(s, n // s)
    k[: n % s] += 1
    return k


def gap_exact(n: int, p: float, s: int) -> tuple[float, float]:
    """(E[min(s, Bin(n,p))], s - sum_u (1-p)^k_u for the balanced assignment)."""
    from scipy.stats import binom

    k = np.arange(n + 1)
    adaptive = float(np.sum(np.minimum(k, s) * binom.pmf(k, n, p)))
    loads = balanced_loads(n, s)
    return adaptive, float(s - np.sum((1 - p) ** loads))


def adaptivity_gap_experiment(n: int, p: float, s: int, trials: int, seed, chunk: int = 500) -> GapResult:
    """Monte Carlo on the complete s x n graph with uniform p and unit patience.

    Adaptive side: arrivals in turn probe one edge to a still-free offline
    vertex (the greedy policy, optimal here). Non-adaptive side: the balanced
    assignment, each offline vertex probed by about n/s arrivals regardless of
    outcomes. Both sides share nothing but the seed.
    """
    if not (1 <= s <= n) or not (0 < p <= 1) or trials < 2:
        raise ValueError("need 1 <= s <= n, 0 < p <= 1 and at least two trials")
    if s > p * n + 1e-9:
        raise ValueError(f"s = {s} exceeds pn = {p * n}")
    rng = np.random.default_rng(seed)
    loads = balanced_loads(n, s)
    starts = np.concatenate([[0], np.cumsum(loads)[:-1]])
    adaptive = np.empty(trials)
    nonadaptive = np.empty(trials)
    for lo in range(0, trials, chunk):
        m = min(chunk, trials - lo)
        act = rng.random((m, n)) < p
        adaptive[lo:lo + m] = np.minimum(act.sum(axis=1), s)
        act = rng.random((m, n)) < p
        hit = np.add.reduceat(act, starts, axis=1) > 0
        nonadaptive[lo:lo + m] = hit.sum(axis=1)
    ea, en = gap_exact(n, p, s)
    return GapResult(
        n, p, s,
        estimate(adaptive), estimate(nonadaptive),
        _independent_ratio(nonadaptive, adaptive),
        ea, en, s * (1 - math.exp(-p * n / s)),
    )


def _independent_ratio(num, den) -> Estimate:
    a, b = estimate(num), estimate(den)
    r = a.mean / b.mean
    se = r * math.sqrt((a.sigma / a.mean) ** 2 + (b.sigma / b.mean) ** 2)
    return Estimate(r, Z99 * se, se * math.sqrt(a.n), a.n)
