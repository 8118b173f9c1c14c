"""Online probing algorithms and arrival models.

Reference implementations run one trial at a time and return a full
``MatchingResult`` with probe traces. The ``Batch*`` helpers simulate many
trials at once with numpy for the known i.d. family, whose arrivals propose
independently of the past.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .configlp import ConfigLpSolution, proposal_marginals, solve_lp_config, solve_lp_config_id
from .crs import OcrsHalf
from .model import Edge, KnownIdInput, LiveStates, StochasticGraph, point_mass_input
from .rounding import ProposeOutcome, StringSampler, vertex_probe
from .star import star_opt

SUM_TOL = 1e-6


# ---------------------------------------------------------------------------
# arrival models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdversarialOrder:
    perm: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValueError(f"{self.perm} is not a permutation")

    def draw(self, n, rng):
        if n != len(self.perm):
            raise ValueError(f"permutation has length {len(self.perm)}, need {n}")
        return list(self.perm), None

    def label(self):
        return "aom:" + "-".join(map(str, self.perm))


@dataclass(frozen=True)
class RandomOrder:
    """Uniform arrival times; the order is their sort."""

    def draw(self, n, rng):
        times = rng.random(n)
        return [int(i) for i in np.argsort(times, kind="stable")], times

    def label(self):
        return "rom"


ArrivalModel = AdversarialOrder | RandomOrder


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------


@dataclass
class MatchingResult:
    matched: dict = field(default_factory=dict)  # online id -> Edge
    weight: float = 0.0
    traces: dict = field(default_factory=dict)  # online id -> [(Edge, state or None)]
    proposals: dict = field(default_factory=dict)  # online id -> Edge or None
    order: list = field(default_factory=list)  # online ids in arrival order

    @property
    def matched_offline(self) -> set[str]:
        return {e.u for e in self.matched.values()}

    def add(self, e: Edge):
        self.matched[e.v] = e
        self.weight += e.w


def check_matching(result: MatchingResult, g: StochasticGraph) -> None:
    """Raise AssertionError if ``result`` breaks matching or probe-commit rules."""
    us = [e.u for e in result.matched.values()]
    assert len(us) == len(set(us)), "offline vertex matched twice"
    assert abs(result.weight - sum(e.w for e in result.matched.values())) < 1e-9
    taken_before: set[str] = set()
    for vid in result.order:
        v = g.vertex(vid)
        trace = result.traces.get(vid, [])
        probed = [e for e, st in trace if st is not None]
        assert v.constraint.allows([e.u for e, _ in trace]), f"{vid}: infeasible probe string"
        for j, (e, st) in enumerate(trace):
            if st == 1:
                assert j == len(trace) - 1, f"{vid}: probing continued after an active edge"
                assert e.u not in taken_before, f"{vid}: active probe on a matched vertex"
                assert result.matched.get(vid) == e, f"{vid}: active probe not matched"
        m = result.matched.get(vid)
        if m is not None:
            assert m in probed and trace[-1] == (m, 1), f"{vid}: matched edge was not the last active probe"
            taken_before.add(m.u)


# ---------------------------------------------------------------------------
# Known graph and known i.d.: probe, accept the proposal if its offline endpoint is free
# ---------------------------------------------------------------------------


def _samplers(sol: ConfigLpSolution):
    return {k: StringSampler(sol.distribution(k)) for k in sol.x}


def run_known_graph(g: StochasticGraph, arrival, rng, sol: ConfigLpSolution | None = None, states=None, samplers=None):
    sol = sol if sol is not None else solve_lp_config(g)
    samplers = samplers if samplers is not None else _samplers(sol)
    states = states if states is not None else LiveStates(rng)
    order, _ = arrival.draw(len(g.online), rng)
    res = MatchingResult()
    taken: set[str] = set()
    for i in order:
        v = g.online[i]
        out = vertex_probe(v, samplers[v.id], states, rng, is_free=lambda u: u not in taken)
        _settle(res, v.id, out, taken)
    return res


def _settle(res: MatchingResult, vid, out: ProposeOutcome, taken: set):
    res.order.append(vid)
    res.traces[vid] = out.trace
    res.proposals[vid] = out.edge
    e = out.edge
    if e is not None and out.trace[-1][1] == 1:
        res.add(e)
        taken.add(e.u)


def run_known_id(inp: KnownIdInput, arrival, rng, sol: ConfigLpSolution | None = None, samplers=None):
    """Known i.d. rounding. Arrival ``i`` of type ``b`` draws from ``x_i(. || b) / r_i(b)``."""
    sol = sol if sol is not None else solve_lp_config_id(inp)
    samplers = samplers if samplers is not None else _id_samplers(sol)
    types = _draw_types(inp, rng)
    g = inp.realize(types)
    states = LiveStates(rng)
    order, _ = arrival.draw(inp.n, rng)
    res = MatchingResult()
    taken: set[str] = set()
    for i in order:
        v = g.online[i]
        out = vertex_probe(v, samplers[(i, types[i])], states, rng, is_free=lambda u: u not in taken)
        _settle(res, v.id, out, taken)
    return res


def _draw_types(inp, rng):
    out = []
    for row in inp.distributions:
        names = [b for b, _ in row]
        cdf = np.cumsum([r for _, r in row])
        out.append(names[min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), len(names) - 1)])
    return out


def _id_samplers(sol: ConfigLpSolution):
    """Samplers keyed (i, b) whose strings live on the realised vertex ``"i:b"``."""
    out = {}
    for (i, b) in sol.x:
        vid = f"{i}:{b}"
        dist = {tuple(Edge(e.u, vid, e.p, e.w) for e in s): m for s, m in sol.distribution((i, b)).items()}
        out[(i, b)] = StringSampler(dist)
    return out


# ---------------------------------------------------------------------------
# OCRS variant and its random-order analogue: one contention scheme per offline vertex
# ---------------------------------------------------------------------------


def crs_marginals(sol: ConfigLpSolution, inp: KnownIdInput) -> dict:
    """z[u][i]: probability that arrival i proposes to u."""
    z = {u: [0.0] * inp.n for u in inp.type_graph.offline_ids}
    for (u, i), val in proposal_marginals(sol).items():
        z[u][i] += val
    for u, row in z.items():
        if sum(row) > 1 + SUM_TOL:
            raise ValueError(f"proposal marginals at {u} sum to {sum(row)} > 1")
    return z


def run_known_id_ocrs(inp: KnownIdInput, arrival: AdversarialOrder, rng, sol=None, samplers=None, z=None):
    """Known i.d. with OCRS. Offline vertex u accepts a proposal only through its OCRS.

    The scheme's coin for (u, i) is flipped before (u, v_i) would be probed; a
    rejecting coin makes u look taken, so no active probe is ever declined.
    """
    sol = sol if sol is not None else solve_lp_config_id(inp)
    samplers = samplers if samplers is not None else _id_samplers(sol)
    z = z if z is not None else crs_marginals(sol, inp)
    schemes = {u: OcrsHalf() for u in z}
    types = _draw_types(inp, rng)
    g = inp.realize(types)
    states = LiveStates(rng)
    order, _ = arrival.draw(inp.n, rng)
    res = MatchingResult()
    taken: set[str] = set()
    for i in order:
        v = g.online[i]

        def admits(u, i=i):
            sch = schemes[u]
            return u not in taken and not sch.done and rng.random() < 0.5 / (1.0 - 0.5 * sch.seen)

        out = vertex_probe(v, samplers[(i, types[i])], states, rng, is_free=admits)
        _settle(res, v.id, out, taken)
        if v.id in res.matched:
            schemes[res.matched[v.id].u].done = True
        for u, sch in schemes.items():
            sch.seen += z[u][i]
    return res


def run_known_id_rcrs(inp: KnownIdInput, arrival: RandomOrder, rng, sol=None, samplers=None, z=None):
    """Random-order analogue; the scheme uses the arrival model's own times."""
    sol = sol if sol is not None else solve_lp_config_id(inp)
    samplers = samplers if samplers is not None else _id_samplers(sol)
    z = z if z is not None else crs_marginals(sol, inp)
    types = _draw_types(inp, rng)
    g = inp.realize(types)
    states = LiveStates(rng)
    order, times = arrival.draw(inp.n, rng)
    if times is None:
        raise ValueError("the random-order scheme needs arrival times")
    res = MatchingResult()
    taken: set[str] = set()
    for i in order:
        v = g.online[i]

        def admits(u, i=i):
            return u not in taken and rng.random() < math.exp(-z[u][i] * times[i])

        out = vertex_probe(v, samplers[(i, types[i])], states, rng, is_free=admits)
        _settle(res, v.id, out, taken)
    return res


# ---------------------------------------------------------------------------
# Secretary-style LP re-solving under random order
# ---------------------------------------------------------------------------


class SecretaryCache:
    """LP-config solutions of induced subgraphs, keyed by the online vertex set."""

    def __init__(self, g: StochasticGraph):
        self.g = g
        self.solutions: dict[frozenset, tuple[float, dict]] = {}
        self.pools: dict[str, list] = {}

    def get(self, online_ids) -> tuple[float, dict]:
        key = frozenset(online_ids)
        hit = self.solutions.get(key)
        if hit is None:
            sub = self.g.induced(key)
            initial = {vid: self.pools.get(vid, []) for vid in key}
            sol = solve_lp_config(sub, initial=initial)
            for vid, cols in sol.columns.items():
                pool = self.pools.setdefault(vid, [])
                for s in cols:
                    if s and s not in pool:
                        pool.append(s)
            hit = (sol.objective, _samplers(sol))
            self.solutions[key] = hit
        return hit


def secretary_passes(t: int, n: int, boundary: str = "pseudocode") -> bool:
    """Whether arrival ``t`` (1-based) is passed on.

    ``pseudocode`` passes while t < floor(n/e); ``analysis`` passes the first
    floor(n/e) arrivals, which is the reading the availability bound needs.
    """
    cut = math.floor(n / math.e)
    if boundary == "pseudocode":
        return t < cut
    if boundary == "analysis":
        return t <= cut
    raise ValueError(f"unknown boundary {boundary!r}")


def run_secretary(g: StochasticGraph, rng, cache: SecretaryCache | None = None, boundary: str = "pseudocode"):
    """Pass early arrivals, then probe with LP-config of the arrived subgraph.

    ``result.proposals`` holds each probing arrival's proposal, which is what
    the per-arrival value bound is about.
    """
    cache = cache if cache is not None else SecretaryCache(g)
    n = len(g.online)
    order, _ = RandomOrder().draw(n, rng)
    states = LiveStates(rng)
    res = MatchingResult()
    taken: set[str] = set()
    for t, i in enumerate(order, start=1):
        v = g.online[i]
        if secretary_passes(t, n, boundary):
            res.order.append(v.id)
            res.traces[v.id] = []
            res.proposals[v.id] = None
            continue
        _, samplers = cache.get(g.online[j].id for j in order[:t])
        out = vertex_probe(v, samplers[v.id], states, rng, is_free=lambda u: u not in taken)
        _settle(res, v.id, out, taken)
    return res


# ---------------------------------------------------------------------------
# Greedy-DP
# ---------------------------------------------------------------------------


class StarCache:
    def __init__(self, g: StochasticGraph):
        self.g = g
        self.weights = g.offline_weight
        self.plans: dict = {}

    def plan(self, v, R: frozenset):
        key = (v.id, R)
        hit = self.plans.get(key)
        if hit is None:
            hit = star_opt(v, R, self.weights).string
            self.plans[key] = hit
        return hit


def run_greedy_dp(g: StochasticGraph, arrival, rng, cache: StarCache | None = None, states=None):
    if not g.is_vertex_weighted():
        raise ValueError("Greedy-DP needs a vertex-weighted graph")
    cache = cache if cache is not None else StarCache(g)
    states = states if states is not None else LiveStates(rng)
    order, _ = arrival.draw(len(g.online), rng)
    R = frozenset(g.offline_ids)
    res = MatchingResult()
    for i in order:
        v = g.online[i]
        trace = []
        hit = None
        for e in cache.plan(v, R):
            st = states(e)
            trace.append((e, st))
            if st:
                hit = e
                break
        res.order.append(v.id)
        res.traces[v.id] = trace
        res.proposals[v.id] = hit
        if hit is not None:
            res.add(hit)
            R = R - {hit.u}
    return res


# ---------------------------------------------------------------------------
# vectorised simulation for the known i.d. family
# ---------------------------------------------------------------------------


class BatchProposals:
    """Per arrival: joint (type, string) draw, edge states, first active edge.

    ``sample`` returns ``(u_idx, w)`` of shape (trials, n); ``u_idx`` is -1 when
    no edge is proposed.
    """

    def __init__(self, sol: ConfigLpSolution, inp: KnownIdInput):
        self.inp = inp
        self.offline = list(inp.type_graph.offline_ids)
        index = {u: j for j, u in enumerate(self.offline)}
        self.tables = []
        for i in range(inp.n):
            rows = [(s, m) for (ii, b), dist in sol.x.items() if ii == i for s, m in dist.items()]
            mass = np.array([m for _, m in rows] or [1.0])
            strings = [s for s, _ in rows] or [()]
            L = max(1, max(len(s) for s in strings))
            U = np.full((len(strings), L), -1, dtype=np.int64)
            P = np.zeros((len(strings), L))
            W = np.zeros((len(strings), L))
            for r, s in enumerate(strings):
                for c, e in enumerate(s):
                    U[r, c], P[r, c], W[r, c] = index[e.u], e.p, e.w
            cdf = np.cumsum(mass / mass.sum())
            self.tables.append((cdf, U, P, W))

    @classmethod
    def for_graph(cls, sol: ConfigLpSolution, g: StochasticGraph):
        inp = point_mass_input(g)
        x = {(i, v.id): sol.x[v.id] for i, v in enumerate(g.online)}
        shim = ConfigLpSolution(x, sol.objective, sol.alpha, {}, {})
        return cls(shim, inp)

    def sample(self, trials: int, rng):
        n = self.inp.n
        u_idx = np.full((trials, n), -1, dtype=np.int64)
        w = np.zeros((trials, n))
        for i, (cdf, U, P, W) in enumerate(self.tables):
            pick = np.minimum(np.searchsorted(cdf, rng.random(trials), side="right"), len(cdf) - 1)
            act = rng.random((trials, U.shape[1])) < P[pick]
            has = act.any(axis=1)
            first = np.argmax(act, axis=1)
            rows = np.flatnonzero(has)
            u_idx[rows, i] = U[pick[rows], first[rows]]
            w[rows, i] = W[pick[rows], first[rows]]
        return u_idx, w


def _orders(trials, n, order, rng):
    if order is None:
        times = rng.random((trials, n))
        return np.argsort(times, axis=1, kind="stable"), times
    return np.broadcast_to(np.asarray(order), (trials, n)), None


def batch_first_free(u_idx, w, n_offline, order=None, rng=None):
    """Total weight per trial when each proposal is accepted iff its target is free."""
    trials, n = u_idx.shape
    ords, _ = _orders(trials, n, order, rng)
    free = np.ones((trials, n_offline + 1), dtype=bool)
    total = np.zeros(trials)
    rows = np.arange(trials)
    for k in range(n):
        i = ords[:, k]
        u = u_idx[rows, i]
        ok = (u >= 0) & free[rows, u]
        total += np.where(ok, w[rows, i], 0.0)
        free[rows[ok], u[ok]] = False
    return total


def batch_ocrs_match(u_idx, w, z, order, rng):
    """Known i.d. with OCRS over a fixed order. ``z`` has shape (n_offline, n)."""
    trials, n = u_idx.shape
    n_off = z.shape[0]
    free = np.ones((trials, n_off), dtype=bool)
    seen = np.zeros(n_off)
    total = np.zeros(trials)
    rows = np.arange(trials)
    coins = rng.random((trials, n))
    for i in order:
        u = u_idx[:, i]
        prop = u >= 0
        uu = np.where(prop, u, 0)
        prob = 0.5 / (1.0 - 0.5 * seen[uu])
        ok = prop & free[rows, uu] & (coins[:, i] < prob)
        total += np.where(ok, w[:, i], 0.0)
        free[rows[ok], uu[ok]] = False
        seen += z[:, i]
    return total


def batch_rcrs_match(u_idx, w, z, rng):
    """Random-order analogue with uniform arrival times per trial."""
    trials, n = u_idx.shape
    n_off = z.shape[0]
    ords, times = _orders(trials, n, None, rng)
    coins = rng.random((trials, n))
    free = np.ones((trials, n_off), dtype=bool)
    total = np.zeros(trials)
    rows = np.arange(trials)
    for k in range(n):
        i = ords[:, k]
        u = u_idx[rows, i]
        prop = u >= 0
        uu = np.where(prop, u, 0)
        t = times[rows, i]
        ok = prop & free[rows, uu] & (coins[rows, i] < np.exp(-z[uu, i] * t))
        total += np.where(ok, w[rows, i], 0.0)
        free[rows[ok], uu[ok]] = False
    return total


def z_matrix(sol: ConfigLpSolution, inp: KnownIdInput) -> np.ndarray:
    z = crs_marginals(sol, inp)
    return np.array([z[u] for u in inp.type_graph.offline_ids])
