"""Sampling a probe string from prefix marginals, and probing one online vertex.

``y(s)`` is the probability that the sampled string starts with ``s``. Given a
distribution ``x`` over whole strings (an LP block), ``y`` is its prefix sum and
VertexRound reproduces ``x`` exactly. Given probe-prefix probabilities ``P(s)``
of a committal algorithm, ``y(s) = P(s) / q(s minus its last edge)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .model import Edge, OnlineVertex, q

MARGIN_TOL = 1e-9
CLAMP_TOL = 1e-7


class MarginalError(ValueError):
    def __init__(self, prefix, excess):
        ids = ",".join(f"({e.u},{e.v})" for e in prefix) or "λ"
        super().__init__(f"children of prefix [{ids}] carry {excess:.3e} more mass than the prefix")
        self.prefix = prefix


@dataclass
class PrefixMarginals:
    """Prefix probabilities ``y`` on the positive-mass family, with ``y(λ) = 1``."""

    y: dict
    children: dict = field(init=False, repr=False)

    def __post_init__(self):
        y = {s: float(m) for s, m in self.y.items() if m > 0 or s == ()}
        y[()] = 1.0
        kids: dict = {}
        for s in y:
            if s:
                if s[:-1] not in y:
                    raise MarginalError(s[:-1], y[s])
                kids.setdefault(s[:-1], []).append(s)
        for parent, ch in kids.items():
            excess = sum(y[c] for c in ch) - y[parent]
            if excess > MARGIN_TOL:
                raise MarginalError(parent, excess)
        self.y = y
        self.children = kids

    @classmethod
    def from_distribution(cls, x: Mapping[tuple, float]) -> PrefixMarginals:
        """Prefix sums of a whole-string distribution (must sum to one)."""
        total = sum(x.values())
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"string distribution sums to {total}")
        y: dict = {(): 1.0}
        for s, m in x.items():
            for k in range(1, len(s) + 1):
                y[s[:k]] = y.get(s[:k], 0.0) + m / total
        return cls(y)

    @classmethod
    def from_probe_marginals(cls, probe: Mapping[tuple, float]) -> PrefixMarginals:
        """From P[the edges of s are probed in order]; strings running past a p=1 edge are dropped."""
        y: dict = {(): 1.0}
        for s, m in probe.items():
            if not s or any(e.p >= 1.0 for e in s[:-1]):
                continue
            y[s] = m / q(s[:-1])
        return cls(y)

    def pass_probability(self, prefix) -> float:
        kids = self.children.get(prefix, [])
        return 1.0 - sum(self.y[c] for c in kids) / self.y[prefix]


def vertex_round(m: PrefixMarginals, rng: np.random.Generator) -> tuple:
    """Draw a string whose first k characters equal s with probability y(s)."""
    cur = ()
    while True:
        kids = m.children.get(cur)
        if not kids:
            return cur
        base = m.y[cur]
        probs = np.array([m.y[c] for c in kids]) / base
        go = probs.sum()
        if go > 1 + CLAMP_TOL:
            raise MarginalError(cur, (go - 1) * base)
        r = rng.random()
        if r >= go:
            return cur
        idx = int(np.searchsorted(np.cumsum(probs), r, side="right"))
        cur = kids[min(idx, len(kids) - 1)]


def vertex_round_distribution(m: PrefixMarginals) -> dict[tuple, float]:
    """Exact output law of ``vertex_round``: probability of each whole string."""
    out: dict = {}

    def walk(cur, mass):
        kids = m.children.get(cur, [])
        stop = max(m.pass_probability(cur), 0.0) if kids else 1.0
        if stop > 0:
            out[cur] = out.get(cur, 0.0) + mass * stop
        for c in kids:
            walk(c, mass * m.y[c] / m.y[cur])

    walk((), 1.0)
    return out


@dataclass
class ProposeOutcome:
    edge: Edge | None
    trace: list = field(default_factory=list)  # (edge, state) pairs in probe order


class StringSampler:
    """Categorical sampler over a block's strings (same law as VertexRound on its prefix sums)."""

    def __init__(self, dist: Mapping[tuple, float]):
        self.strings = list(dist)
        w = np.array([dist[s] for s in self.strings], dtype=float)
        if len(w) == 0 or w.sum() <= 0:
            self.strings, w = [()], np.array([1.0])
        self.cdf = np.cumsum(w / w.sum())

    def draw(self, rng) -> tuple:
        i = int(np.searchsorted(self.cdf, rng.random(), side="right"))
        return self.strings[min(i, len(self.strings) - 1)]


def vertex_probe(
    v: OnlineVertex,
    distribution: Mapping[tuple, float] | PrefixMarginals | StringSampler,
    states: Callable[[Edge], int],
    rng: np.random.Generator,
    is_free: Callable[[str], bool] | None = None,
) -> ProposeOutcome:
    """Draw a string for ``v`` and probe it until the first active edge.

    With ``is_free`` given, an edge to an already matched offline vertex is not
    probed: a private coin with the edge's probability stands in for its state,
    so the proposal law is unchanged but no commitment is violated. Such steps
    appear in the trace with state ``None``.
    """
    if isinstance(distribution, StringSampler):
        s = distribution.draw(rng)
    else:
        m = distribution if isinstance(distribution, PrefixMarginals) else PrefixMarginals.from_distribution(distribution)
        s = vertex_round(m, rng)
    if not v.constraint.allows([e.u for e in s]):
        raise ValueError(f"drawn string infeasible at {v.id}")
    trace = []
    for e in s:
        if is_free is not None and not is_free(e.u):
            trace.append((e, None))
            if rng.random() < e.p:
                return ProposeOutcome(e, trace)
            continue
        st = states(e)
        trace.append((e, st))
        if st:
            return ProposeOutcome(e, trace)
    return ProposeOutcome(None, trace)


def proposal_law(dist: Mapping[tuple, float]) -> dict:
    """Exact P[propose e] by enumerating every string and every state pattern of its edges."""
    out: dict = {}
    for s, mass in dist.items():
        k = len(s)
        for pattern in range(1 << k):
            pr = mass
            for j, e in enumerate(s):
                pr *= e.p if pattern >> j & 1 else 1.0 - e.p
            if pr == 0:
                continue
            first = next((e for j, e in enumerate(s) if pattern >> j & 1), None)
            key = None if first is None else first.key
            out[key] = out.get(key, 0.0) + pr
    return out
