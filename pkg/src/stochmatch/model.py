"""Stochastic bipartite graphs, probing constraints and edge-string algebra.

Offline vertices ``U`` are known up front; online vertices ``V`` arrive one at a
time. Every edge ``(u, v)`` is active independently with probability ``p`` and
carries a weight ``w``. An online vertex may probe a string of its incident
edges as long as the string is feasible for its probing constraint.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

SUM_TOL = 1e-9


@dataclass(frozen=True)
class Edge:
    u: str
    v: str
    p: float
    w: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"edge ({self.u},{self.v}): probability {self.p} outside [0,1]")
        if not (math.isfinite(self.w) and self.w >= 0):
            raise ValueError(f"edge ({self.u},{self.v}): weight must be finite and nonnegative")

    @property
    def key(self) -> tuple[str, str]:
        return (self.u, self.v)


EdgeString = tuple  # tuple[Edge, ...]; the empty tuple is the empty string


def q(prefix: Iterable[Edge]) -> float:
    """Probability that every edge of ``prefix`` is inactive."""
    out = 1.0
    for e in prefix:
        out *= 1.0 - e.p
    return out


def val(s: Iterable[Edge], weights: Mapping[str, float] | None = None) -> float:
    """Expected weight of the first active edge when ``s`` is probed in order.

    ``weights`` optionally overrides edge weights by offline endpoint.
    """
    total = 0.0
    survive = 1.0
    for e in s:
        w = e.w if weights is None else weights[e.u]
        total += w * e.p * survive
        survive *= 1.0 - e.p
    return total


def prefixes(s: Sequence[Edge]):
    """Yield every nonempty prefix of ``s`` (shortest first)."""
    for k in range(1, len(s) + 1):
        yield tuple(s[:k])


# ---------------------------------------------------------------------------
# probing constraints
# ---------------------------------------------------------------------------


class ProbingConstraint(ABC):
    """Downward-closed family of probe strings at one online vertex.

    Feasibility only depends on the set of offline endpoints in a string, since
    every family here is closed under permutation.
    """

    @abstractmethod
    def allows(self, offline_ids: Iterable[str]) -> bool: ...

    def max_length(self, offline_ids: Sequence[str]) -> int:
        """Largest feasible string length using the given neighbours."""
        best = 0
        for k in range(1, len(offline_ids) + 1):
            if any(self.allows(c) for c in combinations(offline_ids, k)):
                best = k
            else:
                break
        return best

    def is_unbounded(self, offline_ids: Sequence[str]) -> bool:
        return self.allows(offline_ids)


@dataclass(frozen=True)
class Patience(ProbingConstraint):
    limit: int

    def __post_init__(self):
        if self.limit < 1:
            raise ValueError("patience must be a positive integer")

    def allows(self, offline_ids):
        return len(list(offline_ids)) <= self.limit

    def max_length(self, offline_ids):
        return min(self.limit, len(offline_ids))


@dataclass(frozen=True)
class Knapsack(ProbingConstraint):
    budget: float
    costs: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError("knapsack budget must be nonnegative")
        if any(c < 0 for c in self.costs.values()):
            raise ValueError("probing costs must be nonnegative")
        object.__setattr__(self, "costs", dict(self.costs))

    def __hash__(self):
        return hash((self.budget, tuple(sorted(self.costs.items()))))

    def cost(self, u: str) -> float:
        return self.costs.get(u, 0.0)

    def allows(self, offline_ids):
        return sum(self.cost(u) for u in offline_ids) <= self.budget + 1e-12


@dataclass(frozen=True)
class ExplicitFamily(ProbingConstraint):
    """Explicit list of feasible offline-endpoint sets, closed downward on construction."""

    sets: frozenset = frozenset()

    def __post_init__(self):
        closed = {frozenset()}
        for s in self.sets:
            s = frozenset(s)
            for k in range(len(s) + 1):
                closed.update(frozenset(c) for c in combinations(sorted(s), k))
        object.__setattr__(self, "sets", frozenset(closed))

    def allows(self, offline_ids):
        return frozenset(offline_ids) in self.sets


# ---------------------------------------------------------------------------
# graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OfflineVertex:
    id: str
    weight: float = 1.0


@dataclass(frozen=True)
class OnlineVertex:
    id: str
    edges: tuple[Edge, ...]
    constraint: ProbingConstraint
    type_id: str | None = None

    def __post_init__(self):
        seen = set()
        for e in self.edges:
            if e.v != self.id:
                raise ValueError(f"edge ({e.u},{e.v}) not incident to online vertex {self.id}")
            if e.u in seen:
                raise ValueError(f"duplicate edge ({e.u},{self.id})")
            seen.add(e.u)

    @property
    def probeable(self) -> tuple[Edge, ...]:
        """Incident edges with positive probability; the rest never matter."""
        return tuple(e for e in self.edges if e.p > 0)

    def edge_to(self, u: str) -> Edge | None:
        for e in self.edges:
            if e.u == u:
                return e
        return None


def membership(v: OnlineVertex, s: Sequence[Edge]) -> bool:
    """True iff ``s`` is a feasible probe string for ``v``."""
    ids = [e.u for e in s]
    if len(set(ids)) != len(ids):
        return False
    for e in s:
        if e.v != v.id or v.edge_to(e.u) is None:
            raise ValueError(f"edge ({e.u},{e.v}) is not incident to {v.id}")
    return v.constraint.allows(ids)


@dataclass(frozen=True)
class StochasticGraph:
    offline: tuple[OfflineVertex, ...]
    online: tuple[OnlineVertex, ...]

    def __post_init__(self):
        ids = {u.id for u in self.offline}
        if len(ids) != len(self.offline):
            raise ValueError("duplicate offline vertex id")
        if len({v.id for v in self.online}) != len(self.online):
            raise ValueError("duplicate online vertex id")
        for v in self.online:
            for e in v.edges:
                if e.u not in ids:
                    raise ValueError(f"edge ({e.u},{e.v}) references unknown offline vertex")

    @property
    def offline_ids(self) -> tuple[str, ...]:
        return tuple(u.id for u in self.offline)

    @property
    def offline_weight(self) -> dict[str, float]:
        return {u.id: u.weight for u in self.offline}

    def vertex(self, v_id: str) -> OnlineVertex:
        for v in self.online:
            if v.id == v_id:
                return v
        raise KeyError(v_id)

    def edges(self) -> list[Edge]:
        return [e for v in self.online for e in v.edges]

    def probeable_edges(self) -> list[Edge]:
        return [e for v in self.online for e in v.probeable]

    def is_vertex_weighted(self, tol: float = 1e-12) -> bool:
        weight = self.offline_weight
        return all(abs(e.w - weight[e.u]) <= tol for e in self.edges())

    def induced(self, online_ids: Iterable[str]) -> StochasticGraph:
        """Subgraph on all of ``U`` and the given online vertices (order kept)."""
        keep = set(online_ids)
        return StochasticGraph(self.offline, tuple(v for v in self.online if v.id in keep))


@dataclass(frozen=True)
class KnownIdInput:
    """Type graph plus one type distribution per arrival slot."""

    type_graph: StochasticGraph
    distributions: tuple[tuple[tuple[str, float], ...], ...]

    def __post_init__(self):
        types = {b.id for b in self.type_graph.online}
        rows = []
        for i, row in enumerate(self.distributions):
            row = dict(row)
            unknown = set(row) - types
            if unknown:
                raise ValueError(f"row {i} references unknown types {sorted(unknown)}")
            if any(r < 0 for r in row.values()):
                raise ValueError(f"row {i} has a negative probability")
            total = sum(row.values())
            if abs(total - 1.0) > SUM_TOL:
                raise ValueError(f"row {i} sums to {total}, not 1")
            rows.append(tuple((b, r) for b, r in row.items() if r > 0))
        object.__setattr__(self, "distributions", tuple(rows))

    @property
    def n(self) -> int:
        return len(self.distributions)

    def r(self, i: int) -> dict[str, float]:
        return dict(self.distributions[i])

    def is_iid(self, tol: float = SUM_TOL) -> bool:
        first = self.r(0)
        for i in range(1, self.n):
            row = self.r(i)
            if set(row) != set(first) or any(abs(row[b] - first[b]) > tol for b in row):
                return False
        return True

    def realize(self, types: Sequence[str]) -> StochasticGraph:
        """Stochastic graph whose ``i``-th online vertex is a copy of type ``types[i]``."""
        online = []
        for i, b in enumerate(types):
            node = self.type_graph.vertex(b)
            vid = f"{i}:{b}"
            edges = tuple(replace(e, v=vid) for e in node.edges)
            online.append(OnlineVertex(vid, edges, node.constraint, type_id=b))
        return StochasticGraph(self.type_graph.offline, tuple(online))


def point_mass_input(g: StochasticGraph) -> KnownIdInput:
    """The known-graph special case: arrival ``i`` is online vertex ``i`` surely."""
    return KnownIdInput(g, tuple(((v.id, 1.0),) for v in g.online))


def draw_types(inp: KnownIdInput, rng: np.random.Generator) -> list[str]:
    types = []
    for row in inp.distributions:
        names = [b for b, _ in row]
        probs = np.array([r for _, r in row])
        types.append(names[rng.choice(len(names), p=probs / probs.sum())])
    return types


def draw_instance(inp: KnownIdInput, seed) -> StochasticGraph:
    """Sample the online vertices of ``G`` independently from their rows."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return inp.realize(draw_types(inp, rng))


# ---------------------------------------------------------------------------
# edge states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EdgeStateSample:
    states: Mapping[tuple[str, str], int]
    seed: object = None

    def __call__(self, e: Edge) -> int:
        return self.states[e.key]


def sample_states(g: StochasticGraph, seed) -> EdgeStateSample:
    """Draw every edge state independently; the same seed gives the same states."""
    rng = np.random.default_rng(seed)
    edges = g.edges()
    draws = rng.random(len(edges))
    return EdgeStateSample({e.key: int(x < e.p) for e, x in zip(edges, draws)}, seed)


class LiveStates:
    """Edge states revealed lazily on first probe, then remembered."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.states: dict[tuple[str, str], int] = {}

    def __call__(self, e: Edge) -> int:
        if e.key not in self.states:
            self.states[e.key] = int(self.rng.random() < e.p)
        return self.states[e.key]
