"""Optimal probing of a single online vertex (DP-OPT) and its pricing variant.

Probing a fixed set of edges in nonincreasing weight order is optimal, so the
search runs over subsets of the weight-sorted neighbourhood. Feasibility of a
subset generally depends on more than the last chosen edge, so every DP state
carries the residual the constraint needs: probes used (patience), remaining
budget (knapsack) or the chosen set itself (explicit families).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations
from typing import Iterable, Mapping

from .model import Edge, ExplicitFamily, Knapsack, OnlineVertex, Patience, ProbingConstraint, val

BUDGET_SLACK = 1e-12


@dataclass(frozen=True)
class StarInstance:
    """One online vertex restricted to an available offline set.

    ``weights`` holds the effective weight per offline endpoint; in pricing mode
    these may be negative.
    """

    vertex_id: str
    edges: tuple[Edge, ...]
    weights: tuple[float, ...]
    constraint: ProbingConstraint

    @classmethod
    def of(
        cls,
        v: OnlineVertex,
        available: Iterable[str] | None = None,
        weights: Mapping[str, float] | None = None,
    ) -> StarInstance:
        keep = None if available is None else set(available)
        edges = tuple(e for e in v.probeable if keep is None or e.u in keep)
        ws = tuple(e.w if weights is None else weights[e.u] for e in edges)
        return cls(v.id, edges, ws, v.constraint)


@dataclass(frozen=True)
class StarPlan:
    string: tuple[Edge, ...]
    value: float

    @property
    def offline_ids(self) -> tuple[str, ...]:
        return tuple(e.u for e in self.string)


def sort_key(e: Edge, w: float):
    # nonincreasing effective weight, then higher p, then id
    return (-w, -e.p, e.u)


def dp_opt(inst: StarInstance) -> StarPlan:
    """Best feasible probe string for the star and its expected value."""
    order = sorted(range(len(inst.edges)), key=lambda i: sort_key(inst.edges[i], inst.weights[i]))
    edges = [inst.edges[i] for i in order]
    ws = [inst.weights[i] for i in order]
    if any(w < 0 for w in ws):
        raise ValueError("dp_opt needs nonnegative weights; use price_column for reduced costs")
    m = len(edges)
    if m == 0:
        return StarPlan((), 0.0)
    c = inst.constraint

    if isinstance(c, Patience):
        def residual_of(state, i):
            return state - 1 if state >= 1 else None
        start = c.limit
    elif isinstance(c, Knapsack):
        costs = [c.cost(e.u) for e in edges]

        def residual_of(state, i):
            left = state - costs[i]
            return left if left >= -BUDGET_SLACK else None
        start = c.budget
    else:
        def residual_of(state, i):
            chosen = state | {edges[i].u}
            return chosen if c.allows(chosen) else None
        start = frozenset()

    @lru_cache(maxsize=None)
    def best(i, state):
        if i == m:
            return 0.0, ()
        skip_value, skip_take = best(i + 1, state)
        nxt = residual_of(state, i)
        if nxt is not None:
            rest_value, rest_take = best(i + 1, nxt)
            value = edges[i].p * ws[i] + (1.0 - edges[i].p) * rest_value
            # ties go to the shorter string
            if value > skip_value:
                return value, (i,) + rest_take
        return skip_value, skip_take

    value, take = best(0, start)
    return StarPlan(tuple(edges[i] for i in take), value)


def star_opt(v: OnlineVertex, available=None, weights=None) -> StarPlan:
    return dp_opt(StarInstance.of(v, available, weights))


def price_column(
    v: OnlineVertex,
    alpha: Mapping[str, float],
    beta: float,
    weights: Mapping[str, float] | None = None,
) -> tuple[StarPlan, float]:
    """Maximize sum of (w_e - alpha_u) * p_e * q(prefix) over feasible strings.

    Returns the plan (valued at the effective weights) and its reduced cost
    ``value - beta``.
    """
    eff = {}
    for e in v.probeable:
        w = e.w if weights is None else weights[e.u]
        eff[e.u] = w - alpha.get(e.u, 0.0)
    keep = [u for u, w in eff.items() if w >= 0]
    plan = dp_opt(StarInstance.of(v, keep, eff))
    return plan, plan.value - beta


# ---------------------------------------------------------------------------
# exhaustive reference search
# ---------------------------------------------------------------------------


def feasible_strings(v: OnlineVertex, available: Iterable[str] | None = None, max_count: int | None = None):
    """Every feasible probe string of ``v`` (all orders), the empty one included."""
    keep = None if available is None else set(available)
    edges = [e for e in v.probeable if keep is None or e.u in keep]
    out = [()]
    for k in range(1, len(edges) + 1):
        found = False
        for subset in combinations(edges, k):
            if not v.constraint.allows([e.u for e in subset]):
                continue
            found = True
            for perm in permutations(subset):
                out.append(perm)
                if max_count is not None and len(out) > max_count:
                    raise ValueError(f"more than {max_count} feasible strings at {v.id}")
        if not found:
            break
    return out


def exhaustive_star(v: OnlineVertex, available=None, weights=None) -> StarPlan:
    """Brute force over every feasible string in every order."""
    best = StarPlan((), 0.0)
    for s in feasible_strings(v, available):
        value = val(s, weights)
        if value > best.value:
            best = StarPlan(s, value)
    return best


# ---------------------------------------------------------------------------
# rankability
# ---------------------------------------------------------------------------


def ranking_string(v: OnlineVertex, ranking: Iterable[str], available: Iterable[str]) -> tuple[Edge, ...]:
    """Walk the ranking, appending each available edge that keeps the string feasible."""
    avail = set(available)
    chosen: list[Edge] = []
    for u in ranking:
        if u not in avail:
            continue
        e = v.edge_to(u)
        if e is None or e.p <= 0:
            continue
        if v.constraint.allows([f.u for f in chosen] + [u]):
            chosen.append(e)
    return tuple(chosen)


def _sufficient_ranking(v: OnlineVertex, weights: Mapping[str, float]) -> list[str] | None:
    edges = [e for e in v.probeable if weights[e.u] > 0]
    c = v.constraint
    by_weight = sorted(edges, key=lambda e: sort_key(e, weights[e.u]))
    if isinstance(c, Patience):
        if c.limit == 1:
            return [e.u for e in sorted(edges, key=lambda e: (-e.p * weights[e.u], -e.p, e.u))]
        if c.limit >= len(edges):
            return [e.u for e in by_weight]
        agree = all(
            weights[a.u] <= weights[b.u]
            for a in edges for b in edges if a.p <= b.p
        )
        if agree:
            return [e.u for e in by_weight]
        return None
    if isinstance(c, Knapsack):
        unweighted = len({weights[e.u] for e in edges}) <= 1
        anti = all(c.cost(a.u) >= c.cost(b.u) for a in edges for b in edges if a.p <= b.p)
        if unweighted and anti:
            return [e.u for e in sorted(edges, key=lambda e: (-e.p, c.cost(e.u), e.u))]
    return None


def _derived_ranking(v: OnlineVertex, weights: Mapping[str, float]) -> list[str]:
    # the first ranked edge inside R must be DP-OPT(v, R)'s first probe
    remaining = [e.u for e in v.probeable if weights[e.u] > 0]
    ranking = []
    while remaining:
        plan = star_opt(v, remaining, weights)
        head = plan.string[0].u if plan.string else sorted(remaining)[0]
        ranking.append(head)
        remaining.remove(head)
    return ranking


def verify_ranking(v: OnlineVertex, ranking, weights: Mapping[str, float], tol: float = 1e-12):
    """Compare DP-OPT with the ranking walk on every available set.

    Returns the first disagreeing set, or ``None`` when the ranking is valid.
    Equal values on a tie count as agreement.
    """
    ids = [e.u for e in v.probeable]
    for k in range(len(ids) + 1):
        for avail in combinations(ids, k):
            plan = star_opt(v, avail, weights)
            walk = ranking_string(v, ranking, avail)
            if plan.string != walk and abs(val(walk, weights) - plan.value) > tol:
                return frozenset(avail)
    return None


def is_rankable(v: OnlineVertex, weights: Mapping[str, float] | None = None, exhaustive_limit: int = 12):
    """Return ``(True, ranking)`` if ``v`` is rankable, else ``(False, None)``.

    Known sufficient conditions are checked first; otherwise neighbourhoods of
    at most ``exhaustive_limit`` edges are settled by checking every subset.
    """
    if weights is None:
        weights = {e.u: e.w for e in v.edges}
    ranking = _sufficient_ranking(v, weights)
    if ranking is not None:
        return True, ranking
    if len(v.probeable) > exhaustive_limit:
        return False, None
    ranking = _derived_ranking(v, weights)
    if verify_ranking(v, ranking, weights) is None:
        return True, ranking
    return False, None
