"""Polynomial-size comparison LPs over edge variables: LP-std, LP-std-unit, LP-DP, LP-QC."""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .model import Patience, StochasticGraph, q
from .simplex import LE, DenseLp, solve_dense
from .star import star_opt


class InapplicableLp(ValueError):
    """The requested LP is not defined for this graph's constraint class."""


def _edge_index(g: StochasticGraph):
    edges = g.probeable_edges()
    return edges, {e.key: j for j, e in enumerate(edges)}


def _offline_rows(g, edges):
    rows = []
    for u in g.offline_ids:
        row = np.zeros(len(edges))
        for j, e in enumerate(edges):
            if e.u == u:
                row[j] = e.p
        rows.append(row)
    return rows


def _solve(c, rows, rhs) -> float:
    if len(c) == 0:
        return 0.0
    if not rows:
        rows, rhs = [np.zeros(len(c))], [0.0]
    return solve_dense(DenseLp(c, np.array(rows), [LE] * len(rows), np.array(rhs))).objective


def _require_patience(g, unit=False):
    for v in g.online:
        if not isinstance(v.constraint, Patience):
            raise InapplicableLp(f"{v.id}: LP-std needs patience constraints")
        if unit and v.constraint.limit != 1:
            raise InapplicableLp(f"{v.id}: LP-std-unit needs unit patience")


def solve_lp_std(g: StochasticGraph) -> float:
    _require_patience(g)
    edges, _ = _edge_index(g)
    c = np.array([e.w * e.p for e in edges])
    rows = _offline_rows(g, edges)
    rhs = [1.0] * len(rows)
    for v in g.online:
        on_v = np.array([1.0 if e.v == v.id else 0.0 for e in edges])
        rows.append(on_v * np.array([e.p for e in edges]))
        rhs.append(1.0)
        rows.append(on_v)
        rhs.append(float(v.constraint.limit))
    for j in range(len(edges)):
        row = np.zeros(len(edges))
        row[j] = 1.0
        rows.append(row)
        rhs.append(1.0)
    return _solve(c, rows, rhs)


def solve_lp_std_unit(g: StochasticGraph) -> float:
    _require_patience(g, unit=True)
    edges, _ = _edge_index(g)
    c = np.array([e.w * e.p for e in edges])
    rows = _offline_rows(g, edges)
    rhs = [1.0] * len(rows)
    for v in g.online:
        rows.append(np.array([1.0 if e.v == v.id else 0.0 for e in edges]))
        rhs.append(1.0)
    return _solve(c, rows, rhs)


def solve_lp_dp(g: StochasticGraph, max_offline: int = 14) -> float:
    """LP-DP with one OPT(v, R) row for every online v and every R within v's neighbourhood.

    Rows for sets R containing non-neighbours duplicate the row for R restricted
    to the neighbourhood, so only neighbourhood subsets are materialised.
    """
    if len(g.offline) > max_offline:
        raise InapplicableLp(f"LP-DP enumerates subsets; |U| = {len(g.offline)} > {max_offline}")
    if not g.is_vertex_weighted():
        raise InapplicableLp("LP-DP needs a vertex-weighted graph (w_uv = w_u)")
    weight = g.offline_weight
    edges, _ = _edge_index(g)
    c = np.array([weight[e.u] * e.p for e in edges])
    rows = _offline_rows(g, edges)
    rhs = [1.0] * len(rows)
    for v in g.online:
        nbrs = [e.u for e in v.probeable]
        for k in range(1, len(nbrs) + 1):
            for R in combinations(nbrs, k):
                inside = set(R)
                rows.append(np.array([weight[e.u] * e.p if (e.v == v.id and e.u in inside) else 0.0 for e in edges]))
                rhs.append(star_opt(v, R, weight).value)
    return _solve(c, rows, rhs)


def solve_lp_qc(g: StochasticGraph, max_degree: int = 14) -> float:
    """LP-QC: per online vertex, every edge subset's matched mass is at most P[some edge active]."""
    for v in g.online:
        nbrs = [e.u for e in v.probeable]
        if not v.constraint.is_unbounded(nbrs):
            raise InapplicableLp(f"{v.id}: LP-QC is only defined for unbounded patience")
        if len(nbrs) > max_degree:
            raise InapplicableLp(f"{v.id}: degree {len(nbrs)} > {max_degree}")
    edges, _ = _edge_index(g)
    c = np.array([e.w * e.p for e in edges])
    rows = _offline_rows(g, edges)
    rhs = [1.0] * len(rows)
    for v in g.online:
        mine = [j for j, e in enumerate(edges) if e.v == v.id]
        for k in range(1, len(mine) + 1):
            for S in combinations(mine, k):
                row = np.zeros(len(edges))
                for j in S:
                    row[j] = edges[j].p
                rows.append(row)
                rhs.append(1.0 - q(edges[j] for j in S))
    return _solve(c, rows, rhs)
