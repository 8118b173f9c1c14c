"""Configuration LPs over probe strings, solved by column generation.

Each online vertex (or arrival/type pair in the known i.d. model) owns a block
of columns, one per feasible probe string. The master LP keeps a pool of
columns; pricing a block is an instance of DP-OPT on weights ``w_e - alpha_u``,
so termination certifies optimality over the full string family.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Hashable, Mapping

import numpy as np

from .model import Edge, KnownIdInput, OnlineVertex, StochasticGraph, q, val
from .simplex import EQ, LE, DenseLp, solve_dense
from .star import feasible_strings, price_column, star_opt

log = logging.getLogger(__name__)

PRICING_TOL = 1e-7
FEAS_TOL = 1e-6
MAX_COLUMNS = 10_000


class ColumnLimitError(RuntimeError):
    def __init__(self, message, lower: float, upper: float):
        super().__init__(f"{message} (bounds {lower:.9g} <= LPOPT <= {upper:.9g})")
        self.bounds = (lower, upper)


@dataclass(frozen=True)
class Block:
    key: Hashable
    vertex: OnlineVertex
    rhs: float


@dataclass
class ConfigLpSolution:
    """Optimal string distribution per block plus master duals.

    ``x[key]`` maps a probe string to its mass; only strings with positive
    mass are kept. For a known graph the keys are online vertex ids and each
    block sums to 1; in the i.d. model keys are ``(i, b)`` and blocks sum to
    ``r_i(b)``.
    """

    x: dict
    objective: float
    alpha: dict[str, float]
    beta: dict
    blocks: dict
    columns: dict = field(default_factory=dict)
    rounds: int = 0
    certified: bool = True

    def distribution(self, key) -> dict[tuple, float]:
        """String distribution of one block normalised to sum to one."""
        block = self.blocks[key]
        return {s: m / block.rhs for s, m in self.x[key].items()}


ConfigIdLpSolution = ConfigLpSolution


def _column_coefficients(s, u_index):
    col = np.zeros(len(u_index))
    survive = 1.0
    for e in s:
        col[u_index[e.u]] += e.p * survive
        survive *= 1.0 - e.p
    return col


def _solve_master(blocks, columns, offline_ids):
    u_index = {u: i for i, u in enumerate(offline_ids)}
    keys = list(blocks)
    flat = [(k, s) for k in keys for s in columns[k]]
    nU, nB = len(offline_ids), len(keys)
    A = np.zeros((nU + nB, len(flat)))
    c = np.zeros(len(flat))
    for j, (k, s) in enumerate(flat):
        c[j] = val(s)
        A[:nU, j] = _column_coefficients(s, u_index)
        A[nU + keys.index(k), j] = 1.0
    b = np.concatenate([np.ones(nU), [blocks[k].rhs for k in keys]])
    res = solve_dense(DenseLp(c, A, [LE] * nU + [EQ] * nB, b))
    alpha = {u: max(float(res.duals[i]), 0.0) for u, i in u_index.items()}
    beta = {k: float(res.duals[nU + i]) for i, k in enumerate(keys)}
    x = {k: {} for k in keys}
    for j, (k, s) in enumerate(flat):
        if res.x[j] > 1e-12:
            x[k][s] = float(res.x[j])
    return x, res.objective, alpha, beta


def column_generation(
    blocks: Mapping[Hashable, Block],
    offline_ids,
    initial: Mapping[Hashable, list] | None = None,
    max_columns: int = MAX_COLUMNS,
) -> ConfigLpSolution:
    columns = {}
    for k, blk in blocks.items():
        pool = [()]
        seed = star_opt(blk.vertex).string
        if seed:
            pool.append(seed)
        for s in (initial or {}).get(k, []):
            if s not in pool:
                pool.append(s)
        columns[k] = pool
    rounds = 0
    while True:
        rounds += 1
        x, obj, alpha, beta = _solve_master(blocks, columns, offline_ids)
        added = 0
        slack = 0.0
        plans = {}
        for k, blk in blocks.items():
            # blocks sharing a vertex (same type) share the pricing problem
            vid = blk.vertex.id
            if vid not in plans:
                plans[vid] = price_column(blk.vertex, alpha, 0.0)[0]
            plan = plans[vid]
            rc = plan.value - beta[k]
            if rc > PRICING_TOL:
                slack += rc * blk.rhs
                if plan.string not in columns[k]:
                    columns[k].append(plan.string)
                    added += 1
        n_cols = sum(len(p) for p in columns.values())
        log.debug("round %d: objective %.10f, added %d, columns %d", rounds, obj, added, n_cols)
        if added == 0:
            # a positive reduced cost on an existing column is numerical noise
            return ConfigLpSolution(x, obj, alpha, beta, dict(blocks), columns, rounds, certified=slack == 0.0)
        if n_cols > max_columns:
            raise ColumnLimitError(f"column pool exceeded {max_columns}", obj, obj + slack)


def graph_blocks(g: StochasticGraph) -> dict:
    return {v.id: Block(v.id, v, 1.0) for v in g.online}


def id_blocks(inp: KnownIdInput) -> dict:
    out = {}
    for i, row in enumerate(inp.distributions):
        for b, r in row:
            out[(i, b)] = Block((i, b), inp.type_graph.vertex(b), r)
    return out


def solve_lp_config(g: StochasticGraph, initial=None, max_columns: int = MAX_COLUMNS) -> ConfigLpSolution:
    """Optimal LP-config solution for a known stochastic graph."""
    return column_generation(graph_blocks(g), g.offline_ids, initial, max_columns)


def solve_lp_config_id(inp: KnownIdInput, symmetrize: bool | None = None, max_columns: int = MAX_COLUMNS) -> ConfigLpSolution:
    """Optimal LP-config-id solution for a known i.d. input.

    For identically distributed rows the solution is averaged over arrivals
    (``symmetrize``, default on for i.i.d. inputs); averaging keeps feasibility
    and the objective.
    """
    sol = column_generation(id_blocks(inp), inp.type_graph.offline_ids, None, max_columns)
    if symmetrize is None:
        symmetrize = inp.n > 1 and inp.is_iid()
    if symmetrize:
        sol = _symmetrize(sol, inp)
    return sol


def _symmetrize(sol: ConfigLpSolution, inp: KnownIdInput) -> ConfigLpSolution:
    by_type: dict[str, dict] = {}
    for (i, b), dist in sol.x.items():
        acc = by_type.setdefault(b, {})
        for s, m in dist.items():
            acc[s] = acc.get(s, 0.0) + m / inp.n
    x = {(i, b): dict(by_type.get(b, {})) for (i, b) in sol.x}
    return ConfigLpSolution(x, sol.objective, sol.alpha, sol.beta, sol.blocks, sol.columns, sol.rounds, sol.certified)


def solve_lp_config_full(g: StochasticGraph, max_strings: int = 2000) -> float:
    """LP-config with every feasible string materialised (reference value)."""
    blocks = graph_blocks(g)
    columns = {}
    total = 0
    for k, blk in blocks.items():
        columns[k] = feasible_strings(blk.vertex, max_count=max_strings)
        total += len(columns[k])
        if total > max_strings:
            raise ValueError(f"more than {max_strings} strings in total")
    _, obj, _, _ = _solve_master(blocks, columns, g.offline_ids)
    return obj


def edge_variables(sol: ConfigLpSolution) -> dict:
    """x~ per (u, block key): sum over strings containing the edge of q(prefix) * mass.

    Keys are ``(u, v)`` for a known graph and ``(u, i, b)`` in the i.d. model.
    """
    out = {}
    for k, dist in sol.x.items():
        for s, m in dist.items():
            survive = 1.0
            for e in s:
                key = (e.u,) + (k if isinstance(k, tuple) else (k,))
                out[key] = out.get(key, 0.0) + survive * m
                survive *= 1.0 - e.p
    return out


def offline_loads(sol: ConfigLpSolution) -> dict[str, float]:
    """Left side of each offline vertex's matching constraint."""
    loads = {u: 0.0 for u in sol.alpha}
    for dist in sol.x.values():
        for s, m in dist.items():
            survive = 1.0
            for e in s:
                loads[e.u] += e.p * survive * m
                survive *= 1.0 - e.p
    return loads


def proposal_marginals(sol: ConfigLpSolution) -> dict[tuple[str, Hashable], float]:
    """Probability that block ``k`` proposes to ``u``: p * x~ summed over types per arrival."""
    z: dict = {}
    for k, dist in sol.x.items():
        slot = k[0] if isinstance(k, tuple) else k
        for s, m in dist.items():
            survive = 1.0
            for e in s:
                z[(e.u, slot)] = z.get((e.u, slot), 0.0) + e.p * survive * m
                survive *= 1.0 - e.p
    return z


def dual_violation(sol: ConfigLpSolution, key, s) -> float:
    """How much the dual constraint of string ``s`` in block ``key`` is violated (> 0 means violated)."""
    lhs = sol.beta[key]
    survive = 1.0
    for e in s:
        lhs += e.p * survive * sol.alpha.get(e.u, 0.0)
        survive *= 1.0 - e.p
    return val(s) - lhs
