"""Dense two-phase revised simplex with dual values.

Small, exact-enough solver for the master problems and comparison LPs. The
basis matrix is refactored every iteration, which is fine at the sizes used
here (a few hundred rows at most).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LE, EQ, GE = "<=", "==", ">="


class LpError(Exception):
    pass


class InfeasibleError(LpError):
    pass


class UnboundedError(LpError):
    pass


@dataclass
class DenseLp:
    """maximize c @ x  subject to  rows (A[i] @ x  sense[i]  b[i]),  x >= 0."""

    c: np.ndarray
    A: np.ndarray
    senses: list[str]
    b: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.A = np.asarray(self.A, dtype=float).reshape(len(self.senses), len(self.c))
        self.b = np.asarray(self.b, dtype=float)
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))):
            raise ValueError("LP data must be finite")
        if any(s not in (LE, EQ, GE) for s in self.senses):
            raise ValueError(f"unknown row sense in {self.senses}")


@dataclass
class LpResult:
    x: np.ndarray
    duals: np.ndarray
    objective: float
    iterations: int = 0
    basis: list[int] = field(default_factory=list)


def _pivot_loop(A, b, cost, basis, allowed, tol, max_iter, stall_limit):
    """Maximize cost @ x over {A x = b, x >= 0} from a feasible basis."""
    m = A.shape[0]
    it = 0
    degenerate_run = 0
    while True:
        B = A[:, basis]
        x_b = np.linalg.solve(B, b)
        y = np.linalg.solve(B.T, cost[basis])
        d = cost - y @ A
        d[basis] = 0.0
        d[~allowed] = 0.0
        candidates = np.flatnonzero(d > tol)
        if candidates.size == 0:
            return basis, x_b, y, it
        bland = degenerate_run >= stall_limit
        j = int(candidates[0]) if bland else int(candidates[np.argmax(d[candidates])])
        col = np.linalg.solve(B, A[:, j])
        pos = col > tol
        if not pos.any():
            raise UnboundedError(f"objective unbounded along column {j}")
        ratios = np.full(m, np.inf)
        ratios[pos] = np.maximum(x_b[pos], 0.0) / col[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12)
        # Bland: leave the smallest variable index among ties
        r = int(min(ties, key=lambda i: basis[i])) if bland else int(ties[np.argmax(col[ties])])
        degenerate_run = degenerate_run + 1 if best <= 1e-12 else 0
        basis[r] = j
        it += 1
        if it > max_iter:
            raise LpError(f"simplex exceeded {max_iter} iterations")


def solve_dense(lp: DenseLp, tol: float = 1e-9, max_iter: int = 50_000, stall_limit: int = 50) -> LpResult:
    """Optimal basic solution of ``lp`` with row duals.

    Duals follow the maximization convention: nonnegative on ``<=`` rows,
    nonpositive on ``>=`` rows, free on equalities.
    """
    m, n = lp.A.shape
    A = lp.A.copy()
    b = lp.b.copy()
    sign = np.ones(m)
    senses = list(lp.senses)
    for i in range(m):
        if b[i] < 0:
            A[i] *= -1
            b[i] *= -1
            sign[i] = -1
            senses[i] = {LE: GE, GE: LE, EQ: EQ}[senses[i]]

    # slack / surplus columns
    extra = []
    slack_of = {}
    for i, s in enumerate(senses):
        if s == EQ:
            continue
        col = np.zeros(m)
        col[i] = 1.0 if s == LE else -1.0
        slack_of[i] = n + len(extra)
        extra.append(col)
    # artificial columns where no slack can start basic
    need_art = [i for i, s in enumerate(senses) if s != LE]
    n_struct = n + len(extra)
    art_cols = []
    for i in need_art:
        col = np.zeros(m)
        col[i] = 1.0
        art_cols.append(col)
    full = np.column_stack([A] + extra + art_cols) if (extra or art_cols) else A
    total = full.shape[1]
    is_art = np.zeros(total, dtype=bool)
    is_art[n_struct:] = True

    basis = []
    art_iter = iter(range(n_struct, total))
    for i, s in enumerate(senses):
        basis.append(slack_of[i] if s == LE else next(art_iter))

    iterations = 0
    rows = np.arange(m)
    if art_cols:
        phase1 = np.where(is_art, -1.0, 0.0)
        allowed = np.ones(total, dtype=bool)
        basis, x_b, _, it = _pivot_loop(full, b, phase1, basis, allowed, tol, max_iter, stall_limit)
        iterations += it
        infeas = float(x_b[is_art[basis]].sum())
        if infeas > 1e-7 * (1 + np.abs(b).max()):
            raise InfeasibleError(f"phase one ended with infeasibility {infeas:.3e}")
        # drive zero-level artificials out, dropping redundant rows
        keep_rows = list(range(m))
        for r in range(m):
            if not is_art[basis[r]]:
                continue
            B = full[np.ix_(keep_rows, basis_rows := [basis[k] for k in keep_rows])]
            pos_r = keep_rows.index(r)
            e_r = np.zeros(len(keep_rows))
            e_r[pos_r] = 1.0
            row = np.linalg.solve(B.T, e_r) @ full[keep_rows]
            row[is_art] = 0.0
            row[basis_rows] = 0.0
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) > 1e-9:
                basis[r] = j
            else:
                keep_rows.remove(r)
        rows = np.array(keep_rows, dtype=int)
        basis = [basis[r] for r in keep_rows]

    cost = np.zeros(total)
    cost[:n] = lp.c
    allowed = ~is_art
    sub = full[rows]
    basis, x_b, y, it = _pivot_loop(sub, b[rows], cost, basis, allowed, tol, max_iter, stall_limit)
    iterations += it
    x = np.zeros(total)
    x[basis] = x_b
    duals = np.zeros(m)
    duals[rows] = y
    duals *= sign
    x_struct = np.maximum(x[:n], 0.0)
    return LpResult(x_struct, duals, float(lp.c @ x_struct), iterations, list(basis))
