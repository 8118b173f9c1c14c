"""Quick invariant suites behind ``stochmatch verify``. Each returns (name, ok, detail) triples."""

from __future__ import annotations

import math

import numpy as np

from . import crs
from .configlp import edge_variables, solve_lp_config, solve_lp_config_full
from .instances import random_weighted
from .oracles import brute_force_nonadaptive, brute_force_opt
from .rounding import PrefixMarginals, proposal_law, vertex_round_distribution

TRIALS = 200_000


def suite_crs(seed):
    rng = np.random.default_rng(seed)
    out = []
    for z in [(1.0,), (0.5, 0.5), (0.9, 0.1), (0.2, 0.3, 0.5)]:
        res = crs.verify_selectability("ocrs", z, "adversarial", TRIALS, rng)
        ok = bool(np.all((res.lower <= 0.5) & (0.5 <= res.upper)))
        out.append((f"ocrs 1/2 z={z}", ok, f"worst order {res.order}, estimates {np.round(res.estimate, 4).tolist()}"))
    floor = 1 - 1 / math.e - 0.005
    for z in [(1.0,), (0.5, 0.5), (0.9, 0.1), (0.01,) * 100]:
        res = crs.verify_selectability("rcrs", z, "random", TRIALS, rng)
        ok = bool(np.all(res.upper >= floor))
        label = "100x0.01" if len(z) == 100 else str(z)
        out.append((f"rcrs >= 1-1/e z={label}", ok, f"estimates {np.round(res.estimate, 4).tolist()}"))
    return out


def _random_graphs(seed, count, **kw):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield random_weighted(int(rng.integers(1, 4)), int(rng.integers(1, 4)), rng, **kw)


def suite_rounding(seed):
    out = []
    for k, g in enumerate(_random_graphs(seed, 20, constraint="patience", max_patience=3)):
        sol = solve_lp_config(g)
        xt = edge_variables(sol)
        worst = 0.0
        for v in g.online:
            dist = sol.distribution(v.id)
            rounded = vertex_round_distribution(PrefixMarginals.from_distribution(dist))
            law = proposal_law(rounded)
            for e in v.probeable:
                worst = max(worst, abs(law.get(e.key, 0.0) - e.p * xt.get(e.key, 0.0)))
        out.append((f"exact proposal law, instance {k}", worst <= 1e-12, f"max deviation {worst:.2e}"))
    return out


def suite_lp(seed):
    out = []
    for k, g in enumerate(_random_graphs(seed, 20, constraint="patience", max_patience=2)):
        cg = solve_lp_config(g).objective
        full = solve_lp_config_full(g)
        out.append((f"column generation = full enumeration, instance {k}", abs(cg - full) <= 1e-6, f"{cg:.9f} vs {full:.9f}"))
    return out


def suite_benchmarks(seed):
    out = []
    for k, g in enumerate(_random_graphs(seed, 20, constraint="patience", max_patience=2)):
        if len(g.probeable_edges()) > 7:
            continue
        opt = brute_force_opt(g)
        lp = solve_lp_config(g).objective
        nad = brute_force_nonadaptive(g)
        ok = opt <= lp + 1e-6 and nad <= opt + 1e-12
        out.append((f"nonadaptive <= OPT <= LP, instance {k}", ok, f"{nad:.6f} <= {opt:.6f} <= {lp:.6f}"))
    return out


SUITES = {"crs": suite_crs, "rounding": suite_rounding, "lp-consistency": suite_lp, "benchmarks": suite_benchmarks}
