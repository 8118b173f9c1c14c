"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The lines are printed as they happen (visible with ``-s``) and again in the
terminal summary.
"""

import math
import time
from itertools import permutations
from statistics import NormalDist

import numpy as np

from stochmatch.baselines import solve_lp_dp, solve_lp_qc
from stochmatch.configlp import edge_variables, solve_lp_config, solve_lp_config_full, solve_lp_config_id
from stochmatch.crs import batch_ocrs, verify_selectability
from stochmatch.experiments import KnownIdRunner, worst_order
from stochmatch.instances import example_62, id_types, iid_types, random_weighted
from stochmatch.model import Edge, ExplicitFamily, Knapsack, OfflineVertex, OnlineVertex, Patience, StochasticGraph
from stochmatch.online import RandomOrder, SecretaryCache, StarCache, run_greedy_dp, run_secretary
from stochmatch.oracles import adaptivity_gap_experiment, brute_force_opt, exact_expectation
from stochmatch.rounding import PrefixMarginals, proposal_law, vertex_round_distribution
from stochmatch.star import exhaustive_star, is_rankable, star_opt
from stochmatch.stats import Z99, estimate

ONE_MINUS_INV_E = 1 - 1 / math.e
RESULTS: list[str] = []


def record(number, ok, detail, elapsed, limit):
    within = elapsed <= limit
    line = f"criterion {number:>2}: {'PASS' if ok and within else 'FAIL'}  {detail}  [{elapsed:.1f}s, limit {limit:g}s]"
    RESULTS.append(line)
    print(line)
    assert within, f"criterion {number} took {elapsed:.1f}s > {limit}s"
    assert ok, line


def _graph_suite(seed, count, kinds, max_edges=None, **kw):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        kind = kinds[len(out) % len(kinds)]
        g = random_weighted(int(rng.integers(1, 4)), int(rng.integers(1, 4)), rng, constraint=kind, **kw)
        if max_edges is None or len(g.probeable_edges()) <= max_edges:
            out.append(g)
    return out


# 1 -------------------------------------------------------------------------

def test_criterion_1_exact_rounding():
    t0 = time.perf_counter()
    worst, checked = 0.0, 0
    for g in _graph_suite(101, 40, ["patience", "knapsack", "family", "unbounded"], max_patience=3):
        sol = solve_lp_config(g)
        assert sum(len(d) for d in sol.x.values()) <= 200
        xt = edge_variables(sol)
        for v in g.online:
            law = proposal_law(vertex_round_distribution(PrefixMarginals.from_distribution(sol.distribution(v.id))))
            for e in v.probeable:
                worst = max(worst, abs(law.get(e.key, 0.0) - e.p * xt.get(e.key, 0.0)))
                checked += 1
    rng = np.random.default_rng(102)
    for _ in range(10):
        inp = id_types(int(rng.integers(2, 5)), 3, 3, rng, max_patience=2)
        sol = solve_lp_config_id(inp)
        xt = edge_variables(sol)
        for (i, b), block in sol.blocks.items():
            law = proposal_law(vertex_round_distribution(PrefixMarginals.from_distribution(sol.distribution((i, b)))))
            for e in block.vertex.probeable:
                target = e.p * xt.get((e.u, i, b), 0.0) / block.rhs
                worst = max(worst, abs(law.get(e.key, 0.0) - target))
                checked += 1
    record(1, worst <= 1e-12, f"exact rounding: max |P[propose e] - p_e x~_e| = {worst:.1e} over {checked} edges",
           time.perf_counter() - t0, 5)


# 2 -------------------------------------------------------------------------

def test_criterion_2_lp_relaxation():
    t0 = time.perf_counter()
    gaps = []
    for g in _graph_suite(201, 200, ["patience", "family"], max_edges=9, max_patience=2):
        gaps.append(brute_force_opt(g) - solve_lp_config(g).objective)
    ok_graph = max(gaps) <= 1e-6
    rng = np.random.default_rng(202)
    worst_z = -math.inf
    for _ in range(20):
        inp = id_types(int(rng.integers(1, 4)), int(rng.integers(1, 4)), int(rng.integers(1, 4)), rng,
                       max_patience=2)
        lp = solve_lp_config_id(inp).objective
        cache = {}
        names = [[b for b, _ in row] for row in inp.distributions]
        probs = [np.array([r for _, r in row]) for row in inp.distributions]
        draws = np.stack([rng.choice(len(nm), size=10_000, p=pr / pr.sum()) for nm, pr in zip(names, probs)], axis=1)
        values = np.empty(len(draws))
        for k, row in enumerate(map(tuple, draws)):
            if row not in cache:
                cache[row] = brute_force_opt(inp.realize([names[i][j] for i, j in enumerate(row)]))
            values[k] = cache[row]
        est = estimate(values)
        worst_z = max(worst_z, (est.mean - lp) / max(est.sigma, 1e-12))
    ok_id = worst_z <= 3
    record(2, ok_graph and ok_id,
           f"max OPT - LP = {max(gaps):.2e} on 200 graphs; max (E[OPT] - LP-id)/sigma = {worst_z:.2f} on 20 inputs",
           time.perf_counter() - t0, 120)


# 3 -------------------------------------------------------------------------

def test_criterion_3_column_generation():
    t0 = time.perf_counter()
    diffs = []
    for g in _graph_suite(301, 100, ["patience", "knapsack", "family", "unbounded"], max_patience=3):
        diffs.append(abs(solve_lp_config(g).objective - solve_lp_config_full(g)))
    record(3, max(diffs) <= 1e-6, f"max |column generation - full enumeration| = {max(diffs):.1e} on 100 instances",
           time.perf_counter() - t0, 60)


# 4 -------------------------------------------------------------------------

def test_criterion_4_lp_qc():
    t0 = time.perf_counter()
    rng = np.random.default_rng(401)
    diffs = []
    for _ in range(50):
        g = random_weighted(int(rng.integers(1, 7)), int(rng.integers(1, 5)), rng, constraint="unbounded",
                            density=float(rng.uniform(0.5, 1.0)))
        assert all(len(v.edges) <= 6 for v in g.online)
        diffs.append(abs(solve_lp_qc(g) - solve_lp_config(g).objective))
    record(4, max(diffs) <= 1e-6, f"max |LP-QC - LP-config| = {max(diffs):.1e} on 50 instances",
           time.perf_counter() - t0, 60)


# 5 -------------------------------------------------------------------------

OCRS_STRESS = [(1.0,), (0.5, 0.5), (0.9, 0.1), (0.2, 0.3, 0.5), (0.1, 0.2, 0.3, 0.4), (0.2,) * 5]
RCRS_STRESS = [(1.0,), (0.5, 0.5), (0.01,) * 100, (0.9, 0.1)]


def test_criterion_5_crs_selectability():
    t0 = time.perf_counter()
    rng = np.random.default_rng(501)
    worst_dev, checks = 0.0, 0
    for z in OCRS_STRESS:
        z = np.array(z)
        seen = set()
        for order in permutations(range(len(z))):
            key = tuple(z[list(order)])
            if key in seen:  # equal values give the same arrival sequence
                continue
            seen.add(key)
            active, accepted = batch_ocrs(z, order, 10**6, rng)
            for i in range(len(z)):
                n_act = int(active[:, i].sum())
                dev = abs(accepted[:, i].sum() / n_act - 0.5) / math.sqrt(0.25 / n_act)
                worst_dev = max(worst_dev, dev)
                checks += 1
    floor = ONE_MINUS_INV_E - 0.005
    rcrs_min = min(float(np.min(verify_selectability("rcrs", z, "random", 10**6, rng).estimate)) for z in RCRS_STRESS)
    record(5, worst_dev <= 3 and rcrs_min >= floor,
           f"OCRS max |est - 1/2| = {worst_dev:.2f} sigma over {checks} (order, element) pairs; "
           f"RCRS min estimate {rcrs_min:.4f} >= {floor:.4f}",
           time.perf_counter() - t0, 120)


# 6 -------------------------------------------------------------------------

def _id_suite(seed, iid):
    rng = np.random.default_rng(seed)
    make = iid_types if iid else id_types
    return [make(int(rng.integers(3, 6)), int(rng.integers(2, 4)), int(rng.integers(2, 4)), rng, max_patience=2)
            for _ in range(10)]


def simultaneous_z(m, level=0.99):
    """Two-sided normal quantile for a 99% interval holding jointly over m checks (Bonferroni)."""
    return NormalDist().inv_cdf(1 - (1 - level) / (2 * m))


def test_criterion_6_known_id_ratios():
    # Every check sits at or near its boundary (the OCRS variant achieves exactly 1/2 of LP),
    # so the suite-level claim uses an interval that holds jointly over all 30 checks.
    t0 = time.perf_counter()
    rng = np.random.default_rng(601)
    trials = 10**5
    zs = {"ocrs": [], "rcrs": [], "iid": []}

    def z(est, lp, target):
        return (est.mean / lp - target) / (est.sigma / lp)

    for inp in _id_suite(602, iid=False):
        runner = KnownIdRunner(inp)
        lp = runner.sol.objective
        orders = list(permutations(range(inp.n)))
        _, est, _ = worst_order(runner, "known-id-ocrs", orders, trials, rng)
        zs["ocrs"].append(z(est, lp, 0.5))
        zs["rcrs"].append(z(estimate(runner.weights("known-id-rcrs", None, trials, rng)), lp, ONE_MINUS_INV_E))
    for inp in _id_suite(603, iid=True):
        runner = KnownIdRunner(inp)
        lp = runner.sol.objective
        _, est, _ = worst_order(runner, "known-id", list(permutations(range(inp.n))), trials, rng)
        zs["iid"].append(z(est, lp, ONE_MINUS_INV_E))
    allz = [v for vals in zs.values() for v in vals]
    zc = simultaneous_z(len(allz))
    per_check_misses = sum(v < -Z99 for v in allz)
    record(6, min(allz) >= -zc,
           "min (ratio - target)/sigma: "
           f"AOM OCRS worst order {min(zs['ocrs']):+.2f}, ROM RCRS {min(zs['rcrs']):+.2f}, "
           f"i.i.d. known-id {min(zs['iid']):+.2f}; joint 99% bound -{zc:.2f} over {len(allz)} checks "
           f"({per_check_misses} below the per-check -{Z99:.2f})",
           time.perf_counter() - t0, 300)


# 7 -------------------------------------------------------------------------

def test_criterion_7_secretary():
    t0 = time.perf_counter()
    n, trials = 10, 10**5
    g = random_weighted(5, n, 701, constraint="patience", max_patience=1, p_range=(1.0, 1.0))
    assert all(e.p == 1.0 and 0 <= e.w <= 1 for e in g.edges())
    lp = solve_lp_config(g).objective
    cache = SecretaryCache(g)
    rng = np.random.default_rng(702)
    weights = np.empty(trials)
    per_t = np.zeros((trials, n))
    for k in range(trials):
        res = run_secretary(g, rng, cache)
        weights[k] = res.weight
        for t, vid in enumerate(res.order):
            e = res.proposals[vid]
            per_t[k, t] = 0.0 if e is None else e.w
    est = estimate(weights)
    ratio, ci = est.mean / lp, est.half_width / lp
    target = 1 / math.e - 1 / n
    first = math.ceil(n / math.e)
    z_min = math.inf
    for t in range(first, n + 1):
        col = estimate(per_t[:, t - 1])
        z_min = min(z_min, (col.mean - lp / n) / col.sigma)
    record(7, ratio >= target - ci and z_min >= -3,
           f"ratio {ratio:.4f} >= {target:.4f} - {ci:.4f}; per-arrival E[w(e_t)] - LPOPT/n >= {z_min:.1f} sigma "
           f"for t >= {first} ({len(cache.solutions)} LPs solved)",
           time.perf_counter() - t0, 600)


# 8 -------------------------------------------------------------------------

def _agreeing_graph(n_off, n_on, rng, limit):
    """Vertex-weighted graph where heavier offline vertices also have larger edge probabilities."""
    w = np.sort(np.round(rng.uniform(0.1, 1.0, n_off), 6))
    U = tuple(OfflineVertex(f"u{j}", float(w[j])) for j in range(n_off))
    online = []
    for i in range(n_on):
        ps = np.sort(np.round(rng.uniform(0.05, 1.0, n_off), 6))
        edges = tuple(Edge(U[j].id, f"v{i}", float(ps[j]), U[j].weight) for j in range(n_off))
        online.append(OnlineVertex(f"v{i}", edges, Patience(limit)))
    return StochasticGraph(U, tuple(online))


def _rom_z(g, target, trials, rng):
    cache = StarCache(g)
    est = estimate([run_greedy_dp(g, RandomOrder(), rng, cache).weight for _ in range(trials)])
    lp = solve_lp_dp(g)
    return (est.mean / lp - target) / (est.sigma / lp)


def test_criterion_8_greedy_dp():
    t0 = time.perf_counter()
    rng = np.random.default_rng(801)
    # (a) adversarial order, exact
    worst_a, count_a = math.inf, 0
    while count_a < 60:
        g = random_weighted(int(rng.integers(1, 4)), int(rng.integers(1, 5)), rng, vertex_weighted=True,
                            max_patience=2, density=float(rng.uniform(0.4, 1.0)))
        if len(g.probeable_edges()) > 9:
            continue
        opt = brute_force_opt(g)
        if opt == 0:
            continue
        low = min(exact_expectation("greedy-dp", g, o) for o in permutations(range(len(g.online))))
        worst_a = min(worst_a, low / opt)
        count_a += 1
    ok_a = worst_a >= 0.5 - 1e-9
    # (b) rankable suites under random order
    trials = 10**5
    suite = [random_weighted(4, 4, rng, vertex_weighted=True, max_patience=1) for _ in range(3)]
    suite += [_agreeing_graph(4, 4, rng, 2) for _ in range(3)]
    assert all(is_rankable(v, g.offline_weight)[0] for g in suite for v in g.online)
    z_b = min(_rom_z(g, ONE_MINUS_INV_E, trials, rng) for g in suite)
    # (c) non-rankable suite with small probabilities
    z_c, n_nonrank, n_c = math.inf, 0, 0
    while n_c < 4:
        g = random_weighted(4, 4, rng, vertex_weighted=True, max_patience=3, p_range=(0.02, 0.15))
        nonrank = sum(not is_rankable(v, g.offline_weight)[0] for v in g.online)
        if nonrank == 0:
            continue
        n_nonrank += nonrank
        n_c += 1
        factor = min((1 - max(e.p for e in v.probeable)) ** v.constraint.max_length([e.u for e in v.probeable])
                     for v in g.online if v.probeable) * ONE_MINUS_INV_E
        z_c = min(z_c, _rom_z(g, factor, trials, rng))
    zc = simultaneous_z(len(suite) + n_c)
    record(8, ok_a and min(z_b, z_c) >= -zc,
           f"AOM exact min E/OPT = {worst_a:.4f} on {count_a} instances; min (ratio - target)/sigma: "
           f"ROM rankable {z_b:+.2f}, non-rankable {z_c:+.2f} ({n_nonrank} non-rankable vertices); "
           f"joint 99% bound -{zc:.2f}",
           time.perf_counter() - t0, 300)


# 9 -------------------------------------------------------------------------

def test_criterion_9_dp_opt():
    t0 = time.perf_counter()
    rng = np.random.default_rng(901)
    worst = 0.0
    for k in range(1000):
        m = int(rng.integers(1, 7))
        edges = tuple(Edge(f"u{j}", "v", float(rng.uniform(0, 1)), float(rng.uniform(0, 1))) for j in range(m))
        ids = [e.u for e in edges]
        kind = k % 3
        if kind == 0:
            c = Patience(int(rng.integers(1, m + 1)))
        elif kind == 1:
            c = Knapsack(1.0, {u: float(rng.uniform(0.1, 0.9)) for u in ids})
        else:
            c = ExplicitFamily(frozenset(frozenset(rng.choice(ids, size=int(rng.integers(1, m + 1)), replace=False))
                                         for _ in range(2)))
        v = OnlineVertex("v", edges, c)
        worst = max(worst, abs(star_opt(v).value - exhaustive_star(v).value))
    g = example_62(1 / 12)
    v, w = g.online[0], g.offline_weight
    r1 = star_opt(v, None, w)
    r2 = star_opt(v, ["u1", "u3", "u4"], w)
    ok62 = ([e.u for e in r1.string] == ["u1", "u2"] and abs(r1.value - 19 / 18) <= 1e-12
            and {e.u for e in r2.string} == {"u3", "u4"} and abs(r2.value - 5 / 6) <= 1e-12)
    record(9, worst <= 1e-12 and ok62,
           f"max |DP-OPT - exhaustive| = {worst:.1e} on 1000 stars; Example 6.2 R1 -> (u1,u2) = 19/18, "
           f"R2 -> {{u3,u4}} = 5/6: {'ok' if ok62 else 'mismatch'}",
           time.perf_counter() - t0, 10)


# 10 ------------------------------------------------------------------------

def test_criterion_10_adaptivity_gap():
    t0 = time.perf_counter()
    p = 0.05
    small = adaptivity_gap_experiment(200, p, round(p * 200), 10**4, seed=1001)
    large = adaptivity_gap_experiment(2000, p, round(p * 2000), 10**4, seed=1002)
    a, b = small.ratio, large.ratio
    trend = b.interval[0] <= a.interval[1]  # non-increasing within CI overlap
    inside = 0.60 <= b.mean <= 0.68
    record(10, trend and inside,
           f"p = {p}, s = pn: ratio(200) = {a.mean:.4f} +/- {a.half_width:.4f} (exact {small.exact_ratio:.4f}), "
           f"ratio(2000) = {b.mean:.4f} +/- {b.half_width:.4f} (exact {large.exact_ratio:.4f})",
           time.perf_counter() - t0, 300)
