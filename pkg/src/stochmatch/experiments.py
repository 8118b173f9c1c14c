"""Experiment drivers: run an algorithm for many seeded trials and summarise."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import online as ol
from .baselines import InapplicableLp, solve_lp_dp
from .configlp import solve_lp_config, solve_lp_config_id
from .model import KnownIdInput, StochasticGraph, point_mass_input
from .oracles import TooLarge, brute_force_opt, exact_expectation
from .stats import Estimate, estimate

ALGORITHMS = ("known-graph", "known-id", "known-id-ocrs", "known-id-rcrs", "secretary", "greedy-dp")
CSV_COLUMNS = ("instance", "algorithm", "arrival", "trials", "mean", "ci_low", "ci_high",
               "lp_name", "lp_value", "brute_force", "ratio")


@dataclass
class ResultRow:
    instance: str
    algorithm: str
    arrival: str
    trials: int
    mean: float
    ci_low: float
    ci_high: float
    lp_name: str
    lp_value: float
    brute_force: float | None
    ratio: float

    def as_dict(self):
        return asdict(self)


def parse_arrival(spec: str, n: int):
    """``rom``, ``aom:<i-j-k...>`` or ``aom:worst<k>``. Returns a model or a list of candidate models."""
    if spec == "rom":
        return ol.RandomOrder()
    if spec.startswith("aom:worst"):
        k = int(spec[len("aom:worst"):] or 0)
        if k < 1:
            raise ValueError("aom:worst<k> needs k >= 1")
        return ("worst", k)
    if spec.startswith("aom:"):
        body = spec[4:]
        perm = tuple(int(x) for x in body.replace(",", "-").split("-")) if body else tuple(range(n))
        return ol.AdversarialOrder(perm)
    raise ValueError(f"unknown arrival model {spec!r}")


def candidate_orders(n: int, k: int, rng) -> list[tuple[int, ...]]:
    """Every order when n! <= k, else k sampled ones."""
    if math.factorial(n) <= k:
        return list(itertools.permutations(range(n)))
    return [tuple(int(i) for i in rng.permutation(n)) for _ in range(k)]


# ---------------------------------------------------------------------------
# per-algorithm samplers of trial weights
# ---------------------------------------------------------------------------


class KnownIdRunner:
    """Vectorised trials for Algorithms 2, 3, 4 and the random-order variant."""

    def __init__(self, inp: KnownIdInput, sol=None):
        self.inp = inp
        self.sol = sol if sol is not None else solve_lp_config_id(inp)
        self.props = ol.BatchProposals(self.sol, inp)
        self.n_off = len(inp.type_graph.offline_ids)
        self._z = None

    @property
    def z(self):
        if self._z is None:
            self._z = ol.z_matrix(self.sol, self.inp)
        return self._z

    def weights(self, algorithm: str, order, trials: int, rng) -> np.ndarray:
        u, w = self.props.sample(trials, rng)
        if algorithm in ("known-graph", "known-id"):
            return ol.batch_first_free(u, w, self.n_off, order, rng)
        if algorithm == "known-id-ocrs":
            if order is None:
                raise ValueError("the online contention scheme runs under a fixed order")
            return ol.batch_ocrs_match(u, w, self.z, order, rng)
        if algorithm == "known-id-rcrs":
            if order is not None:
                raise ValueError("the random-order contention scheme needs random arrivals")
            return ol.batch_rcrs_match(u, w, self.z, rng)
        raise ValueError(algorithm)


def worst_order(runner: KnownIdRunner, algorithm, orders, trials, rng):
    """Screen every candidate order, then re-estimate the worst with fresh draws.

    The fresh run removes the downward bias of taking a minimum over noisy
    estimates. Returns (order, estimate, screening means).
    """
    screen = {o: float(runner.weights(algorithm, o, trials, rng).mean()) for o in orders}
    worst = min(screen, key=screen.get)
    return worst, estimate(runner.weights(algorithm, worst, trials, rng)), screen


def lp_reference(obj, algorithm: str):
    if isinstance(obj, KnownIdInput):
        return "config-id", solve_lp_config_id(obj).objective
    if algorithm == "greedy-dp":
        try:
            return "dp", solve_lp_dp(obj)
        except InapplicableLp:
            pass
    return "config", solve_lp_config(obj).objective


def simulate(obj, algorithm: str, arrival: str, trials: int, seed, name: str = "instance") -> ResultRow:
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if trials < 1:
        raise ValueError("trials must be positive")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    is_graph = isinstance(obj, StochasticGraph)
    n = len(obj.online) if is_graph else obj.n
    model = parse_arrival(arrival, n)
    label = arrival

    if algorithm in ("secretary", "greedy-dp"):
        if not is_graph:
            raise InapplicableLp(f"{algorithm} runs on a known graph, not a known i.d. input")
        if algorithm == "secretary":
            if not isinstance(model, ol.RandomOrder):
                raise InapplicableLp("the secretary algorithm assumes random order")
            cache = ol.SecretaryCache(obj)
            vals = np.array([ol.run_secretary(obj, rng, cache).weight for _ in range(trials)])
        else:
            if not obj.is_vertex_weighted():
                raise InapplicableLp("Greedy-DP needs a vertex-weighted graph")
            cache = ol.StarCache(obj)
            if isinstance(model, tuple):
                orders = candidate_orders(n, model[1], rng)
                worst = min(orders, key=lambda o: exact_expectation("greedy-dp", obj, o))
                model = ol.AdversarialOrder(worst)
                label = f"{arrival}={'-'.join(map(str, worst))}"
            vals = np.array([ol.run_greedy_dp(obj, model, rng, cache).weight for _ in range(trials)])
    else:
        inp = point_mass_input(obj) if is_graph else obj
        if algorithm == "known-graph" and not is_graph:
            raise InapplicableLp("known-graph needs a graph instance")
        runner = KnownIdRunner(inp)
        if isinstance(model, tuple):
            orders = candidate_orders(n, model[1], rng)
            worst, est, _ = worst_order(runner, algorithm, orders, trials, rng)
            vals = None
            label = f"{arrival}={'-'.join(map(str, worst))}"
        else:
            order = None if isinstance(model, ol.RandomOrder) else list(model.perm)
            vals = runner.weights(algorithm, order, trials, rng)
    est = estimate(vals) if vals is not None else est
    lp_name, lp_value = lp_reference(obj, algorithm)
    bf = None
    if is_graph:
        try:
            bf = brute_force_opt(obj)
        except TooLarge:
            bf = None
    ratio = est.mean / lp_value if lp_value > 0 else math.nan
    lo, hi = est.interval
    return ResultRow(name, algorithm, label, trials, est.mean, lo, hi, lp_name, lp_value, bf, ratio)
