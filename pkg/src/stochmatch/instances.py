"""JSON instance format and instance generators.

Graph::

    {"offline": [{"id": "u1", "weight": 1.0}, ...],
     "online": [{"id": "v1",
                 "constraint": {"type": "patience", "l": 2}
                             | {"type": "knapsack", "budget": 1.0, "costs": {"u1": 0.5}}
                             | {"type": "family", "sets": [["u1", "u2"], ...]},
                 "edges": [{"u": "u1", "p": 0.5, "w": 1.0}, ...]}]}

Known i.d. input::

    {"type_graph": <graph>, "distributions": [[{"type": "b1", "prob": 0.5}, ...], ...]}

Knapsack costs are keyed by offline id since each online vertex has one edge
per offline vertex. Probabilities and weights may be given as numbers or as
decimal strings; they are written as the shortest repr of the double.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np

from .model import (
    Edge,
    ExplicitFamily,
    Knapsack,
    KnownIdInput,
    OfflineVertex,
    OnlineVertex,
    Patience,
    StochasticGraph,
)


class InstanceError(ValueError):
    pass


def _num(x) -> float:
    if isinstance(x, str):
        try:
            return float(Fraction(x))
        except (ValueError, ZeroDivisionError) as exc:
            raise InstanceError(f"bad number {x!r}") from exc
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise InstanceError(f"bad number {x!r}")
    return float(x)


def _constraint_from(d):
    kind = d.get("type")
    if kind == "patience":
        return Patience(int(d["l"]))
    if kind == "knapsack":
        return Knapsack(_num(d["budget"]), {u: _num(c) for u, c in d.get("costs", {}).items()})
    if kind == "family":
        return ExplicitFamily(frozenset(frozenset(s) for s in d["sets"]))
    raise InstanceError(f"unknown constraint type {kind!r}")


def _constraint_to(c):
    if isinstance(c, Patience):
        return {"type": "patience", "l": c.limit}
    if isinstance(c, Knapsack):
        return {"type": "knapsack", "budget": c.budget, "costs": dict(sorted(c.costs.items()))}
    maximal = [s for s in c.sets if not any(s < t for t in c.sets)]
    return {"type": "family", "sets": sorted(sorted(s) for s in maximal if s)}


def graph_from_dict(d) -> StochasticGraph:
    try:
        offline = tuple(OfflineVertex(str(u["id"]), _num(u.get("weight", 1.0))) for u in d["offline"])
        online = []
        for v in d["online"]:
            vid = str(v["id"])
            edges = tuple(Edge(str(e["u"]), vid, _num(e["p"]), _num(e.get("w", 1.0))) for e in v.get("edges", []))
            online.append(OnlineVertex(vid, edges, _constraint_from(v["constraint"])))
        return StochasticGraph(offline, tuple(online))
    except (KeyError, TypeError) as exc:
        raise InstanceError(f"malformed graph: {exc}") from exc


def graph_to_dict(g: StochasticGraph) -> dict:
    return {
        "offline": [{"id": u.id, "weight": u.weight} for u in g.offline],
        "online": [
            {
                "id": v.id,
                "constraint": _constraint_to(v.constraint),
                "edges": [{"u": e.u, "p": e.p, "w": e.w} for e in v.edges],
            }
            for v in g.online
        ],
    }


def input_from_dict(d) -> KnownIdInput:
    try:
        tg = graph_from_dict(d["type_graph"])
        rows = tuple(tuple((str(c["type"]), _num(c["prob"])) for c in row) for row in d["distributions"])
    except (KeyError, TypeError) as exc:
        raise InstanceError(f"malformed known i.d. input: {exc}") from exc
    return KnownIdInput(tg, rows)


def input_to_dict(inp: KnownIdInput) -> dict:
    return {
        "type_graph": graph_to_dict(inp.type_graph),
        "distributions": [[{"type": b, "prob": r} for b, r in row] for row in inp.distributions],
    }


def load(path):
    """Read a graph or a known i.d. input, whichever the file holds."""
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"{path}: {exc}") from exc
    if not isinstance(d, dict):
        raise InstanceError(f"{path}: top level must be an object")
    return input_from_dict(d) if "type_graph" in d else graph_from_dict(d)


def dumps(obj) -> str:
    d = input_to_dict(obj) if isinstance(obj, KnownIdInput) else graph_to_dict(obj)
    return json.dumps(d, indent=1, sort_keys=False) + "\n"


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def er_gap(n: int, p: float, s: int | None = None) -> StochasticGraph:
    """Complete s x n graph, every edge with probability p, unit patience, unit weights."""
    s = math.floor(p * n) if s is None else s
    if s < 1:
        raise InstanceError("need at least one offline vertex")
    U = [f"u{j}" for j in range(s)]
    online = tuple(
        OnlineVertex(f"v{i}", tuple(Edge(u, f"v{i}", p, 1.0) for u in U), Patience(1)) for i in range(n)
    )
    return StochasticGraph(tuple(OfflineVertex(u) for u in U), online)


def example_62(eps: float = 1 / 12) -> StochasticGraph:
    """Single online vertex with patience 2 whose optimal probes are not nested across R."""
    if not 0 < eps < 1:
        raise InstanceError("eps must lie in (0, 1)")
    ps = (1 / 3, 1.0, 1 / 2, 2 / 3)
    ws = (1 + eps, 1 + eps / 2, 1.0, 1.0)
    U = tuple(OfflineVertex(f"u{j + 1}", w) for j, w in enumerate(ws))
    v = OnlineVertex("v", tuple(Edge(u.id, "v", p, u.weight) for u, p in zip(U, ps)), Patience(2))
    return StochasticGraph(U, (v,))


def random_weighted(n_offline: int, n_online: int, rng, constraint: str = "patience", density: float = 1.0,
                    max_patience: int = 2, vertex_weighted: bool = False, p_range=(0.05, 1.0)) -> StochasticGraph:
    rng = np.random.default_rng(rng)
    U = tuple(OfflineVertex(f"u{j}", float(np.round(rng.uniform(0.1, 1.0), 6))) for j in range(n_offline))
    online = []
    for i in range(n_online):
        vid = f"v{i}"
        edges = []
        for u in U:
            if rng.random() > density:
                continue
            p = float(np.round(rng.uniform(*p_range), 6))
            w = u.weight if vertex_weighted else float(np.round(rng.uniform(0.0, 1.0), 6))
            edges.append(Edge(u.id, vid, p, w))
        if constraint == "patience":
            c = Patience(int(rng.integers(1, max_patience + 1)))
        elif constraint == "knapsack":
            c = Knapsack(1.0, {e.u: float(np.round(rng.uniform(0.2, 0.8), 6)) for e in edges})
        elif constraint == "family":
            ids = [e.u for e in edges]
            sets = [rng.choice(ids, size=min(2, len(ids)), replace=False).tolist() for _ in range(2)] if ids else []
            c = ExplicitFamily(frozenset(frozenset(s) for s in sets))
        elif constraint == "unbounded":
            c = Patience(max(1, len(edges)))
        else:
            raise InstanceError(f"unknown constraint family {constraint!r}")
        online.append(OnlineVertex(vid, tuple(edges), c))
    return StochasticGraph(U, tuple(online))


def id_types(n: int, n_types: int, n_offline: int, rng, iid: bool = False, **kw) -> KnownIdInput:
    """Random type graph plus one random type distribution per arrival (or one shared row)."""
    rng = np.random.default_rng(rng)
    tg = random_weighted(n_offline, n_types, rng, **kw)
    types = [b.id for b in tg.online]

    def row():
        r = np.round(rng.dirichlet(np.ones(n_types)), 6)
        r[-1] = max(0.0, 1.0 - r[:-1].sum())
        r /= r.sum()
        return tuple((b, float(x)) for b, x in zip(types, r) if x > 0)

    shared = row()
    rows = tuple(shared if iid else row() for _ in range(n))
    return KnownIdInput(tg, rows)


def iid_types(n: int, n_types: int, n_offline: int, rng, **kw) -> KnownIdInput:
    return id_types(n, n_types, n_offline, rng, iid=True, **kw)
