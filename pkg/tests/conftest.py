import numpy as np
import pytest

from stochmatch.model import Edge, OfflineVertex, OnlineVertex, Patience, StochasticGraph


def star(ps, ws=None, limit=1, vid="v"):
    """One online vertex joined to u0, u1, ... with the given probabilities and weights."""
    ws = ws if ws is not None else [1.0] * len(ps)
    U = tuple(OfflineVertex(f"u{j}", w) for j, w in enumerate(ws))
    v = OnlineVertex(vid, tuple(Edge(f"u{j}", vid, p, w) for j, (p, w) in enumerate(zip(ps, ws))), Patience(limit))
    return StochasticGraph(U, (v,))


def complete(n_off, n_on, p=1.0, w=1.0, limit=1):
    U = tuple(OfflineVertex(f"u{j}", w) for j in range(n_off))
    online = tuple(
        OnlineVertex(f"v{i}", tuple(Edge(f"u{j}", f"v{i}", p, w) for j in range(n_off)), Patience(limit))
        for i in range(n_on)
    )
    return StochasticGraph(U, online)


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
