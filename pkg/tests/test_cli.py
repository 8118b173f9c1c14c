import csv
import io
import json
import math
import subprocess
import sys

import pytest

from stochmatch import instances
from stochmatch.cli import EXIT_CAP, EXIT_INAPPLICABLE, EXIT_OK, EXIT_PARSE, main
from stochmatch.experiments import CSV_COLUMNS
from stochmatch.instances import InstanceError, example_62, random_weighted

from conftest import complete, star


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


@pytest.fixture
def write(tmp_path):
    def _write(obj, name="inst.json"):
        path = tmp_path / name
        path.write_text(obj if isinstance(obj, str) else instances.dumps(obj))
        return str(path)
    return _write


def test_solve_examples(write):
    code, out = run("solve", "--instance", write(complete(1, 1)))
    assert code == EXIT_OK and out.splitlines()[0] == "LP-config = 1.0"
    code, out = run("solve", "--instance", write(star([0.25] * 4)))
    assert out.splitlines()[0] == "LP-config = 0.25"
    g = random_weighted(3, 2, 4, constraint="unbounded")
    path = write(g)
    _, a = run("solve", "--instance", path, "--format", "json")
    _, b = run("solve", "--instance", path, "--lp", "qc", "--format", "json")
    assert abs(json.loads(a)["value"] - json.loads(b)["value"]) <= 1e-6


def test_solve_exit_codes(write, tmp_path):
    assert run("solve", "--instance", write("{not json"))[0] == EXIT_PARSE
    assert run("solve", "--instance", str(tmp_path / "missing.json"))[0] == EXIT_PARSE
    bad = instances.graph_to_dict(complete(1, 1))
    bad["online"][0]["edges"][0]["p"] = 1.5
    assert run("solve", "--instance", write(json.dumps(bad)))[0] == EXIT_PARSE
    assert run("solve", "--instance", write(random_weighted(2, 2, 0, constraint="knapsack")), "--lp", "std")[0] == EXIT_INAPPLICABLE
    assert run("solve", "--bogus")[0] == EXIT_PARSE


def test_solve_column_cap(write, monkeypatch):
    import stochmatch.configlp as cl

    monkeypatch.setattr(cl, "MAX_COLUMNS", 3)
    monkeypatch.setattr(cl.solve_lp_config, "__defaults__", (None, 3))
    code, _ = run("solve", "--instance", write(random_weighted(5, 4, 3, constraint="unbounded")))
    assert code == EXIT_CAP


def test_simulate_determinism_and_header(write, tmp_path):
    path = write(random_weighted(3, 3, 2, max_patience=2))
    out = tmp_path / "rows.csv"
    args = ("simulate", "--instance", path, "--algorithm", "known-graph", "--trials", "1", "--seed", "7")
    c1, a = run(*args)
    c2, b = run(*args)
    assert c1 == c2 == EXIT_OK and a == b
    run(*args, "--out", str(out))
    run(*args, "--out", str(out))
    rows = list(csv.reader(out.read_text().splitlines()))
    assert rows[0] == list(CSV_COLUMNS) and rows[1] == rows[2] and len(rows) == 3


def test_simulate_requires_seed(write):
    path = write(complete(1, 1))
    assert run("simulate", "--instance", path, "--algorithm", "known-graph")[0] == EXIT_PARSE
    assert run("simulate", "--instance", path, "--algorithm", "known-graph", "--seed", "1", "--trials", "0")[0] == EXIT_PARSE
    assert run("simulate", "--instance", path, "--algorithm", "known-graph", "--seed", "1", "--arrival", "sideways")[0] == EXIT_PARSE
    assert run("simulate", "--instance", path, "--algorithm", "secretary", "--seed", "1", "--arrival", "aom:0")[0] == EXIT_INAPPLICABLE


def test_simulate_ocrs_worst_order(write):
    inp = instances.id_types(4, 2, 2, 3, max_patience=2)
    code, out = run("simulate", "--instance", write(inp), "--algorithm", "known-id-ocrs",
                    "--arrival", "aom:worst24", "--trials", "20000", "--seed", "3", "--format", "json")
    row = json.loads(out)
    half = (row["ci_high"] - row["ci_low"]) / 2
    assert code == EXIT_OK and row["ratio"] >= 0.5 - half / row["lp_value"]


def test_simulate_greedy_dp_rankable(write):
    g = random_weighted(3, 4, 6, max_patience=1, vertex_weighted=True)
    code, out = run("simulate", "--instance", write(g), "--algorithm", "greedy-dp", "--trials", "20000",
                    "--seed", "2", "--format", "json")
    row = json.loads(out)
    half = (row["ci_high"] - row["ci_low"]) / 2
    assert row["lp_name"] == "dp"
    assert row["ratio"] >= 1 - 1 / math.e - half / row["lp_value"]


def test_generate(tmp_path):
    code, text = run("generate", "example-6.2")
    assert code == EXIT_OK
    d = json.loads(text)
    assert [e["p"] for e in d["online"][0]["edges"]] == [1 / 3, 1.0, 0.5, 2 / 3]
    assert [u["weight"] for u in d["offline"]] == [1 + 1 / 12, 1 + 1 / 24, 1.0, 1.0]
    assert d["online"][0]["constraint"] == {"type": "patience", "l": 2}
    code, text = run("generate", "er-gap", "--n", "2000", "--p", "0.02")
    d = json.loads(text)
    assert len(d["offline"]) == 40 and len(d["online"]) == 2000
    a = run("generate", "random-weighted", "--seed", "5", "--constraint", "knapsack")[1]
    b = run("generate", "random-weighted", "--seed", "5", "--constraint", "knapsack")[1]
    assert a == b
    assert run("generate", "example-6.2", "--eps", "2")[0] == EXIT_PARSE
    out = tmp_path / "g.json"
    assert run("generate", "iid-types", "--out", str(out))[0] == EXIT_OK
    assert instances.load(str(out)).is_iid()


def test_round_trip(rng):
    for kind in ("patience", "knapsack", "family"):
        g = random_weighted(3, 2, rng, constraint=kind)
        again = instances.graph_from_dict(json.loads(instances.dumps(g)))
        assert instances.dumps(again) == instances.dumps(g)
    inp = instances.id_types(3, 2, 2, rng)
    assert instances.dumps(instances.input_from_dict(json.loads(instances.dumps(inp)))) == instances.dumps(inp)


def test_decimal_strings():
    d = instances.graph_to_dict(example_62())
    d["online"][0]["edges"][0]["p"] = "1/3"
    g = instances.graph_from_dict(d)
    assert g.online[0].edges[0].p == 1 / 3
    d["online"][0]["edges"][0]["p"] = "a third"
    with pytest.raises(InstanceError):
        instances.graph_from_dict(d)


def test_verify_suites():
    for suite in ("rounding", "lp-consistency", "benchmarks"):
        code, out = run("verify", suite, "--seed", "1")
        assert code == EXIT_OK, out
        assert "FAIL" not in out


def test_gap_command():
    code, out = run("gap", "--n", "200", "--p", "0.05", "--trials", "2000", "--seed", "1", "--format", "json")
    row = json.loads(out)
    assert code == EXIT_OK and row["s"] == 10 and abs(row["exact_ratio"] - 0.7306) < 5e-4
    assert run("gap", "--n", "200", "--p", "0.05", "--s", "50", "--seed", "1")[0] == EXIT_PARSE


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "stochmatch", "generate", "example-6.2"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["online"][0]["id"] == "v"
    proc = subprocess.run([sys.executable, "-m", "stochmatch", "verify", "nothing"], capture_output=True, text=True)
    assert proc.returncode == EXIT_PARSE
