import csv
import json

import numpy as np
import pytest

from osborne.cli import RunConfig, balance_matrix, main
from osborne.core import SparseNonnegMatrix
from osborne.matrix_io import ParseError, parse_matrix
from osborne.preprocessing import canonicalize
from osborne.report import dumps

from conftest import random_strongly_connected

HEADER = "%%MatrixMarket matrix coordinate real general\n"


def dense(m):
    return m.toarray() if hasattr(m, "toarray") else np.asarray(m)


@pytest.fixture
def files(tmp_path):
    def write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    return write


def test_parse_matrix_market(files):
    p = files("a.mtx", HEADER + "% comment\n2 2 2\n1 2 4.0\n2 1 1.0\n")
    assert np.array_equal(dense(parse_matrix(p, "matrix-market")), [[0, 4], [1, 0]])


def test_parse_dense_csv(files):
    p = files("a.csv", "0,4\n1,0\n")
    assert np.array_equal(parse_matrix(p, "dense-csv"), [[0, 4], [1, 0]])


def test_parse_duplicates_summed(files):
    p = files("d.mtx", HEADER + "2 2 3\n1 2 1.0\n1 2 3.0\n2 1 1\n")
    assert dense(parse_matrix(p))[0, 1] == 4.0


@pytest.mark.parametrize(
    "text, line",
    [
        ("%%MatrixMarket matrix coordinate complex general\n2 2 0\n", 1),
        ("%%MatrixMarket matrix array real general\n2 2\n", 1),
        ("not a header\n", 1),
        (HEADER + "2 3 0\n", 2),
        (HEADER + "2 2 1\n1 x 2.0\n", 3),
        (HEADER + "2 2 1\n3 1 2.0\n", 3),
    ],
)
def test_parse_errors_carry_line(files, text, line):
    p = files("bad.mtx", text)
    with pytest.raises(ParseError) as exc:
        parse_matrix(p)
    assert exc.value.line == line and f":{line}:" in str(exc.value)


def test_parse_csv_errors(files):
    with pytest.raises(ParseError):
        parse_matrix(files("r.csv", "0,1\n1,0,2\n"), "dense-csv")
    with pytest.raises(ParseError):
        parse_matrix(files("s.csv", "0,1,2\n1,0,2\n"), "dense-csv")


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(epsilon=0.7)
    with pytest.raises(ValueError):
        RunConfig(p=0.5)
    with pytest.raises(ValueError):
        RunConfig(variant="nope")


def write_csv(tmp_path, a):
    p = tmp_path / "a.csv"
    np.savetxt(p, a, delimiter=",", fmt="%.17g")
    return str(p)


def run_cli(tmp_path, *args):
    rep = tmp_path / "report.json"
    code = main([*args, "--report", str(rep)])
    return code, (json.loads(rep.read_text()) if rep.exists() else None)


def test_cli_cycle_strict(files, tmp_path):
    p = files("c3.mtx", HEADER + "3 3 3\n1 2 1.0\n2 3 2.0\n3 1 4.0\n")
    trace = tmp_path / "t.csv"
    code, rep = run_cli(tmp_path, "--input", p, "--epsilon", "0.01", "--trace", str(trace))
    assert code == 0 and rep["termination"] == "balanced"
    assert rep["max_imbalance"] <= 0.01
    A = SparseNonnegMatrix.from_entries(3, [(0, 1, 1.0), (1, 2, 2.0), (2, 0, 4.0)])
    x = np.array(rep["x"])
    assert np.allclose(A.vals * np.exp(x[A.src] - x[A.dst]), 2.0, rtol=0.01)
    rows = list(csv.reader(trace.open()))
    assert rows[0] == ["t", "s", "index", "drop", "f", "grad_norm", "active_count"]


def test_cli_iteration_cap(files, tmp_path):
    a = random_strongly_connected(6, 0.6, np.random.default_rng(0)).to_dense()
    p = write_csv(tmp_path, a)
    code, rep = run_cli(
        tmp_path, "--input", p, "--format", "dense-csv", "--variant", "round_robin",
        "--max-iters", "1",
    )
    assert code == 2 and rep["termination"] == "iteration_cap"


def test_cli_reducible(files, tmp_path):
    # two 2-cycles joined by one arc, plus an isolated sink node
    text = HEADER + "5 5 6\n1 2 1\n2 1 3\n3 4 2\n4 3 5\n2 3 7\n4 5 1\n"
    code, rep = run_cli(tmp_path, "--input", files("r.mtx", text))
    assert code == 0 and not rep["strongly_connected"]
    status = {tuple(c["indices"]): c["status"] for c in rep["components"]}
    assert status[(0, 1)] == "balanced" and status[(2, 3)] == "balanced"
    assert status[(4,)] == "unbalanceable: cross-component"


def test_cli_nothing_to_balance(files, tmp_path):
    code, rep = run_cli(tmp_path, "--input", files("d.csv", "3\n"), "--format", "dense-csv")
    assert code == 0 and rep["termination"] == "nothing_to_balance"


def test_cli_usage_and_parse_errors(files, tmp_path, capsys):
    assert main(["--input", files("bad.mtx", "junk\n")]) == 1
    assert main(["--input", files("ok.csv", "0,1\n1,0\n"), "--format", "dense-csv",
                 "--epsilon", "0.9"]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["--variant", "strict"])
    assert exc.value.code == 1


def test_cli_lp(files, tmp_path):
    rng = np.random.default_rng(4)
    a = random_strongly_connected(5, 0.6, rng).to_dense() * rng.choice([-1, 1], (5, 5))
    p = write_csv(tmp_path, a)
    code, rep = run_cli(tmp_path, "--input", p, "--format", "dense-csv", "--p", "2",
                        "--epsilon", "0.05")
    assert code == 0
    from osborne.diagnostics import lp_imbalance

    assert np.allclose(rep["x_lp"], np.array(rep["x"]) / 2)
    assert lp_imbalance(a, np.array(rep["x_lp"]), 2).max() <= 0.05 + 1e-9


def test_report_round_trip():
    values = [0.1, 1 / 3, 2.0**-1074, 1e300, -7.25, 123456789.123456789]
    back = json.loads(dumps({"v": values, "k": 3, "b": True, "s": "x"}))
    assert back["v"] == values and back["k"] == 3 and back["b"] is True


@pytest.mark.parametrize("variant", ["strict", "greedy", "uniform_random"])
def test_balance_matrix_deterministic(variant):
    rng = np.random.default_rng(11)
    raw = random_strongly_connected(12, 0.3, rng).to_dense()
    cfg = RunConfig(variant=variant, seed=3, epsilon=0.01, workers=2)
    r1, t1 = balance_matrix(raw, cfg)
    r2, t2 = balance_matrix(raw, cfg)
    r1.pop("wall_time"), r2.pop("wall_time")
    assert dumps(r1) == dumps(r2) and t1 == t2
    A = canonicalize(raw).matrix
    assert r1["f_initial"] == pytest.approx(A.total)
