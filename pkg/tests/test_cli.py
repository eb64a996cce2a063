import csv
import io
import json
import subprocess
import sys

import pytest

from credalnet.cli import main

from helpers import DATA, NETWORKS

NETB = str(NETWORKS / "netb.cn")


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_query_plain():
    code, out, _ = run("query", "--net", NETB, "--target", "x=0", "--evidence", "y=1",
                       "--method", "enum")
    assert code == 0
    assert "lower=0.870968 upper=0.947368" in out
    assert out.startswith("p(x=0 | y=1) [enum]")


def test_query_all_values_of_a_target():
    code, out, _ = run("query", "--net", NETB, "--target", "x", "--evidence", "y=1")
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 2
    assert "lower=0.052632 upper=0.129032" in lines[1]


def test_point_valued_query():
    # observing x leaves only the precise cpt of y
    code, out, _ = run("query", "--net", NETB, "--target", "y=1", "--evidence", "x=0")
    assert code == 0
    assert "lower=upper=0.900000" in out


def test_query_json_and_csv():
    code, out, _ = run("query", "--net", NETB, "--target", "x=0", "--evidence", "y=1",
                       "--method", "joint", "--format", "json")
    assert code == 0
    (rec,) = json.loads(out)["results"]
    assert rec["method"] == "joint"
    assert rec["lower"] == pytest.approx(27 / 31, abs=1e-12)
    assert rec["upper"] == pytest.approx(18 / 19, abs=1e-12)
    code, out, _ = run("query", "--net", NETB, "--target", "x", "--evidence", "y=1",
                       "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["label", "method", "lower", "upper"] and len(rows) == 3


@pytest.mark.parametrize("method", ["enum", "joint", "gradient", "qem", "anneal", "lavine",
                                    "ne-lp"])
def test_every_method_on_net_b(method):
    code, out, _ = run("query", "--net", NETB, "--target", "x=0", "--evidence", "y=1",
                       "--method", method)
    assert code == 0
    assert "upper=0.947368" in out


def test_utility_queries():
    net = str(NETWORKS / "car_lights.cn")
    code, out, _ = run("query", "--net", net, "--utility", "repair")
    assert code == 0 and "expectation(repair)" in out
    code, out, _ = run("query", "--net", net, "--utility", "repair", "--stat", "variance",
                       "--evidence", "Starts=No")
    assert code == 0 and "variance(repair)" in out


def test_validate():
    code, out, _ = run("validate", "--net", NETB)
    assert code == 0 and out.startswith("ok: 2 variables, 1 credal nodes")


def test_validate_cyclic():
    code, out, err = run("validate", "--net", str(DATA / "cyclic.cn"))
    assert code == 2
    assert "cycle" in err and out == ""


def test_missing_file():
    code, _, err = run("validate", "--net", str(DATA / "no-such-file.cn"))
    assert code == 2 and "cannot read" in err


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["query", "--net", NETB],
    ["query", "--net", NETB, "--target", "x=0", "--method", "magic"],
    ["query", "--net", NETB, "--target", "x=0", "--evidence", "x=1"],
    ["query", "--net", NETB, "--target", "x=0", "--evidence", "y"],
    ["sweep", "--net", NETB, "--node", "x", "--from", "0.1", "--to", "0.2"],
])
def test_usage_errors(argv):
    code, _, _ = run(*argv)
    assert code == 1


@pytest.mark.parametrize("argv", [
    ["query", "--net", NETB, "--target", "z=0"],
    ["query", "--net", NETB, "--target", "x=7"],
    ["query", "--net", NETB, "--target", "x=0", "--evidence", "y=maybe"],
])
def test_input_errors(argv):
    code, _, err = run(*argv)
    assert code == 2 and "input error" in err


def test_zero_probability_evidence_is_a_computation_error(tmp_path):
    path = tmp_path / "det.cn"
    path.write_text("variable a { values: 0, 1 }\nvariable b { values: 0, 1 }\nparents b: a\n"
                    "credal a { class: vertices; v1: 1, 0; v2: 0.9, 0.1 }\n"
                    "cpt b { 0: 1, 0\n 1: 1, 0 }\n")
    code, _, err = run("query", "--net", str(path), "--target", "a=0", "--evidence", "b=1")
    assert code == 3 and "computation error" in err


def test_sweep_csv():
    code, out, _ = run("sweep", "--net", NETB, "--node", "x", "--param", "eps", "--from", "0.1",
                       "--to", "0.3", "--steps", "2", "--target", "x=0", "--evidence", "y=1")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["eps"] for r in rows] == ["0.1", "0.2", "0.3"]
    assert float(rows[1]["lower"]) == pytest.approx(27 / 31, abs=1e-12)
    widths = [float(r["upper"]) - float(r["lower"]) for r in rows]
    assert widths == sorted(widths)


def test_sweep_unknown_parameter():
    code, _, err = run("sweep", "--net", NETB, "--node", "x", "--param", "delta", "--from", "0.1",
                       "--to", "0.2", "--target", "x=0")
    assert code == 2 and "delta" in err


@pytest.mark.parametrize("method", ["qem", "lavine", "ne-lp"])
def test_oracle_net_b(method):
    code, out, _ = run("oracle", "--net", NETB, "--target", "x=0", "--evidence", "y=1",
                       "--method", method)
    assert code == 0, out
    assert out.rstrip().endswith("ok")


def test_oracle_reports_mismatch():
    # a coarse bisection cannot meet a tight oracle tolerance
    code, out, _ = run("oracle", "--net", NETB, "--target", "x=0", "--evidence", "y=1",
                       "--method", "lavine", "--tol", "0.01", "--oracle-tol", "1e-9")
    assert code == 3 and "MISMATCH" in out


def test_dump_lp(tmp_path):
    path = tmp_path / "lp.txt"
    code, _, _ = run("query", "--net", NETB, "--target", "x=0", "--evidence", "y=1",
                     "--method", "ne-lp", "--dump-lp", str(path))
    assert code == 0
    lines = path.read_text().splitlines()
    assert lines[0].startswith("min ")
    n = len(lines[0].split()) - 1
    assert all(len(line.split()) == n + 2 for line in lines[1:])
    assert any(" = " in line for line in lines[1:])


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "credalnet", "query", "--net", NETB,
                           "--target", "x=0", "--evidence", "y=1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "lower=0.870968 upper=0.947368" in proc.stdout
