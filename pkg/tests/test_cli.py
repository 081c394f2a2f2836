import csv
import json
import math

import numpy as np
import pytest

from commuprop import cli
from commuprop.generator import GeneratorSum, generator_to_json
from commuprop.linalg import matrix_to_json
from commuprop.quantum import SIGMA_1, SIGMA_2


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


@pytest.fixture
def ex1(tmp_path):
    return write(
        tmp_path,
        "ex1.json",
        {
            "problem": "example1",
            "params": {"gamma": 1, "a1": "sin(t)", "a2": "cos(t)", "a3": 1},
            "rho0": matrix_to_json(np.diag([1.0, 0.0])),
        },
    )


@pytest.fixture
def noncomm(tmp_path):
    g = GeneratorSum([(1, SIGMA_1), ("t", SIGMA_2)], (-1, 2))
    return write(tmp_path, "noncomm.json", generator_to_json(g))


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_check_commutative(capsys, ex1):
    code, out, _ = run(capsys, "check", ex1)
    assert code == 0
    report = json.loads(out)
    assert report["commutative"] is True and report["grid_size"] == 33


def test_check_non_commutative(capsys, noncomm):
    code, out, _ = run(capsys, "check", noncomm)
    assert code == 1
    report = json.loads(out)
    t, s = report["witness"]
    assert report["max_pairwise"] == pytest.approx(2 * math.sqrt(2) * 3.0)
    assert abs(s - t) > 0


def test_check_tolerance_flag(capsys, noncomm):
    assert run(capsys, "check", noncomm, "--tol", "10")[0] == 0


def test_malformed_json(capsys, tmp_path):
    code, _, err = run(capsys, "check", write(tmp_path, "bad.json", "{not json"))
    assert code == 2 and "malformed JSON" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["check"],
        ["frobnicate", "x.json"],
        ["check", "/nonexistent/spec.json"],
    ],
)
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_unknown_problem_param(capsys, tmp_path):
    spec = write(tmp_path, "p.json", {"problem": "example1", "params": {"beta": 1}})
    assert run(capsys, "check", spec)[0] == 2


def test_bad_coefficient_expression(capsys, tmp_path):
    spec = write(tmp_path, "p.json", {"problem": "example1", "params": {"a1": "log(t)"}})
    code, _, err = run(capsys, "check", spec)
    assert code == 2 and "log" in err


def test_solve_writes_21_rows(capsys, tmp_path, ex1):
    prefix = tmp_path / "sol"
    code, out, _ = run(capsys, "solve", ex1, "--method", "zhu", "--out", prefix)
    assert code == 0
    rows = read_csv(f"{prefix}.csv")
    assert len(rows) == 22
    assert rows[0][0] == "t" and len(rows[0]) == 1 + 2 * 16
    assert [float(r[0]) for r in rows[1:]] == pytest.approx(np.linspace(0, 2, 21))
    data = json.loads((tmp_path / "sol.json").read_text())
    assert len(data["times"]) == 21
    assert json.loads(out)["rows"] == 21


def test_solve_compare(capsys, tmp_path, ex1):
    code, out, _ = run(capsys, "solve", ex1, "--compare", "zhu,rk4", "--out", tmp_path / "c")
    assert code == 0
    assert json.loads(out)["max_residual"] <= 1e-8


def test_solve_refuses_non_commutative(capsys, tmp_path, noncomm):
    prefix = tmp_path / "refused"
    for method in ("exact", "zhu"):
        code, _, err = run(capsys, "solve", noncomm, "--method", method, "--out", prefix)
        assert code == 1 and "commutative" in err
    assert list(tmp_path.glob("refused*")) == []


def test_solve_rk4_non_commutative(capsys, tmp_path, noncomm):
    code, _, _ = run(capsys, "solve", noncomm, "--method", "rk4", "--steps", "200", "--times", "0:1:5", "--out", tmp_path / "r")
    assert code == 0
    assert len(read_csv(tmp_path / "r.csv")) == 6


def test_solve_to_stdout(capsys, ex1):
    code, out, err = run(capsys, "solve", ex1, "--times", "0:1:3")
    assert code == 0
    assert out.splitlines()[0].startswith("t,re_0_0")
    assert json.loads(err)["rows"] == 3


def test_solve_bad_method_and_times(capsys, ex1):
    assert run(capsys, "solve", ex1, "--method", "euler")[0] == 2
    assert run(capsys, "solve", ex1, "--times", "0-2")[0] == 2
    assert run(capsys, "solve", ex1, "--times", "0:30:4")[0] == 2
    assert run(capsys, "solve", ex1, "--compare", "zhu")[0] == 2


def test_times_from_spec(capsys, tmp_path):
    spec = write(tmp_path, "t.json", {"problem": "example2", "times": {"start": 0, "stop": 1, "num": 6}})
    code, _, err = run(capsys, "solve", spec)
    assert code == 0 and json.loads(err)["rows"] == 6


def test_solve_output_is_deterministic(capsys, tmp_path, ex1):
    for name in ("a", "b"):
        assert run(capsys, "solve", ex1, "--parallel", "--out", tmp_path / name)[0] == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_evolve_trace_column(capsys, tmp_path, ex1):
    code, out, _ = run(capsys, "evolve", ex1, "--out", tmp_path / "ev")
    assert code == 0
    rows = read_csv(tmp_path / "ev.csv")
    header = rows[0]
    assert header[-3:] == ["min_eig", "trace_defect", "hermiticity_defect"]
    k = header.index("trace_defect")
    assert all(float(r[k]) <= 1e-9 for r in rows[1:])
    assert json.loads(out)["max_trace_defect"] <= 1e-9


def test_evolve_rejects_trace_two(capsys, tmp_path):
    spec = write(tmp_path, "p.json", {"problem": "example1", "rho0": matrix_to_json(np.diag([1.0, 1.0]))})
    code, _, err = run(capsys, "evolve", spec, "--out", tmp_path / "x")
    assert code == 2 and "trace" in err
    assert not (tmp_path / "x.csv").exists()


def test_evolve_needs_rho0(capsys, tmp_path):
    spec = write(tmp_path, "p.json", {"problem": "example2"})
    assert run(capsys, "evolve", spec)[0] == 2


def test_evolve_example2_defaults(capsys, tmp_path):
    rho0 = matrix_to_json(np.array([[0.5, 0.5], [0.5, 0.5]]))
    spec = write(tmp_path, "p.json", {"problem": "example2", "rho0": rho0})
    code, _, _ = run(capsys, "evolve", spec, "--out", tmp_path / "e2")
    assert code == 0 and (tmp_path / "e2.csv").exists()
    # the propagated state agrees with an rk4 run of the same spec
    assert run(capsys, "evolve", spec, "--method", "rk4", "--out", tmp_path / "e2rk")[0] == 0
    a = np.array(read_csv(tmp_path / "e2.csv")[1:], dtype=float)[:, :9]
    b = np.array(read_csv(tmp_path / "e2rk.csv")[1:], dtype=float)[:, :9]
    assert np.max(np.abs(a - b)) <= 1e-8


def test_evolve_unphysical(capsys, tmp_path):
    spec = write(
        tmp_path,
        "p.json",
        {"problem": "example1", "params": {"gamma": -1}, "rho0": matrix_to_json(np.diag([1.0, 0.0]))},
    )
    assert run(capsys, "evolve", spec)[0] == 1
    assert run(capsys, "evolve", spec, "--allow-unphysical", "--out", tmp_path / "u")[0] == 0


def test_custom_problem(capsys, tmp_path):
    g = GeneratorSum([("0.5", np.diag([0, -1, -1, 0]).astype(complex))], (-1, 3))
    spec = write(
        tmp_path,
        "c.json",
        {"problem": "custom", "generator": generator_to_json(g), "rho0": matrix_to_json(np.full((2, 2), 0.5))},
    )
    assert run(capsys, "evolve", spec, "--times", "0:2:3", "--out", tmp_path / "c")[0] == 0
    last = read_csv(tmp_path / "c.csv")[-1]
    # re_0_1 decays as exp(-0.5 t)
    assert float(last[2]) == pytest.approx(0.5 * math.exp(-1.0), rel=1e-12)


def test_decompose_constant(capsys, tmp_path):
    g = GeneratorSum([(2, SIGMA_1)], (-1, 1))
    code, out, _ = run(capsys, "decompose", write(tmp_path, "g.json", generator_to_json(g)))
    assert code == 0 and len(json.loads(out)["basis"]) == 1


def test_decompose_example2(capsys, tmp_path):
    spec = write(
        tmp_path,
        "p.json",
        {
            "problem": "example2",
            "params": {"mu": 0.3, "gamma": "1 + 0.5*sin(t)", "eps": "2*cos(t)", "c01": "0.2*t", "c10": "0.2*t"},
        },
    )
    code, _, _ = run(capsys, "decompose", spec, "--out", tmp_path / "d.json")
    assert code == 0
    dec = json.loads((tmp_path / "d.json").read_text())
    assert len(dec["basis"]) == 3
    assert max(dec["residuals"]) <= 1e-9 and len(dec["residuals"]) == 33


def test_decompose_refuses_non_commutative(capsys, noncomm):
    assert run(capsys, "decompose", noncomm)[0] == 1


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "commuprop", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "decompose" in proc.stdout
