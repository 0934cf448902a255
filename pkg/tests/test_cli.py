import csv
import io
import subprocess
import sys

import numpy as np
import pytest

from hotad import cli, problems
from hotad.problems import _Entry, Pattern

HEADER = "problem,n,derivative,nnz,nnz_per_n,time_ms,repeats"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_bench_header_and_rows(capsys):
    code, out, _ = run(capsys, "bench", "--problem", "cosine", "--n", "100",
                       "--derivative", "hess", "--derivative", "tensorvec", "--repeat", "2")
    assert code == 0
    assert out.splitlines()[0] == HEADER
    r = rows(out)
    assert [x["derivative"] for x in r] == ["hess", "tensorvec"]
    assert r[1]["nnz"] == "298" and r[1]["nnz_per_n"] == "2.980000"
    assert all(float(x["time_ms"]) > 0 and x["repeats"] == "2" for x in r)


def test_bench_every_derivative(capsys):
    code, out, _ = run(capsys, "bench", "--problem", "heavey_band", "--n", "30", "--band", "5",
                       *[a for k in cli.DERIVATIVES for a in ("--derivative", k)], "--repeat", "1")
    assert code == 0
    r = {x["derivative"]: x for x in rows(out)}
    assert set(r) == set(cli.DERIVATIVES)
    assert r["tensorvec"]["nnz"] == str(problems.expected_nnz(problems.problem_spec("heavey_band", 30, 5)))
    assert int(r["tensor"]["nnz"]) > int(r["tensorvec"]["nnz"]) > 0


def test_bench_is_stable_apart_from_timing(capsys, tmp_path):
    argv = ["bench", "--problem", "all", "--n", "25", "--derivative", "tensorvec",
            "--derivative", "grad", "--repeat", "1"]
    outs = []
    for i in range(2):
        path = tmp_path / f"b{i}.csv"
        assert cli.main(argv + ["--csv", str(path)]) == 0
        outs.append([(r["problem"], r["n"], r["derivative"], r["nnz"], r["nnz_per_n"])
                     for r in rows(path.read_text())])
    assert outs[0] == outs[1]
    assert [p for p, *_ in outs[0][::2]] == problems.suite_names()
    assert capsys.readouterr().out == ""


def test_bench_falls_back_to_scaled_point(capsys, monkeypatch):
    # f = 1 / (x_1 - 1) cannot be evaluated at x_1 = 1
    def emit(n):
        from hotad import elementals as el
        return (np.array([el.ADDC, el.RECIP], np.int8), np.array([0, n], np.int32),
                np.array([-1, -1], np.int32), np.array([-1.0, 0.0]))

    monkeypatch.setitem(problems.REGISTRY, "pole", _Entry(emit, 2, lambda s: Pattern("dense")))
    code, out, err = run(capsys, "bench", "--problem", "pole", "--n", "4", "--derivative", "grad",
                         "--repeat", "1")
    assert code == 0
    assert "x_i = i/n" in err
    assert rows(out)[0]["nnz"] == "1"


def test_bench_scaled_point(capsys):
    code, out, err = run(capsys, "bench", "--problem", "bdexp", "--n", "50", "--derivative",
                         "hess", "--point", "scaled", "--repeat", "1")
    assert code == 0 and err == ""
    assert int(rows(out)[0]["nnz"]) > 0


@pytest.mark.parametrize("argv", [
    ["bench", "--problem", "nosuch", "--n", "10", "--derivative", "hess"],
    ["bench", "--problem", "cosine", "--n", "10", "--derivative", "jacobian"],
    ["bench", "--problem", "cosine", "--n", "0", "--derivative", "hess"],
    ["bench", "--problem", "cosine", "--n", "2", "--derivative", "hess"],
    ["bench", "--problem", "heavey_band", "--n", "10", "--band", "10", "--derivative", "hess"],
    ["check", "--problem", "cosine", "--n", "30", "--tol", "-1"],
    ["check", "--problem", "toy_xysinz", "--n", "30"],
    ["frobnicate"],
    [],
])
def test_usage_errors(capsys, argv):
    assert cli.main(argv) == 2


def test_resource_error(capsys, monkeypatch):
    monkeypatch.setenv("HOTAD_DENSE_CAP", "100")
    code, _, err = run(capsys, "bench", "--problem", "cosine", "--n", "30", "--derivative",
                       "tensor", "--repeat", "1")
    assert code == 3
    assert "ResourceError" in err


def test_check_toy_reports_reference_values(capsys):
    code, out, _ = run(capsys, "check", "--problem", "toy_xysinz", "--n", "3")
    assert code == 0
    assert "reference gradient (2,1,0)" in out
    assert "reference tensor-vector" in out
    assert "FAIL" not in out and "all checks passed" in out


def test_check_heavey_band(capsys):
    code, out, _ = run(capsys, "check", "--problem", "heavey_band", "--n", "30", "--seed", "5")
    assert code == 0
    assert "tensor-vector vs dense tensor" in out


def test_check_failure_exit_code(capsys, monkeypatch):
    monkeypatch.setattr(cli, "fd_tensor_vec", lambda tape, x, d: np.full((tape.n, tape.n), 7.0))
    code, out, _ = run(capsys, "check", "--problem", "cosine", "--n", "10")
    assert code == 1
    assert "failed: cosine: tensor-vector vs finite differences" in out


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "hotad", "bench", "--problem", "quadratic",
                        "--n", "10", "--derivative", "tensorvec", "--repeat", "1"],
                       capture_output=True, text=True, check=False)
    assert p.returncode == 0
    assert p.stdout.splitlines() == [HEADER, p.stdout.splitlines()[1]]
    assert p.stdout.splitlines()[1].startswith("quadratic,10,tensorvec,0,0.000000,")
