import csv
import math

import pytest

from quadcurl.cli import main
from quadcurl.harness import CSV_COLUMNS, LevelFailure, run_convergence
from quadcurl.problems import example1, polynomial_problem


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_report_structure():
    report = run_convergence(example1(), 2, [4, 8], patch_size=12)
    rows = report.rows()
    assert [r["n_elements"] for r in rows] == [32, 128]
    hs = [r["h"] for r in rows]
    assert hs[0] > hs[1]
    assert math.isnan(rows[0]["eoc_l2"]) and math.isfinite(rows[1]["eoc_dg"])
    for r in report.records:
        assert 0 <= r.dg_u <= r.energy_u and r.l2_u >= 0 and r.lambda_m >= 1
    assert report.eta == 30 and report.patch_size == 12
    assert "m=2" in report.table()


def test_polynomial_problem_through_harness():
    report = run_convergence(polynomial_problem(2, 2, seed=1), 2, [3, 6])
    assert max(r.l2_u for r in report.records) <= 1e-9


def test_invalid_arguments():
    with pytest.raises(ValueError):
        run_convergence(example1(), 1, [4])
    with pytest.raises(ValueError):
        run_convergence(example1(), 2, [8, 4])


def test_level_failure_carries_context():
    with pytest.raises(LevelFailure, match="n=1") as info:
        run_convergence(example1(), 2, [1])
    assert info.value.__cause__ is not None


def test_cli_writes_csv(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert main(["--dim", "2", "--example", "1", "--levels", "4,8", "--out", str(out)]) == 0
    rows = read_rows(out)
    assert list(rows[0].keys()) == list(CSV_COLUMNS)
    assert len(rows) == 2 and rows[0]["eoc_l2"] == "nan"
    assert "example1" in capsys.readouterr().out


def test_cli_is_deterministic(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert main(["--dim", "2", "--example", "1", "--order", "3", "--levels", "4,8",
                     "--out", str(p), "--quiet"]) == 0
    a, b = (read_rows(p) for p in paths)
    for ra, rb in zip(a, b):
        ra.pop("solve_seconds")
        rb.pop("solve_seconds")
        assert ra == rb


def test_cli_dump_matrices(tmp_path):
    out = tmp_path / "run.csv"
    assert main(["--dim", "2", "--example", "1", "--levels", "4", "--out", str(out),
                 "--dump-matrices", "--quiet"]) == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert {"run_n4_A.txt", "run_n4_B.txt", "run_n4_C.txt", "run_n4_F.txt",
            "run_n4_patches.csv"} <= set(names)


@pytest.mark.parametrize("argv", [
    ["--dim", "3", "--example", "1"],
    ["--dim", "2", "--example", "2"],
    ["--dim", "4", "--example", "1"],
    ["--dim", "2", "--example", "1", "--order", "1"],
    ["--dim", "2", "--example", "1", "--eta", "-1"],
    ["--dim", "2", "--example", "1", "--patch-size", "5"],
    ["--dim", "2", "--example", "1", "--levels", "8,4"],
    ["--dim", "2", "--example", "1", "--levels", "a,b"],
    ["--dim", "2"],
])
def test_cli_usage_errors(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path / "x.csv")]) == 2
    assert not (tmp_path / "x.csv").exists()


def test_cli_numerical_failure(tmp_path):
    # a 2-element mesh cannot host a 6-element patch
    assert main(["--dim", "2", "--example", "1", "--levels", "1", "--patch-size", "6",
                 "--out", str(tmp_path / "x.csv"), "--quiet"]) == 3


def test_cli_help():
    assert main(["--help"]) == 0


@pytest.mark.slow
def test_example1_multiplier_decays():
    report = run_convergence(example1(), 2, [10, 20, 40])
    p = [r.dg_p for r in report.records]
    assert p[0] > p[1] > p[2]
    eoc = report.eoc_dg
    assert abs(eoc[1] - 1) <= 0.3 and abs(eoc[2] - 1) <= 0.3
