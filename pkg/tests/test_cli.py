import csv
import json
import math
import subprocess
import sys

import pytest

from univpep import methods as mt
from univpep.cli import PEP_CSV_COLUMNS, main

GNM1 = {"class": {"kind": "qsc", "M": 1.0}, "method": {"kind": "gnm1", "M": 1.0}, "N": 1,
        "measure": "eta_last", "initial": {"kind": "eta", "R": 0.5}}
SC_NEWTON = {"class": {"kind": "sc"}, "method": {"kind": "newton"}, "N": 1,
             "measure": "newton_decrement_last", "initial": {"kind": "newton_decrement", "R": 0.5}}


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_check_exit_codes(capsys):
    hl = json.dumps({"kind": "hl", "M": 1.0})
    remark = json.dumps([[0, 0, 0, 0], [1, 1, 0, 0]])
    code, out, _ = _run(capsys, "check", remark, "--class", hl)
    assert code == 2 and json.loads(out)["feasible"] is False
    samples = [[x, math.exp(x), math.exp(x), math.exp(x)] for x in (-1.0, 0.0, 0.5)]
    points = [[x, None, g, h] for x, _, g, h in samples]
    code, out, _ = _run(capsys, "check", json.dumps({"points": points, "class": {"kind": "qsc", "M": 1.0}}))
    assert code == 0 and json.loads(out)["feasible"] is True
    code, _, err = _run(capsys, "check", "[[0, 0", "--class", hl)
    assert code == 1 and "malformed" in err
    code, _, err = _run(capsys, "check", json.dumps([[0, 0, 0, 0]]))
    assert code == 1 and "class" in err


def test_bounds(capsys):
    code, out, _ = _run(capsys, "bounds", "sc_newton", "lam=0.5")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(0.2858984, abs=1e-7)
    code, out, _ = _run(capsys, "bounds", "gnm1_qsc", "eta=0.4", "--compose", 2)
    assert json.loads(out)["values"] == pytest.approx(mt.compose(mt.gnm1_qsc, 0.4, 2))
    code, out, _ = _run(capsys, "bounds", "--list")
    assert "cnm_one_step" in json.loads(out)
    assert _run(capsys, "bounds", "nope")[0] == 1
    assert _run(capsys, "bounds", "sc_newton", "lam=2")[0] == 1


def test_worst_fn_and_run_method(capsys, tmp_path):
    code, out, _ = _run(capsys, "worst-fn", "cnm_tight", "M=1")
    assert code == 0 and json.loads(out)["function"]["segments"]
    code, _, _ = _run(capsys, "worst-fn", "cnm_tight", "--samples", -1, 1, 5, "--out", tmp_path)
    rows = _rows(tmp_path / "cnm_tight_samples.csv")
    assert len(rows) == 5 and float(rows[0]["f"]) == pytest.approx(-1 / 6 - 1 / 2)
    code, out, _ = _run(capsys, "run-method", "cnm_tight", "--method", '{"kind": "cnm", "M": 1}', "--x0", 0, "-N", 1)
    assert code == 0
    row = out.splitlines()[2].split(",")
    assert float(row[1]) == pytest.approx(-2.0) and float(row[3]) == pytest.approx(4.0)


@pytest.mark.parametrize("problem, expected", [(GNM1, 0.3021938), (SC_NEWTON, 0.2858984)])
def test_pep_points(capsys, problem, expected):
    code, out, _ = _run(capsys, "pep", json.dumps(problem), "--restarts", 32)
    sol = json.loads(out)
    assert code == 0
    assert sol["value"] == pytest.approx(expected, abs=1e-3)
    assert sol["feasibility_residual"] <= 1e-8 and sol["replay_residual"] <= 1e-6


def test_pep_csv_is_reproducible(capsys, tmp_path):
    path = tmp_path / "gnm1.json"
    path.write_text(json.dumps(GNM1))
    texts = []
    for sub in ("a", "b"):
        assert _run(capsys, "pep", path, "--restarts", 16, "--seed", 7, "--out", tmp_path / sub)[0] == 0
        texts.append((tmp_path / sub / "gnm1.csv").read_bytes())
    assert texts[0] == texts[1]
    rows = _rows(tmp_path / "a" / "gnm1.csv")
    assert tuple(rows[0]) == PEP_CSV_COLUMNS and rows[0]["seed"] == "7"


def test_pep_bad_problem(capsys):
    bad = dict(GNM1, measure="func_gap_last")
    assert _run(capsys, "pep", json.dumps(bad))[0] == 1


def test_reproduce_gradient_regimes(capsys, tmp_path):
    code, out, _ = _run(capsys, "reproduce", "fig9_gm_regimes", "--out", tmp_path)
    assert code == 0 and len(json.loads(out)["written"]) == 2
    for suffix in ("f", "g"):
        rows = _rows(tmp_path / f"fig9_gm_regimes_{suffix}.csv")
        assert len(rows) == 6
        for r in rows[:-1]:
            assert float(r["ratio"]) == pytest.approx(float(r["bound_ratio"]), rel=1e-9)


def test_reproduce_small_overrides(capsys, tmp_path):
    args = ["--restarts", 32, "--out", tmp_path]
    assert _run(capsys, "reproduce", "fig14_method_comparison", "mus=[2.0]", 'methods=["gnm2"]', *args)[0] == 0
    (row,) = _rows(tmp_path / "fig14_method_comparison.csv")
    assert row["method"] == "gnm2"
    assert float(row["worst_abs_g1"]) <= float(row["analytic_bound_if_any"]) * (1 + 1e-6)
    assert _run(capsys, "reproduce", "fig7_cnm_alpha", "Ms=[1.0]", "alphas=[1.0]", *args)[0] == 0
    (row,) = _rows(tmp_path / "fig7_cnm_alpha.csv")
    assert float(row["worst_abs_g1"]) == pytest.approx(float(row["analytic_bound_if_any"]), abs=1e-3)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "univpep", "bounds", "cnm_descent_improved", "g_next=4", "M=1"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["value"] == pytest.approx(10 / 3)
