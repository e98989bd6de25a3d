import csv
import math

import pytest

from blowup import harness
from blowup.cli import main
from blowup.errors import HypothesisViolation
from blowup.harness import (CSV_COLUMNS, RunBudget, VerdictRow, budget_from_config, build_case, emit_report,
                            parse_config, report_csv, run_cases)


def _row(cid="A1", ok=True):
    return VerdictRow(cid, "h=x", 1.0, 1.01, 2.0, 2.02, 0.01, 1e-3, ok)


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_empty_report_is_header_only(tmp_path):
    assert emit_report([], tmp_path) == 0
    assert _read(tmp_path / "verdicts.csv") == [list(CSV_COLUMNS)]


def test_failing_row_sets_exit_code(tmp_path):
    assert emit_report([_row(ok=False)], tmp_path) == 1


def test_mixed_rows_are_all_written(tmp_path):
    assert emit_report([_row("A1"), _row("A2", ok=False)], tmp_path) == 1
    rows = _read(tmp_path / "verdicts.csv")
    assert [r[0] for r in rows[1:]] == ["A1", "A2"] and rows[2][-1] == "false"


def test_csv_formatting_is_stable():
    row = VerdictRow("UNIQ", "q=1.5", None, None, None, None, math.pi, None, True)
    assert report_csv([row]).splitlines()[1] == "UNIQ,q=1.5,,,,,3.1415927,,true"


def test_config_parsing():
    cfg = parse_config("# grid\nNr = 1024\nNtheta=128  # finer\n\nrefinement = true\nf = sin:A=2,k=5\ntol_M=1e-7\n")
    b = budget_from_config(cfg)
    assert b.grid.Nr == 1024 and b.grid.Ntheta == 128 and b.refinement
    assert b.source.amplitude == 2.0 and b.source.mode == 5 and b.continuation.tol == 1e-7
    with pytest.raises(ValueError):
        parse_config("Nr 512")
    with pytest.raises(ValueError):
        budget_from_config({"colour": "blue"})
    with pytest.raises(ValueError):
        budget_from_config({"refinement": "maybe"})


@pytest.mark.parametrize("cid,gamma,b", [
    ("A1", 1.0, 1.0), ("A2", 1.0, 0.5), ("B3", 2.0, 4.0), ("B4", 2.0, math.sqrt(2.0)),
    ("T22_h1", 1.0, 1.0), ("T22_h3", 1.0, 0.5), ("T24", 1.0, 2.0 / 3.0), ("T26i", 2.0, 1.0), ("T26ii", 2.0, 1.0),
])
def test_predictions_come_from_formula_modules(cid, gamma, b):
    case = build_case(cid)
    assert case.gamma_pred == pytest.approx(gamma, rel=1e-3)
    assert case.b_pred == pytest.approx(b, rel=1e-3)


def test_gates():
    assert build_case("A1").tol == pytest.approx(0.10)
    assert build_case("B3").tol == pytest.approx(0.05)


def test_power_prediction_subcases():
    assert harness._power_prediction(1.0, 1.5) == pytest.approx((2.0, 4.0))      # gradient dominated
    assert harness._power_prediction(3.0, 1.5) == pytest.approx((2.0, 1.0))      # balanced
    assert harness._power_prediction(3.0, 1.0) == pytest.approx((2.0, math.sqrt(2.0)))


def test_hypothesis_guard():
    with pytest.raises(HypothesisViolation):
        harness._require(False, "outside the range")


def test_unknown_case():
    with pytest.raises(ValueError):
        build_case("Z9")
    with pytest.raises(ValueError):
        run_cases(["Z9"])


def test_run_cheap_case(tmp_path):
    rows = run_cases(["T41iia"], RunBudget(), tmp_path)
    assert len(rows) == 1 and rows[0].passed and rows[0].rel_err < 1e-8


# -- CLI ----------------------------------------------------------------------------------------
def test_cli_classify(capsys):
    assert main(["classify", "--h", "exp:a=4"]) == 0
    out = capsys.readouterr().out
    assert "regime=H3" in out and "lambda=2" in out


def test_cli_constants(capsys):
    assert main(["constants", "--q", "1.5", "--beta", "3"]) == 0
    out = capsys.readouterr().out
    assert "b_q=4" in out and "b_power=1.41421356237" in out


def test_cli_profile(tmp_path):
    out = tmp_path / "p.csv"
    assert main(["profile", "--h", "pow:beta=3", "--transform", "tilde", "--s-min", "0.1", "--s-max", "10",
                 "--out", str(out)]) == 0
    rows = _read(out)
    assert rows[0] == ["s", "F_inv", "F", "F_prime"]
    s, finv = float(rows[1][0]), float(rows[1][1])
    assert finv == pytest.approx(math.sqrt(2.0) / s, rel=1e-9)


def test_cli_ode_explicit(tmp_path):
    out = tmp_path / "o.csv"
    assert main(["ode", "--kind", "explicit:MaximalExpLog", "--R", "10", "--out", str(out)]) == 0
    assert _read(out)[0] == ["x", "u", "du"]


def test_cli_bad_input_exits_2(capsys):
    assert main(["classify", "--h", "cosh:a=1"]) == 2
    assert main(["verify", "--case", "Z9", "--out", "/tmp/unused"]) == 2


def test_cli_verify(tmp_path, capsys):
    assert main(["verify", "--case", "T41iia", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "verdicts.csv").exists()


def test_cli_verify_failure_exits_1(tmp_path):
    cfg = tmp_path / "tight.cfg"
    cfg.write_text("tol_coeff = 1e-9\nNr = 256\nNtheta = 16\n")
    assert main(["verify", "--case", "B3", "--config", str(cfg), "--out", str(tmp_path)]) == 1


def test_cli_solve2d(tmp_path, capsys):
    prefix = tmp_path / "run"
    assert main(["solve2d", "--domain", "disk:R=1", "--h", "pow:beta=1", "--q", "1.5", "--large",
                 "--grid", "Nr=256,Ntheta=16", "--out", str(prefix)]) == 0
    for suffix in ("_field.csv", "_trace.csv", "_report.csv"):
        assert (tmp_path / f"run{suffix}").exists()
    rep = _read(tmp_path / "run_report.csv")
    assert rep[0] == ["case", "gamma_fit", "b_fit", "predicted", "rel_err", "R2"]
    assert float(rep[1][4]) < 0.05
