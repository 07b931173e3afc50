import io
import json
import os
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

import numpy as np
import pytest

from conftest import simulate_censored
from discrete_bilal.cli import RunConfig, compare_families, ingest_csv, main, run
from discrete_bilal.data import DataError, write_csv

GOLDEN = Path(__file__).parent / "golden"


def _run(argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(argv)
    return code, out.getvalue(), err.getvalue()


def _shape(obj):
    """Key structure of a JSON document, with leaf values replaced by type names."""
    if isinstance(obj, dict):
        return {k: _shape(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_shape(obj[0])] if obj else []
    return type(obj).__name__


def _golden(name, report):
    path = GOLDEN / f"{name}.json"
    shape = _shape(report)
    if os.environ.get("UPDATE_GOLDEN"):
        path.write_text(json.dumps(shape, indent=2, sort_keys=True) + "\n")
    assert shape == json.loads(path.read_text())


def test_fit_leukemia_report():
    code, out, _ = _run(["fit", "--data", "builtin:leukemia", "--family", "db", "--setting", "complete"])
    assert code == 0
    rep = json.loads(out)
    assert set(rep) == {"config", "data_summary", "fit", "diagnostics", "version"}
    assert rep["fit"]["parameters"]["beta"]["estimate"] == pytest.approx(0.09085, abs=5e-4)
    assert rep["config"]["seed"] == 0 and rep["version"]["schema"] == 1
    _golden("fit", rep)


def test_fit_pelvic_cure():
    code, out, _ = _run(["fit", "--data", "builtin:pelvic", "--setting", "cure"])
    rep = json.loads(out)
    assert code == 0
    assert rep["fit"]["parameters"]["beta"]["estimate"] == pytest.approx(0.02859, abs=5e-4)
    assert rep["fit"]["parameters"]["eta"]["estimate"] == pytest.approx(0.57985, abs=5e-3)


def test_reports_are_deterministic():
    argv = ["diagnose", "--data", "builtin:pelvic", "--setting", "cure", "--seed", "3"]
    a, b = _run(argv)[1], _run(argv)[1]
    assert a == b
    rep = json.loads(a)
    assert {"quantile_residuals", "kaplan_meier", "fitted_survival", "comparison"} <= set(rep["diagnostics"])
    _golden("diagnose", rep)


def test_bayes_report():
    argv = ["bayes", "--data", "builtin:leukemia", "--setting", "complete",
            "--iterations", "6000", "--burn-in", "1000", "--thin", "5", "--seed", "4"]
    code, out, _ = _run(argv)
    assert code == 0
    rep = json.loads(out)
    assert "chains" in rep and rep["config"]["mcmc"]["iterations"] == 6000
    assert rep["fit"]["beta"]["hdi"][0] < rep["fit"]["beta"]["hdi"][1]
    assert out == _run(argv)[1]
    _golden("bayes", rep)


def test_simulate_round_trip(tmp_path):
    path = tmp_path / "sim.csv"
    code, _, _ = _run(["simulate", "--beta", "0.2", "--n", "1000", "--censor-admin", "30", "--seed", "7",
                       "--output", "csv", "--out", str(path)])
    assert code == 0
    code, out, _ = _run(["fit", "--data", str(path)])
    p = json.loads(out)["fit"]["parameters"]["beta"]
    assert abs(p["estimate"] - 0.2) < 3 * p["std_error"]


def test_simulate_cure_fraction(tmp_path):
    path = tmp_path / "sim.csv"
    _run(["simulate", "--beta", "0.1", "--n", "2000", "--eta", "0.3", "--censor-admin", "150", "--seed", "1",
          "--output", "csv", "--out", str(path)])
    data = ingest_csv(path)
    assert 0.25 < data.n_censored / data.n < 0.35


def test_text_output():
    code, out, _ = _run(["fit", "--data", "builtin:pelvic", "--setting", "cure", "--output", "text"])
    assert code == 0
    assert "95% CI" in out and "beta" in out and "eta" in out


@pytest.mark.parametrize("cmd", ["fit", "km", "diagnose"])
def test_csv_output(cmd):
    code, out, _ = _run([cmd, "--data", "builtin:pelvic", "--output", "csv"])
    assert code == 0 and out.count("\n") >= 2


def test_two_row_file(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("t,s\n3,1\n7,0\n")
    data = ingest_csv(path, "t", "s")
    assert data.n == 2 and data.n_events == 1


def test_non_integer_time_exit_code(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("t,s\n3.5,1\n")
    code, out, err = _run(["fit", "--data", str(path), "--time-col", "t", "--status-col", "s"])
    assert code == 2 and out == ""
    e = json.loads(err)["error"]
    assert e["category"] == "input_error" and e["row"] == 1 and "row 1" in e["message"]


@pytest.mark.parametrize(
    "argv",
    [
        ["fit", "--data", "/no/such/file.csv"],
        ["fit", "--data", "builtin:covid"],
        ["fit", "--data", "builtin:pelvic", "--setting", "complete"],
        ["simulate", "--beta", "0.1", "--n", "10", "--eta", "0.3"],
        ["bayes", "--data", "builtin:leukemia", "--iterations", "500", "--burn-in", "450"],
    ],
)
def test_input_errors(argv):
    code, _, err = _run(argv)
    assert code == 2
    assert json.loads(err)["error"]["category"] == "input_error"


def test_bad_status(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("time,status\n3,1\n4,5\n")
    code, _, err = _run(["fit", "--data", str(path)])
    assert code == 2 and json.loads(err)["error"]["line"] == 3
    code, _, _ = _run(["fit", "--data", str(path), "--status-censored-value", "5"])
    assert code == 0


def test_convergence_failure_exit_code():
    code, out, err = _run(["fit", "--data", "builtin:pelvic", "--family", "burr_hatke", "--setting", "cure"])
    assert code == 3
    assert json.loads(err.strip().split("\n")[-1])["error"]["category"] == "convergence_failure"
    assert json.loads(out)["fit"]["converged"] is False


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc, redirect_stderr(io.StringIO()):
        main(["fit"])
    assert exc.value.code == 2


def test_run_config_consistency():
    from discrete_bilal.bayes import McmcConfig

    with pytest.raises(ValueError):
        RunConfig("fit", data="builtin:leukemia", mcmc=McmcConfig())
    with pytest.raises(ValueError):
        RunConfig("fit")
    cfg = RunConfig("km", data="builtin:leukemia", seed=9)
    code, report, _ = run(cfg)
    assert code == 0 and report["config"]["seed"] == 9


# family comparison ---------------------------------------------------------------------------


def test_leukemia_ranking(leukemia):
    table = compare_families(leukemia, "complete")
    aic = {r["family"]: r["aic"] for r in table}
    for good in ("db", "lindley"):
        for bad in ("rayleigh", "burr_hatke"):
            assert aic[good] < aic[bad]
    assert [r["rank"] for r in table] == [1, 2, 3, 4, 5]
    assert all(a["aic"] <= b["aic"] for a, b in zip(table, table[1:]))


def test_single_family_table(leukemia):
    table = compare_families(leukemia, "complete", ["db"])
    assert len(table) == 1 and table[0]["status"] == "ok"


def test_failures_stay_in_table(pelvic):
    table = compare_families(pelvic, "cure")
    assert len(table) == 5
    bh = next(r for r in table if r["family"] == "burr_hatke")
    assert bh["status"] == "not_converged"


def test_db_wins_on_db_data():
    rng = np.random.default_rng(8)
    top2 = 0
    for _ in range(50):
        data = simulate_censored(0.1, 500, rng, censor_frac=0.0)
        table = compare_families(data, "complete")
        top2 += any(r["family"] == "db" for r in table[:2])
    assert top2 >= 40


def test_pelvic_export_ingest_round_trip(tmp_path, pelvic):
    path = tmp_path / "p.csv"
    write_csv(pelvic, path)
    assert ingest_csv(path) == pelvic
    with pytest.raises(DataError):
        ingest_csv(path, "nope", "status")
