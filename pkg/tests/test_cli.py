import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from fluidcorrect.cli import main
from fluidcorrect.demand import DemandScenarioSet, save_csv
from fluidcorrect.network import save_network, six_class_hospital_network, two_class_flexible_network


@pytest.fixture
def files(tmp_path):
    save_network(two_class_flexible_network(), tmp_path / "flex.json")
    save_network(six_class_hospital_network(), tmp_path / "hospital.json")
    save_csv(DemandScenarioSet(np.array([[[3.0, 0.0]], [[0.0, 3.0]]])), tmp_path / "split.csv")
    save_csv(DemandScenarioSet.single([[3.0, 0.0], [0.0, 3.0]]), tmp_path / "alternating.csv")
    (tmp_path / "b030.json").write_text("[0, 3, 0]")
    (tmp_path / "b303.json").write_text('{"b": [3, 0, 3]}')
    return tmp_path


def run(files, *args):
    out = files / "out.json"
    code = main([*map(str, args), "--out", str(out)])
    data = json.loads(out.read_text()) if out.exists() and out.is_file() else None
    if out.exists() and out.is_file():
        out.unlink()
    return code, data


def test_solve_saa(files):
    code, d = run(files, "solve-saa", "--network", files / "flex.json", "--demand", files / "split.csv")
    assert code == 0
    assert d["schema_version"] == "1.0"
    assert d["b"] == pytest.approx([0, 3, 0])
    assert d["objective"] == pytest.approx(18.0)
    assert "duals" in d


def test_solve_fluid_with_kkt(files):
    code, d = run(files, "solve-fluid", "--network", files / "flex.json", "--demand", files / "alternating.csv", "--lp-method", "simplex")
    assert code == 0 and d["kkt"]["passed"]


def test_check_existence_verdicts(files):
    net = files / "flex.json"
    _, d = run(files, "check-existence", "--network", net, "--staffing", files / "b030.json")
    assert d["verdict"] == "not-in-B"
    _, d = run(files, "check-existence", "--network", net, "--staffing", files / "b303.json")
    assert d["verdict"] == "in-B"
    assert d["membership"]["certificate"]["y"] == [[4.0, 5.0, 5.0]]
    _, d = run(files, "check-existence", "--network", net, "--demand", files / "alternating.csv", "--pools", "from-saa")
    assert d["pools_mode"] == "from-saa" and d["verdict"] == "in-B"


def test_correct_exit_codes(files):
    net = files / "flex.json"
    code, d = run(files, "correct", "--network", net, "--demand", files / "split.csv")
    assert code == 2 and d["outcome"] == "nonexistent"
    code, d = run(files, "correct", "--network", net, "--demand", files / "alternating.csv", "--smooth")
    assert code == 0 and d["check"]["passed"]
    assert np.asarray(d["lambda"]).shape == (2, 2)


def test_hybrid_and_evaluate(files):
    code, d = run(files, "hybrid-solve", "--network", files / "hospital.json", "--synthetic", "--weeks", 1, "--seed", 0)
    assert code == 0 and len(d["components"]) == 4
    code, d = run(files, "evaluate", "--network", files / "flex.json", "--staffing", files / "b303.json", "--demand", files / "split.csv")
    assert code == 0 and d["total"] == pytest.approx(27.0)


def test_forecast_roundtrip(files):
    prof = files / "profile.json"
    code, d = run(files, "forecast", "--network", files / "hospital.json", "--synthetic", "--weeks", 2, "--seed", 1, "--save-profile", prof)
    assert code == 0 and np.asarray(d["forecast"]).shape == (24, 6)
    code, d2 = run(files, "forecast", "--profile", prof, "--model", "ar1")
    assert d2["forecast"] == d["forecast"]


def test_experiment_writes_tables(files):
    out = files / "exp"
    code = main(["experiment", "--sizes", "1,2", "--trials", "1", "--n-test", "3", "--seed", "4", "--out", str(out)])
    assert code == 0
    rows = list(csv.DictReader((out / "cost_vs_N.csv").open()))
    assert {r["method"] for r in rows} == {"benchmark", "corrected"}
    assert all(r["schema_version"] == "1.0" for r in rows)
    assert (out / "staffing_vs_N.csv").exists()
    assert json.loads((out / "report.json").read_text())["schema_version"] == "1.0"


def test_dump_lp(files):
    dump = files / "lps"
    code, _ = run(files, "solve-saa", "--network", files / "flex.json", "--demand", files / "split.csv", "--dump-lp", dump)
    assert code == 0 and any(dump.iterdir())


def test_errors_exit_one(files, capsys):
    assert main(["solve-saa", "--network", str(files / "flex.json"), "--demand", str(files / "missing.csv")]) == 1
    assert main(["solve-saa", "--demand", str(files / "split.csv")]) == 1
    assert "error" in capsys.readouterr().err
    # class count mismatch
    assert main(["solve-saa", "--network", str(files / "hospital.json"), "--demand", str(files / "split.csv")]) == 1


def test_console_entry_point(files):
    proc = subprocess.run(
        [sys.executable, "-m", "fluidcorrect.cli", "correct", "--network", str(files / "flex.json"), "--demand", str(files / "split.csv")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
    assert json.loads(proc.stdout)["outcome"] == "nonexistent"
