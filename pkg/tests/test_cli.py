import json
import subprocess
import sys

import pytest

from glosa.cli import main
from glosa.config import ExperimentConfig, apply_overrides, parse_override


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_smallest_invocation(tmp_path, capsys):
    out = tmp_path / "o"
    code, stdout, _ = run(["run", "--scenario", "det", "--ttg", "10", "--grade", "down",
                           "--out", str(out)], capsys)
    assert code == 0
    files = sorted(p.name for p in out.iterdir())
    assert files == ["summary.json", "trajectories.csv",
                     "trajectory_deterministic-downhill-ttg10-v17.88.svg"]
    assert json.loads(stdout)["status"] == "ok"
    rows = (out / "trajectories.csv").read_text().splitlines()
    assert rows[0] == ("run_id,t,x,v,a,control_kind,control_value,fuel_rate,cum_fuel,"
                       "predicted_ttg")
    assert len({r.split(",")[0] for r in rows[1:]}) == 1


def test_seeded_run_is_byte_identical(tmp_path, capsys):
    outs = []
    for name in ("a", "b"):
        d = tmp_path / name
        assert run(["run", "--scenario", "stoch", "--ttg", "15", "--bias", "2", "--sd", "4",
                    "--reps", "3", "--seed", "5", "--out", str(d), "--verbose"], capsys)[0] == 0
        outs.append({p.name: p.read_bytes() for p in d.iterdir()})
    assert outs[0] == outs[1]
    assert "planning_trace.csv" in outs[0]


def test_matrix_outputs(tmp_path, capsys):
    d = tmp_path / "m"
    code, _, _ = run(["run", "--scenario", "matrix", "--reps", "1", "--out", str(d),
                      "--set", "sweep.biases=[0.0]", "--set", "sweep.sds=[0.0, 4.0]"], capsys)
    assert code == 0
    data = json.loads((d / "summary.json").read_text())
    assert len(data["matrix"]) == 24
    assert all("savings_pct" in c for c in data["matrix"])
    assert (d / "savings.svg").exists() and (d / "proportion_surface.svg").exists()
    assert len(list(d.glob("heatmap_*.svg"))) == 8
    assert len((d / "sweep_cells.csv").read_text().splitlines()) == 1 + 16


def test_validate_defaults_pass(tmp_path, capsys):
    code, out, _ = run(["validate", "--out", str(tmp_path)], capsys)
    assert code == 0
    assert '"status": "ok"' in out and '"mass_kg": 2388.0' in out


def test_validate_lists_every_problem(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('[experiment]\ncolour = "red"\n[optimizer]\nthrottle_grid = [0.0, 0.5, 1.2]\n'
                   '[[scenario]]\nkind = "stoch"\nsd = -1.0\n')
    code, _, err = run(["validate", "--config", str(cfg), "--out", str(tmp_path)], capsys)
    assert code == 2
    rec = json.loads(err)
    text = " ".join(rec["messages"])
    assert "PredictionModel.sd_s >= 0" in text
    assert "Control bounds" in text
    assert "colour" in text
    assert (tmp_path / "error.json").exists()


def test_flag_sd_negative_is_config_error(tmp_path, capsys):
    code, _, err = run(["run", "--scenario", "stoch", "--sd", "-1", "--out", str(tmp_path)], capsys)
    assert code == 2 and "PredictionModel.sd_s >= 0" in err


def test_missing_config_file(tmp_path, capsys):
    code, _, err = run(["run", "--config", str(tmp_path / "nope.toml")], capsys)
    assert code == 2 and json.loads(err)["kind"] == "config"


def test_nothing_to_run(tmp_path, capsys):
    assert run(["run", "--out", str(tmp_path)], capsys)[0] == 2


def test_runtime_failure_exit_code(tmp_path, capsys):
    code, _, err = run(["run", "--scenario", "det", "--ttg", "25", "--out", str(tmp_path),
                        "--set", "optimizer.max_steps=5"], capsys)
    assert code == 3
    assert json.loads(err)["kind"] == "runtime"


def test_config_file_scenarios(tmp_path, capsys):
    cfg = tmp_path / "exp.toml"
    cfg.write_text('[experiment]\nseed = 4\nreplications = 2\n'
                   '[vehicle]\nmass_kg = 2000.0\n'
                   '[[scenario]]\nkind = "det"\ngrade = "up"\nttg = 20\n'
                   '[[scenario]]\nkind = "stoch"\nttg = 15\nbias = 1.0\nsd = 2.0\n')
    code, _, _ = run(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--no-plots"],
                     capsys)
    assert code == 0
    data = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert [r["spec"]["scenario_kind"] for r in data["runs"]] == ["deterministic", "stochastic"]
    assert data["runs"][1]["spec"]["replications"] == 2
    assert data["meta"]["config"]["vehicle"]["mass_kg"] == 2000.0


def test_override_parsing():
    assert parse_override("optimizer.dt_s=1") == ("optimizer", "dt_s", 1)
    assert parse_override("sweep.grades=['uphill']") == ("sweep", "grades", ["uphill"])
    data = apply_overrides({"vehicle": {"mass_kg": 1.0}}, ["vehicle.mass_kg=2.5"])
    assert data["vehicle"]["mass_kg"] == 2.5
    with pytest.raises(ValueError):
        parse_override("nodot=1")


def test_type_errors_are_collected():
    errors = []
    ExperimentConfig.from_mapping({"vehicle": {"mass_kg": "heavy"}, "road": {"grade": True},
                                   "bogus": {}}, errors=errors)
    assert len(errors) == 3


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "glosa.cli", "validate", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0
