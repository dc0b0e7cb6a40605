import csv
import json

import numpy as np
import pytest

from skdv import acceptance
from skdv.acceptance import CriterionResult
from skdv.cli import EXIT_BLOWUP, EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main
from skdv.config import parse_config
from skdv.errors import ConfigError

SMALL = {
    "grid": {"n": 256, "L": 60.0},
    "integrator": {"dt": 0.002, "t_end": 0.2, "sample_every": 25},
    "perturbation": {"amplitude": 0.01, "seed": 4},
}


def write_config(tmp_path, doc, name="cfg.json"):
    out = dict(doc)
    out.setdefault("output", {})
    out["output"] = {**out["output"], "directory": str(tmp_path / "out")}
    path = tmp_path / name
    path.write_text(json.dumps(out))
    return path


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# -- configuration ----------------------------------------------------------------

def test_parse_config_defaults():
    cfg = parse_config("")
    assert cfg.soliton.c == 1.0
    assert cfg.grid.n == 1024
    assert cfg.length == 80.0
    assert cfg.integrator.dt == 1e-3
    assert cfg.clifford.k == 2
    assert parse_config("{}") == cfg


def test_parse_config_single_override():
    cfg = parse_config('{"soliton": {"c": 2.0}}')
    base = parse_config("")
    assert cfg.soliton.c == 2.0
    assert cfg.grid == base.grid and cfg.integrator == base.integrator
    assert cfg.soliton.speed_convention == base.soliton.speed_convention


@pytest.mark.parametrize("text, message", [
    ('{"grid": {"n": 1000}}', "n must be a power of two"),
    ('{"foo": {}}', "unknown key 'foo'"),
    ('{"grid": {"m": 3}}', "unknown key 'grid.m'"),
    ('{"integrator": {"dt": -0.1}}', "integrator.dt"),
    ('{"integrator": {"dt": 0.05}}', "integrator.dt must be <="),
    ('{"integrator": {"scheme": "euler"}}', "integrator.scheme"),
    ('{"soliton": {"c": 0}}', "soliton.c must be > 0"),
    ('{"perturbation": {"target": "all"}}', "perturbation.target"),
    ('{"grid": ', "malformed JSON"),
    ('[1, 2]', "must be a JSON object"),
])
def test_parse_config_errors(text, message):
    with pytest.raises(ConfigError, match=message.replace(".", r"\.").replace("(", r"\(")):
        parse_config(text)


def test_length_follows_c_when_unset():
    assert parse_config('{"soliton": {"c": 0.25}, "integrator": {"dt": 0.0005}}').length == 160.0
    assert parse_config('{"grid": {"L": 50.0}}').length == 50.0


# -- subcommands ---------------------------------------------------------------

def test_simulate_writes_timeseries_and_snapshots(tmp_path, capsys):
    doc = {**SMALL, "output": {"emit_snapshots": True}}
    code, out, _ = run(capsys, ["simulate", "--config", str(write_config(tmp_path, doc))])
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["samples"] == 5
    outdir = tmp_path / "out"
    rows = list(csv.reader((outdir / "timeseries.csv").open()))
    assert rows[0] == ["t", "H_half_1", "H_half_2", "H_1", "V", "M", "h1_norm", "apriori_bound"]
    assert len(rows) == 6
    assert float(rows[-1][0]) == 0.2
    snaps = sorted(outdir.glob("snapshot_*.csv"))
    assert len(snaps) == 5
    assert snaps[0].read_text().splitlines()[0] == "x,u,phi_1,phi_2"


def test_simulate_defaults_conserve_charges(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("SKDV_OUTPUT_DIR", str(tmp_path / "env"))
    path = tmp_path / "empty.json"
    path.write_text("{}")
    code, out, _ = run(capsys, ["simulate", "--config", str(path)])
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["rel_drift_V"] <= 1e-7
    assert report["rel_drift_M"] <= 1e-6
    data = np.loadtxt(tmp_path / "env" / "timeseries.csv", delimiter=",", skiprows=1)
    assert data[-1, 0] == 10.0
    assert np.all(np.abs(data[:, 1:4] - data[0, 1:4]) <= 1e-9)
    assert np.all(data[:, 6] <= data[0, 7] * (1 + 1e-6))


def test_output_env_override(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("SKDV_OUTPUT_DIR", str(tmp_path / "elsewhere"))
    code, _, _ = run(capsys, ["simulate", "--config", str(write_config(tmp_path, SMALL))])
    assert code == EXIT_OK
    assert (tmp_path / "elsewhere" / "timeseries.csv").exists()
    assert not (tmp_path / "out").exists()


def test_outputs_are_byte_identical(tmp_path, capsys):
    cfg = write_config(tmp_path, SMALL)
    blobs = []
    for _ in range(2):
        assert run(capsys, ["stability", "--config", str(cfg), "--seeds", "2"])[0] == EXIT_OK
        assert run(capsys, ["simulate", "--config", str(cfg)])[0] == EXIT_OK
        out = tmp_path / "out"
        blobs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert blobs[0] == blobs[1]
    assert set(blobs[0]) == {"ensemble.json", "stability_seed4.csv", "stability_seed5.csv",
                             "timeseries.csv"}


def test_stability_command(tmp_path, capsys):
    code, out, _ = run(capsys, ["stability", "--config", str(write_config(tmp_path, SMALL)),
                                "--seeds", "2", "--jobs", "2"])
    assert code == EXIT_OK
    assert json.loads(out)["all_pass"] is True
    summary = json.loads((tmp_path / "out" / "ensemble.json").read_text())
    assert set(summary["seeds"]) == {"4", "5"}
    header = (tmp_path / "out" / "stability_seed4.csv").read_text().splitlines()[0]
    assert header == "t,d_I,d_II,dM_direct,dM_form,margin21,margin28,margin33,margin35,margin_1_6"


def test_stability_needs_perturbation(tmp_path, capsys):
    doc = {**SMALL, "perturbation": {"amplitude": 0}}
    code, _, err = run(capsys, ["stability", "--config", str(write_config(tmp_path, doc))])
    assert code == EXIT_CONFIG
    assert "amplitude" in err


def test_ground_state_command(tmp_path, capsys):
    code, out, _ = run(capsys, ["ground-state", "--config", str(write_config(tmp_path, SMALL))])
    assert code == EXIT_OK
    doc = json.loads((tmp_path / "out" / "ground_state.json").read_text())
    assert doc == json.loads(out)
    assert doc["budget_ok"] is True and doc["bound_ok"] is True
    assert doc["max_h1_norm"] <= doc["apriori_bound"]


def test_soliton_check_command(capsys):
    code, out, _ = run(capsys, ["soliton-check", "--c", "1", "--n", "512"])
    assert code == EXIT_OK
    doc = json.loads(out)
    assert set(doc) == {"c", "residual", "measured_speed", "matched_convention", "charge_values"}
    assert doc["matched_convention"] == "derived"
    assert abs(doc["measured_speed"] - 1.0) <= 5e-3
    assert doc["residual"] <= 1e-9
    assert abs(doc["charge_values"]["V"] - 24.0) <= 1e-8


def test_spectrum_command(capsys):
    code, out, _ = run(capsys, ["spectrum", "--c", "1", "--k", "3", "--n", "1024"])
    assert code == EXIT_OK
    doc = json.loads(out)
    assert set(doc) == {"c", "n", "L", "eigenvalues", "analytic_errors"}
    lam = doc["eigenvalues"]
    assert lam[0] == pytest.approx(-1.0, abs=1e-6)
    assert lam[1] == pytest.approx(-0.25, abs=1e-6)
    assert abs(lam[2]) <= 1e-3
    assert set(doc["analytic_errors"]) == {"lambda1", "lambda2", "psi1_L2", "psi2_L2"}


# -- exit codes ----------------------------------------------------------------

def test_config_error_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"grid": {"n": 1000}}')
    code, _, err = run(capsys, ["simulate", "--config", str(path)])
    assert code == EXIT_CONFIG
    assert "n must be a power of two" in err
    assert run(capsys, ["simulate", "--config", str(tmp_path / "missing.json")])[0] == EXIT_CONFIG
    assert run(capsys, ["soliton-check", "--c", "-1"])[0] == EXIT_CONFIG


def test_blow_up_exit_code(tmp_path, capsys):
    doc = {**SMALL, "integrator": {**SMALL["integrator"], "scheme": "rk4", "dt": 0.01}}
    code, _, err = run(capsys, ["simulate", "--config", str(write_config(tmp_path, doc))])
    assert code == EXIT_BLOWUP
    assert "t =" in err


def _fake(number, passed):
    def crit(**kwargs):
        return CriterionResult(number, f"fake {number}", passed, {"value": 1.0})
    return crit


@pytest.mark.parametrize("outcomes, expected", [((True, True), EXIT_OK),
                                                ((True, False), EXIT_FAIL)])
def test_verify_all_exit_code(tmp_path, capsys, monkeypatch, outcomes, expected):
    fakes = tuple(_fake(i + 1, ok) for i, ok in enumerate(outcomes))
    monkeypatch.setattr(acceptance, "CRITERIA", fakes)
    report = tmp_path / "report.json"
    code, out, _ = run(capsys, ["verify-all", "--report", str(report)])
    assert code == expected
    assert "[PASS] criterion 1" in out
    doc = json.loads(report.read_text())
    assert [d["pass"] for d in doc] == list(outcomes)
