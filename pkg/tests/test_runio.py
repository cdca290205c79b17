"""Tests for config parsing, data writers/readers, and run orchestration."""

import json

import numpy as np
import pytest

import gaugeflow.flatflow as ff
import gaugeflow.runio as rio
from gaugeflow.errors import ParseError, SchemaMismatch, ValidationError


SHORT_RUN = """
[flow]
n = 48
h = 0.020833333333333332
t_end = 1e-3
snapshot_times = [0.0, 1e-3]
"""


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


# ---------------------------------------------------------------------------
# config loading


def test_empty_config_gives_defaults(tmp_path):
    cfg = rio.load_config(write(tmp_path, ""))
    assert cfg.n == 100 and cfg.h == 0.01
    assert cfg.params.K == 0.1 and cfg.params.omega == 0.5
    assert cfg.params.mobility == 1.0
    assert cfg.gauge.kind == "material" and cfg.timederiv.kind == "material"
    assert cfg.initial_condition == ff.InitialCondition()


def test_missing_file_is_a_parse_error(tmp_path):
    with pytest.raises(ParseError, match="cannot read"):
        rio.load_config(tmp_path / "nope.toml")


def test_malformed_toml_is_a_parse_error(tmp_path):
    with pytest.raises(ParseError, match="malformed"):
        rio.load_config(write(tmp_path, "[flow\nn = 3"))


def test_unknown_key_named_in_error(tmp_path):
    with pytest.raises(ValidationError, match=r"flow\.stepsize"):
        rio.load_config(write(tmp_path, "[flow]\nstepsize = 0.1\n"))


def test_unknown_section_named_in_error(tmp_path):
    with pytest.raises(ValidationError, match="solver"):
        rio.load_config(write(tmp_path, "[solver]\nn = 10\n"))


def test_bad_gauge_name_is_a_validation_error(tmp_path):
    with pytest.raises(ValidationError, match="upper"):
        rio.load_config(write(tmp_path, '[flow]\ngauge = "convected"\n'))


def test_inadmissible_value_is_a_validation_error(tmp_path):
    with pytest.raises(ValidationError, match="t_end"):
        rio.load_config(write(tmp_path, "[flow]\nt_end = -1.0\n"))


def test_schedule_parses_to_pairs(tmp_path):
    cfg = rio.load_config(write(tmp_path, SHORT_RUN
                                + "tau_schedule = [[5e-4, 1e-5], [1e-3, 2e-5]]\n"))
    assert cfg.tau_schedule == ((5e-4, 1e-5), (1e-3, 2e-5))


def test_full_round_trip_through_dict(tmp_path):
    text = """
[flow]
gauge = "jaumann"
timederiv = "jaumann"
n = 64
h = 0.015625
t_end = 0.5
[params]
K = 0.2
omega = 1.0
mobility = 2.0
[initial]
family = "twist"
winding = 2
width = 0.4
"""
    cfg = rio.load_config(write(tmp_path, text))
    d = rio.config_to_dict(cfg)
    assert d["flow"]["gauge"] == "jaumann"
    assert d["params"]["mobility"] == 2.0
    assert d["initial"]["winding"] == 2.0
    assert d["initial"]["width"] == 0.4


def test_config_hash_stable_and_sensitive(tmp_path):
    a = rio.load_config(write(tmp_path, SHORT_RUN, "a.toml"))
    b = rio.load_config(write(tmp_path, SHORT_RUN, "b.toml"))
    c = rio.load_config(write(tmp_path, SHORT_RUN + "tau_init = 2e-4\n", "c.toml"))
    assert rio.config_hash(a) == rio.config_hash(b)
    assert rio.config_hash(a) != rio.config_hash(c)


# ---------------------------------------------------------------------------
# writers and readers


def short_trajectory():
    cfg = ff.FlowConfig(n=48, h=1.0 / 48.0, t_end=1.0e-3,
                        snapshot_times=(0.0, 1.0e-3))
    return cfg, ff.run(cfg)


def test_energy_csv_round_trip(tmp_path):
    cfg, traj = short_trajectory()
    p = tmp_path / "energy.csv"
    rio.write_energy_csv(p, traj)
    cols = rio.read_energy_csv(p)
    assert set(cols) == {"t", "tau", "U_grad", "U_R", "U_total",
                         "dissipation_residual"}
    assert cols["t"].shape == (len(traj.energy),)
    # repr-format floats parse back exactly
    assert cols["U_total"][-1] == traj.energy[-1].U_total
    assert cols["tau"][3] == traj.energy[3].tau


def test_energy_csv_rewrites_byte_identical(tmp_path):
    cfg, traj = short_trajectory()
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    rio.write_energy_csv(a, traj)
    rio.write_energy_csv(b, traj)
    assert a.read_bytes() == b.read_bytes()


def test_energy_reader_rejects_wrong_schema(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("# schema: gaugeflow/energy/999\nt,tau\n0.0,0.0\n")
    with pytest.raises(SchemaMismatch, match="gaugeflow/energy/999"):
        rio.read_energy_csv(p)
    p.write_text("t,tau\n0.0,0.0\n")
    with pytest.raises(SchemaMismatch, match="missing schema"):
        rio.read_energy_csv(p)


def test_snapshot_round_trip(tmp_path):
    cfg, traj = short_trajectory()
    p = tmp_path / "snap.json"
    rio.write_snapshot_json(p, traj.snapshots[-1], cfg)
    data = rio.read_snapshot(p)
    assert data["schema"] == rio.SNAPSHOT_SCHEMA
    assert data["n"] == cfg.n
    assert len(data["q1"]) == cfg.n
    st = traj.snapshots[-1].state
    assert data["q1"] == st.q1.tolist()
    # embedded positions: X = (f1, y2 + f2, 0) along the y1 = 0 line
    X = np.asarray(data["X_embedded"])
    assert X.shape == (cfg.n, 3)
    y2 = np.arange(cfg.n) * cfg.h
    assert np.array_equal(X[:, 1], y2 + st.f2)
    assert np.all(X[:, 2] == 0.0)


def test_snapshot_reader_rejects_wrong_schema(tmp_path):
    p = tmp_path / "snap.json"
    p.write_text(json.dumps({"schema": "gaugeflow/snapshot/7"}))
    with pytest.raises(SchemaMismatch, match="snapshot/7"):
        rio.read_snapshot(p)


# ---------------------------------------------------------------------------
# run orchestration


def test_run_experiment_writes_manifest_energy_snapshots(tmp_path):
    cfg = rio.load_config(write(tmp_path, SHORT_RUN))
    status = rio.run_experiment(cfg, tmp_path / "out")
    assert status == 0
    out = tmp_path / "out"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["schema"] == rio.MANIFEST_SCHEMA
    assert manifest["status"] == "ok"
    assert manifest["config_hash"] == rio.config_hash(cfg)
    assert manifest["config"]["flow"]["n"] == 48
    assert manifest["finished_at"] is not None
    assert sorted(manifest["outputs"]) == sorted(
        ["energy.csv", "snapshot_t0.json", "snapshot_t0.001.json"])
    for name in manifest["outputs"]:
        assert (out / name).exists()
    cols = rio.read_energy_csv(out / "energy.csv")
    assert cols["t"][-1] == pytest.approx(1.0e-3, abs=1e-12)


def test_rerun_data_outputs_byte_identical(tmp_path):
    cfg = rio.load_config(write(tmp_path, SHORT_RUN))
    rio.run_experiment(cfg, tmp_path / "r1")
    rio.run_experiment(cfg, tmp_path / "r2")
    for name in ("energy.csv", "snapshot_t0.json", "snapshot_t0.001.json"):
        assert (tmp_path / "r1" / name).read_bytes() == \
            (tmp_path / "r2" / name).read_bytes(), name


def test_failed_run_leaves_failed_manifest(tmp_path):
    # a floor just under the initial step leaves no room to halve after the
    # first rejection, so the run aborts after writing the manifest
    cfg = rio.load_config(write(tmp_path, SHORT_RUN
                                + "tau_init = 1e-3\ntau_min = 9e-4\n"))
    import io
    log = io.StringIO()
    status = rio.run_experiment(cfg, tmp_path / "out", log=log)
    assert status == 1
    assert "SolverFailure" in log.getvalue()
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["status"].startswith("failed: SolverFailure")
    assert not (tmp_path / "out" / "energy.csv").exists()
