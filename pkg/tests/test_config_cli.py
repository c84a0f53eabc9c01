import json
import os

import numpy as np
import pytest

from demix.cli import main as cli_main
from demix.config import ConfigError, RunConfig
from demix.runner import EXIT_CONFIG, diagnose_dir, execute


def write_config(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_minimal_config_defaults():
    cfg = RunConfig({})
    assert cfg.raw["domain"]["N"] == 64
    assert cfg.jko_config().delta == pytest.approx(cfg.raw["jko"]["tau"] ** 2)
    assert cfg.raw["mode"] == "jko"


def test_delta_clamp_warning():
    with pytest.warns(UserWarning, match="clamped"):
        cfg = RunConfig({"jko": {"tau": 0.1, "delta0": 1.0}})
    assert cfg.jko_config().delta == pytest.approx(0.01)


def test_step_initial_mean():
    cfg = RunConfig(
        {
            "domain": {"L": 1.0, "N": 64},
            "initial": {"kind": "step", "left": 0.2, "right": 0.8, "interface_at": 0.5},
        }
    )
    state = cfg.initial_state()
    assert state.rho1 == pytest.approx(0.5, abs=1e-12)


def test_schema_violations_listed():
    with pytest.raises(ConfigError) as err:
        RunConfig({"domain": {"L": -1.0, "N": 8}, "physics": {"model": "bogus"}})
    text = str(err.value)
    assert "domain.L" in text and "physics.model" in text


def test_noise_requires_seed():
    with pytest.raises(ConfigError, match="seed"):
        RunConfig({"initial": {"kind": "constant_noise", "mean": 0.5, "amplitude": 0.1}})


def test_csv_initial_roundtrip(tmp_path):
    g_n = 16
    x = (np.arange(g_n) + 0.5) / g_n
    vals = 0.5 + 0.1 * np.sin(2 * np.pi * x)
    csv_path = tmp_path / "c1.csv"
    csv_path.write_text("\n".join(f"{a},{b}" for a, b in zip(x, vals)))
    cfg = RunConfig(
        {"domain": {"L": 1.0, "N": g_n}, "initial": {"kind": "csv", "path": str(csv_path)}}
    )
    assert np.allclose(cfg.initial_state().c1.values, vals)


def test_execute_constant_jko(tmp_path):
    cfg = RunConfig(
        {
            "domain": {"L": 1.0, "N": 16},
            "physics": {"chi": 0.0},
            "jko": {"tau": 0.05, "n_steps": 5, "inner_max_iter": 50},
            "initial": {"kind": "constant_noise", "mean": 0.5, "amplitude": 0.0},
            "outputs": {"dir": str(tmp_path / "out"), "emit_figures": False},
        }
    )
    result = execute(cfg)
    assert result["status"] == 0
    from demix.reporting import read_csv_columns

    cols = read_csv_columns(tmp_path / "out" / "trajectory.csv")
    energies = {float(v) for v in cols["E"]}
    assert len(cols["n"]) == 6
    assert len(energies) == 1


def test_execute_emits_figures_and_reports(tmp_path):
    cfg = RunConfig(
        {
            "domain": {"L": 10.0, "N": 24},
            "physics": {"chi": 4.0},
            "jko": {"tau": 0.05, "n_steps": 3, "inner_max_iter": 600},
            "initial": {"kind": "constant_noise", "mean": 0.5, "amplitude": 0.02, "seed": 9},
            "outputs": {"dir": str(tmp_path / "out")},
            "mode": "diagnose",
        }
    )
    result = execute(cfg)
    assert result["status"] == 0
    assert result["proved_failures"] == []
    out = tmp_path / "out"
    assert (out / "reports.json").is_file()
    assert (out / "figures" / "trajectory.png").is_file()
    assert (out / "figures" / "reports.png").is_file()
    assert (out / "snapshots" / "step_00000.csv").is_file()
    doc = json.loads((out / "reports.json").read_text())
    assert doc["config_hash"] == cfg.config_hash()
    assert any(r["name"] == "energy_telescoping" for r in doc["reports"])


def test_diagnose_dir_roundtrip(tmp_path):
    out = tmp_path / "out"
    cfg = RunConfig(
        {
            "domain": {"L": 10.0, "N": 24},
            "physics": {"chi": 4.0},
            "jko": {"tau": 0.05, "n_steps": 4, "inner_max_iter": 600},
            "initial": {"kind": "constant_noise", "mean": 0.5, "amplitude": 0.02, "seed": 9},
            "outputs": {"dir": str(out), "emit_figures": False},
        }
    )
    first = execute(cfg)
    assert first["status"] == 0
    reloaded = json.loads((out / "reports.json").read_text())
    result = diagnose_dir(str(out))
    assert result["status"] == 0
    rechecked = json.loads((out / "reports.json").read_text())
    for a, b in zip(reloaded["reports"], rechecked["reports"]):
        if a["name"] in ("energy_telescoping", "holder_modulus", "kinetic_bound"):
            assert a["lhs"] == pytest.approx(b["lhs"], rel=1e-12)
            assert a["holds"] == b["holds"]


def test_cli_run_and_exit_codes(tmp_path, capsys):
    bad = write_config(tmp_path, {"domain": {"L": -3, "N": 4}}, "bad.json")
    assert cli_main(["run", bad]) == EXIT_CONFIG

    good = write_config(
        tmp_path,
        {
            "domain": {"L": 1.0, "N": 12},
            "jko": {"tau": 0.1, "n_steps": 2, "inner_max_iter": 50},
            "outputs": {"dir": str(tmp_path / "cli_out"), "emit_figures": False},
        },
        "good.json",
    )
    assert cli_main(["run", good]) == 0
    assert (tmp_path / "cli_out" / "trajectory.csv").is_file()


def test_cli_sweep_refinement(tmp_path):
    sweep_cfg = write_config(
        tmp_path,
        {
            "domain": {"L": 10.0, "N": 16},
            "physics": {"chi": 4.0},
            "jko": {"tau": 0.1, "n_steps": 4, "inner_max_iter": 400},
            "initial": {"kind": "constant_noise", "mean": 0.5, "amplitude": 0.02, "seed": 4},
            "outputs": {"dir": str(tmp_path / "sweep_out"), "emit_figures": False},
            "mode": "sweep",
            "sweep": [
                {"jko": {"tau": 0.1, "n_steps": 4}},
                {"jko": {"tau": 0.05, "n_steps": 8}},
                {"jko": {"tau": 0.025, "n_steps": 16}},
            ],
        },
    )
    assert cli_main(["sweep", sweep_cfg]) == 0
    summary = json.loads((tmp_path / "sweep_out" / "summary.json").read_text())
    assert len(summary["members"]) == 3
    assert len(summary["refinement"]) == 2
    for member in summary["members"]:
        assert os.path.isdir(member["dir"])


def test_determinism_byte_identical(tmp_path):
    base = {
        "domain": {"L": 10.0, "N": 20},
        "physics": {"chi": 4.0},
        "jko": {"tau": 0.05, "n_steps": 3, "inner_max_iter": 500},
        "initial": {"kind": "constant_noise", "mean": 0.5, "amplitude": 0.02, "seed": 123},
        "outputs": {"emit_figures": False},
    }
    paths = []
    for tag in ("a", "b"):
        cfg = RunConfig({**base, "outputs": {**base["outputs"], "dir": str(tmp_path / tag)}})
        execute(cfg)
        paths.append(tmp_path / tag)
    for name in ["trajectory.csv"] + [f"snapshots/step_{i:05d}.csv" for i in range(4)]:
        a = (paths[0] / name).read_bytes()
        b = (paths[1] / name).read_bytes()
        # the config hash differs only through the output dir; strip it
        a = b"\n".join(line for line in a.split(b"\n") if not line.startswith(b"#"))
        b = b"\n".join(line for line in b.split(b"\n") if not line.startswith(b"#"))
        assert a == b


def test_numerical_failure_exit_code(tmp_path):
    # out-of-range csv initial data trips the state invariants at run time
    csv_path = tmp_path / "bad.csv"
    x = (np.arange(8) + 0.5) / 8
    csv_path.write_text("\n".join(f"{a},{1.5}" for a in x))
    cfg = RunConfig(
        {
            "domain": {"L": 1.0, "N": 8},
            "initial": {"kind": "csv", "path": str(csv_path)},
            "outputs": {"dir": str(tmp_path / "fail_out"), "emit_figures": False},
        }
    )
    result = execute(cfg)
    assert result["status"] == 3
    assert (tmp_path / "fail_out" / "error.json").is_file()


def test_sweep_parallel_workers(tmp_path, monkeypatch):
    monkeypatch.setenv("DEMIX_WORKERS", "2")
    cfg = RunConfig(
        {
            "domain": {"L": 1.0, "N": 8},
            "jko": {"tau": 0.1, "n_steps": 2, "inner_max_iter": 50},
            "outputs": {"dir": str(tmp_path / "psweep"), "emit_figures": False},
            "mode": "sweep",
            "sweep": [{"jko": {"tau": 0.1}}, {"jko": {"tau": 0.05}}],
        }
    )
    result = execute(cfg)
    assert result["status"] == 0
    summary = json.loads((tmp_path / "psweep" / "summary.json").read_text())
    assert len(summary["members"]) == 2
    assert summary["config_hash"] == cfg.config_hash()


def test_diagnose_flags_proved_violation(tmp_path):
    # corrupting the stored terminal energy breaks the telescoping bound,
    # which the diagnose pass must surface with the dedicated exit status
    out = tmp_path / "tamper"
    cfg = RunConfig(
        {
            "domain": {"L": 10.0, "N": 16},
            "physics": {"chi": 4.0},
            "jko": {"tau": 0.05, "n_steps": 3, "inner_max_iter": 400},
            "initial": {"kind": "constant_noise", "mean": 0.5, "amplitude": 0.02, "seed": 5},
            "outputs": {"dir": str(out), "emit_figures": False},
        }
    )
    assert execute(cfg)["status"] == 0
    traj = out / "trajectory.csv"
    lines = traj.read_text().splitlines()
    parts = lines[-1].split(",")
    parts[2] = f"{float(parts[2]) + 1e6:.17g}"
    lines[-1] = ",".join(parts)
    traj.write_text("\n".join(lines) + "\n")
    result = diagnose_dir(str(out))
    assert result["status"] == 4
    assert "energy_telescoping" in result["proved_failures"]
