"""Pipeline orchestration: execute configs, persist artifacts, drive sweeps."""

import json
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import diagnostics, plots, reporting
from .config import ConfigError, RunConfig
from .energy import state_from_c1
from .grid import Profile, l2_norm_values
from .jko import JkoStepRecord, run_trajectory
from .pde import compare_energy_decay

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_INEQUALITY = 4


def execute(config: RunConfig, out_dir: str | None = None) -> dict:
    """Run the configured mode; returns an exit report with status code."""
    mode = config.raw["mode"]
    out_dir = out_dir or config.raw["outputs"]["dir"]
    os.makedirs(out_dir, exist_ok=True)
    chash = config.config_hash()
    with open(os.path.join(out_dir, "config.json"), "w") as handle:
        json.dump(config.raw, handle, indent=2, sort_keys=True)
        handle.write("\n")
    try:
        if mode in ("jko", "diagnose"):
            return _run_jko(config, out_dir, chash, diagnose=(mode == "diagnose"))
        if mode == "pde_compare":
            return _run_pde_compare(config, out_dir, chash)
        if mode == "sweep":
            return run_sweep(config, out_dir)
        raise ConfigError([f"unhandled mode {mode!r}"])
    except ConfigError:
        raise
    except Exception as exc:
        reporting.write_error_json(os.path.join(out_dir, "error.json"), str(exc), chash)
        return {"status": EXIT_NUMERICAL, "error": str(exc), "out_dir": out_dir}


def _run_jko(config: RunConfig, out_dir: str, chash: str, diagnose: bool) -> dict:
    params = config.params()
    cfg = config.jko_config()
    jko_raw = config.raw["jko"]
    initial = config.initial_state()
    records = run_trajectory(initial, cfg, params, int(jko_raw["n_steps"]))
    outputs = config.raw["outputs"]
    reporting.write_trajectory_csv(
        os.path.join(out_dir, "trajectory.csv"), records, params, cfg.tau, chash
    )
    if outputs["emit_snapshots"]:
        snap_dir = os.path.join(out_dir, "snapshots")
        os.makedirs(snap_dir, exist_ok=True)
        for rec in records:
            if rec.step_index % int(jko_raw["save_every"]) == 0 or rec.step_index == len(records) - 1:
                reporting.write_snapshot_csv(
                    os.path.join(snap_dir, f"step_{rec.step_index:05d}.csv"), rec, chash
                )
    reports = []
    if outputs["emit_reports"] and len(records) > 1:
        reports = diagnostics.run_all_checks(records, params, cfg)
        reporting.write_reports_json(os.path.join(out_dir, "reports.json"), reports, chash)
    if outputs["emit_figures"]:
        fig_dir = os.path.join(out_dir, "figures")
        os.makedirs(fig_dir, exist_ok=True)
        plots.trajectory_figure(records, cfg.tau, os.path.join(fig_dir, "trajectory.png"))
        if reports:
            plots.reports_figure(reports, os.path.join(fig_dir, "reports.png"))
    failures = diagnostics.proved_failures(reports)
    status = EXIT_INEQUALITY if (diagnose and failures) else EXIT_OK
    return {
        "status": status,
        "out_dir": out_dir,
        "n_steps": len(records) - 1,
        "terminal_energy": records[-1].energy,
        "proved_failures": [r.name for r in failures],
        "flags": sorted({f for r in records for f in r.flags}),
    }


def _run_pde_compare(config: RunConfig, out_dir: str, chash: str) -> dict:
    params = config.params()
    cfg = config.fd_config()
    initial = config.initial_state().c1
    record_every = max(1, cfg.n_steps // 400)
    comparison = compare_energy_decay(initial, params, cfg, record_every)
    reporting.write_timeseries_csv(
        os.path.join(out_dir, "timeseries.csv"), comparison, chash
    )
    if config.raw["outputs"]["emit_figures"]:
        fig_dir = os.path.join(out_dir, "figures")
        os.makedirs(fig_dir, exist_ok=True)
        plots.comparison_figure(comparison, os.path.join(fig_dir, "energy_comparison.png"))
    return {
        "status": EXIT_OK,
        "out_dir": out_dir,
        "terminal_ratio": comparison["terminal_ratio"],
        "first_crossing_time": comparison["first_crossing_time"],
        "clamp_local": float(comparison["clamp_local"][-1]),
        "clamp_nonlocal": float(comparison["clamp_nonlocal"][-1]),
    }


def _sweep_worker(args):
    raw, member_dir = args
    config = RunConfig(raw)
    return execute(config, member_dir)


def run_sweep(config: RunConfig, out_dir: str) -> dict:
    """Run every override in its own subdirectory, optionally in parallel."""
    members = config.sweep_members()
    jobs = []
    for idx, member in enumerate(members):
        member_dir = os.path.join(out_dir, f"member_{idx:03d}")
        jobs.append((member.raw, member_dir))
    workers = int(os.environ.get("DEMIX_WORKERS", "1"))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_worker, jobs))
    else:
        results = [_sweep_worker(job) for job in jobs]

    summary = {
        "config_hash": config.config_hash(),
        "members": [
            {"dir": job[1], "overrides": override, **result}
            for job, override, result in zip(jobs, config.raw["sweep"], results)
        ],
        "refinement": _refinement_summary(members, jobs, results),
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as handle:
        json.dump(summary, handle, indent=2, sort_keys=True, default=float)
        handle.write("\n")
    status = max((r["status"] for r in results), default=EXIT_OK)
    return {"status": status, "out_dir": out_dir, "n_members": len(results)}


def _refinement_summary(members, jobs, results):
    """Pairwise terminal-state L2 differences between members on equal grids."""
    finals = []
    for member, (raw, member_dir) in zip(members, jobs):
        path = os.path.join(member_dir, "snapshots")
        state = None
        if os.path.isdir(path):
            snaps = sorted(os.listdir(path))
            if snaps:
                cols = reporting.read_csv_columns(os.path.join(path, snaps[-1]))
                state = np.array([float(v) for v in cols["c1"]])
        finals.append((member.grid(), state))
    pairs = []
    for i in range(len(finals) - 1):
        g_a, a = finals[i]
        g_b, b = finals[i + 1]
        if a is None or b is None or g_a.cells != g_b.cells:
            continue
        pairs.append(
            {"pair": [i, i + 1], "terminal_l2_diff": l2_norm_values(a - b, g_a.h)}
        )
    return pairs


def load_trajectory_dir(path: str):
    """Rebuild records from a run directory written with save_every = 1."""
    config_path = os.path.join(path, "config.json")
    if not os.path.isfile(config_path):
        raise ConfigError([f"no config.json in {path}"])
    with open(config_path) as handle:
        config = RunConfig(json.load(handle))
    traj = reporting.read_csv_columns(os.path.join(path, "trajectory.csv"))
    n_rows = len(traj["n"])
    snap_dir = os.path.join(path, "snapshots")
    grid = config.grid()
    rho1 = None
    records = []
    for row in range(n_rows):
        step = int(traj["n"][row])
        snap_path = os.path.join(snap_dir, f"step_{step:05d}.csv")
        if not os.path.isfile(snap_path):
            raise ConfigError(
                [f"snapshot for step {step} missing; diagnose needs save_every=1 runs"]
            )
        cols = reporting.read_csv_columns(snap_path)
        arrays = {
            name: np.array([float(v) for v in cols[name]])
            for name in reporting.SNAPSHOT_FIELDS
        }
        c1 = Profile(grid, arrays["c1"])
        if rho1 is None:
            rho1 = c1.mean
        state = state_from_c1(c1, rho1)
        rec = JkoStepRecord(
            step_index=step,
            state=state,
            energy=float(traj["E"][row]),
            entropy=float(traj["H"][row]),
            w_step_sq=float(traj["w_step_sq"][row]),
            eula_residual=float(traj["eula_residual"][row]),
            inner_iters=int(traj["inner_iters"][row]),
            clamp_events=int(traj["clamp_count"][row]),
            flags=tuple(f for f in traj["flags"][row].split(";") if f and f != "local_only"),
        )
        if step > 0 and not np.any(np.isnan(arrays["psi1"])):
            for name in reporting.SNAPSHOT_FIELDS[2:]:
                setattr(rec, name, Profile(grid, arrays[name]))
        records.append(rec)
    return config, records


def diagnose_dir(path: str, out_path: str | None = None) -> dict:
    """Re-run the estimate checks against a stored trajectory."""
    config, records = load_trajectory_dir(path)
    params = config.params()
    cfg = config.jko_config()
    reports = diagnostics.run_all_checks(records, params, cfg)
    out_path = out_path or os.path.join(path, "reports.json")
    reporting.write_reports_json(out_path, reports, config.config_hash())
    if config.raw["outputs"]["emit_figures"]:
        fig_dir = os.path.join(path, "figures")
        os.makedirs(fig_dir, exist_ok=True)
        plots.reports_figure(reports, os.path.join(fig_dir, "reports.png"))
    failures = diagnostics.proved_failures(reports)
    return {
        "status": EXIT_INEQUALITY if failures else EXIT_OK,
        "out_dir": path,
        "reports": len(reports),
        "proved_failures": [r.name for r in failures],
    }
