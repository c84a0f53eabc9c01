"""Deterministic CSV/JSON writers for run artifacts.

Every file starts with comment lines carrying the config hash so outputs
stay tied to their inputs; all floats are written with 17 significant
digits and fixed column orders, which makes reruns byte-identical.
"""

import json
import os

import numpy as np

from .diagnostics import kinetic_face_quadrature
from .energy import ModelParams
from .jko import JkoStepRecord

TRAJECTORY_COLUMNS = (
    "n",
    "t",
    "E",
    "H",
    "w_step_sq",
    "kinetic",
    "entropy_drop",
    "eula_residual",
    "mass_c1",
    "min_c1",
    "max_c1",
    "clamp_count",
    "inner_iters",
    "flags",
)

SNAPSHOT_FIELDS = ("c1", "c2", "psi1", "psi2", "mu1", "mu2", "q1", "q2", "mubar")


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _header_lines(kind: str, config_hash: str):
    return [f"# demix {kind}", f"# config_hash={config_hash}"]


def write_trajectory_csv(path, records, params: ModelParams, tau: float, config_hash: str):
    lines = _header_lines("trajectory", config_hash)
    lines.append(",".join(TRAJECTORY_COLUMNS))
    prev_entropy = records[0].entropy
    for rec in records:
        kinetic = 0.0
        if rec.step_index > 0 and rec.psi1 is not None:
            kinetic = kinetic_face_quadrature(rec, params, tau)
        c1 = rec.state.c1.values
        row = [
            str(rec.step_index),
            _fmt(rec.step_index * tau),
            _fmt(rec.energy),
            _fmt(rec.entropy),
            _fmt(rec.w_step_sq),
            _fmt(kinetic),
            _fmt(prev_entropy - rec.entropy if rec.step_index > 0 else 0.0),
            _fmt(rec.eula_residual),
            _fmt(rec.state.c1.mass),
            _fmt(float(np.min(c1))),
            _fmt(float(np.max(c1))),
            str(rec.clamp_events),
            str(rec.inner_iters),
            ";".join(
                list(rec.flags) + (["local_only"] if rec.step_index > 0 and rec.local_only else [])
            ),
        ]
        lines.append(",".join(row))
        prev_entropy = rec.entropy
    _write_lines(path, lines)


def write_snapshot_csv(path, record: JkoStepRecord, config_hash: str):
    grid = record.state.grid
    fields = {
        "c1": record.state.c1.values,
        "c2": record.state.c2.values,
    }
    for name in SNAPSHOT_FIELDS[2:]:
        prof = getattr(record, name)
        fields[name] = prof.values if prof is not None else np.full(grid.cells, np.nan)
    lines = _header_lines("snapshot", config_hash)
    lines.append(f"# step={record.step_index}")
    lines.append(f"# flags={';'.join(record.flags)}")
    lines.append("x," + ",".join(SNAPSHOT_FIELDS))
    for k in range(grid.cells):
        vals = [_fmt(grid.centers[k])] + [_fmt(fields[name][k]) for name in SNAPSHOT_FIELDS]
        lines.append(",".join(vals))
    _write_lines(path, lines)


def write_timeseries_csv(path, comparison: dict, config_hash: str):
    lines = _header_lines("pde_compare", config_hash)
    lines.append("t,E_local,E_nonlocal,mass_local,mass_nonlocal,clamp_local,clamp_nonlocal")
    for i in range(len(comparison["times"])):
        lines.append(
            ",".join(
                _fmt(comparison[key][i])
                for key in (
                    "times",
                    "energy_local",
                    "energy_nonlocal",
                    "mass_local",
                    "mass_nonlocal",
                    "clamp_local",
                    "clamp_nonlocal",
                )
            )
        )
    _write_lines(path, lines)


def write_reports_json(path, reports, config_hash: str):
    doc = {"config_hash": config_hash, "reports": [r.as_dict() for r in reports]}
    with open(path, "w") as handle:
        json.dump(doc, handle, indent=2, sort_keys=True)
        handle.write("\n")


def write_error_json(path, message: str, config_hash: str = ""):
    with open(path, "w") as handle:
        json.dump({"error": message, "config_hash": config_hash}, handle, indent=2)
        handle.write("\n")


def _write_lines(path, lines):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as handle:
        handle.write("\n".join(lines) + "\n")


def read_csv_columns(path):
    """Read a demix CSV back into a dict of column -> list of strings."""
    with open(path) as handle:
        rows = [line.rstrip("\n") for line in handle if not line.startswith("#")]
    header = rows[0].split(",")
    columns = {name: [] for name in header}
    for row in rows[1:]:
        for name, value in zip(header, row.split(",")):
            columns[name].append(value)
    return columns
