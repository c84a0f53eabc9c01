"""Run configuration: JSON schema, validation, deterministic construction."""

import copy
import hashlib
import json
import warnings

import numpy as np

from .constitutive import ConstitutiveError, model_from_string
from .energy import ModelParams, MixtureState, state_from_c1
from .grid import Grid1D, Profile
from .jko import JkoConfig
from .pde import FdConfig

MODES = ("jko", "pde_compare", "diagnose", "sweep")

DEFAULTS = {
    "domain": {"L": 10.0, "N": 64},
    "physics": {"chi": 0.0, "m1": 1.0, "m2": 1.0, "model": "arcsin", "d": 1},
    "jko": {
        "tau": 0.05,
        "delta0": None,
        "inner_tol": 1e-6,
        "inner_max_iter": 1000,
        "step_shrink": 0.5,
        "n_steps": 10,
        "save_every": 1,
    },
    "pde": {"dt": 1e-3, "n_steps": 100, "theta_implicit": 1.0, "elliptic_tol": 1e-10},
    "initial": {"kind": "constant_noise", "mean": 0.5, "amplitude": 0.0, "seed": None},
    "outputs": {
        "dir": "demix_out",
        "emit_snapshots": True,
        "emit_reports": True,
        "emit_figures": True,
    },
    "mode": "jko",
    "sweep": [],
}


class ConfigError(ValueError):
    """Schema violation; carries the offending keys."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid config: " + "; ".join(self.problems))


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


class RunConfig:
    """Validated, fully populated run configuration."""

    def __init__(self, data: dict | None = None):
        problems = []
        data = data or {}
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            problems.append(f"unknown top-level keys {sorted(unknown)}")
        merged = _merge(DEFAULTS, {k: v for k, v in data.items() if k in DEFAULTS})
        # 'initial' carries kind-specific keys and is validated below
        for section in ("domain", "physics", "jko", "pde", "outputs"):
            extra = set(merged[section]) - set(DEFAULTS[section])
            if extra:
                problems.append(f"unknown keys in '{section}': {sorted(extra)}")

        dom = merged["domain"]
        if not (isinstance(dom["L"], (int, float)) and dom["L"] > 0):
            problems.append("domain.L must be positive")
        if not (isinstance(dom["N"], int) and dom["N"] > 0):
            problems.append("domain.N must be a positive integer")

        phys = merged["physics"]
        if phys["chi"] < 0:
            problems.append("physics.chi must be nonnegative")
        if phys["m1"] <= 0 or phys["m2"] <= 0:
            problems.append("physics.m1 and physics.m2 must be positive")
        if not (isinstance(phys["d"], int) and phys["d"] >= 1):
            problems.append("physics.d must be an integer >= 1")
        try:
            model_from_string(phys["model"])
        except ConstitutiveError as exc:
            problems.append(f"physics.model: {exc}")

        jko = merged["jko"]
        if jko["tau"] <= 0:
            problems.append("jko.tau must be positive")
        if jko["n_steps"] < 0:
            problems.append("jko.n_steps must be nonnegative")
        if jko["save_every"] < 1:
            problems.append("jko.save_every must be >= 1")
        if jko["delta0"] is not None and jko["delta0"] > jko["tau"] ** 2:
            warnings.warn(
                f"delta0={jko['delta0']} exceeds tau^2={jko['tau']**2}; "
                "the effective regularization is clamped to tau^2",
                stacklevel=2,
            )

        pde = merged["pde"]
        if pde["dt"] <= 0:
            problems.append("pde.dt must be positive")
        if pde["n_steps"] < 0:
            problems.append("pde.n_steps must be nonnegative")

        ini = merged["initial"]
        kind = ini.get("kind")
        base_keys = {"kind", "mean", "amplitude", "seed"}
        if kind == "constant_noise":
            allowed = base_keys
            if not 0 < ini.get("mean", 0.5) < 1:
                problems.append("initial.mean must lie in (0, 1)")
            if ini.get("amplitude", 0.0) < 0:
                problems.append("initial.amplitude must be nonnegative")
            if ini.get("amplitude", 0.0) > 0 and ini.get("seed") is None:
                problems.append("initial.seed is mandatory when noise is used")
        elif kind == "step":
            allowed = base_keys | {"left", "right", "interface_at"}
            for key in ("left", "right"):
                if not 0 <= ini.get(key, -1) <= 1:
                    problems.append(f"initial.{key} must lie in [0, 1]")
            if not 0 < ini.get("interface_at", -1) < 1:
                problems.append("initial.interface_at must lie in (0, 1) as a domain fraction")
        elif kind == "csv":
            allowed = base_keys | {"path"}
            if not ini.get("path"):
                problems.append("initial.path required for csv initial data")
        else:
            allowed = set(ini)
            problems.append(f"initial.kind must be constant_noise | step | csv, got {kind!r}")
        stray = set(ini) - allowed
        if stray:
            problems.append(f"unknown keys in 'initial': {sorted(stray)}")

        if merged["mode"] not in MODES:
            problems.append(f"mode must be one of {MODES}, got {merged['mode']!r}")
        if merged["mode"] == "sweep" and not merged["sweep"]:
            problems.append("sweep mode requires a nonempty 'sweep' list of overrides")

        if problems:
            raise ConfigError(problems)
        self.raw = merged

    # -- constructed objects ------------------------------------------------
    def grid(self) -> Grid1D:
        return Grid1D(float(self.raw["domain"]["L"]), int(self.raw["domain"]["N"]))

    def params(self) -> ModelParams:
        phys = self.raw["physics"]
        return ModelParams(
            chi=float(phys["chi"]),
            m1=float(phys["m1"]),
            m2=float(phys["m2"]),
            model=model_from_string(phys["model"]),
            d=int(phys["d"]),
        )

    def jko_config(self) -> JkoConfig:
        jko = self.raw["jko"]
        return JkoConfig(
            tau=float(jko["tau"]),
            delta0=None if jko["delta0"] is None else float(jko["delta0"]),
            inner_tol=float(jko["inner_tol"]),
            inner_max_iter=int(jko["inner_max_iter"]),
            step_shrink=float(jko["step_shrink"]),
        )

    def fd_config(self) -> FdConfig:
        pde = self.raw["pde"]
        return FdConfig(
            dt=float(pde["dt"]),
            n_steps=int(pde["n_steps"]),
            theta_implicit=float(pde["theta_implicit"]),
            elliptic_tol=float(pde["elliptic_tol"]),
        )

    def initial_state(self) -> MixtureState:
        grid = self.grid()
        ini = self.raw["initial"]
        if ini["kind"] == "constant_noise":
            values = np.full(grid.cells, float(ini["mean"]))
            if ini["amplitude"] > 0:
                rng = np.random.default_rng(int(ini["seed"]))
                values = values + float(ini["amplitude"]) * rng.standard_normal(grid.cells)
                values = np.clip(values, 1e-6, 1.0 - 1e-6)
        elif ini["kind"] == "step":
            split = float(ini["interface_at"]) * grid.length
            values = np.where(grid.centers < split, float(ini["left"]), float(ini["right"]))
        else:
            data = np.loadtxt(ini["path"], delimiter=",", comments="#")
            if data.ndim != 2 or data.shape[0] != grid.cells:
                raise ConfigError(
                    [f"initial.path: expected {grid.cells} rows of x,value"]
                )
            values = data[:, 1]
        return state_from_c1(Profile(grid, values))

    def config_hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def sweep_members(self) -> list["RunConfig"]:
        members = []
        for override in self.raw["sweep"]:
            data = _merge(self.raw, override)
            data["sweep"] = []
            if data["mode"] == "sweep":
                data["mode"] = "jko"
            members.append(RunConfig(data))
        return members


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as handle:
            data = json.load(handle)
    except FileNotFoundError as exc:
        raise ConfigError([f"config file not found: {path}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"malformed JSON in {path}: {exc}"]) from exc
    return RunConfig(data)
