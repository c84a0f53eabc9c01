"""Finite-difference reference solvers for the reduced demixing models.

Both solvers advance the first volume fraction at unit mobilities.  The
local model annihilates the component fluxes pointwise and reduces to one
fourth-order equation,

    dc/dt = -div( c(1-c) grad[ f'(c) Lap f(c) + chi (c - 1/2) ] ),

while the non-local model keeps only the divergence constraint: the
driving field v is projected through the Neumann elliptic problem

    -Lap mu = div( (1-c) grad v ),   zero flux, zero mean,

solved by conjugate gradients, followed by dc/dt = div(c grad mu).

Both updates are conservative-form in the flux and stabilized against the
fourth-order stiffness by a constant-coefficient bilaplacian split treated
implicitly: kappa = theta_implicit * max_r[r(1-r) f'(r)^2], the modulus of
the linearized fourth-order symbol (equal to 1 for the arcsin family).
The explicit-flux part then only carries a second-order stability limit.
Cell values are clamped to [0, 1] after each step and the clamped mass is
recorded; clamping is the only mass leak.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .energy import ModelParams, energy_e1_values
from .grid import Grid1D, Profile, div_faces, grad_values, lap_values


@dataclass(frozen=True)
class FdConfig:
    dt: float
    n_steps: int
    theta_implicit: float = 1.0
    elliptic_tol: float = 1e-10

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not 0.0 <= self.theta_implicit <= 1.0:
            raise ValueError("theta_implicit must lie in [0, 1]")
        if self.elliptic_tol <= 0:
            raise ValueError("elliptic_tol must be positive")


@dataclass
class FdStepResult:
    values: np.ndarray
    clamp_mass: float


def _require_unit_mobilities(params: ModelParams):
    if params.m1 != 1.0 or params.m2 != 1.0:
        raise ValueError("reference solvers are stated for m1 = m2 = 1")


def stabilization_coefficient(params: ModelParams, theta: float) -> float:
    """theta * max of the degenerate-mobility-weighted squared slope."""
    r = np.linspace(1e-6, 1.0 - 1e-6, 20001)
    return theta * float(np.max(r * (1.0 - r) * params.model.fprime_unclamped(r) ** 2))


class _ImplicitBilaplacian:
    """Prefactored solve of (I + dt*kappa*Lap^2) with Neumann stencils."""

    def __init__(self, grid: Grid1D, dt: float, kappa: float):
        n = grid.cells
        self.kappa = kappa
        if kappa == 0.0:
            self.solver = None
            return
        eye = np.eye(n)
        lap = np.array([lap_values(eye[:, j], grid.h) for j in range(n)]).T
        op = sps.csc_matrix(np.eye(n) + dt * kappa * (lap @ lap))
        self.solver = spla.splu(op)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self.solver is None:
            return rhs
        return self.solver.solve(rhs)


def _driving_field(c: np.ndarray, grid: Grid1D, params: ModelParams) -> np.ndarray:
    """v = f'(c) Lap f(c) + chi (c - 1/2), with clamped f'."""
    model = params.model
    lap_f = lap_values(model.f_eval(np.clip(c, 0.0, 1.0)), grid.h)
    return model.fprime_eval(c) * lap_f + params.chi * (c - 0.5)


def _harmonic_faces(cell_values: np.ndarray) -> np.ndarray:
    """Harmonic face means; vanish when either neighbor does."""
    out = np.zeros(len(cell_values) + 1)
    a = np.clip(cell_values[:-1], 0.0, None)
    b = np.clip(cell_values[1:], 0.0, None)
    s = a + b
    pos = s > 0
    out[1:-1][pos] = 2.0 * a[pos] * b[pos] / s[pos]
    return out


def _clamp(values: np.ndarray, grid: Grid1D):
    clipped = np.clip(values, 0.0, 1.0)
    clamp_mass = grid.h * float(np.sum(np.abs(clipped - values)))
    return clipped, clamp_mass


def step_local(c1: Profile, params: ModelParams, cfg: FdConfig,
               solver: _ImplicitBilaplacian | None = None) -> FdStepResult:
    """One step of the local (flux-annihilating) fourth-order model."""
    _require_unit_mobilities(params)
    grid = c1.grid
    c = c1.values
    if solver is None:
        kappa = stabilization_coefficient(params, cfg.theta_implicit)
        solver = _ImplicitBilaplacian(grid, cfg.dt, kappa)
    v = _driving_field(c, grid, params)
    mobility = _harmonic_faces(c * (1.0 - c))
    flux_div = div_faces(mobility * grad_values(v, grid.h), grid.h)
    rhs = c - cfg.dt * flux_div
    if solver.kappa > 0.0:
        rhs = rhs + cfg.dt * solver.kappa * lap_values(lap_values(c, grid.h), grid.h)
    new = solver.solve(rhs)
    new, clamp_mass = _clamp(new, grid)
    return FdStepResult(new, clamp_mass)


def solve_neumann_poisson(rhs: np.ndarray, grid: Grid1D, tol: float,
                          x0: np.ndarray | None = None) -> np.ndarray:
    """Solve -Lap u = rhs with zero-flux boundary and zero-mean gauge by CG.

    The Neumann Laplacian is singular on constants; the right-hand side is
    projected onto mean zero (solvability) and the iterates are kept there.
    """
    n = len(rhs)
    b = rhs - np.mean(rhs)

    def matvec(u):
        return -lap_values(u - np.mean(u), grid.h)

    op = spla.LinearOperator((n, n), matvec=matvec)
    u, info = spla.cg(op, b, x0=x0, rtol=0.0, atol=tol * max(1.0, float(np.linalg.norm(b))),
                      maxiter=20 * n)
    if info != 0:
        raise RuntimeError(f"elliptic solve did not converge (cg info {info})")
    return u - np.mean(u)


def step_nonlocal(c1: Profile, params: ModelParams, cfg: FdConfig,
                  solver: _ImplicitBilaplacian | None = None,
                  mu_guess: np.ndarray | None = None) -> tuple[FdStepResult, np.ndarray]:
    """One step of the non-local (divergence-constrained) model."""
    _require_unit_mobilities(params)
    grid = c1.grid
    c = c1.values
    if solver is None:
        kappa = stabilization_coefficient(params, cfg.theta_implicit)
        solver = _ImplicitBilaplacian(grid, cfg.dt, kappa)
    v = _driving_field(c, grid, params)
    one_minus = _harmonic_faces(1.0 - c)
    rhs_div = div_faces(one_minus * grad_values(v, grid.h), grid.h)
    mu = solve_neumann_poisson(rhs_div, grid, cfg.elliptic_tol, x0=mu_guess)
    mobility = _harmonic_faces(c)
    flux_div = div_faces(mobility * grad_values(mu, grid.h), grid.h)
    rhs = c + cfg.dt * flux_div
    if solver.kappa > 0.0:
        rhs = rhs + cfg.dt * solver.kappa * lap_values(lap_values(c, grid.h), grid.h)
    new = solver.solve(rhs)
    new, clamp_mass = _clamp(new, grid)
    return FdStepResult(new, clamp_mass), mu


def run_fd_trajectory(initial: Profile, params: ModelParams, cfg: FdConfig,
                      kind: str, record_every: int = 1):
    """March one solver; returns times, states, energies, cumulative clamp."""
    _require_unit_mobilities(params)
    grid = initial.grid
    kappa = stabilization_coefficient(params, cfg.theta_implicit)
    solver = _ImplicitBilaplacian(grid, cfg.dt, kappa)
    c = initial.values.copy()
    times = [0.0]
    states = [c.copy()]
    energies = [energy_e1_values(c, grid, params)]
    clamp_total = 0.0
    clamps = [0.0]
    mu_guess = None
    for n in range(1, cfg.n_steps + 1):
        if kind == "local":
            result = step_local(Profile(grid, c), params, cfg, solver)
        elif kind == "nonlocal":
            result, mu_guess = step_nonlocal(
                Profile(grid, c), params, cfg, solver, mu_guess
            )
        else:
            raise ValueError(f"unknown solver kind {kind!r}")
        c = result.values
        clamp_total += result.clamp_mass
        if n % record_every == 0 or n == cfg.n_steps:
            times.append(n * cfg.dt)
            states.append(c.copy())
            energies.append(energy_e1_values(c, grid, params))
            clamps.append(clamp_total)
    return {
        "times": np.array(times),
        "states": states,
        "energies": np.array(energies),
        "clamp": np.array(clamps),
    }


def compare_energy_decay(initial: Profile, params: ModelParams, cfg: FdConfig,
                         record_every: int = 1) -> dict:
    """Head-to-head run of both solvers from identical data.

    Returns the shared time axis, both energy series, per-solver mass
    series and cumulative clamp mass, the terminal-energy ratio, and the
    first time the non-local energy drops below the local one (nan when it
    never does).
    """
    grid = initial.grid
    runs = {}
    for kind in ("local", "nonlocal"):
        runs[kind] = run_fd_trajectory(initial, params, cfg, kind, record_every)
    t = runs["local"]["times"]
    e_loc = runs["local"]["energies"]
    e_non = runs["nonlocal"]["energies"]
    mass = lambda states: np.array([grid.integrate(s) for s in states])
    below = np.nonzero(e_non < e_loc)[0]
    crossing = float(t[below[0]]) if len(below) else float("nan")
    ratio = float(e_non[-1] / e_loc[-1]) if e_loc[-1] != 0 else float("nan")
    return {
        "times": t,
        "energy_local": e_loc,
        "energy_nonlocal": e_non,
        "mass_local": mass(runs["local"]["states"]),
        "mass_nonlocal": mass(runs["nonlocal"]["states"]),
        "clamp_local": runs["local"]["clamp"],
        "clamp_nonlocal": runs["nonlocal"]["clamp"],
        "states_local": runs["local"]["states"],
        "states_nonlocal": runs["nonlocal"]["states"],
        "terminal_ratio": ratio,
        "first_crossing_time": crossing,
    }
