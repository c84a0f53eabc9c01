"""Free energy, entropy, and variational derivatives of the two-phase mixture.

The energy of the pair is carried entirely by the first component,

    E1(c1) = 1/2 * int |grad f(c1)|^2 + chi/2 * int c1 (1 - c1),

with the sum constraint c1 + c2 = 1 enforced as a +inf indicator in E.
The gradient term is always the discrete gradient OF the profile f(c1),
never f'(c1) * grad c1: the two differ next to saturated cells and only
the former stays finite.
"""

import math
from dataclasses import dataclass

import numpy as np

from .constitutive import ConstitutiveModel
from .grid import Grid1D, Profile, grad_values, lap_values

CONSTRAINT_TOL = 1e-12
MEAN_TOL = 1e-10


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters: interaction strength, mobilities, dimension."""

    chi: float
    m1: float
    m2: float
    model: ConstitutiveModel
    d: int = 1

    def __post_init__(self):
        if self.m1 <= 0 or self.m2 <= 0:
            raise ValueError("mobilities must be positive")
        if self.chi < 0:
            raise ValueError("chi must be nonnegative")
        if self.d < 1:
            raise ValueError("dimension parameter must be >= 1")


class StateError(ValueError):
    pass


@dataclass(frozen=True)
class MixtureState:
    """Pair (c1, c2) of volume fractions with pointwise sum 1 and fixed means."""

    c1: Profile
    c2: Profile
    rho1: float
    rho2: float

    def __post_init__(self):
        violation = self.constraint_violation()
        if violation is not None:
            raise StateError(violation)

    def constraint_violation(self):
        v1, v2 = self.c1.values, self.c2.values
        if self.c1.grid is not self.c2.grid and (
            self.c1.grid.cells != self.c2.grid.cells
            or self.c1.grid.length != self.c2.grid.length
        ):
            return "components live on different grids"
        if np.min(v1) < -CONSTRAINT_TOL or np.max(v1) > 1 + CONSTRAINT_TOL:
            return "c1 leaves [0, 1]"
        if np.min(v2) < -CONSTRAINT_TOL or np.max(v2) > 1 + CONSTRAINT_TOL:
            return "c2 leaves [0, 1]"
        if np.max(np.abs(v1 + v2 - 1.0)) > CONSTRAINT_TOL:
            return "c1 + c2 != 1 pointwise"
        if abs(self.rho1 + self.rho2 - 1.0) > MEAN_TOL:
            return "rho1 + rho2 != 1"
        if abs(self.c1.mean - self.rho1) > MEAN_TOL:
            return "mean(c1) != rho1"
        if abs(self.c2.mean - self.rho2) > MEAN_TOL:
            return "mean(c2) != rho2"
        return None

    @property
    def grid(self) -> Grid1D:
        return self.c1.grid


def state_from_c1(c1: Profile, rho1: float | None = None) -> MixtureState:
    """Build the pair (c1, 1 - c1); the mean defaults to the actual mean."""
    r1 = c1.mean if rho1 is None else rho1
    c2 = c1.with_values(1.0 - c1.values)
    return MixtureState(c1, c2, r1, 1.0 - r1)


def energy_e1_values(c1_values: np.ndarray, grid: Grid1D, params: ModelParams) -> float:
    f_vals = params.model.f_eval(np.clip(c1_values, 0.0, 1.0))
    g = grad_values(f_vals, grid.h)
    grad_part = 0.5 * grid.h * float(np.sum(g * g))
    mix_part = 0.5 * params.chi * grid.integrate(c1_values * (1.0 - c1_values))
    return grad_part + mix_part


def energy_E1(c1: Profile, params: ModelParams) -> float:
    """Gradient + interaction energy of the first component."""
    if np.min(c1.values) < -CONSTRAINT_TOL or np.max(c1.values) > 1 + CONSTRAINT_TOL:
        raise StateError("c1 leaves [0, 1]")
    return energy_e1_values(c1.values, c1.grid, params)


def energy_E(state: MixtureState, params: ModelParams) -> float:
    """E1 on admissible states, +inf sentinel when the constraint fails."""
    if state.constraint_violation() is not None:
        return math.inf
    return energy_e1_values(state.c1.values, state.grid, params)


def _entropy_integrand(c: np.ndarray) -> np.ndarray:
    # c (log c - 1) + 1, extended continuously with value 1 at c = 0
    out = np.ones_like(c)
    pos = c > 0.0
    cp = c[pos]
    out[pos] = cp * (np.log(cp) - 1.0) + 1.0
    return out


def entropy_H(state: MixtureState, params: ModelParams) -> float:
    """Mobility-weighted Boltzmann entropy of the pair; nonnegative."""
    grid = state.grid
    h1 = grid.integrate(_entropy_integrand(state.c1.values))
    h2 = grid.integrate(_entropy_integrand(state.c2.values))
    return h1 / params.m1 + h2 / params.m2


def entropy_of_means(rho1: float, rho2: float, grid: Grid1D, params: ModelParams) -> float:
    """Entropy of the constant state (rho1, rho2) on the same domain."""
    e1 = rho1 * (math.log(rho1) - 1.0) + 1.0 if rho1 > 0 else 1.0
    e2 = rho2 * (math.log(rho2) - 1.0) + 1.0 if rho2 > 0 else 1.0
    return grid.length * (e1 / params.m1 + e2 / params.m2)


def frak_F_values(c1_values: np.ndarray, grid: Grid1D, params: ModelParams) -> np.ndarray:
    model = params.model
    c1 = np.clip(c1_values, 0.0, 1.0)
    lap_f = lap_values(model.f_eval(c1), grid.h)
    mix = params.chi * model.omega_eval(c1) * model.omega_eval(1.0 - c1) * (c1 - 0.5)
    return lap_f + mix


def frak_F(c1: Profile, params: ModelParams) -> Profile:
    """Constitutive operator Delta f(c1) + chi * omega(c1) omega(c2) (c1 - 1/2)."""
    return c1.with_values(frak_F_values(c1.values, c1.grid, params))


def variational_derivative_values(
    c1_values: np.ndarray, grid: Grid1D, params: ModelParams
) -> np.ndarray:
    model = params.model
    c1 = np.clip(c1_values, 0.0, 1.0)
    lap_f = lap_values(model.f_eval(c1), grid.h)
    return -model.fprime_eval(c1) * lap_f + params.chi * (0.5 - c1)


def variational_derivative(c1: Profile, params: ModelParams) -> Profile:
    """Cell gradient of E1 (w.r.t. the h-weighted inner product).

    Exact for the discrete E1: its directional derivative along any
    perturbation eta equals <vd, eta>_h wherever f' needs no clamping.
    """
    return c1.with_values(variational_derivative_values(c1.values, c1.grid, params))
