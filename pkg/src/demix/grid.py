"""Uniform 1D finite-volume grid with Neumann-compatible discrete calculus.

Fields are represented by their cell averages on a uniform grid over
[0, L].  Gradients live on the N+1 cell faces with zero boundary values
(homogeneous Neumann via ghost-cell reflection); the Laplacian is the
face-flux divergence, which makes it symmetric under the cell quadrature
and exactly mass-neutral.
"""

from dataclasses import dataclass

import numpy as np

NORM_KINDS = ("L1", "L2", "Lp", "Linf", "H1seminorm")


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Grid1D:
    """Cell-centered uniform grid on [0, L] with N cells of width h = L/N."""

    length: float
    cells: int

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("grid length must be positive")
        if not (isinstance(self.cells, (int, np.integer)) and self.cells > 0):
            raise ValueError("cell count must be a positive integer")
        object.__setattr__(self, "h", self.length / self.cells)
        centers = (np.arange(self.cells) + 0.5) * self.h
        object.__setattr__(self, "centers", _readonly(centers))
        faces = np.arange(self.cells + 1) * self.h
        object.__setattr__(self, "faces", _readonly(faces))

    def integrate(self, values: np.ndarray) -> float:
        """Cell quadrature h * sum(values), fixed summation order."""
        return self.h * float(np.sum(values))

    def integrate_faces(self, face_values: np.ndarray) -> float:
        return self.h * float(np.sum(face_values))

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return self.h * float(np.sum(np.asarray(a) * np.asarray(b)))

    def refine(self) -> "Grid1D":
        return Grid1D(self.length, 2 * self.cells)


@dataclass(frozen=True)
class Profile:
    """Cell-averaged scalar field on a Grid1D."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.cells,):
            raise ValueError(
                f"profile needs {self.grid.cells} cell values, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("profile values must be finite")
        object.__setattr__(self, "values", _readonly(vals))

    @property
    def mass(self) -> float:
        return self.grid.integrate(self.values)

    @property
    def mean(self) -> float:
        return self.mass / self.grid.length

    def with_values(self, values) -> "Profile":
        return Profile(self.grid, values)


def grad_values(values: np.ndarray, h: float) -> np.ndarray:
    """Face gradient of cell values; boundary faces are zero (Neumann)."""
    g = np.zeros(len(values) + 1)
    g[1:-1] = np.diff(values) / h
    return g


def div_faces(face_values: np.ndarray, h: float) -> np.ndarray:
    """Cell divergence of face values (adjoint of -grad under quadrature)."""
    return np.diff(face_values) / h


def lap_values(values: np.ndarray, h: float) -> np.ndarray:
    return div_faces(grad_values(values, h), h)


def gradient(p: Profile) -> np.ndarray:
    """Discrete gradient on faces; g[0] = g[N] = 0 by reflection."""
    return grad_values(p.values, p.grid.h)


def laplacian(p: Profile) -> Profile:
    """Three-point Laplacian with reflecting ghost cells.

    Self-adjoint under the cell quadrature and integrates to zero exactly
    (zero-flux boundary), which the summation-by-parts identity
    <lap p, q> = -h * sum(grad p * grad q) relies on.
    """
    return p.with_values(lap_values(p.values, p.grid.h))


def norm(p: Profile, kind: str, exponent: float | None = None) -> float:
    """Quadrature-based norm of a profile.

    kind is one of L1 | L2 | Lp | Linf | H1seminorm; Lp takes the exponent
    (>= 1) as a separate argument.  The H1 seminorm uses face gradients.
    """
    if kind not in NORM_KINDS:
        raise ValueError(f"unknown norm kind {kind!r}; expected one of {NORM_KINDS}")
    v = p.values
    h = p.grid.h
    if kind == "L1":
        return h * float(np.sum(np.abs(v)))
    if kind == "L2":
        return float(np.sqrt(h * np.sum(v * v)))
    if kind == "Linf":
        return float(np.max(np.abs(v)))
    if kind == "H1seminorm":
        g = gradient(p)
        return float(np.sqrt(h * np.sum(g * g)))
    if exponent is None or exponent < 1:
        raise ValueError("Lp norm needs exponent >= 1")
    return float((h * np.sum(np.abs(v) ** exponent)) ** (1.0 / exponent))


def l2_norm_values(values: np.ndarray, h: float) -> float:
    return float(np.sqrt(h * np.sum(np.asarray(values) ** 2)))


def profile_to_csv_rows(p: Profile):
    """Serialize as (x_k, value) rows with 17 significant digits."""
    return [f"{x:.17g},{v:.17g}" for x, v in zip(p.grid.centers, p.values)]
