"""Independent reference implementations used only by the tests.

Each oracle recomputes a quantity through a different formulation or code
path than the library kernel: a Kantorovich linear program on cell-center
atoms, a quantile-function quadrature built on np.interp plus two-point
Gauss-Legendre, a brute-force extremizer for the constitutive constant,
and extended-precision re-evaluation of the energy quadratures.
"""

from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from demix.grid import Grid1D, Profile


def kantorovich_lp_w2sq(src: Profile, dst: Profile) -> float:
    """Transport-plan LP between cell-center atoms; squared-distance value."""
    a = src.grid.h * np.clip(src.values, 0.0, None)
    b = dst.grid.h * np.clip(dst.values, 0.0, None)
    b = b * a.sum() / b.sum()
    x, y = src.grid.centers, dst.grid.centers
    n, m = len(a), len(b)
    cost = ((x[:, None] - y[None, :]) ** 2).ravel()
    rows = []
    rhs = []
    for i in range(n):
        row = np.zeros((n, m))
        row[i, :] = 1.0
        rows.append(row.ravel())
        rhs.append(a[i])
    for j in range(m - 1):  # last column constraint is redundant
        row = np.zeros((n, m))
        row[:, j] = 1.0
        rows.append(row.ravel())
        rhs.append(b[j])
    res = linprog(cost, A_eq=np.array(rows), b_eq=np.array(rhs),
                  bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"LP failed: {res.message}")
    return float(res.fun)


def atomic_vs_spread_budget(src: Profile, dst: Profile, w_spread: float, w_atomic: float) -> float:
    """Bound on |spread-cell cost - atomic cost|.

    Collapsing each cell's mass to its center moves every particle at most
    h/2 on either side, so the two couplings differ in W2 by sqrt(m) * h,
    and the squared values by that times the sum of the distances.
    """
    mass = src.grid.h * float(np.sum(src.values))
    h = max(src.grid.h, dst.grid.h)
    shift = np.sqrt(mass) * h
    return shift * (np.sqrt(max(w_spread, 0.0)) + np.sqrt(max(w_atomic, 0.0))) + shift**2


def _inverse_cdf_table(profile: Profile):
    """Quantile function as (mass, position) interpolation knots.

    Plateaus of the cumulative function (zero-density cells) become jumps
    of the inverse; they are kept as ulp-wide ramps so the knot masses are
    strictly increasing and np.interp is well defined.  Gauss-Legendre
    nodes sit a fixed fraction inside each merged segment, far from any
    ramp, so the nudge never affects an evaluated value.
    """
    dens = np.clip(profile.values, 0.0, None)
    cum = np.concatenate(([0.0], np.cumsum(dens) * profile.grid.h))
    pos = profile.grid.faces.copy()
    for i in range(1, len(cum)):
        if cum[i] <= cum[i - 1]:
            cum[i] = np.nextafter(cum[i - 1], np.inf)
    return cum, pos


def quantile_quadrature_w2sq(src: Profile, dst: Profile) -> float:
    """Two-point Gauss-Legendre over the merged mass partition.

    Both quantile functions are linear on each partition cell, so the rule
    integrates the squared difference exactly; implemented entirely through
    np.interp as an independent code path.
    """
    cs, xs = _inverse_cdf_table(src)
    cd, yd = _inverse_cdf_table(dst)
    scale = cs[-1] / cd[-1]
    cd = cd * scale
    s = np.union1d(cs, cd)
    s = s[(s >= 0.0) & (s <= cs[-1])]
    widths = np.diff(s)
    mids = s[:-1] + 0.5 * widths
    offset = widths / (2.0 * np.sqrt(3.0))
    total = 0.0
    for nodes in (mids - offset, mids + offset):
        q_src = np.interp(nodes, cs, xs)
        q_dst = np.interp(nodes, cd, yd)
        total += 0.5 * np.sum(widths * (q_src - q_dst) ** 2)
    return float(total)


def extremal_f_constant(model, resolution: int = 1_000_001) -> float:
    """Grid search for the smallest a with |f| <= a and f' >= 1/a."""
    r = np.linspace(0.0, 1.0, resolution)
    sup_f = float(np.max(np.abs(model.f_eval(r))))
    interior = r[(r > 0) & (r < 1)]
    inf_fp = float(np.min(model.fprime_unclamped(interior)))
    return max(sup_f, 1.0 / inf_fp)


def energy_quadrature_extended(c1_values, grid: Grid1D, chi: float, f) -> Fraction:
    """Re-evaluate the discrete energy with exact rational accumulation.

    The f-values are taken from the library model (floats) but every
    quadrature sum runs in Fraction arithmetic, so any accumulation-order
    or cancellation bug in the float path shows up as a mismatch.
    """
    h = Fraction(grid.length) / grid.cells
    f_vals = [Fraction(float(v)) for v in f(np.asarray(c1_values))]
    c_vals = [Fraction(float(v)) for v in c1_values]
    grad_part = Fraction(0)
    for k in range(1, grid.cells):
        g = (f_vals[k] - f_vals[k - 1]) / h
        grad_part += g * g
    grad_part = grad_part * h / 2
    mix = sum(c * (1 - c) for c in c_vals) * h * Fraction(float(chi)) / 2
    return grad_part + mix


def entropy_quadrature_extended(values, grid: Grid1D) -> float:
    """Entropy integral re-evaluated with math.log in plain Python floats,
    Kahan-summed, as an accumulation-order oracle."""
    import math

    total = 0.0
    comp = 0.0
    for v in values:
        term = v * (math.log(v) - 1.0) + 1.0 if v > 0 else 1.0
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return (grid.length / grid.cells) * total
