"""Optimal transport kernels for cell-averaged densities on [0, L].

The exact 1D solver treats each density as piecewise uniform (mass spread
evenly within its cell), builds the piecewise-linear cumulative functions,
and evaluates

    W2(src, dst)^2 = int_0^m |F^{-1}(s) - G^{-1}(s)|^2 ds

by exact quadrature over the merged breakpoint partition, on which both
quantile functions are linear.  The displacement x - T(x) of the monotone
map is piecewise linear in x, so the source-side Kantorovich potential psi
(T = id - grad psi, half-cost convention |x - y|^2 / 2, psi(0) = 0) is
piecewise quadratic and its CELL AVERAGES are computed in closed form.
Cell averages rather than point samples matter twice over: a Profile is a
cell-average field, and h * avg(psi) over a cell is the exact derivative
of W2^2/2 with respect to that cell value, which the minimizing-movement
inner solver differentiates against.  The conjugate potential phi is built
the same way from the reverse map and pinned so the pair is tight along
the coupling; the resulting discrete dual objective reproduces W2^2/2 to
rounding.

An entropic Sinkhorn backend (log-domain, debiased) covers tensor grids in
any dimension; it is approximate and flagged as such.
"""

from dataclasses import dataclass

import numpy as np

from .energy import MixtureState
from .grid import Profile, grad_values, l2_norm_values
from .report import EstimateReport

MASS_RTOL = 1e-10


class TransportError(ValueError):
    pass


@dataclass(frozen=True)
class MetricParams:
    m1: float
    m2: float

    def __post_init__(self):
        if self.m1 <= 0 or self.m2 <= 0:
            raise ValueError("mobility weights must be positive")


@dataclass(frozen=True)
class TransportResult:
    """Squared distance with map and dual potentials for one component."""

    w2sq: float
    map: np.ndarray          # T(x_k) at source cell centers
    psi: Profile             # source-side potential, additive constant free
    phi: Profile             # conjugate potential on the target grid
    approximate: bool = False


def _check_densities(src: Profile, dst: Profile):
    sv, dv = src.values, dst.values
    # tolerate (and zero) constraint-tolerance-scale dips from projections
    floor = -1e-10 * max(1.0, float(np.max(np.abs(sv))), float(np.max(np.abs(dv))))
    if np.min(sv) < floor or np.min(dv) < floor:
        raise TransportError("invalid density: negative cell values")
    sv = np.clip(sv, 0.0, None)
    dv = np.clip(dv, 0.0, None)
    ms = src.grid.h * float(np.sum(sv))
    md = dst.grid.h * float(np.sum(dv))
    if ms <= 0 or md <= 0:
        raise TransportError("invalid density: zero total mass")
    if abs(ms - md) > MASS_RTOL * ms:
        raise TransportError(f"unbalanced: source mass {ms!r} vs target mass {md!r}")
    return sv, dv, ms, md


def _segments(src: Profile, dst: Profile):
    """Merged-breakpoint decomposition of the monotone coupling.

    Returns per-segment mass widths w and the quantile images
    [xa, xb] (source side) and [ya, yb] (target side); both quantile
    functions are linear in s on every segment.
    """
    sv, dv, ms, md = _check_densities(src, dst)
    hs, hd = src.grid.h, dst.grid.h
    cs = np.concatenate(([0.0], np.cumsum(sv) * hs))
    cd = np.concatenate(([0.0], np.cumsum(dv) * hd))
    cd *= cs[-1] / cd[-1]  # absorb the (tolerated) mass mismatch
    cd = np.clip(cd, 0.0, cs[-1])
    cd[-1] = cs[-1]
    s = np.union1d(cs, cd)
    sa, sb = s[:-1], s[1:]
    w = sb - sa
    # ulp-wide slivers (rescaling artifacts) carry no mass but can park their
    # midpoint on a zero-density cell; their cost contribution is rounding
    keep = w > 1e-15 * cs[-1]
    sa, sb, w = sa[keep], sb[keep], w[keep]
    mid = 0.5 * (sa + sb)

    def quantile_pair(cum, dens, edges):
        i = np.clip(np.searchsorted(cum, mid, side="right") - 1, 0, len(dens) - 1)
        slope = 1.0 / dens[i]
        qa = edges[i] + (sa - cum[i]) * slope
        qb = edges[i] + (sb - cum[i]) * slope
        return qa, qb

    xa, xb = quantile_pair(cs, sv, src.grid.faces)
    ya, yb = quantile_pair(cd, dv, dst.grid.faces)
    return w, xa, xb, ya, yb, (sv, cs), (dv, cd)


def wasserstein_distance_sq(src: Profile, dst: Profile) -> float:
    """Squared W2 distance only (fast path, no potentials)."""
    w, xa, xb, ya, yb, _, _ = _segments(src, dst)
    da = xa - ya
    db = xb - yb
    return float(np.sum(w * (da * da + da * db + db * db)) / 3.0)


def _displacement_knots(src: Profile, w, xa, xb, ya, yb):
    """Piecewise-linear displacement psi'(x) = x - T(x) on knot points.

    Segments tile the source support; across interior zero-density gaps
    the target point is unchanged (slope-one displacement).  Through the
    outer gaps the map continues linearly onto [0, first target] and
    [last target, L], keeping T a monotone bijection of the domain with
    T(0) = 0 and T(L) = L; this choice leaves every support integral
    untouched and makes the potential pair globally feasible, corner
    cells included.
    """
    L = src.grid.length
    n = len(w)
    kx = np.empty(2 * n + 2)
    kv = np.empty(2 * n + 2)
    kx[1:-1:2] = xa
    kx[2::2] = xb
    kv[1:-1:2] = xa - ya
    kv[2::2] = xb - yb
    kx[0], kx[-1] = 0.0, L
    kv[0] = 0.0
    kv[-1] = 0.0
    return kx, kv


def _interp_knots(kx, kv, x, side="right"):
    """Piecewise-linear lookup; the displacement jumps at duplicated knots,
    so side picks the right (default) or left limit there."""
    idx = np.clip(np.searchsorted(kx, x, side=side) - 1, 0, len(kx) - 2)
    dx = kx[idx + 1] - kx[idx]
    frac = np.where(dx > 0, (x - kx[idx]) / np.where(dx > 0, dx, 1.0), 0.0)
    return kv[idx] + frac * (kv[idx + 1] - kv[idx]), idx


def _antiderivative_knots(kx, kv):
    """Exact antiderivative (from the left boundary) at the knot points."""
    return np.concatenate(([0.0], np.cumsum(0.5 * (kv[1:] + kv[:-1]) * np.diff(kx))))


def _point_values(kx, kv, prim, x):
    """Exact antiderivative values at arbitrary points x."""
    v_at, idx = _interp_knots(kx, kv, x)
    return prim[idx] + 0.5 * (kv[idx] + v_at) * (x - kx[idx]), v_at


def _cell_averages(kx, kv, prim, grid):
    """Exact per-cell averages of the piecewise-quadratic antiderivative.

    The knot partition is refined by the cell edges; on each piece the
    antiderivative is a quadratic with known endpoint value and endpoint
    slopes, integrated in closed form and accumulated per cell.
    """
    edges = grid.faces
    pts = np.union1d(kx, edges)
    pts = pts[(pts >= 0.0) & (pts <= grid.length)]
    p_left, v_left = _point_values(kx, kv, prim, pts[:-1])
    v_right, _ = _interp_knots(kx, kv, pts[1:], side="left")
    dx = np.diff(pts)
    piece = dx * (p_left + dx * (2.0 * v_left + v_right) / 6.0)
    mids = pts[:-1] + 0.5 * dx
    cell = np.clip(np.searchsorted(edges, mids, side="right") - 1, 0, grid.cells - 1)
    out = np.zeros(grid.cells)
    np.add.at(out, cell, piece)
    return out / grid.h


def wasserstein_1d(src: Profile, dst: Profile) -> TransportResult:
    """Exact 1D quadratic optimal transport between equal-mass densities."""
    w, xa, xb, ya, yb, _, _ = _segments(src, dst)
    da = xa - ya
    db = xb - yb
    w2sq = float(np.sum(w * (da * da + da * db + db * db)) / 3.0)

    kx, kv = _displacement_knots(src, w, xa, xb, ya, yb)
    psi_prim = _antiderivative_knots(kx, kv)
    psi_cells = _cell_averages(kx, kv, psi_prim, src.grid)
    disp_c, _ = _interp_knots(kx, kv, src.grid.centers)
    t_map = src.grid.centers - disp_c

    # conjugate potential from the reverse coupling, pinned so the pair is
    # tight along the map: phi(T(x)) = |x - T(x)|^2 / 2 - psi(x)
    ky, ku = _displacement_knots(dst, w, ya, yb, xa, xb)
    phi_prim = _antiderivative_knots(ky, ku)
    psi_at_x0, _ = _point_values(kx, kv, psi_prim, np.array([xa[0]]))
    phi_at_y0, _ = _point_values(ky, ku, phi_prim, np.array([ya[0]]))
    shift = 0.5 * (xa[0] - ya[0]) ** 2 - psi_at_x0[0] - phi_at_y0[0]
    phi_cells = _cell_averages(ky, ku, phi_prim, dst.grid) + shift

    return TransportResult(
        w2sq=w2sq,
        map=t_map,
        psi=Profile(src.grid, psi_cells),
        phi=Profile(dst.grid, phi_cells),
    )


def dual_objective(src: Profile, dst: Profile, result: TransportResult) -> float:
    """Discrete dual value <psi, src> + <phi, dst>; equals w2sq/2 to rounding."""
    a = src.grid.integrate(np.clip(src.values, 0.0, None) * result.psi.values)
    b = dst.grid.integrate(np.clip(dst.values, 0.0, None) * result.phi.values)
    return a + b


def dual_feasibility_slack(src: Profile, dst: Profile, result: TransportResult) -> float:
    """Min over the product grid of cbar(k, j) - psi_k - phi_j.

    cbar is the cell-averaged half quadratic cost
    |x_k - y_j|^2 / 2 + (h_s^2 + h_d^2)/24, the form under which the exact
    cell-averaged pair stays feasible; nonnegative up to rounding.
    """
    xc, yc = src.grid.centers, dst.grid.centers
    cbar = 0.5 * (xc[:, None] - yc[None, :]) ** 2 + (src.grid.h**2 + dst.grid.h**2) / 24.0
    slack = cbar - result.psi.values[:, None] - result.phi.values[None, :]
    return float(np.min(slack))


def pushforward_masses(src: Profile, dst: Profile) -> np.ndarray:
    """Target cell masses produced by pushing src through the monotone map.

    Computed segment-exactly; reproduces the target masses up to rounding.
    """
    w, _, _, ya, yb, _, (dv, cd) = _segments(src, dst)
    out = np.zeros(dst.grid.cells)
    edges = dst.grid.faces
    ymid = 0.5 * (ya + yb)
    j = np.clip(np.searchsorted(edges, ymid, side="right") - 1, 0, dst.grid.cells - 1)
    np.add.at(out, j, w)
    return out


# -- entropic backend --------------------------------------------------------


def _as_cloud(arg):
    """Normalize Profile | (weights, points) into masses + point coordinates."""
    if isinstance(arg, Profile):
        pts = arg.grid.centers[:, None]
        masses = arg.grid.h * np.clip(arg.values, 0.0, None)
        return masses, pts
    weights, points = arg
    weights = np.asarray(weights, dtype=float).ravel()
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    return weights, points


def _sinkhorn_potentials(a, b, cost, epsilon, max_iter, tol):
    """Log-domain alternating scaling; returns (f, g, marginal error, iters)."""
    log_a = np.log(a)
    log_b = np.log(b)
    f = np.zeros_like(a)
    g = np.zeros_like(b)
    err = np.inf
    for it in range(1, max_iter + 1):
        m = (g[None, :] - cost) / epsilon + log_b[None, :]
        f = -epsilon * _logsumexp(m, axis=1)
        m = (f[:, None] - cost) / epsilon + log_a[:, None]
        g = -epsilon * _logsumexp(m, axis=0)
        # row marginal error of the implied plan
        log_plan = (f[:, None] + g[None, :] - cost) / epsilon + log_a[:, None] + log_b[None, :]
        row = np.exp(_logsumexp(log_plan, axis=1))
        err = float(np.sum(np.abs(row - a)))
        if err <= tol:
            return f, g, err, it
    raise TransportError(
        f"sinkhorn did not converge in {max_iter} iterations (residual {err:.3e})"
    )


def _logsumexp(m, axis):
    mx = np.max(m, axis=axis, keepdims=True)
    return np.squeeze(mx, axis=axis) + np.log(
        np.sum(np.exp(m - mx), axis=axis)
    )


def _entropic_cost(a, b, cost, epsilon, max_iter, tol):
    f, g, err, it = _sinkhorn_potentials(a, b, cost, epsilon, max_iter, tol)
    log_plan = (f[:, None] + g[None, :] - cost) / epsilon
    plan = np.exp(log_plan) * a[:, None] * b[None, :]
    return float(np.sum(plan * cost)), f, g


def sinkhorn(src, dst, epsilon: float, max_iter: int = 5000, tol: float = 1e-9):
    """Debiased entropic transport estimate with dual potentials.

    Accepts Profiles (1D) or (weights, points) pairs for tensor grids in
    any dimension.  The returned squared-distance estimate subtracts the
    self-transport costs, so identical inputs score ~0; the result is
    flagged approximate.
    """
    if epsilon <= 0:
        raise TransportError("epsilon must be positive")
    a, xs = _as_cloud(src)
    b, ys = _as_cloud(dst)
    ma, mb = float(np.sum(a)), float(np.sum(b))
    if ma <= 0 or mb <= 0:
        raise TransportError("invalid density: zero total mass")
    if abs(ma - mb) > MASS_RTOL * ma:
        raise TransportError(f"unbalanced: source mass {ma!r} vs target mass {mb!r}")
    keep_a = a > 0
    keep_b = b > 0
    a_, b_ = a[keep_a], b[keep_b]
    xs_, ys_ = xs[keep_a], ys[keep_b]

    def cost(p, q):
        d = p[:, None, :] - q[None, :, :]
        return np.sum(d * d, axis=2)

    ot_ab, f, g = _entropic_cost(a_, b_, cost(xs_, ys_), epsilon, max_iter, tol)
    ot_aa, _, _ = _entropic_cost(a_, a_, cost(xs_, xs_), epsilon, max_iter, tol)
    ot_bb, _, _ = _entropic_cost(b_, b_, cost(ys_, ys_), epsilon, max_iter, tol)
    debiased = ot_ab - 0.5 * (ot_aa + ot_bb)

    f_full = np.zeros_like(a)
    g_full = np.zeros_like(b)
    f_full[keep_a] = f
    g_full[keep_b] = g
    psi = Profile(src.grid, f_full) if isinstance(src, Profile) else f_full
    phi = Profile(dst.grid, g_full) if isinstance(dst, Profile) else g_full
    return TransportResult(
        w2sq=debiased,
        map=None,
        psi=psi,
        phi=phi,
        approximate=True,
    )


# -- product metric and regularization ---------------------------------------


def metric_d_sq(a: MixtureState, b: MixtureState, params: MetricParams) -> float:
    """Mobility-weighted sum of per-component squared W2 distances."""
    w1 = wasserstein_distance_sq(a.c1, b.c1)
    w2 = wasserstein_distance_sq(a.c2, b.c2)
    return w1 / params.m1 + w2 / params.m2


def regularize_delta(state: MixtureState, delta: float) -> MixtureState:
    """Convex combination with the constant state: delta*rho + (1-delta)*c."""
    if not 0.0 <= delta <= 1.0:
        raise ValueError("delta must lie in [0, 1]")
    c1 = state.c1.with_values(delta * state.rho1 + (1.0 - delta) * state.c1.values)
    c2 = state.c2.with_values(delta * state.rho2 + (1.0 - delta) * state.c2.values)
    return MixtureState(c1, c2, state.rho1, state.rho2)


def mollify_constant(state: MixtureState, params: MetricParams) -> float:
    """diam(O)^2 |O| (rho1/m1 + rho2/m2) for the interval domain."""
    L = state.grid.length
    return L * L * L * (state.rho1 / params.m1 + state.rho2 / params.m2)


def check_mollify_bound(
    state: MixtureState, delta: float, params: MetricParams
) -> EstimateReport:
    """Distance to the delta-regularized state is at most K * delta."""
    lhs = metric_d_sq(state, regularize_delta(state, delta), params) if delta > 0 else 0.0
    rhs = delta * mollify_constant(state, params)
    return EstimateReport.from_sides(
        "mollify_bound", lhs, rhs, {"delta": delta, "K": mollify_constant(state, params)}
    )


def check_w2_to_l2(
    a: MixtureState, b: MixtureState, params: MetricParams
) -> EstimateReport:
    """L2 distance of states controlled by gradient norms times the metric."""
    h = a.grid.h
    diff1 = b.c1.values - a.c1.values
    diff2 = b.c2.values - a.c2.values
    lhs = h * float(np.sum(diff1 * diff1) + np.sum(diff2 * diff2))
    g_a = l2_norm_values(grad_values(a.c1.values, h), h)
    g_b = l2_norm_values(grad_values(b.c1.values, h), h)
    dist = np.sqrt(metric_d_sq(a, b, params))
    rhs = 2.0 * np.sqrt(params.m1) * (g_a + g_b) * dist
    return EstimateReport.from_sides(
        "w2_to_l2", lhs, rhs, {"metric_d": float(dist), "grad_a": g_a, "grad_b": g_b}
    )
