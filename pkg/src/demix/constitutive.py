"""Constitutive function families for the demixing energy.

Each model provides the strictly increasing, point-symmetric function f on
[0, 1] whose gradient enters the free energy, together with the auxiliary
factors omega and alpha used by the potential reformulation:

    1/f'(r) = omega(r) * omega(1-r),   alpha(r) = r / omega(r),  alpha(0) = 0.

Derivative evaluations clamp their argument to [EPS_SING, 1-EPS_SING]
because f' blows up at the endpoints; every clamp event is counted so its
influence stays observable.
"""

import numpy as np

EPS_SING = 1e-8

_GAMMA_RANGE = (0.5, 1.0)


class ConstitutiveError(ValueError):
    pass


class ConstitutiveModel:
    """Base class; concrete models implement the scalar laws vectorized."""

    kind = "base"
    supports_q = True

    def __init__(self):
        self.clamp_events = 0
        self._a = None

    # -- laws -----------------------------------------------------------
    def f(self, r):
        raise NotImplementedError

    def fprime_unclamped(self, r):
        raise NotImplementedError

    def omega(self, r):
        raise NotImplementedError

    def _sup_abs_f(self):
        raise NotImplementedError

    def _inf_fprime(self):
        raise NotImplementedError

    # -- public surface ---------------------------------------------------
    def f_eval(self, r):
        r = self._check_range(r)
        return self.f(r)

    def fprime_eval(self, r):
        """f'(r) with the argument clamped to [EPS_SING, 1-EPS_SING]."""
        r = np.asarray(r, dtype=float)
        clamped = np.clip(r, EPS_SING, 1.0 - EPS_SING)
        n_clamped = int(np.count_nonzero(clamped != r))
        if n_clamped:
            self.clamp_events += n_clamped
        out = self.fprime_unclamped(clamped)
        return float(out) if np.isscalar(r) or r.ndim == 0 else out

    def omega_eval(self, r):
        r = self._check_range(r)
        return self.omega(r)

    def alpha_eval(self, r):
        r = self._check_range(r)
        rr = np.atleast_1d(np.asarray(r, dtype=float))
        om = np.atleast_1d(self.omega(rr))
        out = np.zeros_like(rr)
        pos = rr > 0.0
        out[pos] = rr[pos] / om[pos]
        if np.isscalar(r) or np.asarray(r).ndim == 0:
            return float(out[0])
        return out

    def a_constant(self) -> float:
        """Smallest a with |f| <= a and f' >= 1/a on [0, 1]."""
        if self._a is None:
            self._a = max(self._sup_abs_f(), 1.0 / self._inf_fprime())
        return self._a

    def _check_range(self, r):
        arr = np.asarray(r, dtype=float)
        if np.any(arr < -1e-12) or np.any(arr > 1.0 + 1e-12):
            raise ConstitutiveError("argument outside [0, 1]")
        clipped = np.clip(arr, 0.0, 1.0)
        if np.isscalar(r) or arr.ndim == 0:
            return float(clipped)
        return clipped

    # -- constructor-time validation ---------------------------------------
    def _validate(self):
        r = np.linspace(1e-4, 1 - 1e-4, 2001)
        fp = self.fprime_unclamped(r)
        if np.any(fp <= 0):
            raise ConstitutiveError(f"{self.kind}: f' not positive on (0,1)")
        if self.supports_q:
            ident = self.omega(r) * self.omega(1.0 - r) * fp
            rel = np.max(np.abs(ident - 1.0))
            if rel > 1e-8:
                raise ConstitutiveError(
                    f"{self.kind}: omega factorization off by {rel:.3e} (> 1e-8)"
                )
        # concavity of 1/f'^2: undivided second differences stay nonpositive
        w = 1.0 / fp**2
        second = w[2:] - 2.0 * w[1:-1] + w[:-2]
        if np.max(second) > 1e-10:
            raise ConstitutiveError(
                f"{self.kind}: 1/f'^2 not concave (max second diff {np.max(second):.3e})"
            )


class ArcsinDeGennes(ConstitutiveModel):
    """f(r) = arcsin(2r - 1); 1/f'^2 = r(1-r), omega = alpha = sqrt(r)."""

    kind = "arcsin"

    def __init__(self):
        super().__init__()
        self._validate()

    def f(self, r):
        return np.arcsin(2.0 * np.asarray(r, dtype=float) - 1.0)

    def fprime_unclamped(self, r):
        r = np.asarray(r, dtype=float)
        return 1.0 / np.sqrt(r * (1.0 - r))

    def omega(self, r):
        return np.sqrt(np.asarray(r, dtype=float))

    def _sup_abs_f(self):
        return np.pi / 2.0

    def _inf_fprime(self):
        return 2.0

    def alpha_eval(self, r):
        r = self._check_range(r)
        return np.sqrt(r)


class PowerGamma(ConstitutiveModel):
    """f(r) = r^g - (1-r)^g for g in [1/2, 1).

    omega(r) = r^(1-g) / sqrt(g * s(r)) with s(r) = r^(1-g) + (1-r)^(1-g);
    the symmetric factor s makes omega(r) * omega(1-r) = 1/f'(r) exact while
    keeping omega(0) = 0 and omega(1) = 1/sqrt(g) > 0.
    """

    def __init__(self, gamma: float):
        super().__init__()
        lo, hi = _GAMMA_RANGE
        if not (lo <= gamma < hi):
            raise ConstitutiveError(f"gamma must lie in [{lo}, {hi}), got {gamma}")
        self.gamma = float(gamma)
        self.kind = f"power:{self.gamma:g}"
        self._validate()

    def f(self, r):
        r = np.asarray(r, dtype=float)
        g = self.gamma
        return r**g - (1.0 - r) ** g

    def fprime_unclamped(self, r):
        r = np.asarray(r, dtype=float)
        g = self.gamma
        return g * (r ** (g - 1.0) + (1.0 - r) ** (g - 1.0))

    def _s(self, r):
        g = self.gamma
        return r ** (1.0 - g) + (1.0 - r) ** (1.0 - g)

    def omega(self, r):
        r = np.asarray(r, dtype=float)
        return r ** (1.0 - self.gamma) / np.sqrt(self.gamma * self._s(r))

    def _sup_abs_f(self):
        return 1.0

    def _inf_fprime(self):
        # f'' changes sign only at r = 1/2, where f' is minimal
        return self.gamma * 2.0 ** (2.0 - self.gamma)


class LinearCH(ConstitutiveModel):
    """f(r) = r - 1/2 (smooth Cahn-Hilliard reference case).

    No admissible omega exists (omega(0) = 0 forces omega(0)omega(1) = 0
    != 1/f'), so the q-based machinery is disabled for this model.
    """

    kind = "linear"
    supports_q = False

    def __init__(self):
        super().__init__()
        self._validate()

    def f(self, r):
        return np.asarray(r, dtype=float) - 0.5

    def fprime_unclamped(self, r):
        r = np.asarray(r, dtype=float)
        return np.ones_like(r)

    def omega(self, r):
        raise ConstitutiveError("linear model admits no omega with omega(0)=0")

    def alpha_eval(self, r):
        raise ConstitutiveError("linear model admits no alpha")

    def _sup_abs_f(self):
        return 0.5

    def _inf_fprime(self):
        return 1.0


def model_from_string(spec: str) -> ConstitutiveModel:
    """Parse "arcsin" | "power:<gamma>" | "linear"."""
    s = spec.strip().lower()
    if s == "arcsin":
        return ArcsinDeGennes()
    if s == "linear":
        return LinearCH()
    if s.startswith("power:"):
        try:
            gamma = float(s.split(":", 1)[1])
        except ValueError as exc:
            raise ConstitutiveError(f"bad gamma in model string {spec!r}") from exc
        return PowerGamma(gamma)
    raise ConstitutiveError(f"unknown model string {spec!r}")
