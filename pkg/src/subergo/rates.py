"""Rate functions induced by a drift modulus, and their diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidPhiError
from .phi import DriftModulus, h_k

#: slope of phi at the probe point below which the regime is subgeometric
EPS_GEO = 1e-3
#: probe abscissa for the slope limit of custom moduli
V_PROBE = 1e12


class RateFunction:
    """z -> r(z) = phi(H^{-1}(z)) with a cached integer table.

    r(0) = phi(1); r is nondecreasing and log-concave.
    """

    def __init__(self, phi: DriftModulus):
        self.phi = phi
        self._table = None

    def __call__(self, z):
        return self.phi.value(self.phi.h_inv(z))

    @property
    def at_zero(self):
        return float(self.phi.value(1.0))

    def table(self, n_max):
        """r(0), ..., r(n_max) as an array (cached, grown on demand)."""
        if self._table is None or self._table.size < n_max + 1:
            self._table = np.asarray(self(np.arange(n_max + 1.0)), dtype=float)
        return self._table[:n_max + 1]

    def diagnostics(self, z_grid=None, tol=1e-9):
        """Monotonicity and midpoint log-concavity on a sampled grid."""
        if z_grid is None:
            z_grid = np.concatenate([[0.0], np.logspace(-2, 4, 121)])
        z = np.sort(np.asarray(z_grid, dtype=float))
        r = np.asarray(self(z), dtype=float)
        monotone = bool(np.all(np.diff(r) >= -tol * np.maximum(1.0, r[:-1])))
        mid = self(0.5 * (z[:-1] + z[1:]))
        logr = np.log(r)
        gap = np.log(mid) - 0.5 * (logr[:-1] + logr[1:])
        log_concave = bool(np.all(gap >= -tol))
        return {"monotone": monotone, "log_concave": log_concave,
                "worst_concavity_gap": float(gap.min())}


class DriftFunctionSeq:
    """The sequence V_k = H_k o V driven by a base function V >= 1.

    V_0 = V - 1 pointwise; infinite V values map to +inf for every k.
    """

    def __init__(self, phi: DriftModulus, base_v):
        self.phi = phi
        self.base_v = base_v

    def __call__(self, k, x):
        v = self.base_v(x) if callable(self.base_v) else self.base_v[x]
        return h_k(self.phi, k, v)

    def on_values(self, v_values, ks):
        """Matrix V_k(x) for an array of V values and integer shifts ks."""
        v = np.asarray(v_values, dtype=float)
        ks = np.asarray(ks)
        finite = np.isfinite(v)
        out = np.full((v.size, ks.size), np.inf)
        hv = np.empty_like(v)
        hv[finite] = self.phi.h(v[finite])
        base = np.asarray(self.phi.h_inv(ks.astype(float)), dtype=float)
        if finite.any():
            a = np.asarray(self.phi.h_inv(hv[finite][:, None]
                                          + ks[None, :].astype(float)))
            out[finite, :] = a - base[None, :]
            zero = np.flatnonzero(ks == 0)
            for j in zero:  # analytic identity H_0 = v - 1
                out[finite, j] = v[finite] - 1.0
        return out


@dataclass
class RegimeReport:
    kind: str                   # "geometric" | "subgeometric"
    limit: float                # estimated lim phi'(v)
    probe_v: float
    samples: tuple = field(default=(), repr=False)

    @property
    def geometric(self):
        return self.kind == "geometric"


def classify_regime(phi: DriftModulus, eps_geo=EPS_GEO, probe_v=V_PROBE):
    """Geometric vs subgeometric regime from the slope limit of phi.

    Named families resolve analytically (power/logarithmic/subexponential
    slopes vanish at infinity; a linear modulus keeps its slope).  Custom
    moduli are probed on an increasing log grid up to ``probe_v`` and must
    show nonincreasing slope samples.
    """
    if phi.family in ("constant", "power", "logarithmic", "subexponential"):
        return RegimeReport(kind="subgeometric", limit=0.0, probe_v=probe_v)
    if phi.family == "linear":
        return RegimeReport(kind="geometric", limit=phi.c, probe_v=probe_v)
    v = np.logspace(0.0, np.log10(probe_v), 25)
    s = np.asarray(phi.slope(v), dtype=float)
    tol = 1e-8 * np.maximum(1.0, np.abs(s[:-1])) + 1e-14
    if np.any(s[1:] > s[:-1] + tol):
        raise InvalidPhiError("non-monotone slope samples: concavity violated")
    limit = float(s[-1])
    kind = "geometric" if limit > eps_geo else "subgeometric"
    return RegimeReport(kind=kind, limit=limit, probe_v=probe_v,
                        samples=(v, s))


@dataclass
class SubgeometricReport:
    subgeometric: bool
    monotone_ok: bool
    final_value: float          # log r(n)/n at the end of the table
    window_slope: float         # log-log slope of log r(n)/n, last decade
    n_max: int

    def __bool__(self):
        return self.subgeometric


def is_subgeometric_sequence(r, n_max=None, dead_band=0.02):
    """Trend test for log r(n)/n decreasing to 0 on a finite table.

    ``r`` is indexed from n=0 and must be positive nondecreasing.  The test
    checks (i) log r(n)/n nonincreasing over 2..n_max and (ii) a last-decade
    log-log slope of that ratio below ``-dead_band`` (or a final value at
    numerical zero).  Any finite-table test of the limit is a heuristic; the
    report carries the trend statistics rather than asserting the limit.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise DomainError("rate table must be positive")
    if n_max is None:
        n_max = r.size - 1
    if n_max < 20:
        raise DomainError("need a table up to n >= 20")
    if np.any(np.diff(r[:n_max + 1]) < -1e-12 * np.maximum(1.0, r[:n_max])):
        raise DomainError("rate table must be nondecreasing")
    n = np.arange(2, n_max + 1)
    s = np.log(r[2:n_max + 1]) / n
    tol = 1e-12 * np.maximum(1.0, np.abs(s[:-1]))
    monotone_ok = bool(np.all(s[1:] <= s[:-1] + tol))
    final_value = float(s[-1])
    lo = max(2, int(n_max / 10))
    win = (n >= lo)
    if final_value <= 1e-12:
        # table is bounded (r <= e^(~0)); trivially subgeometric trend
        return SubgeometricReport(True, monotone_ok, final_value, -np.inf,
                                  n_max)
    slope = float(np.polyfit(np.log(n[win]), np.log(s[win]), 1)[0])
    ok = monotone_ok and slope <= -dead_band
    return SubgeometricReport(ok, monotone_ok, final_value, slope, n_max)


@dataclass
class RateAsymptotics:
    kind: str                       # polynomial | log-power | stretched-exponential | constant | geometric | none
    exponent: float | None = None           # n^exponent factor
    log_exponent: float | None = None       # log(n)^log_exponent factor
    stretch_exponent: float | None = None   # exp(scale * n^stretch_exponent)
    scale: float | None = None
    prefactor_exponent: float | None = None  # algebraic prefactor n^(...)
    text: str = ""


def asymptotic_rate(phi: DriftModulus):
    """Closed-form large-n behaviour of the induced rate, per family."""
    c, a = phi.c, phi.alpha
    if phi.family == "constant":
        return RateAsymptotics(kind="constant", scale=c, text=f"r(n) = {c:g}")
    if phi.family == "power":
        e = a / (1.0 - a)
        scale = c * (c * (1.0 - a)) ** e
        return RateAsymptotics(kind="polynomial", exponent=e, scale=scale,
                               text=f"r(n) ~ {scale:g} * n^{e:g}")
    if phi.family == "logarithmic":
        return RateAsymptotics(kind="log-power", log_exponent=a, scale=c,
                               text=f"r(n) ~ {c:g} * log(n)^{a:g}")
    if phi.family == "subexponential":
        stretch = 1.0 / (1.0 + a)
        scale = (c * (1.0 + a)) ** stretch
        pre = -a / (1.0 + a)
        return RateAsymptotics(kind="stretched-exponential",
                               stretch_exponent=stretch, scale=scale,
                               prefactor_exponent=pre,
                               text=(f"r(n) ~ n^{pre:g} * "
                                     f"exp({scale:g} * n^{stretch:g})"))
    if phi.family == "linear":
        return RateAsymptotics(kind="geometric", scale=c,
                               text=f"r(n) = {c:g} * exp({c:g} n)")
    return RateAsymptotics(kind="none", text="no closed-form descriptor")
