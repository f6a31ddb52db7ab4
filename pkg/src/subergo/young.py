"""Interpolating function pairs trading convergence rate against norm weight.

A pair (Psi1, Psi2) of ultimately nondecreasing functions on [1, inf) with

    Psi1(x) * Psi2(y) <= K * (x + y)        for all x, y >= 1

lets a total-variation rate be traded for a weighted-norm rate.  The exact
constructions (power, conjugate-power, integral-of-density) achieve K = 1;
the bounded-ratio constructions (log, mixed) carry an empirically computed
grid constant K, which downstream moment bounds scale by.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import DomainError, RegimeError
from .phi import DriftModulus
from .rates import RateFunction, classify_regime

#: default grid for estimating the ratio constant of non-exact pairs
K_GRID_SHAPE = (200, 200)
K_GRID_RANGE = (1.0, 1e8)


@dataclass(frozen=True)
class YoungPair:
    psi1: object
    psi2: object
    K: float = 1.0
    nondecreasing_from: float = 1.0
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.K < 1.0:
            raise DomainError("slack constant K must be >= 1")
        # both components defined on [1, inf); at least one must blow up
        probe = np.array([1.0, 10.0, 1e4, 1e8, 1e12])
        p1 = np.asarray(self.psi1(probe), dtype=float)
        p2 = np.asarray(self.psi2(probe), dtype=float)
        if np.any(~np.isfinite(p1)) or np.any(~np.isfinite(p2)):
            raise DomainError("pair components must be finite on [1, inf)")
        if max(p1[-1], p2[-1]) < 50.0:
            raise DomainError("at least one component must tend to infinity")

    def pair_id(self):
        inner = ",".join(f"{k}={v:g}" for k, v in sorted(self.params.items()))
        return f"{self.kind}({inner})"


def _pow0(base, expo):
    """base**expo with the 0**0 = 1 convention, vectorized."""
    if expo == 0.0:
        return np.ones_like(np.asarray(base, dtype=float))
    return np.power(base, expo)


def power_pair(p):
    """Psi1(x) = ((1-p)x)^(1-p), Psi2(x) = (px)^p for p in [0, 1]; K = 1.

    Weighted AM-GM gives Psi1(x)Psi2(y) <= (1-p)x + py <= x + y.  The
    endpoints use 0^0 = 1: p=0 is the identity pair (x, 1), p=1 is (1, x).
    """
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise DomainError("power pair needs p in [0, 1]")
    q = 1.0 - p
    psi1 = lambda x: _pow0(q * np.asarray(x, dtype=float), q)
    psi2 = lambda x: _pow0(p * np.asarray(x, dtype=float), p)
    return YoungPair(psi1=psi1, psi2=psi2, K=1.0, kind="power",
                     params={"p": p})


def conjugate_power_pair(p):
    """Psi1(x) = p^(1/p) x^(1/p), Psi2(x) = q^(1/q) x^(1/q), 1/p + 1/q = 1."""
    p = float(p)
    if p <= 1.0:
        raise DomainError("conjugate pair needs p > 1")
    q = p / (p - 1.0)
    psi1 = lambda x: p ** (1.0 / p) * np.power(np.asarray(x, dtype=float),
                                               1.0 / p)
    psi2 = lambda x: q ** (1.0 / q) * np.power(np.asarray(x, dtype=float),
                                               1.0 / q)
    return YoungPair(psi1=psi1, psi2=psi2, K=1.0, kind="conjugate",
                     params={"p": p})


def _one_or_log(x):
    return np.maximum(1.0, np.log(np.asarray(x, dtype=float)))


def _grid_K(psi1, psi2, shape=K_GRID_SHAPE, lim=K_GRID_RANGE):
    xs = np.geomspace(lim[0], lim[1], shape[0])
    ys = np.geomspace(lim[0], lim[1], shape[1])
    ratio = (np.asarray(psi1(xs), dtype=float)[:, None]
             * np.asarray(psi2(ys), dtype=float)[None, :]
             / (xs[:, None] + ys[None, :]))
    sup = float(ratio.max())
    if not math.isfinite(sup):
        raise DomainError("ratio constant diverged on the estimation grid")
    return max(1.0, sup)


def log_pair(b):
    """Psi1(x) = (1 v log x)^b, Psi2(x) = x (1 v log x)^(-b), b > 0.

    Only a bounded-ratio pair: K is the supremum of Psi1(x)Psi2(y)/(x+y)
    estimated on a dense log grid and stored as a fixture, not a theorem.
    """
    b = float(b)
    if b <= 0.0:
        raise DomainError("log pair needs b > 0")
    psi1 = lambda x: np.power(_one_or_log(x), b)
    psi2 = lambda x: np.asarray(x, dtype=float) * np.power(_one_or_log(x), -b)
    K = _grid_K(psi1, psi2)
    return YoungPair(psi1=psi1, psi2=psi2, K=K,
                     nondecreasing_from=math.exp(b), kind="log",
                     params={"b": b})


def mixed_pair(p, b):
    """Psi1 = x^(1-p) (1 v log x)^(-b), Psi2 = x^p (1 v log x)^b.

    Admissible parameter sets: p in (0,1) with any real b; p = 0 with b > 0;
    p = 1 with b < 0.  At p = 1 the admissibility also depends on the
    modulus in use (b < -alpha); that coupling is checked where the
    trade-off is assembled, and flagged rather than corrected.
    """
    p = float(p)
    b = float(b)
    if p == 0.0:
        if b <= 0.0:
            raise DomainError("mixed pair with p=0 needs b > 0")
    elif p == 1.0:
        if b >= 0.0:
            raise DomainError("mixed pair with p=1 needs b < 0")
    elif not 0.0 < p < 1.0:
        raise DomainError("mixed pair needs p in [0, 1]")
    psi1 = lambda x: (_pow0(np.asarray(x, dtype=float), 1.0 - p)
                      * np.power(_one_or_log(x), -b))
    psi2 = lambda x: (_pow0(np.asarray(x, dtype=float), p)
                      * np.power(_one_or_log(x), b))
    K = _grid_K(psi1, psi2)
    x_star = 1.0
    if b > 0.0 and p < 1.0:
        x_star = math.exp(b / (1.0 - p))
    elif b < 0.0 and p > 0.0:
        x_star = math.exp(-b / p)
    return YoungPair(psi1=psi1, psi2=psi2, K=K, nondecreasing_from=x_star,
                     kind="mixed", params={"p": p, "b": b})


# -- pairs from an increasing density -----------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(30)


class _CumulativeIntegral:
    """G(u) = integral_0^u rho with knot table + Gauss-Legendre increments."""

    def __init__(self, rho, u_end, knots=2048):
        self.rho = rho
        grid = np.concatenate([[0.0], np.geomspace(1e-9 * u_end, u_end, knots)])
        inc = self._segments(grid[:-1], grid[1:])
        self.knots = grid
        self.values = np.concatenate([[0.0], np.cumsum(inc)])

    def _segments(self, a, b):
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        vals = np.asarray(self.rho(pts), dtype=float)
        return (vals @ _GL_WEIGHTS) * half

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        idx = np.clip(np.searchsorted(self.knots, u, side="right") - 1, 0,
                      self.knots.size - 1)
        a = self.knots[idx]
        return self.values[idx] + self._segments(a, np.maximum(u, a))

    @property
    def u_end(self):
        return self.knots[-1]

    @property
    def total(self):
        return self.values[-1]


def _vector_bisect(fn, target, lo, hi, iters=80):
    lo = np.full_like(target, lo, dtype=float)
    hi = np.asarray(hi, dtype=float) * np.ones_like(target)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        high = fn(mid) > target
        hi = np.where(high, mid, hi)
        lo = np.where(high, lo, mid)
    return 0.5 * (lo + hi)


def young_pair_from_density(rho1, x_max=1e9):
    """Exact K=1 pair built from an increasing density with rho1(0) = 0.

    With G1 the running integral of rho1 and G2 its convex conjugate
    (equivalently, the running integral of the left-continuous inverse of
    rho1), the product inequality xy <= G1(x) + G2(y) inverts into a K=1
    pair Psi_i = G_i^{-1}, both concave.  Psi2 is evaluated through the
    conjugate representation G2(rho1(u)) = u rho1(u) - G1(u), which avoids
    numerically inverting the density itself.
    """
    probe = np.array([0.0, 1e-6, 1e-3, 0.5, 1.0, 4.0, 64.0])
    pv = np.asarray(rho1(probe), dtype=float)
    if abs(pv[0]) > 1e-9:
        raise DomainError("density must satisfy rho1(0) = 0")
    if np.any(np.diff(pv) < -1e-12):
        raise DomainError("density must be increasing")

    # expand the support until both G1 and the conjugate cover [0, x_max]
    u_end = 4.0
    while True:
        g1 = _CumulativeIntegral(rho1, u_end)
        f_end = u_end * float(np.asarray(rho1(np.asarray(u_end))))
        conj_end = f_end - g1.total
        if g1.total > 1.02 * x_max and conj_end > 1.02 * x_max:
            break
        if u_end > 1e30:
            raise DomainError("density grows too slowly to cover the range")
        u_end *= 2.0

    def psi1(x):
        x = np.asarray(x, dtype=float)
        return _vector_bisect(g1, x, 0.0, g1.u_end)

    def conj(u):
        return u * np.asarray(rho1(u), dtype=float) - g1(u)

    def psi2(x):
        x = np.asarray(x, dtype=float)
        u = _vector_bisect(conj, x, 0.0, g1.u_end)
        return np.asarray(rho1(u), dtype=float)

    return YoungPair(psi1=psi1, psi2=psi2, K=1.0, kind="density",
                     params={"x_max": float(x_max)})


# -- validation ---------------------------------------------------------------

@dataclass
class PairReport:
    max_ratio: float
    arg_max: tuple
    K: float
    passed: bool
    points: int


def validate_pair(pair, xs=None, ys=None, mesh=True, tol=1e-12):
    """Max of Psi1(x)Psi2(y)/(x+y) over a grid; pass iff <= K(1+tol).

    ``mesh=True`` forms the full product grid of ``xs`` and ``ys``;
    ``mesh=False`` treats them as paired sample points.
    """
    if xs is None:
        xs = np.geomspace(1.0, 1e8, 100)
    if ys is None:
        ys = xs
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.min() < 1.0 or ys.min() < 1.0:
        raise DomainError("validation grid must lie in [1, inf)^2")
    p1 = np.asarray(pair.psi1(xs), dtype=float)
    p2 = np.asarray(pair.psi2(ys), dtype=float)
    if mesh:
        ratio = p1[:, None] * p2[None, :] / (xs[:, None] + ys[None, :])
        idx = np.unravel_index(np.argmax(ratio), ratio.shape)
        arg = (float(xs[idx[0]]), float(ys[idx[1]]))
        points = ratio.size
    else:
        ratio = p1 * p2 / (xs + ys)
        i = int(np.argmax(ratio))
        arg = (float(xs[i]), float(ys[i]))
        points = ratio.size
    worst = float(np.max(ratio))
    return PairReport(max_ratio=worst, arg_max=arg, K=pair.K,
                      passed=worst <= pair.K * (1.0 + tol), points=points)


def check_concavity(fn, grid=None, tol=1e-9):
    """Midpoint concavity test of a scalar map on [1, inf)."""
    if grid is None:
        grid = np.geomspace(1.0, 1e8, 200)
    g = np.sort(np.asarray(grid, dtype=float))
    v = np.asarray(fn(g), dtype=float)
    mid = np.asarray(fn(0.5 * (g[:-1] + g[1:])), dtype=float)
    gap = mid - 0.5 * (v[:-1] + v[1:])
    return bool(np.all(gap >= -tol * np.maximum(1.0, np.abs(mid))))


# -- trade-off tables ----------------------------------------------------------

@dataclass
class TradeoffRow:
    pair_id: str
    rate_descriptor: str
    norm_descriptor: str
    rate_exponent: float | None
    rate_log_exponent: float | None
    stretch_scale: float | None
    prefactor_exponent: float | None
    measured_slope: float
    K: float
    flagged: bool
    flag_reason: str
    rate_fn: object = field(repr=False, default=None)
    norm_fn: object = field(repr=False, default=None)

    CSV_FIELDS = ("pair_id", "rate_descriptor", "norm_descriptor",
                  "rate_exponent", "rate_log_exponent", "stretch_scale",
                  "prefactor_exponent", "measured_slope", "K", "flagged")


@dataclass
class TradeoffTable:
    phi_label: str
    rows: list


def _measured_slope(rate_fn, lo=1e3, hi=1e5, points=40):
    n = np.geomspace(lo, hi, points)
    y = np.asarray(rate_fn(n), dtype=float)
    return float(np.polyfit(np.log(n), np.log(y), 1)[0])


def _descriptors(phi, pair):
    """Closed-form rate/norm descriptors per (family, pair kind)."""
    c, a = phi.c, phi.alpha
    kind = pair.kind
    P = pair.params
    exp_n = logexp_n = stretch = prefac = None
    if phi.family == "power":
        e = a / (1.0 - a)
        if kind == "power":
            p = P["p"]
            exp_n = (1.0 - p) * e
            rate = f"n^{exp_n:g}"
            norm = f"V^{a * p:g}"
        elif kind == "conjugate":
            p = P["p"]
            exp_n = e / p
            rate = f"n^{exp_n:g}"
            norm = f"V^{a * (1.0 - 1.0 / p):g}"
        elif kind == "log":
            b = P["b"]
            logexp_n = b
            rate = f"log(n)^{b:g}"
            norm = f"V^{a:g} * (1+log V)^{-b:g}"
        elif kind == "mixed":
            p, b = P["p"], P["b"]
            exp_n = (1.0 - p) * e
            logexp_n = -b
            rate = f"n^{exp_n:g} * log(n)^{-b:g}"
            norm = f"V^{a * p:g} * (1+log V)^{b:g}"
        else:
            rate = norm = "(numeric)"
    elif phi.family == "logarithmic":
        if kind == "power":
            p = P["p"]
            logexp_n = (1.0 - p) * a
            rate = f"log(n)^{logexp_n:g}"
            norm = f"(1+log V)^{p * a:g}"
        else:
            rate = norm = "(numeric)"
    elif phi.family == "subexponential":
        unit = (c * (1.0 + a)) ** (1.0 / (1.0 + a))
        se = 1.0 / (1.0 + a)
        if kind == "power":
            p = P["p"]
            stretch = (1.0 - p) * unit
            prefac = -(1.0 - p) * a / (1.0 + a)
            rate = f"n^{prefac:g} * exp({stretch:g} n^{se:g})"
            norm = f"(V/(1+log V)^{a:g})^{p:g}"
        elif kind == "mixed":
            p, b = P["p"], P["b"]
            stretch = (1.0 - p) * unit
            prefac = -(a + b) / (1.0 + a)
            rate = f"n^{prefac:g} * exp({stretch:g} n^{se:g})"
            norm = f"V^{p:g} * (1+log V)^{b:g}"
        elif kind == "log":
            b = P["b"]
            exp_n = b / (1.0 + a)
            rate = f"n^{exp_n:g}"
            norm = f"phi(V) * (1 v log phi(V))^{-b:g}"
        else:
            rate = norm = "(numeric)"
    else:
        rate = norm = "(numeric)"
    return rate, norm, exp_n, logexp_n, stretch, prefac


def tradeoff_table(phi: DriftModulus, pairs):
    """One row per pair: the achievable rate and the norm weight it buys.

    Requires a subgeometric modulus.  Each row carries the tabulated rate
    map ``n -> Psi1(r(n))`` and norm weight ``v -> Psi2(phi(v))``, the
    closed-form descriptor where the family admits one, and the measured
    log-log slope of the rate map over n in [1e3, 1e5].
    """
    if not pairs:
        raise DomainError("need at least one interpolation pair")
    regime = classify_regime(phi)
    if regime.geometric:
        raise RegimeError("trade-off tables require a subgeometric modulus")
    rate = RateFunction(phi)
    rows = []
    for pair in pairs:
        rate_fn = (lambda n, _p=pair: np.asarray(
            _p.psi1(np.maximum(rate(n), 1.0)), dtype=float))
        norm_fn = (lambda v, _p=pair: np.asarray(
            _p.psi2(np.maximum(phi.value(v), 1.0)), dtype=float))
        flagged = False
        reason = ""
        if (pair.kind == "mixed" and pair.params.get("p") == 1.0
                and phi.family == "subexponential"
                and pair.params.get("b", 0.0) >= -phi.alpha):
            flagged = True
            reason = (f"mixed pair at p=1 needs b < -alpha = {-phi.alpha:g}; "
                      f"got b={pair.params['b']:g}")
        rd, nd, exp_n, logexp_n, stretch, prefac = _descriptors(phi, pair)
        rows.append(TradeoffRow(
            pair_id=pair.pair_id(), rate_descriptor=rd, norm_descriptor=nd,
            rate_exponent=exp_n, rate_log_exponent=logexp_n,
            stretch_scale=stretch, prefactor_exponent=prefac,
            measured_slope=_measured_slope(rate_fn), K=pair.K,
            flagged=flagged, flag_reason=reason,
            rate_fn=rate_fn, norm_fn=norm_fn))
    return TradeoffTable(phi_label=phi.label, rows=rows)
