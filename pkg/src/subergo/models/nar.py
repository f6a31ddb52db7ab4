"""Nonlinear AR(1) chain x -> g(x) + eps with a sublinear pullback.

The regression function obeys |g(x)| <= |x| (1 - r |x|^-rho) beyond a
radius R0 (and |g(x)| <= |x| globally, which keeps compact sets small);
the innovation has a finite exponential moment E[exp(z0 |eps|^gamma0)].
The shipped representative is g(x) = x (1 - r' (zeta + x^2)^(-rho/2)) with
r' inflated so the envelope holds with a smooth everywhere-defined curve.

Certificate shape: V = exp(z |x|^beta) with beta = gamma0 ^ (2 - rho)
(minimum), modulus tail c v (1 + log v)^(1 - rho/beta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from ..drift import PVOperator, SetSpec, verify_drift
from ..errors import DomainError, NumericalError, RangeOverflowError
from ..kernels import FiniteKernel
from ..phi import DriftModulus
from .noise import LaplaceNoise, SymmetrizedWeibullNoise

GRID_RANGE = (1e-2, 1e2)
GRID_POINTS = 200   # mirrored over both signs -> 400 total


@dataclass(frozen=True)
class NonlinearARSpec:
    contraction: float = 0.5     # r
    drift_power: float = 1.5     # rho in [0, 2)
    radius: float = 1.0          # R0
    noise: object = LaplaceNoise()
    smoothing: float = 1.0       # zeta of the default regression curve

    def __post_init__(self):
        if not 0.0 < self.contraction:
            raise DomainError("contraction rate must be positive")
        if not 0.0 <= self.drift_power < 2.0:
            raise DomainError("drift power rho must lie in [0, 2)")
        if self.radius <= 0 or self.smoothing <= 0:
            raise DomainError("radius and smoothing must be positive")
        if abs(self.noise.mean) > 1e-12:
            raise DomainError("AR innovation must be zero mean")
        rp = self._r_eff()
        if rp * self.smoothing ** (-self.drift_power / 2.0) > 2.0:
            raise DomainError("regression curve leaves |g| <= |x| near 0")

    def _r_eff(self):
        # inflate r so (zeta + x^2)^(-rho/2) still dominates |x|^-rho at R0
        return self.contraction * (1.0 + self.smoothing / self.radius ** 2) ** (
            self.drift_power / 2.0)

    def g(self, x):
        x = np.asarray(x, dtype=float)
        return x * (1.0 - self._r_eff()
                    * np.power(self.smoothing + x * x, -self.drift_power / 2.0))

    def envelope_ok(self, grid=None):
        """|g(x)| <= |x|(1 - r |x|^-rho) on a grid of |x| >= R0."""
        if grid is None:
            grid = np.geomspace(self.radius, 1e4, 200)
        x = np.asarray(grid, dtype=float)
        bound = x * (1.0 - self.contraction * np.power(x, -self.drift_power))
        return bool(np.all(np.abs(self.g(x)) <= bound + 1e-12))

    @property
    def beta(self):
        return min(self.noise.gamma0, 2.0 - self.drift_power)


def nar_pv(spec: NonlinearARSpec, V, x, tol=1e-11):
    """(PV)(x) = E[V(g(x) + eps)] by split quadrature with growing truncation."""
    m = float(spec.g(x))
    noise = spec.noise
    t = 40.0
    prev = None
    for _ in range(6):
        # split at the noise kink and at the |.| kink of V
        pts = [p for p in sorted({*noise.breakpoints(), -m}) if -t < p < t]
        val, err = quad(lambda e: float(V(m + e)) * float(noise.pdf(e)),
                        -t, t, points=pts or None, limit=300,
                        epsabs=tol, epsrel=1e-10)
        if not math.isfinite(val):
            raise RangeOverflowError(
                f"PV integrand overflowed at x={x:g}; reduce z", largest=t)
        if prev is not None and abs(val - prev) <= tol * (1.0 + abs(val)):
            return val, err + abs(val - prev)
        prev = val
        t *= 2.0
    raise NumericalError(f"PV truncation at x={x:g} did not stabilize",
                         achieved=abs(val - prev))


def pv_operator(spec: NonlinearARSpec, tol=1e-11):
    def apply_many(V, points):
        vals = np.empty(len(points))
        errs = np.empty(len(points))
        for i, x in enumerate(np.asarray(points, dtype=float)):
            vals[i], errs[i] = nar_pv(spec, V, float(x), tol=tol)
        return vals, errs
    return PVOperator(apply_many, "quadrature", meta={"model": "nar"})


@dataclass(frozen=True)
class NarCertificateFixture:
    z: float = 0.3
    c: float = 0.014
    m: float = 2.0


DEFAULT_FIXTURE = NarCertificateFixture()


def drift_quantities(spec: NonlinearARSpec, z=None):
    if z is None:
        z = DEFAULT_FIXTURE.z
    beta = spec.beta
    q = spec.drift_power / beta - 1.0

    def V(x):
        x = np.asarray(x, dtype=float)
        return np.exp(z * np.power(np.abs(x), beta))

    return V, q


def certification_grid():
    half = np.geomspace(GRID_RANGE[0], GRID_RANGE[1], GRID_POINTS)
    return np.sort(np.concatenate([-half, half]))


def default_certificate(spec: NonlinearARSpec, z=None, c=None, m=None,
                        grid=None):
    fx = DEFAULT_FIXTURE
    z = fx.z if z is None else z
    c = fx.c if c is None else c
    m = fx.m if m is None else m
    V, q = drift_quantities(spec, z)
    phi = DriftModulus.log_damped(c, q, form="1+log")
    if grid is None:
        grid = certification_grid()
    return verify_drift(pv_operator(spec), V, phi, SetSpec.interval(-m, m),
                        grid)


def calibrate(spec: NonlinearARSpec, z, grid=None, margin=0.8, m_floor=2.0):
    if grid is None:
        grid = certification_grid()
    V, q = drift_quantities(spec, z)
    pv = pv_operator(spec)
    pvv, _ = pv.apply(V, grid)
    vv = np.asarray(V(grid), dtype=float)
    s = vv - pvv
    phi_unit = DriftModulus.log_damped(1.0, q, form="1+log")
    for m in np.geomspace(m_floor, 40.0, 12):
        off = np.abs(grid) > m
        if not off.any():
            break
        if np.all(s[off] > 0.0):
            c = margin * float(np.min(s[off] / phi_unit.value(vv[off])))
            if c > 0.0:
                return {"z": z, "c": c, "m": float(m)}
    return None


def nar_step(spec: NonlinearARSpec):
    def step(rng, x):
        return float(spec.g(x)) + float(spec.noise.sample(rng))
    return step


def sample_path(spec: NonlinearARSpec, x0, n, seed):
    rng = np.random.default_rng(seed)
    step = nar_step(spec)
    path = np.empty(n + 1)
    path[0] = x0
    for t in range(n):
        path[t + 1] = step(rng, path[t])
    return path


def discretize(spec: NonlinearARSpec, x_max=10.0, n_bins=201):
    """Exact-bin-mass finite kernel via the noise CDF, tails absorbed at the ends."""
    edges = np.linspace(-x_max, x_max, n_bins + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    rows = np.empty((n_bins, n_bins))
    for i, x in enumerate(mids):
        m = float(spec.g(x))
        cdf = np.asarray(spec.noise.cdf(edges - m), dtype=float)
        mass = np.diff(cdf)
        mass[0] += cdf[0]
        mass[-1] += 1.0 - cdf[-1]
        rows[i] = mass
    return FiniteKernel(rows, labels=[float(m) for m in mids])
