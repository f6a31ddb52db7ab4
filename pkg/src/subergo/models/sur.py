"""Stochastic unit root chain: keep the level with probability g, else reset.

    x -> 1{U <= g(x)} x + eps,  U uniform on [0,1], eps as in the AR model.

g takes values in [0, 1) with 1 - g(x) >= c+ x^-kappa beyond R0 and
g <= c- below it, so the retention probability creeps to one in the tail.
The one-step kernel mixes a shifted copy with a pure innovation:
P(x, .) = g(x) L(x + eps) + (1 - g(x)) L(eps), which also yields the
minorization P(x, .) >= eta(M) L(eps) on (-inf, M].

Certificate shape (zero-mean case): V = exp(z x_+^beta) with
beta = gamma0 ^ (1 - kappa/2), modulus tail delta z^(kappa/beta) v
(1 v log v)^(-kappa/beta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from ..drift import PVOperator, SetSpec, verify_drift
from ..errors import DomainError, NumericalError
from ..kernels import FiniteKernel
from ..phi import DriftModulus
from .noise import LaplaceNoise, SymmetrizedWeibullNoise, noise_expectation

GRID_RANGE = (1e-2, 1e2)
GRID_POINTS = 400


@dataclass(frozen=True)
class StochasticUnitRootSpec:
    kappa: float = 0.5
    c_plus: float = 0.5
    c_minus: float = None        # defaults to the continuity value
    radius: float = 1.0          # R0
    noise: object = LaplaceNoise()
    mean_case: str = "zero"      # positive | zero | negative

    def __post_init__(self):
        if not 0.0 < self.kappa < 1.0:
            raise DomainError("kappa must lie in (0, 1)")
        if self.c_plus <= 0:
            raise DomainError("c_plus must be positive")
        if self.radius <= 0:
            raise DomainError("radius must be positive")
        join = 1.0 - self.c_plus * self.radius ** (-self.kappa)
        if join < 0.0:
            raise DomainError("c_plus too large: g would leave [0, 1)")
        if self.c_minus is None:
            object.__setattr__(self, "c_minus", join)
        if not join <= self.c_minus < 1.0:
            raise DomainError(
                f"c_minus must lie in [{join:g}, 1) for a continuous g")
        if self.mean_case not in ("positive", "zero", "negative"):
            raise DomainError("mean_case must be positive|zero|negative")
        mu = self.noise.mean
        want = {"positive": 1, "zero": 0, "negative": -1}[self.mean_case]
        have = 0 if abs(mu) < 1e-12 else (1 if mu > 0 else -1)
        if want != have:
            raise DomainError(
                f"noise mean {mu:g} inconsistent with mean_case "
                f"{self.mean_case!r}")

    def g(self, x):
        x = np.asarray(x, dtype=float)
        tail = 1.0 - self.c_plus * np.power(np.maximum(x, self.radius),
                                            -self.kappa)
        join = 1.0 - self.c_plus * self.radius ** (-self.kappa)
        return np.where(x >= self.radius, tail, min(self.c_minus, join))

    @property
    def beta(self):
        g0 = self.noise.gamma0
        if self.mean_case == "positive":
            return min(g0, 1.0 - self.kappa)
        if self.mean_case == "zero":
            return min(g0, 1.0 - self.kappa / 2.0)
        return g0

    @property
    def tau(self):
        if self.mean_case == "negative":
            return min(1.0 - self.noise.gamma0, self.kappa)
        return self.kappa


def sur_pv(spec: StochasticUnitRootSpec, V, x, tol=1e-11, reset_term=None):
    """(PV)(x) = g(x) E[V(x + eps)] + (1 - g(x)) E[V(eps)].

    ``reset_term`` optionally carries a precomputed (E[V(eps)], err) so grid
    sweeps integrate the x-independent branch only once.
    """
    ev0, err0 = reset_term or noise_expectation(spec.noise, V, tol=tol,
                                                extra_points=(0.0,))
    gx = float(spec.g(x))
    ev1, err1 = noise_expectation(spec.noise, lambda e: V(x + e), tol=tol,
                                  extra_points=(-x,))
    val = gx * ev1 + (1.0 - gx) * ev0
    return val, gx * err1 + (1.0 - gx) * err0


def pv_operator(spec: StochasticUnitRootSpec, tol=1e-11):
    def apply_many(V, points):
        reset_term = noise_expectation(spec.noise, V, tol=tol,
                                       extra_points=(0.0,))
        vals = np.empty(len(points))
        errs = np.empty(len(points))
        for i, x in enumerate(np.asarray(points, dtype=float)):
            vals[i], errs[i] = sur_pv(spec, V, float(x), tol=tol,
                                      reset_term=reset_term)
        return vals, errs
    return PVOperator(apply_many, "quadrature", meta={"model": "sur"})


def minorization_floor(spec: StochasticUnitRootSpec, m, grid_points=400):
    """eta(M) = inf over x <= M of (1 - g(x)): the small-set witness for (-inf, M]."""
    lo = min(-10.0, -abs(m))
    grid = np.linspace(lo, m, grid_points)
    return float(np.min(1.0 - spec.g(grid)))


@dataclass(frozen=True)
class SurCertificateFixture:
    z: float = 0.6
    delta: float = 0.105
    m: float = 2.0


DEFAULT_FIXTURE = SurCertificateFixture()


def drift_quantities(spec: StochasticUnitRootSpec, z=None):
    if z is None:
        z = DEFAULT_FIXTURE.z
    beta = spec.beta

    def V(x):
        x = np.asarray(x, dtype=float)
        return np.exp(z * np.power(np.maximum(x, 0.0), beta))

    return V, spec.tau / beta


def certification_grid():
    pos = np.geomspace(GRID_RANGE[0], GRID_RANGE[1], GRID_POINTS - 20)
    neg = -np.geomspace(1e-1, 20.0, 20)
    return np.sort(np.concatenate([neg, pos]))


def default_certificate(spec: StochasticUnitRootSpec, z=None, delta=None,
                        m=None, grid=None):
    fx = DEFAULT_FIXTURE
    z = fx.z if z is None else z
    delta = fx.delta if delta is None else delta
    m = fx.m if m is None else m
    V, q = drift_quantities(spec, z)
    phi = DriftModulus.log_damped(delta * z ** q, q, form="log")
    if grid is None:
        grid = certification_grid()
    return verify_drift(pv_operator(spec), V, phi,
                        SetSpec.interval(-math.inf, m), grid)


def calibrate(spec: StochasticUnitRootSpec, z, grid=None, margin=0.8,
              m_floor=2.0):
    if grid is None:
        grid = certification_grid()
    V, q = drift_quantities(spec, z)
    pv = pv_operator(spec)
    pvv, _ = pv.apply(V, grid)
    vv = np.asarray(V(grid), dtype=float)
    s = vv - pvv
    phi_unit = DriftModulus.log_damped(1.0, q, form="log")
    for m in np.geomspace(m_floor, 40.0, 12):
        off = grid > m
        if not off.any():
            break
        if np.all(s[off] > 0.0):
            scale = margin * float(np.min(s[off] / phi_unit.value(vv[off])))
            if scale > 0.0:
                return {"z": z, "delta": scale / z ** q, "m": float(m)}
    return None


def sur_step(spec: StochasticUnitRootSpec):
    def step(rng, x):
        keep = rng.random() <= float(spec.g(x))
        return (x if keep else 0.0) + float(spec.noise.sample(rng))
    return step


def sample_path(spec: StochasticUnitRootSpec, x0, n, seed):
    rng = np.random.default_rng(seed)
    step = sur_step(spec)
    path = np.empty(n + 1)
    path[0] = x0
    for t in range(n):
        path[t + 1] = step(rng, path[t])
    return path


def discretize(spec: StochasticUnitRootSpec, x_max=10.0, n_bins=201):
    """Exact mixture kernel over noise-CDF bin masses, tails absorbed."""
    edges = np.linspace(-x_max, x_max, n_bins + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    cdf0 = np.asarray(spec.noise.cdf(edges), dtype=float)
    base = np.diff(cdf0)
    base[0] += cdf0[0]
    base[-1] += 1.0 - cdf0[-1]
    rows = np.empty((n_bins, n_bins))
    for i, x in enumerate(mids):
        cdf = np.asarray(spec.noise.cdf(edges - x), dtype=float)
        mass = np.diff(cdf)
        mass[0] += cdf[0]
        mass[-1] += 1.0 - cdf[-1]
        gx = float(spec.g(x))
        rows[i] = gx * mass + (1.0 - gx) * base
    return FiniteKernel(rows, labels=[float(m) for m in mids])
