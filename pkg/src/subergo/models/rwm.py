"""Random-walk Metropolis chain targeting a light-but-subexponential tail.

The target is the Weibull-type density pi(x) = b g x^(g-1) exp(-b x^g) on
x > 0 with shape g in (0, 1); the proposal is uniform on [-a, a], which is
symmetric, compactly supported and bounded below near zero.  Moves are
accepted with probability min(pi(y)/pi(x), 1); proposals outside the
support are rejected outright.

The shipped drift certificate uses V = max(1, pi^-z) and a modulus with
tail c v (1 + log v)^(-2(1-g)/g); its constants (z, c, M) were found by
grid calibration and are recorded as fixtures, with the calibration
routine exposed for re-derivation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from ..drift import PVOperator, SetSpec, verify_drift
from ..errors import DomainError, NumericalError
from ..kernels import FiniteKernel
from ..phi import DriftModulus

#: certification grid: 400 log-spaced points reaching x = 100
GRID_RANGE = (1e-2, 1e2)
GRID_POINTS = 400


@dataclass(frozen=True)
class RandomWalkMetropolisSpec:
    weibull_scale: float = 1.0   # b
    weibull_shape: float = 0.5   # g, in (0, 1)
    half_width: float = 1.0      # proposal support radius a
    floor_radius: float = 0.25   # where the proposal floor is checked

    def __post_init__(self):
        if self.weibull_scale <= 0:
            raise DomainError("weibull scale must be positive")
        if not 0.0 < self.weibull_shape < 1.0:
            raise DomainError("weibull shape must lie in (0, 1)")
        if self.half_width <= 0:
            raise DomainError("proposal half-width must be positive")
        if not 0.0 < self.floor_radius <= self.half_width:
            raise DomainError("floor radius must lie in (0, half_width]")

    def log_target(self, x):
        x = np.asarray(x, dtype=float)
        b, g = self.weibull_scale, self.weibull_shape
        with np.errstate(divide="ignore"):
            return np.where(x > 0.0,
                            math.log(b * g) + (g - 1.0) * np.log(np.maximum(x, 1e-300))
                            - b * np.power(np.maximum(x, 0.0), g),
                            -np.inf)

    def target_pdf(self, x):
        return np.exp(self.log_target(x))

    def proposal_pdf(self, y):
        a = self.half_width
        y = np.asarray(y, dtype=float)
        return np.where(np.abs(y) <= a, 1.0 / (2.0 * a), 0.0)

    def acceptance(self, x, y):
        """min(pi(y)/pi(x), 1) with rejection outside the support."""
        lx = float(self.log_target(x))
        ly = self.log_target(y)
        return np.where(np.isfinite(ly), np.minimum(np.exp(np.minimum(ly - lx, 0.0)), 1.0), 0.0)

    def unit_density_point(self):
        """The abscissa where the (decreasing) target density crosses 1."""
        return _unit_density_point(self)


@lru_cache(maxsize=32)
def _unit_density_point(spec):
    from scipy.optimize import brentq
    if float(spec.log_target(1e-12)) < 0.0:
        return 0.0
    return brentq(lambda x: float(spec.log_target(x)), 1e-12, 1e3, xtol=1e-14)


def rwm_pv(spec: RandomWalkMetropolisSpec, V, x, tol=1e-11):
    """(PV)(x) with an attached quadrature error estimate.

    Evaluated as V(x) + int (V(x+y) - V(x)) accept(x, x+y) q(y) dy, which
    keeps the conserved rejection mass out of the numerics.
    """
    a = spec.half_width
    vx = float(V(x))

    def integrand(y):
        t = x + y
        acc = float(spec.acceptance(x, t))
        if acc == 0.0:
            return 0.0
        return (float(V(t)) - vx) * acc / (2.0 * a)

    pts = {0.0}
    if -a < -x < a:
        pts.add(-x)
    x1 = spec.unit_density_point() - x     # V-clamp kink, if V = max(1, .)
    if -a < x1 < a:
        pts.add(x1)
    val, err = quad(integrand, -a, a, points=sorted(pts), limit=200,
                    epsabs=tol, epsrel=1e-10)
    if err > max(100 * tol, 1e-7 * (1.0 + abs(val))):
        raise NumericalError(f"PV quadrature at x={x:g} did not converge",
                             achieved=err)
    return vx + val, err


def pv_operator(spec: RandomWalkMetropolisSpec, tol=1e-11):
    def apply_many(V, points):
        vals = np.empty(len(points))
        errs = np.empty(len(points))
        for i, x in enumerate(np.asarray(points, dtype=float)):
            vals[i], errs[i] = rwm_pv(spec, V, float(x), tol=tol)
        return vals, errs
    return PVOperator(apply_many, "quadrature", meta={"model": "rwm"})


# -- theorem-prescribed certificate -------------------------------------------

@dataclass(frozen=True)
class RwmCertificateFixture:
    z: float = 0.15
    c: float = 4.8e-4
    m: float = 2.0


DEFAULT_FIXTURE = RwmCertificateFixture()


def drift_quantities(spec: RandomWalkMetropolisSpec, z=None):
    """(V, phi_exponent q) for the prescribed certificate shape."""
    if z is None:
        z = DEFAULT_FIXTURE.z
    g = spec.weibull_shape
    q = 2.0 * (1.0 - g) / g

    def V(x):
        x = np.asarray(x, dtype=float)
        return np.maximum(1.0, np.exp(-z * spec.log_target(x)))

    return V, q


def certification_grid():
    return np.geomspace(GRID_RANGE[0], GRID_RANGE[1], GRID_POINTS)


def default_certificate(spec: RandomWalkMetropolisSpec, z=None, c=None,
                        m=None, grid=None):
    """Grid-certify the shipped (z, c, M) fixture; returns the certificate."""
    fx = DEFAULT_FIXTURE
    z = fx.z if z is None else z
    c = fx.c if c is None else c
    m = fx.m if m is None else m
    V, q = drift_quantities(spec, z)
    phi = DriftModulus.log_damped(c, q, form="1+log")
    if grid is None:
        grid = certification_grid()
    return verify_drift(pv_operator(spec), V, phi, SetSpec.interval(0.0, m),
                        grid)


def calibrate(spec: RandomWalkMetropolisSpec, z, grid=None, margin=0.8,
              m_floor=2.0):
    """Find (c, M) making the drift hold at this z, or None if impossible."""
    if grid is None:
        grid = certification_grid()
    V, q = drift_quantities(spec, z)
    pv = pv_operator(spec)
    pvv, _ = pv.apply(V, grid)
    vv = np.asarray(V(grid), dtype=float)
    s = vv - pvv
    phi_unit = DriftModulus.log_damped(1.0, q, form="1+log")
    for m in sorted(set(list(np.geomspace(m_floor, 40.0, 12)))):
        off = grid > m
        if not off.any():
            break
        if np.all(s[off] > 0.0):
            c = margin * float(np.min(s[off] / phi_unit.value(vv[off])))
            if c > 0.0:
                return {"z": z, "c": c, "m": float(m)}
    return None


# -- sampling and discretization ------------------------------------------------

def rwm_step(spec: RandomWalkMetropolisSpec):
    a = spec.half_width

    def step(rng, x):
        y = x + rng.uniform(-a, a)
        if rng.random() < float(spec.acceptance(x, y)):
            return y
        return x

    return step


def sample_path(spec: RandomWalkMetropolisSpec, x0, n, seed):
    rng = np.random.default_rng(seed)
    step = rwm_step(spec)
    path = np.empty(n + 1)
    path[0] = x0
    for t in range(n):
        path[t + 1] = step(rng, path[t])
    return path


def discretize(spec: RandomWalkMetropolisSpec, x_max=10.0, n_bins=200):
    """Midpoint-rule finite kernel on (0, x_max]; an exact Metropolis chain.

    Bin j receives the overlap of the proposal window with bin j times the
    acceptance at the midpoints, so detailed balance against the midpoint
    target masses is exact; all rejected and out-of-range mass stays on the
    diagonal.
    """
    a = spec.half_width
    width = x_max / n_bins
    mids = (np.arange(n_bins) + 0.5) * width
    rows = np.zeros((n_bins, n_bins))
    for i in range(n_bins):
        low = np.maximum(mids - width / 2.0, mids[i] - a)
        high = np.minimum(mids + width / 2.0, mids[i] + a)
        overlap = np.maximum(0.0, high - low) / (2.0 * a)
        acc = spec.acceptance(mids[i], mids)
        rows[i] = overlap * acc
        rows[i, i] = 0.0
        rows[i, i] = 1.0 - rows[i].sum()
    return FiniteKernel(rows, labels=[float(m) for m in mids])
