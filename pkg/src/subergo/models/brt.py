"""Backward recurrence time chain: the exactly solvable integer testbed.

The chain moves n -> n+1 with probability p_n and resets to 0 otherwise,
with p_0 = 1.  Return times to the atom {0} have the explicit tail
P_0(tau_0 > n) = prod_{j<n} p_j, which makes every rate claim checkable
against closed-form products.  Countable state space enters truncated at N
by setting p_N = 0 (the escaping mass of the last state is redirected to
the return target), which preserves row-stochasticity and the renewal
structure; the truncation error is controlled by the tail product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..drift import PVOperator, SetSpec, verify_drift
from ..errors import DomainError
from ..kernels import FiniteKernel
from ..phi import DriftModulus

#: regime formulas apply only where they land in this open interval
_FORMULA_BAND = (0.01, 0.99)
_DEFAULT_EARLY_P = 0.5


@dataclass(frozen=True)
class PolynomialRegime:
    """p_n = 1 - (1+theta)/n for large n; return tails decay like n^-(1+theta)."""
    theta: float

    def formula(self, n):
        return 1.0 - (1.0 + self.theta) / n

    name = "polynomial"


@dataclass(frozen=True)
class LogarithmicRegime:
    """p_n = 1 - 1/n - (1+theta)/(n log n); tails like n^-1 log^-(1+theta) n."""
    theta: float

    def formula(self, n):
        if n < 2:
            return -1.0
        return 1.0 - 1.0 / n - (1.0 + self.theta) / (n * math.log(n))

    name = "logarithmic"


@dataclass(frozen=True)
class SubexponentialRegime:
    """p_n = 1 - theta*beta*n^(beta-1); tails like exp(-theta n^beta)."""
    theta: float
    beta: float

    def formula(self, n):
        return 1.0 - self.theta * self.beta * n ** (self.beta - 1.0)

    name = "subexponential"


@dataclass(frozen=True)
class ConstantRegime:
    """p_n = p constant for n >= 1: the geometrically ergodic control case."""
    p: float = 0.5

    def formula(self, n):
        return self.p

    name = "constant"


@dataclass(frozen=True)
class BackwardRecurrenceSpec:
    regime: object
    truncation: int = 2000
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.truncation < 16:
            raise DomainError("truncation must be at least 16")
        theta = getattr(self.regime, "theta", None)
        if theta is not None and theta <= 0:
            raise DomainError("regime parameter theta must be positive")
        if isinstance(self.regime, SubexponentialRegime):
            if not 0.0 < self.regime.beta < 1.0:
                raise DomainError("subexponential regime needs beta in (0,1)")
        if isinstance(self.regime, ConstantRegime):
            if not 0.0 < self.regime.p < 1.0:
                raise DomainError("constant regime needs p in (0,1)")
        for n, v in self.overrides.items():
            if n == 0:
                if v != 1.0:
                    raise DomainError("p_0 = 1 is fixed")
            elif not 0.0 < v < 1.0:
                raise DomainError(f"override p_{n}={v:g} outside (0,1)")
        object.__setattr__(self, "_n_min", self._formula_onset())
        tail_end = self.log_tail(self.truncation)
        if tail_end > math.log(0.05):
            raise DomainError(
                "product of p_n does not vanish over the truncation range "
                f"(tail {math.exp(tail_end):.3g} at N={self.truncation})")

    def _formula_onset(self):
        lo, hi = _FORMULA_BAND
        for n in range(1, self.truncation):
            val = self.regime.formula(n)
            if lo < val < hi:
                return n
        raise DomainError("regime formula never enters the valid band "
                          f"({lo}, {hi}) below the truncation")

    def p(self, n):
        """Up-move probability p_n of the untruncated chain."""
        if n < 0:
            raise DomainError("n must be >= 0")
        if n == 0:
            return 1.0
        if n in self.overrides:
            return float(self.overrides[n])
        if n < self._n_min:
            return _DEFAULT_EARLY_P
        val = self.regime.formula(n)
        if not 0.0 < val < 1.0:
            raise DomainError(f"regime formula leaves (0,1) at n={n}")
        return val

    def p_array(self):
        """p_0..p_N of the truncated kernel (p_N = 0 redirect)."""
        p = np.array([self.p(n) for n in range(self.truncation)] + [0.0])
        return p

    def log_tail(self, n):
        """log prod_{j<n} p_j of the untruncated chain."""
        if n <= 0:
            return 0.0
        return float(sum(math.log(self.p(j)) for j in range(1, n)))

    def default_gamma(self):
        return 0.5


def brt_kernel(spec: BackwardRecurrenceSpec):
    """The (N+1)-state truncated kernel; row n holds (1-p_n, p_n)."""
    p = spec.p_array()
    n = spec.truncation + 1
    rows = np.zeros((n, n))
    rows[:, 0] = 1.0 - p
    for i in range(n - 1):
        rows[i, i + 1] = p[i]
    rows[n - 1, 0] = 1.0
    return FiniteKernel(rows)


def brt_exact_tail(spec: BackwardRecurrenceSpec, n):
    """P_0(tau_0 > n) = prod_{j=0}^{n-1} p_j, accumulated in log space."""
    if n > spec.truncation:
        raise DomainError("tail product beyond the truncation range")
    return math.exp(spec.log_tail(n))


def brt_log_tails(spec: BackwardRecurrenceSpec):
    """log P_0(tau_0 > n) for n = 0..N as one cumulative array."""
    p = spec.p_array()[:-1]
    return np.concatenate([[0.0], np.cumsum(np.log(p))])


@dataclass
class CertificateIngredients:
    phi: DriftModulus
    v_values: np.ndarray
    C: SetSpec
    b: float
    certificate: object
    meta: dict


def _fit_scale(v, pv, phi_unit, m_index, margin=0.9):
    """Largest unit-modulus multiple that the exact drift supports off C."""
    off = np.arange(v.size) > m_index
    s = v[off] - pv[off]
    if np.any(s <= 0.0):
        return None
    c_max = float(np.min(s / phi_unit.value(np.maximum(v[off], 1.0))))
    return margin * c_max


def brt_certificate(spec: BackwardRecurrenceSpec, gamma=0.5, epsilon=None):
    """Drift ingredients (phi, V, C, b) certified on the truncated kernel.

    Polynomial and subexponential regimes use the product drift function
    V(x) = prod_{j<x} p_j^(-gamma); the logarithmic regime uses the inverse
    product damped by log^epsilon(x) (the reading under which V grows).
    The modulus family and exponent follow the regime's case analysis; its
    scale, the small set and the constant b are determined numerically and
    re-verified through the exact finite-state PV operator.
    """
    if not 0.0 < gamma < 1.0:
        raise DomainError("gamma must lie in (0, 1)")
    regime = spec.regime
    log_tails = brt_log_tails(spec)
    n_states = spec.truncation + 1
    if isinstance(regime, ConstantRegime):
        raise DomainError("constant regime is geometric; no subgeometric "
                          "certificate applies")
    if isinstance(regime, PolynomialRegime):
        prod = gamma * (1.0 + regime.theta)
        if prod <= 1.0:
            raise DomainError(
                f"gamma*(1+theta) = {prod:g} <= 1 gives a negative exponent")
        alpha = 1.0 - 1.0 / prod
        phi_unit = DriftModulus.power(c=1.0, alpha=alpha)
        v = np.exp(-gamma * log_tails)
        meta = {"alpha": alpha, "rate_exponent": alpha / (1.0 - alpha)}
    elif isinstance(regime, SubexponentialRegime):
        alpha = 1.0 / regime.beta - 1.0
        phi_unit = DriftModulus.subexponential(c=1.0, alpha=alpha)
        v = np.exp(-gamma * log_tails)
        meta = {"alpha": alpha,
                "scale_ceiling": regime.theta ** (1.0 / regime.beta)
                * regime.beta * (1.0 - gamma)}
    else:  # logarithmic regime
        if epsilon is None:
            epsilon = min(0.1, regime.theta / 2.0)
        if not 0.0 < epsilon < regime.theta:
            raise DomainError("epsilon must lie in (0, theta)")
        x = np.arange(n_states, dtype=float)
        damp = np.power(np.maximum(1.0, np.log(np.maximum(x, 1.0))), -epsilon)
        v = np.maximum(1.0, np.exp(-log_tails) * damp)
        alpha = regime.theta - epsilon
        phi_unit = DriftModulus.logarithmic(c=1.0, alpha=alpha)
        meta = {"alpha": alpha, "epsilon": epsilon}
    kernel = brt_kernel(spec)
    pv_vals = kernel.rows @ v
    m_index = max(spec._n_min + 1, 4)
    c_fit = None
    while m_index < spec.truncation // 4:
        c_fit = _fit_scale(v, pv_vals, phi_unit, m_index)
        if c_fit is not None and c_fit > 0.0:
            break
        m_index *= 2
    if c_fit is None or c_fit <= 0.0:
        raise DomainError("no positive drift margin found off any small set")
    if isinstance(regime, (PolynomialRegime, LogarithmicRegime)):
        c_fit = min(c_fit, 1.0)  # families keep c in (0, 1]
    phi = DriftModulus(phi_unit.family, c=c_fit, alpha=phi_unit.alpha,
                       v0=phi_unit.v0, log_form=phi_unit.log_form)
    level = float(v[m_index])
    c_set = SetSpec.sublevel(level)
    pv_op = PVOperator.from_kernel(kernel)
    cert = verify_drift(pv_op, v, phi, c_set, np.asarray(kernel.labels))
    meta.update({"gamma": gamma, "m_index": m_index, "c": c_fit,
                 "sublevel": level})
    return CertificateIngredients(phi=phi, v_values=v, C=c_set,
                                  b=cert.b, certificate=cert, meta=meta)


def brt_step(spec: BackwardRecurrenceSpec):
    """Single-step sampler on the truncated chain (state N redirects to 0)."""
    p = spec.p_array()

    def step(rng, x):
        return x + 1 if rng.random() < p[x] else 0

    return step


def sample_path(spec: BackwardRecurrenceSpec, x0, n, seed):
    """Deterministic trajectory of length n+1 from the given seed."""
    rng = np.random.default_rng(seed)
    step = brt_step(spec)
    path = np.empty(n + 1, dtype=int)
    path[0] = x0
    for t in range(n):
        path[t + 1] = step(rng, path[t])
    return path
