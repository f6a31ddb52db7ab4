"""Empirical convergence-rate measurements against predicted rates.

Classifies whether r(n) * d(n) vanishes, stays bounded or diverges for an
exact TV curve d; fits power-law decay exponents; and estimates modulated
return-time moments by seeded Monte-Carlo cycles.  "Tends to zero" on a
finite table is operationalized as a negative log-log trend over the final
half decade with a +-0.02 dead band, windowed away from truncation
artifacts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FitError
from .models.brt import BackwardRecurrenceSpec, brt_log_tails

DEAD_BAND = 0.02
STEP_CAP = 10 ** 6


@dataclass
class RateDiagnostic:
    classification: str          # vanishing | bounded | diverging
    slope: float
    window: tuple
    n_cap: int
    dead_band: float


def rate_diagnostic(d, r, n_cap=None, dead_band=DEAD_BAND):
    """Trend of s(n) = r(n) d(n) over the last half decade before n_cap.

    ``d`` is indexed from n=0; ``r`` is a callable or table.  The window end
    is capped at ``n_cap`` (use :func:`brt_truncation_cap` to keep clear of
    the truncated kernel's artifact zone).  Requires at least two decades of
    curve.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d < 0.0):
        raise DomainError("TV curve must be nonnegative")
    n_max = d.size - 1
    if n_max < 100:
        raise DomainError("curve too short: need at least two decades")
    end = int(min(n_cap, n_max)) if n_cap is not None else n_max
    if end < 40:
        raise DomainError("window cap leaves too little curve")
    lo = max(2, int(end / math.sqrt(10.0)))
    n = np.arange(lo, end + 1)
    rv = (np.asarray([float(r(k)) for k in n])
          if callable(r) else np.asarray(r, dtype=float)[lo:end + 1])
    s = rv * d[lo:end + 1]
    pos = s > 0.0
    if pos.sum() < 8:
        raise DomainError("product curve vanished; nothing to classify")
    slope = float(np.polyfit(np.log(n[pos]), np.log(s[pos]), 1)[0])
    if slope < -dead_band:
        kind = "vanishing"
    elif slope > dead_band:
        kind = "diverging"
    else:
        kind = "bounded"
    return RateDiagnostic(classification=kind, slope=slope,
                          window=(int(lo), int(end)), n_cap=end,
                          dead_band=dead_band)


def brt_truncation_cap(spec: BackwardRecurrenceSpec, d):
    """Largest n whose TV value still dominates the truncation error.

    The truncated kernel's stationary law is missing roughly the tail mass
    above N; the window must end where that mass is below 10% of d(n).
    """
    log_tails = brt_log_tails(spec)
    n = spec.truncation
    # local decay exponent of the tail product at the truncation edge
    k0 = max(2, int(0.8 * n))
    slope = ((log_tails[n] - log_tails[k0])
             / (math.log(n) - math.log(k0)))
    if slope >= -1.0 - 1e-9:
        return d.size - 1   # tail not summable-looking; no cap estimate
    tail_n = math.exp(log_tails[n])
    mean_cycles = float(np.exp(log_tails).sum())
    missing = tail_n * n / ((-slope) - 1.0) / mean_cycles
    ok = np.flatnonzero(np.asarray(d) > 10.0 * missing)
    return int(ok[-1]) if ok.size else d.size - 1


@dataclass
class RateFit:
    exponent: float
    power_law: bool
    window: tuple
    half_slopes: tuple


def fit_rate_exponent(d, window_decade=1.0, flat_tol=0.1):
    """Negated least-squares slope of log d over the last decade of n.

    Splits the window in half and compares slopes: geometric decay shows a
    growing slope and is flagged as non-power-law rather than fitted.
    """
    d = np.asarray(d, dtype=float)
    n_max = d.size - 1
    if n_max < 30:
        raise FitError("curve too short to fit")
    lo = max(1, int(n_max * 10 ** (-window_decade)))
    n = np.arange(lo, n_max + 1)
    vals = d[lo:n_max + 1]
    if np.any(vals <= 0.0):
        keep = vals > 0.0
        n, vals = n[keep], vals[keep]
        if n.size < 10:
            raise FitError("curve not positive on the fit window")
    slope = float(np.polyfit(np.log(n), np.log(vals), 1)[0])
    if slope >= 0.0:
        raise FitError("curve does not decrease on the fit window")
    mid = n.size // 2
    s1 = float(np.polyfit(np.log(n[:mid]), np.log(vals[:mid]), 1)[0])
    s2 = float(np.polyfit(np.log(n[mid:]), np.log(vals[mid:]), 1)[0])
    power_law = abs(s2 - s1) <= flat_tol * max(1.0, abs(slope))
    return RateFit(exponent=-slope, power_law=power_law,
                   window=(int(n[0]), int(n[-1])),
                   half_slopes=(s1, s2))


@dataclass
class McMomentResult:
    estimate: float
    std_error: float
    ci_low: float
    ci_high: float
    replicas: int
    censored: int
    batch_means: np.ndarray = field(repr=False)
    trim_ratio: float = 1.0      # mean / 1%-trimmed mean
    batch_ratio: float = 1.0     # mean / median of batch means
    warnings: list = field(default_factory=list)

    @property
    def stable(self):
        return not self.warnings

    @property
    def censored_fraction(self):
        return self.censored / self.replicas


def mc_return_moment(step, x0, in_c, r, f=None, replicas=1000, seed=0,
                     step_cap=STEP_CAP, batches=10):
    """Monte-Carlo estimate of E_x0[sum_{k < tau_C} r(k) f(Phi_k)].

    Per-replica streams come from a counter-based split of the master seed,
    so the estimate is independent of execution order.  Replicas exceeding
    ``step_cap`` are censored (kept at their partial sum) and reported.
    Reliability warnings fire on >1% censoring, on the mean being a large
    multiple of the 1%-trimmed mean (extreme cycles carry the estimate), and
    on the mean far exceeding the median batch mean; together these surface
    divergent-mean moments, which no replica count can stabilize.
    """
    if replicas < 100:
        raise DomainError("need at least 100 replicas")
    f = f or (lambda x: 1.0)
    children = np.random.SeedSequence(seed).spawn(replicas)
    sums = np.empty(replicas)
    censored = 0
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        x = x0
        total = float(r(0)) * float(f(x))
        k = 0
        while True:
            x = step(rng, x)
            k += 1
            if in_c(x):
                break
            if k >= step_cap:
                censored += 1
                break
            total += float(r(k)) * float(f(x))
        sums[i] = total
    est = float(sums.mean())
    se = float(sums.std(ddof=1) / math.sqrt(replicas))
    srt = np.sort(sums)
    trim = max(1, int(0.01 * replicas))
    trimmed = float(srt[:-trim].mean())
    trim_ratio = est / trimmed if trimmed > 0 else math.inf
    batch = sums[: (replicas // batches) * batches].reshape(batches, -1)
    batch_means = batch.mean(axis=1)
    med = float(np.median(batch_means))
    batch_ratio = est / med if med > 0 else math.inf
    warnings = []
    if censored > 0.01 * replicas:
        warnings.append(f"censored {censored}/{replicas} replicas at the "
                        f"{step_cap}-step cap")
    if trim_ratio > 5.0:
        warnings.append(f"mean is {trim_ratio:.1f}x the 1%-trimmed mean; "
                        "extreme cycles dominate (moment likely divergent)")
    if batch_ratio > 20.0:
        warnings.append(f"mean is {batch_ratio:.1f}x the median batch mean")
    return McMomentResult(estimate=est, std_error=se,
                          ci_low=est - 1.96 * se, ci_high=est + 1.96 * se,
                          replicas=replicas, censored=censored,
                          batch_means=batch_means, trim_ratio=trim_ratio,
                          batch_ratio=batch_ratio, warnings=warnings)


def power_rate(beta):
    """r(k) = max(k, 1)^beta: positive, nondecreasing for beta >= 0."""
    if beta < 0:
        raise DomainError("rate exponent must be nonnegative")
    return lambda k: float(max(k, 1)) ** beta


def stretched_rate(a, beta):
    """r(k) = exp(a k^beta)."""
    if a < 0 or not 0 < beta <= 1:
        raise DomainError("need a >= 0 and beta in (0, 1]")
    return lambda k: math.exp(a * float(k) ** beta)
