"""Certification of drift inequalities against a PV-evaluation operator.

The base condition certified here is

    PV(x) + phi(V(x)) <= V(x) + b * 1_C(x),

for a drift modulus phi, a function V >= 1 and a small set C.  On top of a
valid certificate the module checks the derived drift sequence
(PV_{k+1} <= V_k - r(k) + b r(k+1)/r(0) 1_C), the induced return-time
moment bounds, and sublevel-set shrinkage.  Certificates over grids are
"grid-certified", never proven: the report always carries the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (DomainError, InapplicableError, PrecisionError,
                     RangeOverflowError)
from .kernels import FiniteKernel, modulated_moment_profile
from .phi import INEQ_TOL, DriftModulus
from .rates import DriftFunctionSeq, RateFunction, classify_regime


# -- small-set specifications ---------------------------------------------------

@dataclass(frozen=True)
class SetSpec:
    """Serializable description of the small set C."""

    kind: str                    # "explicit" | "sublevel" | "interval" | "predicate"
    states: frozenset = frozenset()
    level: float = math.inf      # sublevel:  {V <= level}
    lo: float = -math.inf        # interval:  {lo <= x <= hi}
    hi: float = math.inf
    predicate: object = field(default=None, compare=False)

    @classmethod
    def explicit(cls, states):
        return cls(kind="explicit", states=frozenset(states))

    @classmethod
    def sublevel(cls, level):
        return cls(kind="sublevel", level=float(level))

    @classmethod
    def interval(cls, lo, hi):
        return cls(kind="interval", lo=float(lo), hi=float(hi))

    @classmethod
    def from_predicate(cls, fn):
        return cls(kind="predicate", predicate=fn)

    def mask(self, points, v_values=None):
        pts = np.asarray(points)
        if self.kind == "explicit":
            return np.asarray([p in self.states for p in pts.tolist()])
        if self.kind == "sublevel":
            if v_values is None:
                raise DomainError("sublevel set needs V values")
            return np.asarray(v_values, dtype=float) <= self.level
        if self.kind == "interval":
            x = pts.astype(float)
            return (x >= self.lo) & (x <= self.hi)
        return np.asarray([bool(self.predicate(p)) for p in pts.tolist()])

    def describe(self):
        if self.kind == "explicit":
            inner = sorted(self.states)[:6]
            return f"{{{', '.join(map(str, inner))}{', ...' if len(self.states) > 6 else ''}}}"
        if self.kind == "sublevel":
            return f"{{V <= {self.level:g}}}"
        if self.kind == "interval":
            return f"[{self.lo:g}, {self.hi:g}]"
        return "predicate"

    def to_config(self):
        if self.kind == "explicit":
            return {"kind": "explicit", "states": sorted(self.states)}
        if self.kind == "sublevel":
            return {"kind": "sublevel", "level": self.level}
        if self.kind == "interval":
            return {"kind": "interval", "lo": self.lo, "hi": self.hi}
        raise DomainError("predicate sets do not serialize")


# -- PV operators ----------------------------------------------------------------

class PVOperator:
    """Evaluates x -> (PV)(x) for a supplied V, with provenance-tagged error.

    ``provenance`` is one of "exact-finite", "quadrature", "monte-carlo";
    the matching slack used by :func:`verify_drift` is an absolute 1e-9,
    3x the quadrature error estimate, or 3 sigma respectively.
    """

    def __init__(self, apply_many, provenance, meta=None):
        if provenance not in ("exact-finite", "quadrature", "monte-carlo"):
            raise DomainError(f"unknown provenance {provenance!r}")
        self._apply_many = apply_many
        self.provenance = provenance
        self.meta = dict(meta or {})

    def apply(self, V, points):
        """Return (PV values, per-point error estimates or None)."""
        values, err = self._apply_many(V, points)
        return np.asarray(values, dtype=float), err

    @classmethod
    def from_kernel(cls, P: FiniteKernel):
        def apply_many(V, points):
            vvals = _v_on_states(V, P)
            idx = np.asarray([P.index_of(p) if p in P.labels else int(p)
                              for p in np.asarray(points).tolist()])
            finite = np.isfinite(vvals)
            pv = np.full(P.n, np.inf)
            # rows fully supported on finite-V states evaluate exactly
            ok_rows = (P.rows[:, ~finite].sum(axis=1) == 0.0)
            pv[ok_rows] = P.rows[np.ix_(ok_rows, finite)] @ vvals[finite]
            return pv[idx], None
        return cls(apply_many, "exact-finite", meta={"n": P.n})

    def linearity_residual(self, points, rng=None):
        """Max residual of PV linearity on random combinations (exact PV)."""
        rng = rng or np.random.default_rng(0)
        v1 = lambda x: 1.0 + (np.asarray(x, dtype=float) % 7.0)
        v2 = lambda x: 2.0 + np.sqrt(1.0 + np.asarray(x, dtype=float) ** 2)
        a, b = rng.uniform(0.25, 2.0, size=2)
        combo = lambda x: a * v1(x) + b * v2(x)
        lhs, _ = self.apply(combo, points)
        r1, _ = self.apply(v1, points)
        r2, _ = self.apply(v2, points)
        return float(np.max(np.abs(lhs - a * r1 - b * r2)))


def _v_on_states(V, P: FiniteKernel):
    if callable(V):
        return np.asarray([float(V(s)) for s in P.labels], dtype=float)
    vals = np.asarray(V, dtype=float)
    if vals.shape != (P.n,):
        raise DomainError("V table must give one value per state")
    return vals


def _v_on_points(V, points):
    if callable(V):
        out = np.asarray(V(np.asarray(points, dtype=float)), dtype=float)
        if out.shape != np.asarray(points).shape:
            out = np.asarray([float(V(p)) for p in points], dtype=float)
        return out
    return np.asarray(V, dtype=float)


# -- certificates ----------------------------------------------------------------

@dataclass
class DriftReport:
    points: np.ndarray
    v_values: np.ndarray
    pv_values: np.ndarray
    delta: np.ndarray            # PV + phi(V) - V
    in_c: np.ndarray
    tol: float
    provenance: str
    max_violation_off_c: float
    worst_point: object
    minimal_b_on_c: float
    sup_v_on_c: float
    skipped_infinite: int
    grid_description: str

    def slack_rows(self):
        """Per-point rows (point, V, PV, delta, in_C) for CSV emission."""
        return zip(self.points.tolist(), self.v_values, self.pv_values,
                   self.delta, self.in_c)


@dataclass
class DriftCertificate:
    phi: DriftModulus
    V: object
    C: SetSpec
    b: float
    report: DriftReport
    pv: PVOperator = field(repr=False, default=None)

    @property
    def valid(self):
        return (self.report.max_violation_off_c <= self.report.tol
                and self.b >= self.report.minimal_b_on_c - 1e-12)

    def summary(self):
        r = self.report
        status = "VALID" if self.valid else "INVALID"
        lines = [
            f"drift certificate [{status}] (grid-certified, {r.provenance})",
            f"  phi: {self.phi.label}",
            f"  C:   {self.C.describe()}   sup_C V = {r.sup_v_on_c:g}",
            f"  b:   {self.b:.12g}  (minimal on grid: {r.minimal_b_on_c:.12g})",
            f"  max violation off C: {r.max_violation_off_c:.3e}"
            f"  (tol {r.tol:.3e}, worst point {r.worst_point})",
            f"  grid: {r.grid_description}",
        ]
        if r.skipped_infinite:
            lines.append(f"  skipped {r.skipped_infinite} infinite-V points")
        return "\n".join(lines)


def verify_drift(pv: PVOperator, V, phi: DriftModulus, C: SetSpec, grid,
                 b=None, tol=None):
    """Check PV + phi(V) <= V + b 1_C pointwise on the grid.

    Off C the defect Delta = PV + phi(V) - V must stay below the
    provenance-matched tolerance; on C the report records the minimal
    admissible b (max positive defect).  Points with V = +inf are skipped
    and counted.  When ``b`` is omitted the minimal value is adopted.
    """
    points = np.asarray(grid)
    vvals = _v_on_points(V, points)
    if np.any(vvals < 1.0 - 1e-9):
        raise DomainError("V must be >= 1 on the grid")
    pvvals, err = pv.apply(V, points)
    if tol is None:
        if pv.provenance == "exact-finite":
            tol = INEQ_TOL
        elif pv.provenance == "quadrature":
            emax = float(np.max(err)) if err is not None else 0.0
            tol = max(3.0 * emax, 1e-12)
        else:
            emax = float(np.max(err)) if err is not None else 0.0
            tol = 3.0 * emax
    finite = np.isfinite(vvals)
    skipped = int(np.count_nonzero(~finite))
    in_c = C.mask(points, v_values=vvals)
    delta = np.full(points.shape, np.nan)
    use = finite.copy()
    delta[use] = (pvvals[use] + phi.value(np.maximum(vvals[use], 1.0))
                  - vvals[use])
    off = use & ~in_c
    if off.any():
        off_idx = np.flatnonzero(off)
        worst_local = int(np.argmax(delta[off_idx]))
        worst_point = points[off_idx[worst_local]]
        max_off = float(delta[off_idx].max())
    else:
        worst_point = None
        max_off = -math.inf
    on = use & in_c
    minimal_b = float(np.maximum(delta[on], 0.0).max()) if on.any() else 0.0
    sup_v = float(vvals[in_c].max()) if in_c.any() else 0.0
    report = DriftReport(
        points=points, v_values=vvals, pv_values=pvvals, delta=delta,
        in_c=in_c, tol=float(tol), provenance=pv.provenance,
        max_violation_off_c=max_off, worst_point=worst_point,
        minimal_b_on_c=minimal_b, sup_v_on_c=sup_v,
        skipped_infinite=skipped,
        grid_description=f"{points.size} points")
    b_used = minimal_b if b is None else float(b)
    return DriftCertificate(phi=phi, V=V, C=C, b=b_used, report=report,
                            pv=pv)


def shrink_to_sublevel(cert: DriftCertificate, beta, grid=None):
    """Trade a slice of the modulus for a sublevel small set.

    For 0 < beta < 1 and unbounded phi, the condition with beta*phi holds
    off the sublevel set {V <= M_beta}, where M_beta solves
    phi(v) = b / (1 - beta).  Validated by re-running the verifier.
    """
    if not 0.0 < beta < 1.0:
        raise DomainError("beta must lie in (0, 1)")
    if not cert.valid:
        raise DomainError("shrink_to_sublevel needs a valid certificate")
    phi = cert.phi
    # phi must be unbounded: check growth on a log grid
    top = float(phi.value(1e12))
    if phi.family == "constant" or top < 10.0 * float(phi.value(1.0)):
        raise InapplicableError("sublevel shrinkage needs phi -> infinity")
    threshold = cert.b / (1.0 - beta)
    if float(phi.value(1.0)) >= threshold:
        m_beta = 1.0
    else:
        from scipy.optimize import brentq
        hi = 2.0
        while float(phi.value(hi)) < threshold:
            hi *= 8.0
            if hi > 1e280:
                raise InapplicableError("phi never reaches b/(1-beta)")
        m_beta = brentq(lambda v: float(phi.value(v)) - threshold, 1.0, hi,
                        xtol=1e-12, rtol=8.9e-16)
    new_c = SetSpec.sublevel(m_beta)
    if grid is None:
        grid = cert.report.points
    if cert.pv is None:
        raise DomainError("certificate has no PV operator attached")
    return verify_drift(cert.pv, cert.V, phi.scaled(beta), new_c, grid,
                        b=cert.b)


# -- derived checks ---------------------------------------------------------------

@dataclass
class SequenceReport:
    max_violation: float
    worst_state: object
    worst_k: int
    k_checked: int
    skipped_infinite: int
    tol: float

    @property
    def passed(self):
        return self.max_violation <= self.tol


def verify_drift_sequence(P: FiniteKernel, V, phi: DriftModulus, C: SetSpec,
                          b, K, tol=INEQ_TOL):
    """Check PV_{k+1} <= V_k - r(k) + b r(k+1)/r(0) 1_C for k = 0..K.

    V_k = H_k(V) with V_0 = V - 1.  The sweep stops at the largest k whose
    shifted transform stays representable and reports it.
    """
    vvals = _v_on_states(V, P)
    finite = np.isfinite(vvals)
    skipped = int(np.count_nonzero(~finite))
    if not finite.all():
        # rows touching infinite-V states cannot be checked exactly
        touch = P.rows[:, ~finite].sum(axis=1) > 0.0
        finite &= ~touch
    seq = DriftFunctionSeq(phi, vvals)
    k_use = int(K)
    while k_use >= 1:
        try:
            vk = seq.on_values(vvals[finite], np.arange(k_use + 2))
            if np.isfinite(vk).all():
                break
        except RangeOverflowError:
            pass
        k_use //= 2
    if k_use < 1:
        raise RangeOverflowError("drift sequence overflows already at k=1",
                                 largest=None)
    rate = RateFunction(phi)
    rk = rate.table(k_use + 1)
    full_vk = np.full((P.n, k_use + 2), np.inf)
    full_vk[finite] = vk
    in_c = C.mask(np.asarray(P.labels), v_values=vvals)
    mat = P.csr() if P.n > 64 else P.rows
    pv_next = mat @ full_vk[:, 1:]          # (n, K+1): P V_{k+1}
    bonus = (b / rk[0]) * rk[1:k_use + 2]   # b r(k+1) / r(0)
    # +inf entries (finite-V states feeding infinite-V ones) are genuine
    # violations and stand as such
    check = (pv_next[finite] - full_vk[finite][:, :-1]
             + rk[None, :k_use + 1]
             - np.where(in_c[finite, None], bonus[None, :], 0.0))
    idx = np.unravel_index(np.argmax(check), check.shape)
    state_idx = np.flatnonzero(finite)[idx[0]]
    return SequenceReport(max_violation=max(float(check[idx]), 0.0),
                          worst_state=P.labels[state_idx],
                          worst_k=int(idx[1]), k_checked=k_use,
                          skipped_infinite=skipped, tol=tol)


@dataclass
class BoundCheck:
    name: str
    lhs: np.ndarray
    rhs: np.ndarray
    max_violation: float
    min_slack: float
    worst_state: object
    tol: float

    @property
    def passed(self):
        return self.max_violation <= self.tol


@dataclass
class MomentBoundsReport:
    checks: dict
    horizon: int

    @property
    def passed(self):
        return all(c.passed for c in self.checks.values())


def _bound_check(name, states, lhs, rhs, tol):
    gap = lhs - rhs
    i = int(np.argmax(gap))
    return BoundCheck(name=name, lhs=lhs, rhs=rhs,
                      max_violation=max(float(gap[i]), 0.0),
                      min_slack=float(-gap.max()), worst_state=states[i],
                      tol=tol)


def verify_moment_bounds(P: FiniteKernel, V, phi: DriftModulus, C: SetSpec,
                         b, pair=None, horizon=None, tol=INEQ_TOL):
    """Return-time moment bounds implied by a valid drift certificate.

    At every state x, with tau the return time to C:
      (a) E_x[sum phi(V(Phi_k))]  <= V(x) + b 1_C(x)
      (b) E_x[sum r(k)]           <= V(x) + b r(1)/r(0) 1_C(x)
      (c) E_x[sum Psi1(r(k)) Psi2(phi(V(Phi_k)))]
             <= K_pair (2 V(x) + b (1 + r(1)/r(0)) 1_C(x))   [when pair given]
    The left sides come from taboo-power series; the series' geometric tail
    bound is added to the left side before comparison.
    """
    vvals = _v_on_states(V, P)
    in_c = C.mask(np.asarray(P.labels), v_values=vvals)
    c_states = [P.labels[i] for i in np.flatnonzero(in_c)]
    if not c_states:
        raise DomainError("small set C contains no state")
    if horizon is None:
        horizon = max(1000, 2 * P.n + 2)
    rate = RateFunction(phi)
    rk = rate.table(horizon)
    phiv = phi.value(np.maximum(np.where(np.isfinite(vvals), vvals, 1.0), 1.0))
    phiv = np.where(np.isfinite(vvals), phiv, np.inf)
    states = list(P.labels)
    ones = np.ones(horizon + 1)

    lhs_a, tail_a = modulated_moment_profile(P, c_states, ones, phiv,
                                             horizon=horizon)
    rhs_a = vvals + b * in_c
    lhs_b, tail_b = modulated_moment_profile(P, c_states, rk, None,
                                             horizon=horizon)
    rhs_b = vvals + b * (rk[1] / rk[0]) * in_c
    checks = {
        "modulus": _bound_check("modulus", states,
                                lhs_a.copy() + tail_a.tail_bound, rhs_a, tol),
        "rate": _bound_check("rate", states,
                             lhs_b.copy() + tail_b.tail_bound, rhs_b, tol),
    }
    used = max(tail_a.horizon, tail_b.horizon)
    if pair is not None:
        r_c = np.asarray(pair.psi1(np.maximum(rk, 1e-300)), dtype=float)
        f_c = np.asarray(pair.psi2(np.maximum(phiv, 1e-300)), dtype=float)
        lhs_c, tail_c = modulated_moment_profile(P, c_states, r_c, f_c,
                                                 horizon=horizon)
        rhs_c = pair.K * (2.0 * vvals + b * (1.0 + rk[1] / rk[0]) * in_c)
        checks["interpolated"] = _bound_check(
            "interpolated", states, lhs_c.copy() + tail_c.tail_bound, rhs_c,
            tol)
        used = max(used, tail_c.horizon)
    return MomentBoundsReport(checks=checks, horizon=used)


@dataclass
class TT1Report:
    sup: float
    worst_state: object
    finite: bool
    per_state: dict


def tt_condition_i(P: FiniteKernel, c_states, f, r, horizon=None):
    """sup over x in C of E_x[sum_{k<tau_C} r(k) f(Phi_k)], with finiteness flag."""
    if not list(c_states):
        raise DomainError("C must be nonempty")
    from .kernels import modulated_moment
    per = {}
    worst = -math.inf
    worst_state = None
    finite = True
    for x in c_states:
        series = modulated_moment(P, c_states, x, r, f, horizon=horizon,
                                  strict=False)
        per[x] = series
        val = series.partial
        if series.diverging:
            finite = False
        if val > worst:
            worst = val
            worst_state = x
    return TT1Report(sup=worst, worst_state=worst_state, finite=finite,
                     per_state=per)
