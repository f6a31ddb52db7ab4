"""Concave drift moduli and the transform calculus they induce.

A drift modulus is a concave, nondecreasing, differentiable function
``phi: [1, inf) -> (0, inf)``.  Its running integral

    H(v) = integral_1^v dx / phi(x)

increases to infinity, so it has an inverse ``H^{-1}: [0, inf) -> [1, inf)``,
and the induced convergence-rate function is ``r(z) = phi(H^{-1}(z))``.
The shifted transforms ``H_k(v) = H^{-1}(H(v) + k) - H^{-1}(k)`` feed the
drift-sequence and return-time moment machinery in :mod:`subergo.drift`.

Named families carry closed forms for H and its inverse.  Custom moduli
fall back to adaptive quadrature for H and to a cached high-accuracy solve
of the scalar initial value problem ``y' = phi(y), y(0) = 1`` (whose
solution is exactly ``H^{-1}``) for the inverse; an independent
quadrature-plus-root-finding oracle is kept around for cross-validation.
"""

from __future__ import annotations

import math
import threading

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .errors import (DomainError, InvalidPhiError, NumericalError,
                     RangeOverflowError)

#: relative tolerance target for inverting H
INV_RTOL = 1e-10
#: slack accepted by inequality checks on exact evaluations
INEQ_TOL = 1e-9
#: growth guard: arguments beyond this count as numerically unreachable
V_HUGE = 1e280

_FAMILIES = ("constant", "power", "logarithmic", "subexponential", "linear",
             "custom")


def _as_array(v):
    a = np.asarray(v, dtype=float)
    return a, (a.ndim == 0)


class DriftModulus:
    """A validated drift modulus from a named family or user callables.

    Construct through the classmethods: :meth:`constant`, :meth:`power`,
    :meth:`logarithmic`, :meth:`subexponential`, :meth:`log_damped`,
    :meth:`linear`, :meth:`custom`.  Instances are immutable by convention
    and safe to share across threads; the lazily built inverse-ODE cache is
    lock protected.
    """

    def __init__(self, family, c=1.0, alpha=0.0, v0=None, fn=None, dfn=None,
                 log_form="log", label=None):
        if family not in _FAMILIES:
            raise DomainError(f"unknown modulus family {family!r}")
        c = float(c)
        alpha = float(alpha)
        if c <= 0:
            raise DomainError("scale c must be positive")
        self.family = family
        self.c = c
        self.alpha = alpha
        self.log_form = log_form
        self._fn = fn
        self._dfn = dfn
        self._splice = None  # (v0, A, B) of the linear continuation, if any

        if family == "power":
            if not 0.0 <= alpha < 1.0:
                raise DomainError("power family needs alpha in [0, 1)")
        elif family == "logarithmic":
            if alpha < 0.0:
                raise DomainError("logarithmic family needs alpha >= 0")
            if c > 1.0:
                raise DomainError("logarithmic family needs c in (0, 1]")
            if alpha > 2.0:
                # c*(1+log v)^alpha is convex near 1 for alpha > 2; continue
                # linearly below e^(alpha-1) to keep a global concave C^1 curve
                self._splice = self._make_splice(math.exp(alpha - 1.0))
        elif family == "subexponential":
            if alpha <= 0.0:
                raise DomainError("subexponential family needs alpha > 0")
            if log_form not in ("log", "1+log"):
                raise DomainError("log_form must be 'log' or '1+log'")
            v0_min = math.exp(alpha + 1.0) if log_form == "log" else math.exp(alpha)
            if v0 is None:
                v0 = v0_min
            v0 = float(v0)
            if v0 < v0_min * (1.0 - 1e-12):
                raise DomainError(
                    f"splice abscissa v0={v0:g} below concavity onset {v0_min:g}")
            self._splice = self._make_splice(v0)
        elif family == "linear":
            pass  # phi(v) = c*v, the geometric-regime witness
        elif family == "custom":
            if fn is None or dfn is None:
                raise DomainError("custom family needs fn and dfn callables")

        self.v0 = self._splice[0] if self._splice else None
        self.label = label or self._default_label()
        self._ode_lock = threading.Lock()
        self._ode = None          # (OdeSolution, z_end, blown)
        self._validate_shape()

    # -- construction -----------------------------------------------------

    @classmethod
    def constant(cls, c=1.0):
        return cls("constant", c=c)

    @classmethod
    def power(cls, c=1.0, alpha=0.5):
        return cls("power", c=c, alpha=alpha)

    @classmethod
    def logarithmic(cls, c=1.0, alpha=1.0):
        return cls("logarithmic", c=c, alpha=alpha)

    @classmethod
    def subexponential(cls, c=1.0, alpha=1.0, v0=None):
        return cls("subexponential", c=c, alpha=alpha, v0=v0, log_form="log")

    @classmethod
    def log_damped(cls, c, alpha, form="1+log", v0=None):
        """Modulus with tail ``c * v * l(v)^(-alpha)``, ``l`` = log or 1+log.

        The ``max(1, log v)`` variant coincides with ``form='log'`` beyond the
        concavity splice point, which always sits above e.
        """
        form = "log" if form in ("log", "1vlog") else "1+log"
        return cls("subexponential", c=c, alpha=alpha, v0=v0, log_form=form)

    @classmethod
    def linear(cls, slope):
        return cls("linear", c=slope)

    @classmethod
    def custom(cls, fn, dfn, label=None):
        return cls("custom", fn=fn, dfn=dfn, label=label)

    def _default_label(self):
        if self.family == "constant":
            return f"constant(c={self.c:g})"
        if self.family == "power":
            return f"power(c={self.c:g}, alpha={self.alpha:g})"
        if self.family == "logarithmic":
            return f"logarithmic(c={self.c:g}, alpha={self.alpha:g})"
        if self.family == "subexponential":
            ell = "log" if self.log_form == "log" else "1+log"
            return (f"subexponential(c={self.c:g}, alpha={self.alpha:g}, "
                    f"v0={self.v0:g}, {ell})")
        if self.family == "linear":
            return f"linear(slope={self.c:g})"
        return "custom"

    def __repr__(self):
        return f"DriftModulus[{self.label}]"

    def scaled(self, beta):
        """Return the modulus ``beta * phi`` (0 < beta <= 1 keeps validity)."""
        if beta <= 0:
            raise DomainError("scaling factor must be positive")
        if self.family == "custom":
            fn, dfn = self._fn, self._dfn
            return DriftModulus.custom(lambda v: beta * fn(v),
                                       lambda v: beta * dfn(v),
                                       label=f"{beta:g}*{self.label}")
        if self.family == "logarithmic" and beta * self.c > 1.0:
            raise DomainError("scaled logarithmic modulus leaves c in (0, 1]")
        return DriftModulus(self.family, c=beta * self.c, alpha=self.alpha,
                            v0=self.v0, log_form=self.log_form)

    # -- splice helpers ---------------------------------------------------

    def _tail_value(self, v):
        """Family formula without the linear continuation (v >= v0)."""
        c, a = self.c, self.alpha
        if self.family == "logarithmic":
            return c * np.power(1.0 + np.log(v), a)
        ell = np.log(v) if self.log_form == "log" else 1.0 + np.log(v)
        return c * v * np.power(ell, -a)

    def _tail_slope(self, v):
        c, a = self.c, self.alpha
        if self.family == "logarithmic":
            return c * a * np.power(1.0 + np.log(v), a - 1.0) / v
        ell = np.log(v) if self.log_form == "log" else 1.0 + np.log(v)
        return c * (ell - a) * np.power(ell, -a - 1.0)

    def _make_splice(self, v0):
        b = float(self._tail_slope_scalar(v0))
        a = float(self._tail_value_scalar(v0)) - b * v0
        if a + b <= 0:
            raise InvalidPhiError("linear continuation not positive at v=1")
        return (v0, a, b)

    def _tail_value_scalar(self, v0):
        # _tail_value before self.c/alpha wiring is complete is fine: it only
        # reads c, alpha, family, log_form, all already set in __init__
        return self._tail_value(np.asarray(v0, dtype=float))

    def _tail_slope_scalar(self, v0):
        return self._tail_slope(np.asarray(v0, dtype=float))

    # -- evaluation --------------------------------------------------------

    def value(self, v):
        """phi(v), vectorized; maps +inf to the tail limit (possibly +inf)."""
        arr, scalar = _as_array(v)
        if np.any(arr < 1.0 - 1e-12):
            raise DomainError("modulus arguments must satisfy v >= 1")
        arr = np.maximum(arr, 1.0)
        if self.family == "constant":
            out = np.full_like(arr, self.c)
        elif self.family == "power":
            out = self.c * np.power(arr, self.alpha)
        elif self.family == "linear":
            out = self.c * arr
        elif self.family == "custom":
            out = np.asarray(self._fn(arr), dtype=float)
        elif self._splice is None:  # plain logarithmic
            out = self._tail_value(arr)
        else:
            v0, a, b = self._splice
            out = np.where(arr >= v0,
                           self._tail_value(np.maximum(arr, v0)),
                           a + b * np.minimum(arr, v0))
        return float(out) if scalar else out

    __call__ = value

    def slope(self, v):
        """phi'(v), vectorized."""
        arr, scalar = _as_array(v)
        if np.any(arr < 1.0 - 1e-12):
            raise DomainError("modulus arguments must satisfy v >= 1")
        arr = np.maximum(arr, 1.0)
        if self.family == "constant":
            out = np.zeros_like(arr)
        elif self.family == "power":
            out = self.c * self.alpha * np.power(arr, self.alpha - 1.0)
        elif self.family == "linear":
            out = np.full_like(arr, self.c)
        elif self.family == "custom":
            out = np.asarray(self._dfn(arr), dtype=float)
        elif self._splice is None:
            out = self._tail_slope(arr)
        else:
            v0, _a, b = self._splice
            out = np.where(arr >= v0, self._tail_slope(np.maximum(arr, v0)), b)
        return float(out) if scalar else out

    def _validate_shape(self):
        grid = np.logspace(0.0, 12.0, 121)
        vals = self.value(grid)
        slopes = self.slope(grid)
        if np.any(~np.isfinite(vals)) or np.any(vals <= 0.0):
            raise InvalidPhiError(f"{self.label}: phi must be finite positive")
        if np.any(slopes < -1e-12 * np.maximum(1.0, vals)):
            raise InvalidPhiError(f"{self.label}: phi must be nondecreasing")
        # concavity witness: sampled slopes nonincreasing
        tol = 1e-9 * np.maximum(1.0, np.abs(slopes[:-1])) + 1e-15
        if np.any(slopes[1:] > slopes[:-1] + tol):
            raise InvalidPhiError(f"{self.label}: phi' increases on the "
                                  "sampled grid (concavity violated)")

    # -- the H transform ---------------------------------------------------

    def has_closed_h(self):
        return self.family in ("constant", "power", "linear",
                               "subexponential")

    def h(self, v):
        """H(v) = integral_1^v dx/phi(x); 0 at v=1, +inf maps to +inf."""
        arr, scalar = _as_array(v)
        if np.any(arr < 1.0 - 1e-12):
            raise DomainError("H is defined for v >= 1")
        arr = np.maximum(arr, 1.0)
        if self.family == "constant":
            out = (arr - 1.0) / self.c
        elif self.family == "power":
            e = 1.0 - self.alpha
            out = (np.power(arr, e) - 1.0) / (self.c * e)
        elif self.family == "linear":
            out = np.log(arr) / self.c
        elif self.family == "subexponential":
            out = self._h_spliced(arr)
        else:
            out = self._h_quad(arr)
        return float(out) if scalar else out

    def _h_spliced(self, arr):
        v0, a, b = self._splice
        c, al = self.c, self.alpha
        h0 = math.log((a + b * v0) / (a + b)) / b
        ell0 = math.log(v0) if self.log_form == "log" else 1.0 + math.log(v0)
        lin = np.log((a + b * np.minimum(arr, v0)) / (a + b)) / b
        with np.errstate(invalid="ignore"):
            ell = (np.log(np.maximum(arr, v0)) if self.log_form == "log"
                   else 1.0 + np.log(np.maximum(arr, v0)))
            tail = h0 + (np.power(ell, al + 1.0) - ell0 ** (al + 1.0)) / (c * (al + 1.0))
        return np.where(arr >= v0, tail, lin)

    def _h_quad(self, arr):
        # adaptive quadrature of 1/phi on [1, v]; logarithmic + custom path
        flat = np.ravel(arr)
        out = np.empty_like(flat)
        integrand = lambda x: 1.0 / float(self.value(x))
        for i, v in enumerate(flat):
            if not np.isfinite(v):
                out[i] = np.inf
                continue
            if v <= 1.0:
                out[i] = 0.0
                continue
            pts = None
            if self.v0 is not None and 1.0 < self.v0 < v:
                pts = [self.v0]
            val, err = quad(integrand, 1.0, v, epsabs=1e-13, epsrel=1e-12,
                            limit=200, points=pts)
            if err > 1e-8 * (1.0 + abs(val)):
                raise NumericalError(
                    f"quadrature for H({v:g}) did not converge", achieved=err)
            out[i] = val
        return out.reshape(np.shape(arr))

    # -- the inverse transform ----------------------------------------------

    def has_closed_h_inv(self):
        return self.family in ("constant", "power", "linear",
                               "subexponential")

    def h_inv(self, z, route="auto"):
        """H^{-1}(z) for z >= 0; nondecreasing, equals 1 at z=0.

        ``route='auto'`` uses the closed form when the family has one and the
        cached ODE integration of y' = phi(y) otherwise; ``route='oracle'``
        forces the independent quadrature + safeguarded root-finding path.
        """
        arr, scalar = _as_array(z)
        if np.any(arr < -1e-12):
            raise DomainError("H^{-1} is defined for z >= 0")
        arr = np.maximum(arr, 0.0)
        if route == "oracle":
            out = self._h_inv_oracle(arr)
        elif self.has_closed_h_inv():
            out = self._h_inv_closed(arr)
        else:
            out = self._h_inv_ode(arr)
        return float(out) if scalar else out

    def _h_inv_closed(self, arr):
        if self.family == "constant":
            return 1.0 + self.c * arr
        if self.family == "linear":
            with np.errstate(over="ignore"):
                out = np.exp(self.c * arr)
            if np.any(~np.isfinite(out)):
                raise RangeOverflowError(
                    "inverse transform overflowed", largest=V_HUGE)
            return out
        if self.family == "power":
            e = 1.0 - self.alpha
            with np.errstate(over="ignore"):
                out = np.power(1.0 + self.c * e * arr, 1.0 / e)
            if np.any(~np.isfinite(out) & np.isfinite(arr)):
                raise RangeOverflowError(
                    "inverse transform overflowed", largest=V_HUGE)
            return out
        # spliced subexponential
        v0, a, b = self._splice
        c, al = self.c, self.alpha
        h0 = math.log((a + b * v0) / (a + b)) / b
        ell0 = math.log(v0) if self.log_form == "log" else 1.0 + math.log(v0)
        with np.errstate(over="ignore"):
            lin = ((a + b) * np.exp(b * np.minimum(arr, h0)) - a) / b
            ell = np.power(ell0 ** (al + 1.0)
                           + c * (al + 1.0) * (np.maximum(arr, h0) - h0),
                           1.0 / (al + 1.0))
            tail = np.exp(ell if self.log_form == "log" else ell - 1.0)
        out = np.where(arr >= h0, tail, lin)
        if np.any(~np.isfinite(out) & np.isfinite(arr)):
            raise RangeOverflowError("inverse transform overflowed",
                                     largest=V_HUGE)
        return out

    def _ode_extend(self, z_need):
        with self._ode_lock:
            if self._ode is not None:
                sol, z_end, blown = self._ode
                if z_need <= z_end or blown:
                    return
            span = max(1.25 * z_need + 1.0, 4.0)

            def rhs(z, y):
                return (float(self.value(min(y[0], V_HUGE))),)

            def blow(z, y):
                return y[0] - V_HUGE
            blow.terminal = True

            res = solve_ivp(rhs, (0.0, span), (1.0,), method="DOP853",
                            rtol=1e-12, atol=1e-12, dense_output=True,
                            events=blow)
            if not res.success and not res.t_events[0].size:
                raise NumericalError(f"ODE solve for H^-1 failed: {res.message}")
            self._ode = (res.sol, res.t[-1], bool(res.t_events[0].size))

    def _h_inv_ode(self, arr):
        finite = arr[np.isfinite(arr)]
        z_need = float(finite.max()) if finite.size else 0.0
        self._ode_extend(z_need)
        sol, z_end, blown = self._ode
        if z_need > z_end + 1e-9:
            raise RangeOverflowError(
                f"inverse transform overflowed before z={z_need:g}",
                largest=float(sol(z_end)[0]))
        flat = np.ravel(arr)
        out = np.empty_like(flat)
        fin = np.isfinite(flat)
        out[~fin] = np.inf
        if fin.any():
            out[fin] = np.maximum(sol(np.minimum(flat[fin], z_end))[0], 1.0)
        return out.reshape(np.shape(arr))

    def _h_inv_oracle(self, arr):
        flat = np.ravel(arr)
        out = np.empty_like(flat)
        for i, z in enumerate(flat):
            if not np.isfinite(z):
                out[i] = np.inf
                continue
            if z <= 0.0:
                out[i] = 1.0
                continue
            hi = 2.0
            while float(self.h(hi)) < z:
                hi *= 8.0
                if hi > V_HUGE:
                    raise RangeOverflowError(
                        f"bracket expansion overflowed at z={z:g}",
                        largest=hi / 8.0)
            out[i] = brentq(lambda v: float(self.h(v)) - z, 1.0, hi,
                            xtol=1e-12, rtol=8.9e-16, maxiter=200)
        return out.reshape(np.shape(arr))

    # -- serialization -------------------------------------------------------

    def to_config(self):
        if self.family == "custom":
            raise DomainError("custom moduli do not serialize")
        rec = {"family": self.family, "c": self.c}
        if self.family in ("power", "logarithmic", "subexponential"):
            rec["alpha"] = self.alpha
        if self.family == "subexponential":
            rec["v0"] = self.v0
            if self.log_form != "log":
                rec["form"] = self.log_form
        return rec


# -- module-level operations -------------------------------------------------

def h_phi(phi, v):
    """Running integral of 1/phi from 1 to v."""
    return phi.h(v)


def h_phi_inv(phi, z, route="auto"):
    """Inverse of :func:`h_phi`; see :meth:`DriftModulus.h_inv`."""
    return phi.h_inv(z, route=route)


def r_phi(phi, z, route="auto"):
    """Induced rate function r(z) = phi(H^{-1}(z)); r(0) = phi(1)."""
    return phi.value(phi.h_inv(z, route=route))


def h_k(phi, k, v):
    """Shifted transform H_k(v) = H^{-1}(H(v)+k) - H^{-1}(k).

    ``k = 0`` returns v - 1 exactly (analytic identity, any phi).  Maps
    +inf to +inf.
    """
    if k < 0 or int(k) != k:
        raise DomainError("k must be a nonnegative integer")
    arr, scalar = _as_array(v)
    if np.any(arr < 1.0 - 1e-12):
        raise DomainError("H_k is defined for v >= 1")
    if k == 0:
        out = np.maximum(arr, 1.0) - 1.0
        return float(out) if scalar else out
    hv = phi.h(arr)
    out = phi.h_inv(hv + float(k)) - float(phi.h_inv(float(k)))
    return float(out) if scalar else out


class KeyInequalityReport:
    """Result of sweeping the concavity inequality behind the drift sequence."""

    def __init__(self, max_violation, worst_v, worst_k, checked, skipped):
        self.max_violation = max_violation
        self.worst_v = worst_v
        self.worst_k = worst_k
        self.checked = checked
        self.skipped = skipped

    @property
    def passed(self):
        return self.max_violation <= INEQ_TOL

    def __repr__(self):
        return (f"KeyInequalityReport(max_violation={self.max_violation:.3e}, "
                f"worst=(v={self.worst_v:g}, k={self.worst_k}), "
                f"checked={self.checked}, skipped={self.skipped})")


def key_inequality_check(phi, v_grid, k_max):
    """Max positive part of  H_{k+1}(v) - r(H(v)+k+1) - H_k(v) + r(k).

    A valid concave modulus keeps this nonpositive for every v >= 1 and
    integer k >= 0; the sweep reports the worst sampled excess.  Entries
    whose inverse transform overflows are skipped and counted.
    """
    if k_max < 1:
        raise DomainError("k_max must be >= 1")
    v = np.asarray(v_grid, dtype=float)
    if np.any(v < 1.0 - 1e-12):
        raise DomainError("grid must lie in [1, inf)")
    v = np.maximum(v, 1.0)
    hv = phi.h(v)
    ks = np.arange(0.0, k_max + 2.0)
    base = np.asarray(phi.h_inv(ks), dtype=float)
    rk = phi.value(base)
    try:
        a = np.asarray(phi.h_inv(hv[:, None] + ks[None, :]), dtype=float)
    except RangeOverflowError:
        # fall back to per-column evaluation, keeping what fits
        a = np.full((v.size, ks.size), np.inf)
        for j, kj in enumerate(ks):
            try:
                a[:, j] = phi.h_inv(hv + kj)
            except RangeOverflowError:
                break
    hk = a - base[None, :]
    hk[:, 0] = v - 1.0
    phia = np.where(np.isfinite(a), phi.value(np.where(np.isfinite(a), a, 1.0)),
                    np.inf)
    expr = hk[:, 1:] - phia[:, 1:] - hk[:, :-1] + rk[None, :-1]
    finite = np.isfinite(expr)
    skipped = int(expr.size - finite.count_nonzero()
                  if hasattr(finite, "count_nonzero") else
                  expr.size - np.count_nonzero(finite))
    if not finite.any():
        raise RangeOverflowError("every grid entry overflowed", largest=None)
    masked = np.where(finite, expr, -np.inf)
    idx = np.unravel_index(np.argmax(masked), masked.shape)
    worst = float(masked[idx])
    return KeyInequalityReport(max_violation=max(worst, 0.0),
                               worst_v=float(v[idx[0]]),
                               worst_k=int(idx[1]),
                               checked=int(np.count_nonzero(finite)),
                               skipped=skipped)
