"""Exact computations on finite row-stochastic kernels.

Stationary distributions, f-norms, total-variation decay curves and
taboo-kernel return-time quantities; the oracle substrate for every claim
checkable at desk scale.  Countable chains enter truncated (see
:mod:`subergo.models.brt` for the redirect convention).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve

from .errors import (DomainError, NumericalError, PrecisionError,
                     StructureError)

ROW_SUM_TOL = 1e-12
#: switch to sparse mat-vec machinery above this many states
DENSE_LIMIT = 5000


class FiniteKernel:
    """A labeled row-stochastic matrix; immutable after construction."""

    def __init__(self, rows, labels=None, atol=ROW_SUM_TOL):
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] != rows.shape[1]:
            raise DomainError("kernel must be a square matrix")
        if np.any(rows < 0.0):
            raise DomainError("kernel entries must be nonnegative")
        sums = rows.sum(axis=1)
        bad = np.abs(sums - 1.0) > atol
        if np.any(bad):
            i = int(np.argmax(np.abs(sums - 1.0)))
            raise DomainError(
                f"row {i} sums to {sums[i]:.17g}, not 1 within {atol:g}")
        self.rows = rows
        self.rows.setflags(write=False)
        self.labels = list(labels) if labels is not None else list(range(len(rows)))
        self._csr = None

    @property
    def n(self):
        return self.rows.shape[0]

    def csr(self):
        if self._csr is None:
            self._csr = sp.csr_matrix(self.rows)
        return self._csr

    def index_of(self, label):
        try:
            return self.labels.index(label)
        except ValueError:
            raise DomainError(f"unknown state label {label!r}") from None

    def __repr__(self):
        return f"FiniteKernel(n={self.n})"


@dataclass
class ChainStructure:
    irreducible: bool
    period: int
    n_components: int
    closed_classes: list = field(default_factory=list)


def check_irreducible_aperiodic(P: FiniteKernel):
    """Strong connectivity plus the gcd of cycle lengths through state 0."""
    adj = sp.csr_matrix(P.rows > 0.0)
    n_comp, labels = connected_components(adj, directed=True,
                                          connection="strong")
    closed = []
    if n_comp > 1:
        for comp in range(n_comp):
            members = np.flatnonzero(labels == comp)
            outside = np.setdiff1d(np.arange(P.n), members)
            if not P.rows[np.ix_(members, outside)].any():
                closed.append([P.labels[i] for i in members[:8]])
        return ChainStructure(False, 0, n_comp, closed)
    # BFS levels from state 0; period = gcd over edges of level[u]+1-level[v]
    level = np.full(P.n, -1, dtype=int)
    level[0] = 0
    frontier = [0]
    order = []
    while frontier:
        nxt = []
        for u in frontier:
            order.append(u)
            for v in adj.indices[adj.indptr[u]:adj.indptr[u + 1]]:
                if level[v] < 0:
                    level[v] = level[u] + 1
                    nxt.append(int(v))
        frontier = nxt
    g = 0
    rows, cols = adj.nonzero()
    for u, v in zip(rows, cols):
        g = math.gcd(g, level[u] + 1 - level[v])
    return ChainStructure(True, abs(g), 1)


def stationary(P: FiniteKernel, tol=ROW_SUM_TOL):
    """The unique invariant distribution of an irreducible kernel.

    Solves the balance equations with the normalization row substituted,
    polishes with power iterations when needed, and insists on a 1-norm
    residual below ``tol``.
    """
    struct = check_irreducible_aperiodic(P)
    if not struct.irreducible:
        raise StructureError(
            f"kernel is reducible ({struct.n_components} strong components); "
            f"closed classes: {struct.closed_classes}",
            detail=struct)
    n = P.n
    a = np.eye(n) - P.rows.T
    a[0, :] = 1.0
    b = np.zeros(n)
    b[0] = 1.0
    pi = np.linalg.solve(a, b)
    pi = np.maximum(pi, 0.0)
    pi /= pi.sum()
    for _ in range(50):
        residual = float(np.abs(pi @ P.rows - pi).sum())
        if residual <= tol:
            return pi
        pi = pi @ P.rows
        pi /= pi.sum()
    raise NumericalError(
        f"stationary residual {residual:.3e} above {tol:g}", achieved=residual)


def _f_values(f, P_or_n):
    n = P_or_n.n if isinstance(P_or_n, FiniteKernel) else int(P_or_n)
    if f is None:
        return np.ones(n)
    if callable(f):
        vals = np.asarray([f(i) for i in range(n)], dtype=float)
    else:
        vals = np.asarray(f, dtype=float)
    if vals.shape != (n,):
        raise DomainError("f must give one value per state")
    return vals


def f_norm(mu, f=None):
    """sup over |g| <= f of |mu(g)| = sum_x f(x)|mu(x)|; needs f >= 1."""
    mu = np.asarray(mu, dtype=float)
    fv = _f_values(f, mu.size)
    if np.any(fv < 1.0 - 1e-15):
        raise DomainError("weight function must satisfy f >= 1")
    return float(np.abs(mu) @ fv)


def tv_curve(P: FiniteKernel, x0, f=None, n_max=1000):
    """d(n) = || P^n(x0, .) - pi ||_f for n = 0..n_max.

    No monotonicity is asserted; only the d(n) -> 0 trend is meaningful.
    Raises on periodic or reducible kernels.
    """
    struct = check_irreducible_aperiodic(P)
    if not struct.irreducible:
        raise StructureError("tv_curve needs an irreducible kernel",
                             detail=struct)
    if struct.period != 1:
        raise StructureError(f"tv_curve needs an aperiodic kernel "
                             f"(period {struct.period})", detail=struct)
    pi = stationary(P)
    fv = _f_values(f, P)
    if np.any(fv < 1.0 - 1e-15):
        raise DomainError("weight function must satisfy f >= 1")
    x0 = P.index_of(x0) if x0 in P.labels else int(x0)
    row = np.zeros(P.n)
    row[x0] = 1.0
    mat = P.csr() if P.n > 64 else P.rows
    d = np.empty(n_max + 1)
    for k in range(n_max + 1):
        d[k] = np.abs(row - pi) @ fv
        if k < n_max:
            row = row @ mat
    return d


class TabooKernel:
    """The base kernel with transitions into C killed (substochastic)."""

    def __init__(self, base: FiniteKernel, c_states):
        self.base = base
        mask = np.zeros(base.n, dtype=bool)
        idx = [base.index_of(s) if s in base.labels else int(s)
               for s in c_states]
        if not idx:
            raise DomainError("taboo set must be nonempty")
        mask[idx] = True
        self.c_mask = mask
        rows = base.rows.copy()
        rows[:, mask] = 0.0
        self.matrix = sp.csr_matrix(rows)

    def apply(self, vec):
        return self.matrix @ vec

    def survival(self, n):
        """Vector of P_x(tau_C > n) over all states."""
        w = np.ones(self.base.n)
        for _ in range(int(n)):
            w = self.matrix @ w
        return w

    def contraction(self, m=32):
        """(sup_x P_x(tau_C > m))^(1/m), a geometric decay certificate."""
        q = float(self.survival(m).max())
        return q ** (1.0 / m) if q > 0 else 0.0


def taboo_tail(P: FiniteKernel, c_states, x, n):
    """P_x(tau_C > n); equals 1 at n = 0 since tau_C >= 1."""
    if n < 0:
        raise DomainError("n must be >= 0")
    taboo = TabooKernel(P, c_states)
    xi = P.index_of(x) if x in P.labels else int(x)
    return float(taboo.survival(n)[xi])


def _rate_values(r, horizon):
    if callable(r):
        return np.asarray([float(r(k)) for k in range(horizon + 1)])
    vals = np.asarray(r, dtype=float)
    if vals.size < horizon + 1:
        raise DomainError("rate table shorter than the horizon")
    return vals[:horizon + 1]


@dataclass
class MomentSeries:
    """A truncated modulated-moment series with its tail control."""

    partial: float
    tail_bound: float
    horizon: int
    converged: bool
    diverging: bool
    increment_slope: float | None = None

    @property
    def value(self):
        """+inf when the series diverges, else the partial sum."""
        return math.inf if self.diverging else self.partial

    @property
    def upper(self):
        return self.partial + self.tail_bound


def _series_profile(P, c_states, r, f, horizon, want_state=None):
    """Accumulate sum_k r(k) (T^k f)(x); returns per-state sums and controls.

    (T^0 f)(x) = f(x); for k >= 1 the taboo power gives the pre-return
    occupation of f at time k.  The loop stops early once the survival mass
    hits exact zero (forced absorption into C).
    """
    taboo = TabooKernel(P, c_states)
    fv = _f_values(f, P)
    rv = _rate_values(r, horizon)
    if np.any(rv <= 0.0) or np.any(np.diff(rv) < -1e-9 * np.maximum(1.0, rv[:-1])):
        raise DomainError("modulating rate must be positive nondecreasing")
    w = fv.copy()
    total = rv[0] * w
    increments = [] if want_state is not None else None
    if want_state is not None:
        increments.append(rv[0] * w[want_state])
    used = horizon
    for k in range(1, horizon + 1):
        w = taboo.apply(w)
        term = rv[k] * w
        total += term
        if want_state is not None:
            increments.append(term[want_state])
        if not w.any():
            used = k
            break
    # geometric tail control: with q = sup_x P_x(tau_C > m) and g the
    # (nonincreasing, by log-concavity) envelope ratio of r,
    #   tail <= max(w_N) * r(N) * m g^m / (1 - q g^m)   when q g^m < 1
    tail = 0.0
    wmax = float(np.max(w))
    if wmax > 0.0:
        m = 32
        q = float(taboo.survival(m).max())
        growth = rv[used] / rv[used - 1] if used >= 1 else 2.0
        gm = growth ** m
        if q * gm < 1.0:
            tail = wmax * rv[used] * m * gm / (1.0 - q * gm)
        else:
            tail = math.inf
    return total, tail, used, increments


def _increment_trend(increments):
    """Log-log slope of the series increments over the last decade."""
    inc = np.asarray(increments, dtype=float)
    n = inc.size - 1
    if n < 30:
        return None
    lo = max(2, int(n / 10))
    ks = np.arange(lo, n + 1)
    vals = inc[lo:n + 1]
    pos = vals > 0.0
    if pos.sum() < 8:
        return None
    return float(np.polyfit(np.log(ks[pos]), np.log(vals[pos]), 1)[0])


def modulated_moment(P: FiniteKernel, c_states, x, r, f=None, horizon=None,
                     tail_rtol=1e-10, strict=True):
    """E_x[sum_{k < tau_C} r(k) f(Phi_k)] by taboo-power series.

    Returns a :class:`MomentSeries`.  Divergence (a last-decade increment
    trend at or above slope -1, or an unbounded geometric tail) is reported
    as such, with the partial sum preserved; a convergent series whose tail
    bound misses ``tail_rtol`` raises :class:`PrecisionError` when
    ``strict``.
    """
    if horizon is None:
        horizon = max(1000, 2 * P.n + 2)
    xi = P.index_of(x) if x in P.labels else int(x)
    total, tail, used, inc = _series_profile(P, c_states, r, f, horizon,
                                             want_state=xi)
    slope = _increment_trend(inc)
    diverging = (tail == math.inf) or (slope is not None and slope >= -1.0)
    partial = float(total[xi])
    converged = (not diverging) and tail <= tail_rtol * max(1.0, partial)
    if strict and not converged and not diverging:
        raise PrecisionError(
            f"horizon {used} leaves tail bound {tail:.3e} above "
            f"{tail_rtol:g} * value", achieved=tail)
    return MomentSeries(partial=partial, tail_bound=float(tail), horizon=used,
                        converged=converged, diverging=diverging,
                        increment_slope=slope)


def modulated_moment_profile(P: FiniteKernel, c_states, r, f=None,
                             horizon=None, tail_rtol=1e-10, strict=True):
    """Vector of modulated moments over every start state plus tail control."""
    if horizon is None:
        horizon = max(1000, 2 * P.n + 2)
    total, tail, used, _ = _series_profile(P, c_states, r, f, horizon)
    diverging = tail == math.inf
    converged = (not diverging) and tail <= tail_rtol * max(1.0, float(total.max()))
    if strict and not converged and not diverging:
        raise PrecisionError(
            f"horizon {used} leaves tail bound {tail:.3e} above target",
            achieved=tail)
    return total, MomentSeries(partial=float(total.max()),
                               tail_bound=float(tail), horizon=used,
                               converged=converged, diverging=diverging)


def first_passage_times(P: FiniteKernel, c_states):
    """E_x[tau_C] for every x, from the linear solve (I - T) w = 1."""
    taboo = TabooKernel(P, c_states)
    n = P.n
    a = sp.identity(n, format="csr") - taboo.matrix
    w = spsolve(a.tocsc(), np.ones(n))
    return np.asarray(w, dtype=float)


def expected_return_time(P: FiniteKernel, x):
    """E_x[tau_x], the mean return time to a single state."""
    xi = P.index_of(x) if x in P.labels else int(x)
    return float(first_passage_times(P, [xi])[xi])


# -- kernel file format --------------------------------------------------------

def save_kernel(P: FiniteKernel, path, sparse=None):
    """Write 'states n' header plus 'i j p' triples, or a dense CSV."""
    if sparse is None:
        sparse = P.n > 64
    with open(path, "w") as fh:
        if sparse:
            fh.write(f"states {P.n}\n")
            coo = sp.coo_matrix(P.rows)
            for i, j, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{i} {j} {v:.17g}\n")
        else:
            for row in P.rows:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def load_kernel(path):
    """Read either format written by :func:`save_kernel`."""
    with open(path) as fh:
        first = fh.readline().strip()
        if first.startswith("states"):
            n = int(first.split()[1])
            rows = np.zeros((n, n))
            for line in fh:
                if not line.strip():
                    continue
                i, j, v = line.split()
                rows[int(i), int(j)] = float(v)
            return FiniteKernel(rows)
    rows = np.loadtxt(path, delimiter=",", dtype=float)
    return FiniteKernel(np.atleast_2d(rows))
