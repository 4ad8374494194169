"""Power-series solutions of the input compatibility system.

The coefficients ``a(n)``, ``n`` a multi-index, solve the difference system

    sigma_k a(n + e_j) - sigma_j a(n + e_k) + i gamma_jk a(n) = 0.

For a normalized pencil this is solved in closed form by

    a(n) = (alpha_2 d_1 + i beta_2)^{n_2} ... (alpha_d d_1 + i beta_d)^{n_d} b(n_1)

where ``d_1`` shifts the axis sequence ``b`` by one.  The table ``a`` is the
array of partial derivatives of the analytic solution at the origin, so the
solution itself is ``u(t) = sum_n a(n) t^n / n!``.
"""

from dataclasses import dataclass
import itertools
import math

import numpy as np

from ._linalg import opnorm
from .exceptions import DimensionMismatch, InsufficientInitialData, OutsideDomain
from .vessel import NormalizedPencil, Vessel


def shell(d, total):
    """Multi-indices in N^d with ``|n| = total`` (stars and bars)."""
    out = []
    for cut in itertools.combinations(range(total + d - 1), d - 1):
        parts, prev = [], -1
        for c in cut:
            parts.append(c - prev - 1)
            prev = c
        parts.append(total + d - 2 - prev)
        out.append(tuple(parts))
    return out


def multi_indices(d, degree):
    """All ``n`` in N^d with ``|n| <= degree``, ordered by total degree."""
    return [n for total in range(degree + 1) for n in shell(d, total)]


@dataclass(frozen=True)
class AnalyticInitialData:
    """Axis data ``b(0..K-1)`` in C^m with an optional bound ``|b(k)| <= M / r^k``
    valid for every ``r < R``."""

    b: np.ndarray
    R: float = None
    M: float = None

    def __post_init__(self):
        b = np.array(self.b, dtype=complex)
        if b.ndim == 1:
            b = b[:, None]
        if b.ndim != 2 or not np.all(np.isfinite(b)):
            raise DimensionMismatch("b must be a finite K x m array")
        b.setflags(write=False)
        object.__setattr__(self, "b", b)

    @property
    def length(self):
        return self.b.shape[0]

    @property
    def dim_e(self):
        return self.b.shape[1]

    @classmethod
    def geometric(cls, xi, R, length):
        """``b(k) = xi / R^k``; the bound holds with ``M = |xi|``."""
        xi = np.atleast_1d(np.asarray(xi, dtype=complex))
        b = np.array([xi / R ** k for k in range(length)])
        return cls(b, R=R, M=float(np.linalg.norm(xi)))

    def bound_holds(self, r):
        if self.M is None:
            return True
        norms = np.linalg.norm(self.b, axis=1)
        return bool(np.all(norms <= self.M / r ** np.arange(self.length) *
                           (1 + 1e-12)))


@dataclass(frozen=True)
class PowerSeriesSolution:
    """Dense coefficient table ``{n: a(n)}`` for ``|n| <= D``."""

    d: int
    degree: int
    table: dict

    @property
    def dim_e(self):
        return next(iter(self.table.values())).shape[0]

    def __getitem__(self, n):
        return self.table[tuple(n)]

    def max_norm(self):
        return max(float(np.linalg.norm(a)) for a in self.table.values())

    def to_json(self):
        return {",".join(str(i) for i in n): [[float(z.real), float(z.imag)]
                                              for z in a]
                for n, a in self.table.items()}


def _apply(alpha, beta, seq):
    """``(alpha d_1 + i beta)`` on a sequence; the result is one entry shorter."""
    return seq[1:] @ alpha.T + 1j * (seq[:-1] @ beta.T)


def solve_discrete(pencil, init, degree):
    """Coefficient table of the compatibility recurrence up to total degree ``D``."""
    d, m = pencil.d, pencil.dim_e
    if init.dim_e != m:
        raise DimensionMismatch(f"initial data lives in C^{init.dim_e}, pencil in C^{m}")
    if init.length < degree + 1:
        raise InsufficientInitialData(
            f"degree {degree} needs {degree + 1} axis coefficients, "
            f"got {init.length}")
    b = np.array(init.b[:degree + 1])
    seqs = {(0,) * (d - 1): b}
    for tail in multi_indices(d - 1, degree)[1:] if d > 1 else []:
        q = next(i for i, v in enumerate(tail) if v)
        prev = list(tail)
        prev[q] -= 1
        seqs[tail] = _apply(pencil.alpha[q + 1], pencil.beta[q + 1],
                            seqs[tuple(prev)])
    table = {}
    for n in multi_indices(d, degree):
        table[n] = seqs[n[1:]][n[0]]
    return PowerSeriesSolution(d, degree, table)


def _coefficients(v):
    """``(sigma, gamma)`` from a vessel, or from a pencil via the additional
    condition (``sigma_1 = I``)."""
    if isinstance(v, Vessel):
        return v.sigma, v.gamma
    if isinstance(v, NormalizedPencil):
        d, m = v.d, v.dim_e
        gamma = np.zeros((d, d, m, m), dtype=complex)
        for j, k in itertools.combinations(range(d), 2):
            if j == 0:
                gamma[0, k] = v.beta[k]
            else:
                gamma[j, k] = v.alpha[j] @ v.beta[k] - v.alpha[k] @ v.beta[j]
            gamma[k, j] = -gamma[j, k]
        return v.alpha, gamma
    raise TypeError("expected a Vessel or NormalizedPencil")


def check_discrete_compat(sol, v):
    """Largest difference-equation residual, relative to the largest coefficient."""
    sigma, gamma = _coefficients(v)
    if sigma.shape[0] != sol.d or sigma.shape[1] != sol.dim_e:
        raise DimensionMismatch("solution and coefficients disagree in shape")
    scale = sol.max_norm() or 1.0
    worst = 0.0
    eye = np.eye(sol.d, dtype=int)
    for n in multi_indices(sol.d, sol.degree - 1):
        n = np.array(n)
        for j, k in itertools.combinations(range(sol.d), 2):
            r = (sigma[k] @ sol[n + eye[j]] - sigma[j] @ sol[n + eye[k]] +
                 1j * gamma[j, k] @ sol[n])
            worst = max(worst, float(np.linalg.norm(r)))
    return worst / scale


def min_compat_residual(v, axis, level=2):
    """Smallest achievable difference-equation residual with fixed axis data.

    The values ``a(k e_1)``, ``k <= level``, are taken from ``axis``; every
    other ``a(n)`` with ``|n| <= level`` is free.  Returns the 2-norm of the
    least-squares residual of all equations that only involve those
    coefficients.
    """
    sigma, gamma = _coefficients(v)
    d, m = sigma.shape[0], sigma.shape[1]
    axis = np.asarray(axis, dtype=complex).reshape(level + 1, m)
    idx = multi_indices(d, level)
    free = [n for n in idx if any(n[1:])]
    pos = {n: i for i, n in enumerate(free)}
    rows, rhs = [], []
    eye = np.eye(d, dtype=int)
    for n in multi_indices(d, level - 1):
        for j, k in itertools.combinations(range(d), 2):
            block = np.zeros((m, m * len(free)), dtype=complex)
            const = np.zeros(m, dtype=complex)
            for coef, nn in ((sigma[k], tuple(np.array(n) + eye[j])),
                             (-sigma[j], tuple(np.array(n) + eye[k])),
                             (1j * gamma[j, k], tuple(n))):
                if nn in pos:
                    block[:, m * pos[nn]:m * (pos[nn] + 1)] += coef
                else:
                    const += coef @ axis[nn[0]]
            rows.append(block)
            rhs.append(-const)
    M = np.concatenate(rows)
    y = np.concatenate(rhs)
    x, *_ = np.linalg.lstsq(M, y, rcond=1e-10)
    return float(np.linalg.norm(M @ x - y))


def pencil_constant(pencil):
    """``C = max_{j >= 2} max(|alpha_j|, |beta_j|)`` in operator 2-norm."""
    vals = [max(opnorm(pencil.alpha[j]), opnorm(pencil.beta[j]))
            for j in range(1, pencil.d)]
    return max(vals) if vals else 0.0


def analytic_polyradius(R, pencil):
    """Polyradius ``(R, R/(C(R+1)), ...)`` of guaranteed convergence."""
    if R <= 0:
        raise ValueError("R must be positive")
    C = pencil_constant(pencil)
    rest = float("inf") if C < 1e-14 else R / (C * (R + 1))
    return (float(R),) + (rest,) * (pencil.d - 1)


def growth_bound(n, C, M, r):
    """``C^p M r^{-n_1} (1 + 1/r)^p`` with ``p = |n| - n_1``."""
    p = sum(n) - n[0]
    return C ** p * M * r ** (-n[0]) * (1 + 1 / r) ** p


def evaluate_series(sol, t, pencil=None, init=None, safety=0.5):
    """Truncated sum ``sum_{|n| <= D} a(n) t^n / n!`` and a tail estimate.

    When ``pencil`` and an ``init`` carrying ``R, M`` are given, ``t`` must lie
    in the polyradius box scaled by ``safety`` and the tail estimate uses the
    coefficient growth bound; otherwise the size of the last shell is
    reported.
    """
    t = np.asarray(t, dtype=float)
    if t.shape != (sol.d,):
        raise DimensionMismatch(f"t must have length {sol.d}")
    certified = pencil is not None and init is not None and init.R is not None
    if certified:
        box = analytic_polyradius(init.R, pencil)
        if np.any(np.abs(t) > safety * np.asarray(box)):
            raise OutsideDomain(f"|t| exceeds {safety} x polyradius {box}")
    total = np.zeros(sol.dim_e, dtype=complex)
    last_shell = 0.0
    for n, a in sol.table.items():
        w = 1.0
        for tj, nj in zip(t, n):
            w *= tj ** nj / math.factorial(nj)
        total += w * a
        if sum(n) == sol.degree:
            last_shell += abs(w) * float(np.linalg.norm(a))
    if certified:
        C = pencil_constant(pencil)
        r = 0.75 * init.R
        M = init.M if init.M is not None else 1.0
        tail = 0.0
        for extra in range(sol.degree + 1, sol.degree + 40):
            tail += sum(growth_bound(n, C, M, r) *
                        np.prod([abs(tj) ** nj / math.factorial(nj)
                                 for tj, nj in zip(t, n)])
                        for n in shell(sol.d, extra))
        return total, float(tail)
    return total, last_shell
