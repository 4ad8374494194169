"""Conservative input/state/output system along lines.

Along the line ``s -> xi s + eta`` the state obeys

    i dx/ds + (xi . A) x = Phi^* sigma(xi) u,     y = u - i Phi x,

so ``x(s + h) = e^{i h T} x(s) - i int_s^{s+h} e^{i (s + h - w) T} Phi^* sigma(xi) u(w) dw``
with ``T = xi . A``.  Trajectories are sampled on a :class:`GridSpec` whose
node ``N/2`` is ``s = 0``.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from ._linalg import dagger, expm
from .exceptions import DimensionMismatch
from .transport import GridSpec, SampledSignal
from .vessel import adjoint_vessel

METHODS = ("trapezoid", "exp4")


@dataclass(frozen=True)
class LineTrajectory:
    """Samples of ``(u, x, y)`` on the line ``xi s + eta``.

    ``u_limits`` and ``y_limits`` hold the one-sided values ``(f(0-), f(0+))``
    when the signal jumps at ``s = 0``; the stored node value is then their
    average.
    """

    direction: np.ndarray
    offset: np.ndarray
    grid: GridSpec
    u: SampledSignal
    y: SampledSignal
    x: np.ndarray
    u_limits: tuple = None
    y_limits: tuple = None

    @property
    def s(self):
        return self.grid.nodes

    def state_at_origin(self):
        return self.x[self.grid.zero_index]

    def to_json(self):
        def cplx(a):
            return [[[float(z.real), float(z.imag)] for z in row] for row in a]
        return {"direction": [float(v) for v in self.direction],
                "offset": [float(v) for v in self.offset],
                "grid": self.grid.to_json(),
                "u": cplx(self.u.values), "x": cplx(self.x),
                "y": cplx(self.y.values)}


@dataclass(frozen=True)
class BoundaryTriple:
    """``(y_past, h, u_future)``: past output, initial state, future input.

    ``y_past`` holds the ``N/2 + 1`` samples at nodes ``t <= 0`` (the last is
    the limit ``y(0-)``); ``u_future`` holds the ``N/2`` samples at ``t >= 0``
    (the first is ``u(0+)``).  The split node carries half weight in norms.
    """

    grid: GridSpec
    y_past: np.ndarray
    h: np.ndarray
    u_future: np.ndarray

    def __post_init__(self):
        half = self.grid.zero_index
        y = np.array(self.y_past, dtype=complex)
        u = np.array(self.u_future, dtype=complex)
        h = np.array(self.h, dtype=complex).reshape(-1)
        if y.ndim != 2 or u.ndim != 2 or y.shape[0] != half + 1 or \
                u.shape[0] != self.grid.N - half or y.shape[1] != u.shape[1]:
            raise DimensionMismatch(
                f"expected y_past ({half + 1}, m) and u_future "
                f"({self.grid.N - half}, m), got {y.shape} and {u.shape}")
        for a in (y, u, h):
            if not np.all(np.isfinite(a)):
                raise ValueError("boundary triple has non-finite entries")
            a.setflags(write=False)
        object.__setattr__(self, "y_past", y)
        object.__setattr__(self, "u_future", u)
        object.__setattr__(self, "h", h)

    @classmethod
    def zeros(cls, grid, m, n):
        half = grid.zero_index
        return cls(grid, np.zeros((half + 1, m)), np.zeros(n),
                   np.zeros((grid.N - half, m)))

    @classmethod
    def from_functions(cls, grid, y_func, h, u_func, m):
        t = grid.nodes
        half = grid.zero_index
        y = np.array([y_func(s) for s in t[:half + 1]]).reshape(half + 1, m)
        u = np.array([u_func(s) for s in t[half:]]).reshape(grid.N - half, m)
        return cls(grid, y, h, u)

    @property
    def dim_e(self):
        return self.u_future.shape[1]

    @property
    def dim_h(self):
        return self.h.shape[0]

    def past_energy(self):
        e = np.sum(np.abs(self.y_past) ** 2, axis=1)
        return self.grid.step * (float(np.sum(e[:-1])) + 0.5 * e[-1])

    def future_energy(self):
        e = np.sum(np.abs(self.u_future) ** 2, axis=1)
        return self.grid.step * (float(np.sum(e[1:])) + 0.5 * e[0])

    def norm2(self):
        return float(np.vdot(self.h, self.h).real) + self.past_energy() + \
            self.future_energy()

    def norm(self):
        return math.sqrt(self.norm2())

    def _combine(self, other, a, b):
        if other.grid != self.grid:
            raise DimensionMismatch("triples live on different grids")
        return BoundaryTriple(self.grid, a * self.y_past + b * other.y_past,
                              a * self.h + b * other.h,
                              a * self.u_future + b * other.u_future)

    def __add__(self, other):
        return self._combine(other, 1.0, 1.0)

    def __sub__(self, other):
        return self._combine(other, 1.0, -1.0)

    def scale(self, c):
        return BoundaryTriple(self.grid, c * self.y_past, c * self.h,
                              c * self.u_future)


# ---------------------------------------------------------------- stepping

def _phi_functions(K, order):
    """``e^K, phi_1(K), ..., phi_order(K)`` from one block exponential."""
    n = K.shape[0]
    size = n * (order + 1)
    big = np.zeros((size, size), dtype=complex)
    big[:n, :n] = K
    for p in range(order):
        big[n * p:n * (p + 1), n * (p + 1):n * (p + 2)] += np.eye(n)
    E = expm(big)
    return [E[:n, n * p:n * (p + 1)] for p in range(order + 1)]


_STENCILS = {"mid": (-1, 0, 1, 2), "start": (0, 1, 2, 3), "end": (-2, -1, 0, 1)}


def _exp4_weights(K, dt):
    """Weights of ``int_0^dt e^{(dt - r) K/dt} g(r) dr`` for cubic interpolation
    of ``g`` on each stencil."""
    phis = _phi_functions(K, 4)
    out = {}
    for name, nodes in _STENCILS.items():
        V = np.vander(np.array(nodes, dtype=float), 4, increasing=True)
        C = np.linalg.inv(V)
        out[name] = [dt * sum(C[p, j] * math.factorial(p) * phis[p + 1]
                              for p in range(4)) for j in range(4)]
    return phis[0], out


def _march(T, G, x0, dt, sign, method):
    """March ``x_{k+1} = e^{i dt T} x_k + sign * int e^{i (dt - r) T} g``.

    ``G`` holds the forcing samples along the marching direction with
    ``G[0]`` at the start node.  Returns the ``len(G) x n`` state samples.
    """
    steps = G.shape[0]
    n = T.shape[0]
    X = np.empty((steps, n), dtype=complex)
    X[0] = x0
    if steps == 1:
        return X
    K = 1j * dt * T
    if method == "trapezoid" or steps < 4:
        E = expm(K)
        for k in range(steps - 1):
            X[k + 1] = E @ X[k] + sign * 0.5 * dt * (E @ G[k] + G[k + 1])
        return X
    E, W = _exp4_weights(K, dt)
    for k in range(steps - 1):
        if k == 0:
            name, base = "start", 0
        elif k + 2 > steps - 1:
            name, base = "end", k
        else:
            name, base = "mid", k
        nodes = _STENCILS[name]
        acc = E @ X[k]
        for w, off in zip(W[name], nodes):
            acc = acc + sign * (w @ G[base + off])
        X[k + 1] = acc
    return X


def _two_sided(T_fwd, G_fwd, T_bwd, G_bwd, x0, grid, method):
    """State on the whole grid from ``x0`` at the middle node.

    The forward branch solves ``x' = i T_fwd x - i g_fwd`` for ``s >= 0`` and
    the backward branch ``x' = i T_bwd x - i g_bwd`` for ``s <= 0``.
    """
    c = grid.zero_index
    dt = grid.step
    X = np.empty((grid.N, x0.shape[0]), dtype=complex)
    X[c:] = _march(T_fwd, G_fwd[c:], x0, dt, -1j, method)
    back = _march(-T_bwd, G_bwd[c::-1], x0, dt, 1j, method)
    X[:c + 1] = back[::-1]
    return X


def _check_method(method):
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")


def propagate_state(v, h, u_line, xi, eta=None, method="trapezoid"):
    """Trajectory on the line ``xi s + eta`` driven by ``u_line`` with
    ``x(eta) = e^{i eta . A} h``."""
    _check_method(method)
    xi = np.asarray(xi, dtype=float)
    eta = np.zeros(v.d) if eta is None else np.asarray(eta, dtype=float)
    if xi.shape != (v.d,) or eta.shape != (v.d,):
        raise DimensionMismatch(f"direction and offset must have length {v.d}")
    h = np.asarray(h, dtype=complex).reshape(-1)
    if h.shape != (v.dim_h,) or u_line.dim_e != v.dim_e:
        raise DimensionMismatch("state or signal dimension disagrees with vessel")
    T = v.generator(xi)
    B = dagger(v.Phi) @ v.sigma_at(xi)
    G = u_line.values @ B.T
    x0 = v.semigroup(eta) @ h if np.any(eta) else h
    X = _two_sided(T, G, T, G, x0, u_line.grid, method)
    y = SampledSignal(u_line.grid, u_line.values - 1j * X @ v.Phi.T)
    return LineTrajectory(xi, eta, u_line.grid, u_line, y, X)


def extend_trajectory(v, triple, method="trapezoid"):
    """The unique trajectory along ``e_1`` with past output ``y_past``, state
    ``h`` at 0 and future input ``u_future``.

    The past state solves ``i x' + A_1^* x = Phi^* sigma_1 y``; then
    ``u = y + i Phi x`` for ``t < 0`` and ``y = u - i Phi x`` for ``t > 0``.
    """
    _check_method(method)
    grid = triple.grid
    if triple.dim_e != v.dim_e or triple.dim_h != v.dim_h:
        raise DimensionMismatch("triple dimensions disagree with vessel")
    c = grid.zero_index
    A1 = v.A[0]
    B = dagger(v.Phi) @ v.sigma[0]
    m = v.dim_e
    G_fwd = np.zeros((grid.N, v.dim_h), dtype=complex)
    G_bwd = np.zeros((grid.N, v.dim_h), dtype=complex)
    G_fwd[c:] = triple.u_future @ B.T
    G_bwd[:c + 1] = triple.y_past @ B.T
    X = _two_sided(A1, G_fwd, dagger(A1), G_bwd, triple.h, grid, method)
    PhiT = v.Phi.T
    u = np.empty((grid.N, m), dtype=complex)
    y = np.empty((grid.N, m), dtype=complex)
    u[c:] = triple.u_future
    y[:c + 1] = triple.y_past
    u[:c] = triple.y_past[:c] + 1j * X[:c] @ PhiT
    y[c + 1:] = triple.u_future[1:] - 1j * X[c + 1:] @ PhiT
    u_left = triple.y_past[c] + 1j * triple.h @ PhiT
    y_right = triple.u_future[0] - 1j * triple.h @ PhiT
    u_lim = (u_left, triple.u_future[0].copy())
    y_lim = (triple.y_past[c].copy(), y_right)
    u[c] = 0.5 * (u_lim[0] + u_lim[1])
    y[c] = 0.5 * (y_lim[0] + y_lim[1])
    e1 = np.eye(v.d)[0]
    return LineTrajectory(e1, np.zeros(v.d), grid, SampledSignal(grid, u),
                          SampledSignal(grid, y), X, u_lim, y_lim)


def _one_sided(values, c, lim, side):
    """Copy of ``values`` with the node ``c`` replaced by the one-sided limit."""
    out = np.array(values)
    if lim is not None:
        out[c] = lim[0] if side < 0 else lim[1]
    return out


def energy_balance_residual(traj, v):
    """Largest violation of the energy balance between node pairs, relative
    to ``max |x|^2``.

    With ``r_k = |x_k|^2 - |x_0|^2 - int_0^{s_k} (<sigma u, u> - <sigma y, y>)``
    (trapezoid with an end correction, integrated outwards from ``s = 0``
    with one-sided limits),
    every pair residual is a difference ``r_k - r_j``, so the maximum over
    pairs is ``max r - min r``.
    """
    grid = traj.grid
    c = grid.zero_index
    S = v.sigma_at(traj.direction)
    dt = grid.step
    nx = np.sum(np.abs(traj.x) ** 2, axis=1)
    r = np.zeros(grid.N)
    for side in (1, -1):
        u = _one_sided(traj.u.values, c, traj.u_limits, side)
        y = _one_sided(traj.y.values, c, traj.y_limits, side)
        flux = (np.real(np.einsum("ka,ab,kb->k", u.conj(), S, u)) -
                np.real(np.einsum("ka,ab,kb->k", y.conj(), S, y)))
        idx = np.arange(c, grid.N) if side > 0 else np.arange(c, -1, -1)
        f = flux[idx]
        cum = np.concatenate([[0.0], np.cumsum(0.5 * dt * (f[1:] + f[:-1]))])
        if f.size >= 3:
            # Euler-Maclaurin end correction makes the running integral O(dt^4)
            df = np.gradient(f, side * dt, edge_order=2)
            cum -= side * dt * dt / 12.0 * (df - df[0])
        r[idx] = nx[idx] - nx[c] - side * cum
    scale = float(np.max(nx)) or 1.0
    return float(np.max(r) - np.min(r)) / scale


def energy_inequality_gap(traj):
    """``min_T (int_0^T |u|^2 + |h|^2 - int_0^T |y|^2)`` over ``T > 0`` for an
    extended trajectory (``sigma_1 = I``); non-negative when the bound holds."""
    grid = traj.grid
    c = grid.zero_index
    u = _one_sided(traj.u.values, c, traj.u_limits, 1)[c:]
    y = _one_sided(traj.y.values, c, traj.y_limits, 1)[c:]
    f = np.sum(np.abs(u) ** 2, axis=1) - np.sum(np.abs(y) ** 2, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * grid.step * (f[1:] + f[:-1]))])
    h2 = float(np.sum(np.abs(traj.x[c]) ** 2))
    return float(np.min(cum + h2))


def _one_sided_derivatives(sample, step, side):
    """Value, first and second derivative at 0 from one side.

    ``sample(t)`` is evaluated at ``side * k * step``; three-point and
    four-point one-sided formulas are combined with one Richardson step.
    """
    def est(hh):
        f = [np.asarray(sample(side * k * hh), dtype=complex) for k in range(4)]
        d1 = side * (-3 * f[0] + 4 * f[1] - f[2]) / (2 * hh)
        d2 = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / hh ** 2
        return f[0], d1, d2
    v0, a1, a2 = est(step)
    _, b1, b2 = est(step / 2)
    return v0, (4 * b1 - a1) / 3, (4 * b2 - a2) / 3


def k0_matching_residual(v, h, u_future, y_past, step=1e-3):
    """Residuals of the three smoothness matching conditions at ``t = 0``.

    ``u_future`` and ``y_past`` are either callables, differentiated by
    one-sided differences at ``step``, or tuples ``(f(0), f'(0), f''(0)) ``
    of one-sided limits.  With ``S = sigma_1`` and ``A = A_1`` the
    conditions are

        u(0) - y(0) = i Phi h,
        u'(0) - y'(0) = Phi Phi^* S u(0) - Phi A h = Phi Phi^* S y(0) - Phi A^* h,
        u''(0) - y''(0) = Phi Phi^* S u'(0) - i Phi A^2 h + i Phi A Phi^* S u(0).

    Returns the three residual norms (the second is the larger of its two forms).
    """
    def limits(f, side):
        if callable(f):
            return _one_sided_derivatives(f, step, side)
        return tuple(np.asarray(z, dtype=complex) for z in f)
    u0, u1, u2 = limits(u_future, 1)
    y0, y1, y2 = limits(y_past, -1)
    h = np.asarray(h, dtype=complex).reshape(-1)
    Phi, A, S = v.Phi, v.A[0], v.sigma[0]
    Pd = dagger(Phi)
    r1 = u0 - y0 - 1j * Phi @ h
    r2a = u1 - y1 - (Phi @ Pd @ S @ u0 - Phi @ A @ h)
    r2b = u1 - y1 - (Phi @ Pd @ S @ y0 - Phi @ dagger(A) @ h)
    r3 = u2 - y2 - (Phi @ Pd @ S @ u1 - 1j * Phi @ A @ A @ h +
                    1j * Phi @ A @ Pd @ S @ u0)
    return [float(np.linalg.norm(r1)),
            max(float(np.linalg.norm(r2a)), float(np.linalg.norm(r2b))),
            float(np.linalg.norm(r3))]


def _system_residual(traj, A_line, Phi, S, inp, out, exclude_origin):
    """Max over interior nodes of the state-equation residual (centered
    differences) plus the max output-equation residual, both relative."""
    dt = traj.grid.step
    X = traj.x
    dx = (X[2:] - X[:-2]) / (2 * dt)
    B = dagger(Phi) @ S
    st = 1j * dx + X[1:-1] @ A_line.T - inp[1:-1] @ B.T
    ou = out - (inp - 1j * X @ Phi.T)
    c = traj.grid.zero_index
    if exclude_origin:
        st = np.delete(st, [c - 2, c - 1, c], axis=0)
        ou = np.delete(ou, [c], axis=0)
    scale = max(float(np.max(np.abs(X))) * max(np.linalg.norm(A_line, 2), 1.0),
                float(np.max(np.abs(inp))), 1e-300)
    return (float(np.max(np.linalg.norm(st, axis=1))) +
            float(np.max(np.linalg.norm(ou, axis=1)))) / scale


def trajectory_residual(traj, v):
    """Relative residual of the state and output equations on a trajectory."""
    return _system_residual(traj, v.generator(traj.direction), v.Phi,
                            v.sigma_at(traj.direction), traj.u.values,
                            traj.y.values, traj.u_limits is not None)


def adjoint_trajectory_check(traj, v):
    """Residual of ``(y, x, u)`` as a trajectory of the adjoint system.

    The adjoint system on the line is ``i x' + (xi . A)^* x = Phi^* sigma(xi) y``
    with output ``u = y + i Phi x``.  Returns ``(adjoint, primal)`` residuals.
    """
    adj = adjoint_vessel(v)
    xi = traj.direction
    adj_res = _system_residual(traj, adj.generator(xi), adj.Phi,
                               adj.sigma_at(xi), traj.y.values, traj.u.values,
                               traj.u_limits is not None)
    return adj_res, trajectory_residual(traj, v)
