"""Unitary dilation of the semigroup ``t -> exp(i t . A)`` on trajectory space.

The space is ``K = L^2(R_-, E) + H + L^2(R_+, E)`` sampled on a grid, a vector
being a :class:`~vesselkit.system.BoundaryTriple` ``(y_past, h, u_future)``.
``rho(t)`` extends the triple to a full trajectory ``(u~, x, y~)`` along the
first axis, transports ``u~`` with the input pencil and ``y~`` with the output
pencil, and evaluates the state at ``t``.

State evaluation.  ``x(t)`` solves the state equation along the segment from
``0`` to ``t``, driven by the transported input; the Duhamel integral is done
per frequency with a block exponential.  For ``t`` in ``Pos`` (``-Pos``) the
input (output) on the other side of the origin is replaced by a smooth
continuation first: by finite propagation speed this leaves the exact result
unchanged while removing the jump that would otherwise ring in the spectral
sums.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
import os
import warnings

import numpy as np

from ._linalg import dagger, expm, null_space
from .exceptions import (ConeWarning, DimensionMismatch, NotInCone, NotVR,
                         OffGridShiftWarning)
from .system import BoundaryTriple, extend_trajectory
from .transport import (SQRT_2PI, SampledSignal, fft_values, ifft_values,
                        pencil_phases)
from .vessel import (DEFAULT_TOL, check_vr, normalize, output_pencil,
                     pos_cone_margin, weakly_strict_report)

CONTINUATION_ORDER = 4
CONTINUATION_WIDTH = 1.0
KERNEL_RTOL = 1e-8


# one-sided fourth-order first derivative at the first node
_D1 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0


def _half_line_sum(e, dt):
    """Integral over ``[0, inf)`` of samples ``e`` starting at ``0``: trapezoid
    plus the leading Euler-Maclaurin endpoint term."""
    total = dt * (np.sum(e[1:]) + 0.5 * e[0])
    if e.shape[0] >= 5:
        total = total + dt / 12.0 * (_D1 @ e[:5])
    return total


@dataclass(frozen=True)
class DilationVector:
    """A vector of the dilation space.

    Norms and inner products use the trapezoid rule on each half line with an
    endpoint correction at the split, so they are fourth-order accurate for
    signals that do not vanish there.
    """

    triple: BoundaryTriple

    @property
    def grid(self):
        return self.triple.grid

    @property
    def h(self):
        return self.triple.h

    def norm2(self):
        return float(self.inner(self).real)

    def norm(self):
        return math.sqrt(max(self.norm2(), 0.0))

    def __add__(self, other):
        return DilationVector(self.triple + other.triple)

    def __sub__(self, other):
        return DilationVector(self.triple - other.triple)

    def scale(self, c):
        return DilationVector(self.triple.scale(c))

    def inner(self, other):
        a, b = self.triple, other.triple
        dt = self.grid.step
        ey = np.einsum("ka,ka->k", b.y_past.conj(), a.y_past)[::-1]
        eu = np.einsum("ka,ka->k", b.u_future.conj(), a.u_future)
        return np.vdot(b.h, a.h) + _half_line_sum(ey, dt) + _half_line_sum(eu, dt)


@dataclass(frozen=True)
class DilationOperatorConfig:
    """Normalized vessel, its input and output pencils, grid and cone data.

    Times passed to :func:`rho` are in the original coordinates; ``transform``
    maps pencil coordinates to them (``t = transform @ t'``).
    """

    vessel: object
    pencil: object
    out_pencil: object
    grid: object
    xi0: np.ndarray
    margin: float
    tol: dict = field(default_factory=lambda: {"vr": DEFAULT_TOL,
                                               "isometry": 1e-4,
                                               "group": 1e-4,
                                               "compression": 5e-3})
    method: str = "exp4"

    @classmethod
    def build(cls, vessel, grid, xi0=None, tol=DEFAULT_TOL, method="exp4",
              require_vr=True):
        xi0 = np.eye(vessel.d)[0] if xi0 is None else np.asarray(xi0, dtype=float)
        margin = pos_cone_margin(vessel, xi0)
        if not margin > 0:
            raise NotInCone(f"sigma(xi0) has lambda_min {margin:.3e}")
        nv, pencil = normalize(vessel, xi0, tol)
        if require_vr:
            report = check_vr(nv, 0, tol)
            if not report.passed:
                raise NotVR(report.summary())
        outp = output_pencil(nv, xi0, pencil.transform)
        return cls(nv, pencil, outp, grid, xi0, float(margin), method=method)

    @property
    def transform(self):
        return self.pencil.transform

    def local(self, t):
        """Pencil coordinates of a time given in original coordinates."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if t.shape != (self.vessel.d,):
            raise DimensionMismatch(f"t must have length {self.vessel.d}")
        T = self.transform
        return t if np.array_equal(T, np.eye(T.shape[0])) else np.linalg.solve(T, t)

    def with_grid(self, grid):
        return DilationOperatorConfig(self.vessel, self.pencil, self.out_pencil,
                                      grid, self.xi0, self.margin, dict(self.tol),
                                      self.method)

    def semigroup(self, t):
        """``exp(i t . A)`` in original coordinates."""
        return self.vessel.semigroup(self.local(t))


def embed(h, cfg):
    """``(0, h, 0)``."""
    h = np.asarray(h, dtype=complex).reshape(-1)
    if h.shape != (cfg.vessel.dim_h,):
        raise DimensionMismatch(f"h must have length {cfg.vessel.dim_h}")
    z = BoundaryTriple.zeros(cfg.grid, cfg.vessel.dim_e, cfg.vessel.dim_h)
    return DilationVector(BoundaryTriple(cfg.grid, z.y_past, h, z.u_future))


def project(vec):
    """``P_H``: the state component."""
    return np.array(vec.h)


# ------------------------------------------------------------------ state

def smooth_continuation(values, limits, grid, side,
                        order=CONTINUATION_ORDER, width=CONTINUATION_WIDTH):
    """Replace one half of a sampled signal by a smooth continuation of the other.

    ``side="right"`` keeps ``t >= 0`` (node ``0`` takes the right limit) and
    fills ``t < 0`` with ``p(t) exp(-(t / width)^6)``, ``p`` interpolating the
    first ``order + 1`` kept samples; ``side="left"`` mirrors this.  The seam
    matches to ``O(dt^(order+1))`` and the continuation stays band limited.
    """
    out = np.array(values)
    c, N = grid.zero_index, grid.N
    if limits is not None:
        out[c] = limits[1] if side == "right" else limits[0]
    sgn = 1 if side == "right" else -1
    kept = out[c + sgn * np.arange(order + 1)]
    # interpolation in units of nodes, evaluated on the discarded half
    V = np.vander(np.arange(order + 1, dtype=float), increasing=True)
    coef = np.linalg.solve(V, kept)
    m = np.arange(1, c + 1 if side == "right" else N - c)
    window = np.exp(-(m * grid.step / width) ** 6)
    poly = np.vander(-m.astype(float), order + 1, increasing=True) @ coef
    out[c - sgn * m] = poly * window[:, None]
    return out


def _sources(cfg, traj, side):
    """Samples of ``u~`` for the future part, of ``u~`` for the state and of
    ``y~`` for the past part, given the cone side of ``t``.

    For ``t`` in ``Pos`` the future part and the state only depend on ``u~``
    over ``t > 0`` (finite propagation speed), so its past half can be
    replaced by a smooth continuation.  For ``-Pos`` the state depends on
    ``u~`` over ``t < 0`` and the past part on ``y~`` over ``t < 0``.  The
    exact result is unchanged while the jump at the origin, which would ring
    in the spectral sums, disappears.
    """
    c = cfg.grid.zero_index
    u, y = traj.u.values, traj.y.values
    u_part = u_state = u
    if side in ("pos", "both"):
        u_part = u_state = smooth_continuation(u, traj.u_limits, cfg.grid, "right")
    elif side == "neg":
        u_state = smooth_continuation(u, traj.u_limits, cfg.grid, "left")
        y = smooth_continuation(y, traj.y_limits, cfg.grid, "left")
    return u_part, u_state, y


def _state(cfg, x0, u_hat, tl):
    """``x(t)`` along the segment from ``0`` to ``tl`` (pencil coordinates).

    The Duhamel integral is evaluated per frequency through the corner block
    of ``expm([[i T, Phi^* sigma(t)], [0, i M_t(s)]])``.
    """
    if not np.any(tl):
        return np.array(x0)
    v, g = cfg.vessel, cfg.grid
    n, m = v.dim_h, v.dim_e
    big = np.zeros((g.N, n + m, n + m), dtype=complex)
    big[:, :n, :n] = 1j * v.generator(tl)
    big[:, :n, n:] = dagger(v.Phi) @ v.sigma_at(tl)
    big[:, n:, n:] = 1j * cfg.pencil.matrix(g.freqs, tl)
    E = expm(big)
    duhamel = np.einsum("kab,kb->a", E[:, :n, n:], u_hat) * (g.dfreq / SQRT_2PI)
    return E[0, :n, :n] @ x0 - 1j * duhamel


# ------------------------------------------------------------------- rho

def _assemble(cfg, u_full, y_full, x):
    c = cfg.grid.zero_index
    return DilationVector(BoundaryTriple(cfg.grid, y_full[:c + 1], x, u_full[c:]))


def _extend(cfg, vec):
    if vec.grid != cfg.grid:
        raise DimensionMismatch("vector and configuration use different grids")
    return extend_trajectory(cfg.vessel, vec.triple, cfg.method)


def rho(cfg, t, vec, traj=None):
    """``rho(t) vec`` for ``t`` in original coordinates."""
    tl = cfg.local(t)
    if not np.any(tl):
        return vec
    traj = traj or _extend(cfg, vec)
    g = cfg.grid
    u_part, u_state, y_part = _sources(cfg, traj, _cone_side(cfg, t))
    uh = fft_values(u_part, g)
    yh = fft_values(y_part, g)
    u_new = ifft_values(np.einsum("kab,kb->ka",
                                  pencil_phases(cfg.pencil, tl, g.freqs), uh), g)
    y_new = ifft_values(np.einsum("kab,kb->ka",
                                  pencil_phases(cfg.out_pencil, tl, g.freqs), yh), g)
    q = tl[0] / g.step
    if not np.any(tl[1:]) and abs(q - round(q)) < 1e-9 and abs(q) < g.zero_index:
        x = np.array(traj.x[g.zero_index + int(round(q))])
    else:
        x = _state(cfg, vec.h, uh if u_state is u_part else fft_values(u_state, g), tl)
    return _assemble(cfg, u_new, y_new, x)


def rho_one_dim(cfg, t, vec):
    """``rho(t e_1)``: shift the extended trajectory along the first axis.

    Grid-aligned ``t`` shifts samples (with wraparound); other ``t`` use the
    spectral shift and a partial step for the state, with a warning.
    """
    t = float(t)
    if t == 0.0:
        return vec
    g = cfg.grid
    traj = _extend(cfg, vec)
    q = t / g.step
    if abs(q - round(q)) > 1e-9:
        warnings.warn(f"t = {t} is not grid aligned; spectral shift used",
                      OffGridShiftWarning, stacklevel=2)
        e1 = np.zeros(cfg.vessel.d)
        e1[0] = t
        return rho(cfg, cfg.transform @ e1, vec, traj)
    q = int(round(q))
    u_new = np.roll(traj.u.values, -q, axis=0)
    y_new = np.roll(traj.y.values, -q, axis=0)
    return _assemble(cfg, u_new, y_new, np.array(traj.x[g.zero_index + q]))


# ------------------------------------------------------------ diagnostics

def _cone_side(cfg, t):
    v = cfg.vessel
    tl = cfg.local(t)
    if v.dim_e == 0:
        return "both"
    if pos_cone_margin(v, tl) > 0:
        return "pos"
    if pos_cone_margin(v, -tl) > 0:
        return "neg"
    return None


def isometry_residual(cfg, t, vec):
    """``| |rho(t) vec| - |vec| | / |vec|``; warns when ``t`` is outside
    ``Pos`` and ``-Pos``, where no isometry is claimed."""
    if _cone_side(cfg, t) is None:
        warnings.warn(f"t = {np.asarray(t).tolist()} is outside Pos and -Pos",
                      ConeWarning, stacklevel=2)
    n0 = vec.norm()
    return abs(rho(cfg, t, vec).norm() - n0) / (n0 or 1.0)


def group_law_residual(cfg, t, s, vec):
    """``|rho(t) rho(s) vec - rho(t + s) vec| / |vec|``."""
    lhs = rho(cfg, t, rho(cfg, s, vec))
    rhs = rho(cfg, np.asarray(t, dtype=float) + np.asarray(s, dtype=float), vec)
    return (lhs - rhs).norm() / (vec.norm() or 1.0)


def commutativity_residual(cfg, t, s, vec):
    """``|rho(t) rho(s) vec - rho(s) rho(t) vec| / |vec|``."""
    a = rho(cfg, t, rho(cfg, s, vec))
    b = rho(cfg, s, rho(cfg, t, vec))
    return (a - b).norm() / (vec.norm() or 1.0)


def inverse_residual(cfg, t, vec):
    """``|rho(-t) rho(t) vec - vec| / |vec|``."""
    back = rho(cfg, -np.asarray(t, dtype=float), rho(cfg, t, vec))
    return (back - vec).norm() / (vec.norm() or 1.0)


def compression_error(cfg, t, h):
    """``|P_H rho(t) embed(h) - exp(i t . A) h| / |h|``."""
    h = np.asarray(h, dtype=complex)
    x = project(rho(cfg, t, embed(h, cfg)))
    return float(np.linalg.norm(x - cfg.semigroup(t) @ h) /
                 (np.linalg.norm(h) or 1.0))


def _threads(threads):
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("VESSELKIT_THREADS")
    return max(1, int(env)) if env else 1


ROUNDOFF_FLOOR = 1e-10


def dilation_check(cfg, ts, h_basis=None, refine=True, threads=None):
    """Compression error ``max |P_H rho(t) embed(h) - exp(i t . A) h| / |h|``.

    ``ts`` are sample times (original coordinates), ``h_basis`` defaults to the
    standard basis.  With ``refine`` the check is repeated with ``N`` doubled
    and the observed order ``log2(err_N / err_2N)`` is reported; when both
    errors are at the roundoff floor the order is ``None`` and
    ``at_roundoff`` is set.
    """
    n = cfg.vessel.dim_h
    basis = np.eye(n, dtype=complex) if h_basis is None else np.atleast_2d(h_basis)
    ts = [np.atleast_1d(np.asarray(t, dtype=float)) for t in ts]
    jobs = [(t, h) for t in ts for h in basis]

    def run(c):
        with ThreadPoolExecutor(max_workers=_threads(threads)) as pool:
            return list(pool.map(lambda job: compression_error(c, *job), jobs))

    errs = run(cfg)
    per_t = [max(errs[i * len(basis):(i + 1) * len(basis)]) for i in range(len(ts))]
    report = {"N": cfg.grid.N, "L": cfg.grid.L,
              "times": [t.tolist() for t in ts],
              "errors": per_t, "max_error": max(per_t) if per_t else 0.0}
    if refine:
        fine = run(cfg.with_grid(cfg.grid.refine(2)))
        e_fine = max(fine) if fine else 0.0
        e0 = report["max_error"]
        report["refined_max_error"] = e_fine
        report["at_roundoff"] = max(e0, e_fine) <= ROUNDOFF_FLOOR
        report["order"] = (None if report["at_roundoff"] or e_fine == 0.0
                           else math.log2(e0 / e_fine))
    return report


def state_on_lines(cfg, vec, xi, eta, out_grid=None):
    """State along ``xi s + eta`` driven by ``Lambda(xi, eta) u~``.

    ``x(eta)`` comes from :func:`rho`; the line is then integrated by the
    Duhamel scheme of :func:`~vesselkit.system.propagate_state`.  Coordinates
    are pencil coordinates.  Through the origin with ``xi`` in ``Pos`` the two
    halves are driven by the one-sided continuations of ``u~``, so the jump
    at ``0`` does not enter the quadrature.
    """
    from .system import LineTrajectory, propagate_state
    from .transport import default_out_grid, lambda_op
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if not np.min(np.linalg.eigvalsh(cfg.pencil.alpha_at(xi))) > 0:
        raise NotInCone("alpha(xi) must be positive definite")
    traj = _extend(cfg, vec)
    x_eta = rho(cfg, cfg.transform @ eta, vec, traj).h
    g = cfg.grid

    def run(values):
        u_tilde = SampledSignal(g, values)
        og = out_grid or default_out_grid(cfg.pencil, xi, u_tilde, eta)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            u_line = lambda_op(cfg.pencil, xi, eta, u_tilde, og)
        return propagate_state(cfg.vessel, x_eta, u_line, xi, method=cfg.method)

    if np.any(eta) or _cone_side(cfg, cfg.transform @ xi) != "pos":
        return run(traj.u.values)
    fwd = run(smooth_continuation(traj.u.values, traj.u_limits, g, "right"))
    bwd = run(smooth_continuation(traj.u.values, traj.u_limits, g, "left"))
    og = fwd.grid
    c = og.zero_index
    u = np.concatenate([bwd.u.values[:c], fwd.u.values[c:]])
    x = np.concatenate([bwd.x[:c], fwd.x[c:]])
    u_lim = (bwd.u.values[c].copy(), fwd.u.values[c].copy())
    y_lim = (bwd.y.values[c].copy(), fwd.y.values[c].copy())
    u[c] = 0.5 * (u_lim[0] + u_lim[1])
    y = u - 1j * x @ cfg.vessel.Phi.T
    y[c] = 0.5 * (y_lim[0] + y_lim[1])
    return LineTrajectory(xi, eta, og, SampledSignal(og, u), SampledSignal(og, y), x,
                          u_lim, y_lim)


# ------------------------------------------------------------- minimality

@dataclass(frozen=True)
class MinimalityReport:
    weakly_strict: bool
    kernel: np.ndarray
    witness: np.ndarray
    verdict: str
    invariance_residual: float
    iterations: int

    def to_dict(self):
        return {"weakly_strict": self.weakly_strict,
                "dim_W": int(self.kernel.shape[1]),
                "dim_M": int(self.witness.shape[1]),
                "verdict": self.verdict,
                "invariance_residual": self.invariance_residual,
                "iterations": self.iterations}


def largest_invariant_subspace(mats, V, rtol=KERNEL_RTOL):
    """Largest subspace of ``span V`` mapped into itself by every matrix.

    Iterates ``V <- {v in V : M v in V for all M}``; the dimension strictly
    drops until it stabilizes.  Returns the basis and the number of steps.
    """
    steps = 0
    while V.shape[1]:
        P = np.eye(V.shape[0]) - V @ dagger(V)
        stack = np.vstack([P @ M @ V for M in mats])
        scale = max(1.0, max(np.linalg.norm(M, 2) for M in mats))
        ker = null_space(stack, rtol=0.0, atol=rtol * scale)
        steps += 1
        if ker.shape[1] == V.shape[1]:
            break
        V, _ = np.linalg.qr(V @ ker) if ker.shape[1] else (V[:, :0], None)
    return V, steps


def minimality_diagnostics(cfg, tol=DEFAULT_TOL, samples=(-1.3, 0.0, 0.7, 2.1)):
    """Weak strictness, the common kernel ``W`` and an invariant witness."""
    v = cfg.vessel
    strict, W = weakly_strict_report(v, tol)
    if strict:
        return MinimalityReport(True, W, W[:, :0], "minimal (sufficient condition)",
                                0.0, 0)
    mats = list(cfg.pencil.alpha[1:]) + list(cfg.pencil.beta[1:])
    M, steps = largest_invariant_subspace(mats, W)
    if M.shape[1] == 0:
        return MinimalityReport(False, W, M, "no witness; minimality undetermined",
                                0.0, steps)
    P = np.eye(M.shape[0]) - M @ dagger(M)
    res = 0.0
    for s in samples:
        for j in range(1, v.d):
            pen = s * cfg.pencil.alpha[j] + cfg.pencil.beta[j]
            res = max(res, float(np.linalg.norm(P @ pen @ M)))
    return MinimalityReport(False, W, M, "non-minimal, witness subspace", res, steps)


def witness_vector(cfg, w, width=1.0):
    """The vector whose extended input is ``F^{-1}(chi w)`` with a Gaussian
    ``chi`` of the given spectral width; past output equals that input and
    the state is zero."""
    g = cfg.grid
    w = np.asarray(w, dtype=complex).reshape(-1)
    chi = np.exp(-0.5 * (g.freqs / width) ** 2)
    u = ifft_values(chi[:, None] * w[None, :], g)
    c = g.zero_index
    return DilationVector(BoundaryTriple(g, u[:c + 1], np.zeros(cfg.vessel.dim_h),
                                         u[c:]))


def witness_orbit_check(cfg, w, ts, width=1.0):
    """Largest state norm and ``H``-overlap along the orbit of a witness."""
    vec = witness_vector(cfg, w, width)
    n = cfg.vessel.dim_h
    worst_x, worst_overlap = 0.0, 0.0
    for t in ts:
        out = rho(cfg, t, vec)
        worst_x = max(worst_x, float(np.linalg.norm(out.h)))
        for k in range(n):
            e = np.zeros(n, dtype=complex)
            e[k] = 1.0
            worst_overlap = max(worst_overlap, abs(out.inner(embed(e, cfg))))
    return worst_x, worst_overlap


# ----------------------------------------------------------- K0 fixtures

def flat_top(t, width=1.5):
    """``exp(-(t/width)^4)``: equal to 1 at 0 with three vanishing derivatives."""
    return np.exp(-(np.asarray(t, dtype=float) / width) ** 4)


def smooth_state_vector(cfg, h, width=1.5):
    """``(0, h, u)`` with ``u(t) = c(t) i Phi exp(i t A_1^*) h`` and ``c`` a flat top.

    For ``c = 1`` the free past evolution continues through ``0`` with zero
    output, so the extended input and output are three times continuously
    differentiable across the split.
    """
    v = cfg.vessel
    g = cfg.grid
    h = np.asarray(h, dtype=complex).reshape(-1)
    c = g.zero_index
    t = g.nodes[c:]
    A1s = dagger(v.A[0])
    step = expm(1j * g.step * A1s)
    states = np.empty((t.size, v.dim_h), dtype=complex)
    states[0] = h
    for k in range(1, t.size):
        states[k] = step @ states[k - 1]
    u = flat_top(t, width)[:, None] * (1j * states @ v.Phi.T)
    y = np.zeros((c + 1, v.dim_e), dtype=complex)
    return DilationVector(BoundaryTriple(g, y, h, u))


def bump_vector(cfg, bumps, width=1.0):
    """``(y, 0, u)`` from Gaussian bumps ``(center, amplitude)``: positive
    centers feed the future input, negative centers the past output."""
    v = cfg.vessel
    g = cfg.grid
    c = g.zero_index
    t = g.nodes
    y = np.zeros((c + 1, v.dim_e), dtype=complex)
    u = np.zeros((g.N - c, v.dim_e), dtype=complex)
    for center, amp in bumps:
        amp = np.asarray(amp, dtype=complex).reshape(-1)
        prof = np.exp(-0.5 * ((t - center) / width) ** 2)[:, None] * amp[None, :]
        if center > 0:
            u += prof[c:]
        else:
            y += prof[:c + 1]
    return DilationVector(BoundaryTriple(g, y, np.zeros(v.dim_h), u))
