"""Sampled signals, the frequency-domain representation and line transport.

Conventions
-----------
The grid with ``N`` nodes on ``[-L, L)`` has step ``dt = 2L/N`` and nodes
``t_k = -L + k dt``; the node ``k = N/2`` is ``t = 0``.  Frequencies are
``s_k = pi (k - N/2) / L`` with spacing ``ds = pi / L``.  The transform is
the unitary one,

    F f(s) = (2 pi)^{-1/2} int exp(-i s t) f(t) dt,

discretized by Riemann sums, so Parseval holds exactly on the grid.

For a normalized pencil ``(alpha_j, beta_j)`` the representation is
``pi(t) f = F^{-1} exp(i sum_j t_j (s alpha_j + beta_j)) F f`` and the line
transport ``Lambda(x, y) f (tau)`` is the field of ``f`` restricted to the
line ``tau -> tau x + y``.
"""

from dataclasses import dataclass
import math
import warnings

import numpy as np

from ._linalg import dagger, hermitian_part
from .exceptions import AliasingRiskWarning, DimensionMismatch

SQRT_2PI = math.sqrt(2.0 * math.pi)
NYQUIST_TOL = 1e-8


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid of ``N`` (a power of two) nodes on ``[-L, L)``."""

    N: int
    L: float

    def __post_init__(self):
        N = int(self.N)
        if N < 2 or N & (N - 1):
            raise ValueError(f"N must be a power of two, got {self.N}")
        if not self.L > 0:
            raise ValueError("L must be positive")
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "L", float(self.L))

    @property
    def step(self):
        return 2.0 * self.L / self.N

    @property
    def dfreq(self):
        return math.pi / self.L

    @property
    def zero_index(self):
        return self.N // 2

    @property
    def nodes(self):
        return -self.L + self.step * np.arange(self.N)

    @property
    def freqs(self):
        return self.dfreq * (np.arange(self.N) - self.N // 2)

    @property
    def smax(self):
        return math.pi / self.step

    def snap(self, t):
        """Nearest node offset (in steps) from ``t = 0`` and the snap error."""
        q = int(round(t / self.step))
        return q, abs(t - q * self.step)

    def refine(self, factor=2):
        return GridSpec(self.N * factor, self.L)

    def to_json(self):
        return {"N": self.N, "L": self.L}


@dataclass(frozen=True)
class SampledSignal:
    """``N`` samples of a C^m valued function on a grid (time or frequency)."""

    grid: GridSpec
    values: np.ndarray
    domain: str = "time"

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2 or vals.shape[0] != self.grid.N:
            raise DimensionMismatch(
                f"values must be {self.grid.N} x m, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("signal has non-finite entries")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid, func):
        return cls(grid, np.array([func(t) for t in grid.nodes]))

    @property
    def dim_e(self):
        return self.values.shape[1]

    @property
    def weight(self):
        return self.grid.step if self.domain == "time" else self.grid.dfreq

    def norm2(self, weight=None):
        v = self.values
        if weight is None:
            return self.weight * float(np.sum(np.abs(v) ** 2))
        return self.weight * float(np.real(np.einsum("ka,ab,kb->", v.conj(),
                                                     weight, v)))

    def norm(self):
        return math.sqrt(self.norm2())

    def spectral_tail(self):
        """Fraction of energy at ``|s| > s_max / 2``."""
        fhat = self if self.domain == "frequency" else forward_fft(self)
        e = np.sum(np.abs(fhat.values) ** 2, axis=1)
        total = float(np.sum(e))
        if total == 0.0:
            return 0.0
        mask = np.abs(self.grid.freqs) > self.grid.smax / 2
        return float(np.sum(e[mask])) / total

    def time_tail(self):
        """Fraction of energy at ``|t| > L/2``."""
        e = np.sum(np.abs(self.values) ** 2, axis=1)
        total = float(np.sum(e))
        if total == 0.0:
            return 0.0
        return float(np.sum(e[np.abs(self.grid.nodes) > self.grid.L / 2])) / total

    def nyquist_ok(self, tol=NYQUIST_TOL):
        return self.spectral_tail() <= tol

    def to_json(self):
        return {"grid": self.grid.to_json(),
                "values": [[[float(z.real), float(z.imag)] for z in row]
                           for row in self.values]}


def _signs(N):
    return np.where((np.arange(N) - N // 2) % 2 == 0, 1.0, -1.0)[:, None]


def fft_values(values, grid):
    """Frequency samples ``F f(s_k)`` from time samples (rows are nodes)."""
    out = np.fft.fftshift(np.fft.fft(values, axis=0), axes=0)
    return out * (_signs(grid.N) * grid.step / SQRT_2PI)


def ifft_values(values, grid):
    """Time samples from frequency samples; exact inverse of :func:`fft_values`."""
    pre = values * (_signs(grid.N) * grid.dfreq * grid.N / SQRT_2PI)
    return np.fft.ifft(np.fft.ifftshift(pre, axes=0), axis=0)


def forward_fft(f):
    if f.domain != "time":
        raise ValueError("forward_fft expects a time-domain signal")
    return SampledSignal(f.grid, fft_values(f.values, f.grid), "frequency")


def inverse(fhat):
    if fhat.domain != "frequency":
        raise ValueError("inverse expects a frequency-domain signal")
    return SampledSignal(fhat.grid, ifft_values(fhat.values, fhat.grid), "time")


def _warn_aliasing(f):
    if not f.nyquist_ok():
        warnings.warn(f"signal spectral tail {f.spectral_tail():.2e} exceeds "
                      f"{NYQUIST_TOL:.0e}", AliasingRiskWarning, stacklevel=3)


def pencil_phases(pencil, t, freqs):
    """``exp(i (s alpha(t) + beta(t)))`` for every frequency (batched)."""
    al, be = pencil.alpha_at(t), pencil.beta_at(t)
    m = al.shape[0]
    if np.allclose(al, al[0, 0] * np.eye(m), atol=0) and not np.any(be):
        phase = np.exp(1j * freqs * al[0, 0].real)
        return phase[:, None, None] * np.eye(m)
    w, u = np.linalg.eigh(hermitian_part(freqs[:, None, None] * al + be))
    return (u * np.exp(1j * w)[:, None, :]) @ dagger(u)


def apply_pi(pencil, t, f):
    """``pi(t) f``: multiply the spectrum by the pencil phase and invert."""
    _warn_aliasing(f)
    g = f.grid
    fhat = fft_values(f.values, g)
    ph = pencil_phases(pencil, t, g.freqs)
    return SampledSignal(g, ifft_values(np.einsum("kab,kb->ka", ph, fhat), g))


@dataclass(frozen=True)
class SpectrumCache:
    """Eigendecompositions of ``s_k alpha(x) + beta(x)`` on the frequency grid."""

    grid: GridSpec
    direction: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray

    @classmethod
    def build(cls, grid, pencil, x):
        x = np.asarray(x, dtype=float)
        M = pencil.matrix(grid.freqs, x)
        w, u = np.linalg.eigh(hermitian_part(M))
        return cls(grid, x, w, u)

    def reconstruction_residual(self, pencil):
        M = pencil.matrix(self.grid.freqs, self.direction)
        R = (self.eigvecs * self.eigvals[:, None, :]) @ dagger(self.eigvecs)
        num = np.linalg.norm(R - M, axis=(1, 2))
        den = np.maximum(np.linalg.norm(M, axis=(1, 2)), 1e-300)
        return float(np.max(num / den))

    def phase(self, tau):
        u = self.eigvecs
        return (u * np.exp(1j * tau * self.eigvals)[:, None, :]) @ dagger(u)


def transported_spectrum(pencil, y, f):
    """``exp(i (s alpha(y) + beta(y))) F f(s)`` on the frequency grid."""
    g = f.grid
    fhat = fft_values(f.values, g)
    if not np.any(y):
        return fhat
    return np.einsum("kab,kb->ka", pencil_phases(pencil, y, g.freqs), fhat)


def support_radius(f, rtol=1e-6):
    """Largest ``|t|`` where the amplitude exceeds ``rtol`` times its maximum."""
    amp = np.linalg.norm(f.values, axis=1)
    top = float(np.max(amp)) if amp.size else 0.0
    if top == 0.0:
        return 0.0
    return float(np.max(np.abs(f.grid.nodes[amp > rtol * top])))


def default_out_grid(pencil, x, f, y=None):
    """Output grid for ``Lambda(x, y) f``.

    An eigencomponent with eigenvalue ``lam`` of ``alpha(x)`` occupies
    ``|tau| <= (S + c) / lam``, where ``S`` is the support radius of ``f`` and
    ``c`` bounds the shift from ``alpha(y)``.  The discrete frequency sum is
    periodic with period ``2L / lam``, so the half width is taken between
    ``(S + c) / lam_min`` and ``(2L - S - c) / lam_max``; if that interval is
    empty a warning is raised.  The step resolves the fastest component.
    """
    grid = f.grid
    lam = np.abs(np.linalg.eigvalsh(hermitian_part(pencil.alpha_at(x))))
    lo, hi = max(float(np.min(lam)), 1e-12), max(float(np.max(lam)), 1e-12)
    c = 0.0 if y is None else float(np.max(np.abs(
        np.linalg.eigvalsh(hermitian_part(pencil.alpha_at(y))))))
    reach = min(support_radius(f) + c, grid.L)
    need, room = reach / lo, (2 * grid.L - reach) / hi
    if need > room:
        warnings.warn(f"Lambda(x, y) f needs half width {need:.3g} but periodic "
                      f"copies start at {room:.3g}", AliasingRiskWarning,
                      stacklevel=3)
        half = room
    else:
        half = 0.5 * (need + room)
    n_out = grid.N
    while 2 * half / n_out > grid.step / hi:
        n_out *= 2
    return GridSpec(n_out, half)


def lambda_op(pencil, x, y, f, out_grid=None, taus=None, cache=None,
              chunk=256):
    """``Lambda(x, y) f`` sampled at ``taus`` (default: nodes of ``out_grid``).

    Returns a :class:`SampledSignal` on ``out_grid`` or, when ``taus`` is
    given, a plain ``len(taus) x m`` array.
    """
    _warn_aliasing(f)
    x = np.asarray(x, dtype=float)
    grid = f.grid
    if out_grid is None and taus is None:
        out_grid = default_out_grid(pencil, x, f, y)
    g = transported_spectrum(pencil, np.asarray(y, dtype=float), f)
    al, be = pencil.alpha_at(x), pencil.beta_at(x)
    m = f.dim_e
    if taus is None and out_grid == grid and np.array_equal(al, np.eye(m)) \
            and not np.any(be):
        return SampledSignal(grid, ifft_values(g, grid))
    pts = out_grid.nodes if taus is None else np.asarray(taus, dtype=float)
    if cache is None or not np.array_equal(cache.direction, x) or cache.grid != grid:
        cache = SpectrumCache.build(grid, pencil, x)
    u, lam = cache.eigvecs, cache.eigvals
    c = np.einsum("kba,kb->ka", u.conj(), g)
    out = np.empty((pts.size, m), dtype=complex)
    scale = grid.dfreq / SQRT_2PI
    for start in range(0, pts.size, chunk):
        tt = pts[start:start + chunk]
        ph = np.exp(1j * tt[:, None, None] * lam[None]) * c[None]
        out[start:start + chunk] = scale * np.einsum("kal,tkl->ta", u, ph)
    if taus is not None:
        return out
    return SampledSignal(out_grid, out)


def weighted_norms(f, weight=None, split_at=0.0, endpoint_correction=False):
    """Riemann sums of ``<W f, f>``: ``(full, left, right)``.

    The node nearest ``split_at`` contributes half its weight to each side.
    With ``endpoint_correction`` the leading Euler-Maclaurin term at the split,
    ``(dt^2/12) h'(split)`` with ``h = <W f, f>`` differentiated by a
    five-point stencil, is moved from the left sum to the right sum, which
    makes each half fourth-order accurate; the total is unchanged.
    """
    vals = f.values
    m = vals.shape[1]
    W = np.eye(m) if weight is None else np.asarray(weight)
    h = np.real(np.einsum("ka,ab,kb->k", vals.conj(), W, vals))
    dt = f.weight
    nodes = f.grid.nodes if f.domain == "time" else f.grid.freqs
    c = int(np.argmin(np.abs(nodes - split_at)))
    left = dt * (float(np.sum(h[:c])) + 0.5 * h[c])
    right = dt * (float(np.sum(h[c + 1:])) + 0.5 * h[c])
    if endpoint_correction and 2 <= c <= h.size - 3:
        dh = (-h[c + 2] + 8 * h[c + 1] - 8 * h[c - 1] + h[c - 2]) / (12 * dt)
        shift = dt * dt / 12.0 * dh
        left -= shift
        right += shift
    return left + right, left, right


def causal_isometry_check(pencil, x, x_prime, y, f, out_grid=None,
                          endpoint_correction=True):
    """Half-line energy differences between the lines through ``y`` in
    directions ``x`` and ``x'``, relative to ``|f|^2``.

    Returns the ``(left, right)`` residual pair; the whole-line residual is
    bounded by their sum.
    """
    f_norm2 = f.norm2() or 1.0
    parts = []
    for direction in (x, x_prime):
        og = out_grid or default_out_grid(pencil, direction, f, y)
        g = lambda_op(pencil, direction, y, f, og)
        parts.append(weighted_norms(g, pencil.alpha_at(direction), 0.0,
                                    endpoint_correction))
    (_, la, ra), (_, lb, rb) = parts
    return abs(la - lb) / f_norm2, abs(ra - rb) / f_norm2


def evaluate_field(pencil, f, t):
    """The field of ``f`` at one point ``t`` or at each row of a ``P x d`` array."""
    _warn_aliasing(f)
    t = np.asarray(t, dtype=float)
    single = t.ndim == 1
    pts = np.atleast_2d(t)
    g = f.grid
    fhat = fft_values(f.values, g)
    out = np.empty((pts.shape[0], f.dim_e), dtype=complex)
    for i, p in enumerate(pts):
        ph = pencil_phases(pencil, p, g.freqs)
        out[i] = g.dfreq / SQRT_2PI * np.einsum("kab,kb->a", ph, fhat)
    return out[0] if single else out


def _orthonormal_complement(xi):
    d = xi.size
    q, _ = np.linalg.qr(np.column_stack([xi / np.linalg.norm(xi), np.eye(d)]))
    return q[:, 1:d]


def slice_pairing_check(pencil, f, xi, psi, box=6.0, n_box=64, n_line=None):
    """Compare two quadratures of ``<u_f, psi>`` over ``[-box, box]^d``.

    The direct side evaluates the field on a tensor grid, row by row along
    the first axis through ``pi``.  The iterated side integrates
    ``<Lambda(xi, eta) f (s), psi(xi s + eta)>`` over ``s`` and over offsets
    ``eta`` in the orthogonal complement of ``xi``; the Jacobian of
    ``t = xi s + eta`` is ``|xi|``.  Returns the difference relative to the
    ``L^2`` norm of ``psi`` on the box.
    """
    xi = np.asarray(xi, dtype=float)
    d = xi.size
    grid = f.grid
    axis = np.linspace(-box, box, n_box, endpoint=False)
    hb = axis[1] - axis[0]
    # direct: rows along e_1 on the grid nodes inside the box
    mask = (grid.nodes >= -box) & (grid.nodes < box)
    t1 = grid.nodes[mask]
    direct = 0.0 + 0.0j
    psi_norm2 = 0.0
    if d == 1:
        vals = f.values[mask]
        pv = np.array([psi(np.array([s])) for s in t1])
        direct = grid.step * np.sum(np.conj(pv) * vals)
        psi_norm2 = grid.step * float(np.sum(np.abs(pv) ** 2))
    else:
        for rest in np.stack(np.meshgrid(*([axis] * (d - 1)), indexing="ij"),
                             -1).reshape(-1, d - 1):
            shift = np.concatenate([[0.0], rest])
            row = apply_pi(pencil, shift, f).values[mask]
            pts = np.column_stack([t1, np.tile(rest, (t1.size, 1))])
            pv = np.array([psi(p) for p in pts])
            w = grid.step * hb ** (d - 1)
            direct += w * np.sum(np.conj(pv) * row)
            psi_norm2 += w * float(np.sum(np.abs(pv) ** 2))
    # iterated: lines xi s + eta
    nx = float(np.linalg.norm(xi))
    reach = box * math.sqrt(d)
    n_line = n_line or 2 * n_box
    s_nodes = np.linspace(-reach / nx, reach / nx, n_line, endpoint=False)
    hs = s_nodes[1] - s_nodes[0]
    iterated = 0.0 + 0.0j
    if d == 1:
        vals = lambda_op(pencil, xi, np.zeros(1), f, taus=s_nodes)
        pv = np.array([psi(xi * s) for s in s_nodes])
        iterated = nx * hs * np.sum(np.conj(pv) * vals)
    else:
        comp = _orthonormal_complement(xi)
        e_axis = np.linspace(-reach, reach, 2 * n_box, endpoint=False)
        he = e_axis[1] - e_axis[0]
        cache = SpectrumCache.build(grid, pencil, xi)
        for coords in np.stack(np.meshgrid(*([e_axis] * (d - 1)), indexing="ij"),
                               -1).reshape(-1, d - 1):
            eta = comp @ coords
            pts = xi[None, :] * s_nodes[:, None] + eta[None, :]
            inside = np.all(np.abs(pts) < box, axis=1)
            if not np.any(inside):
                continue
            pv = np.array([psi(p) for p in pts[inside]])
            vals = lambda_op(pencil, xi, eta, f, taus=s_nodes[inside],
                             cache=cache)
            iterated += nx * hs * he ** (d - 1) * np.sum(np.conj(pv) * vals)
    return abs(direct - iterated) / max(math.sqrt(psi_norm2), 1e-300)
