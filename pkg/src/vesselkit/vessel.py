"""Commutative operator vessels and their algebraic conditions.

A vessel ties a tuple of commuting matrices ``A_1, ..., A_d`` acting on a
state space ``H = C^n`` to a signal space ``E = C^m`` through

* a map ``Phi: H -> E``,
* Hermitian ``sigma_j`` on ``E`` with ``A_j - A_j^* = i Phi^* sigma_j Phi``,
* Hermitian ``gamma_jk`` and ``gamma_star_jk`` (antisymmetric in ``j, k``)
  subject to the input, output and linkage conditions checked by
  :func:`check_vessel`.

Indices are zero based in code and one based in report labels.
"""

from dataclasses import dataclass
import itertools
import warnings

import numpy as np

from ._linalg import (as_matrix, commutator, dagger, expm, fro, hermitian_part,
                      imag_part, opnorm, orth_range, psd_sqrt_pair, null_space)
from .exceptions import (DegenerateEmbeddingWarning, DimensionMismatch,
                         NonCommuting, NonDissipative, NotInCone,
                         PreconditionResidual, SingularShift, SingularSigma,
                         SingularTransform)

DEFAULT_TOL = 1e-10
PSD_TOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def _pairs(d):
    return itertools.combinations(range(d), 2)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionResidual:
    """One labelled residual together with the tolerance it is held to."""

    name: str
    value: float
    tolerance: float
    strict: bool = False
    redundant: bool = False
    note: str = ""

    @property
    def passed(self):
        if self.strict:
            return bool(self.value < self.tolerance)
        return bool(self.value <= self.tolerance)

    def to_dict(self):
        out = {"name": self.name, "value": float(self.value),
               "tolerance": float(self.tolerance), "pass": self.passed}
        if self.redundant:
            out["redundant"] = True
        if self.note:
            out["note"] = self.note
        return out


@dataclass(frozen=True)
class ConditionReport:
    """A list of labelled residuals; it passes iff every entry passes."""

    title: str
    entries: tuple = ()
    notes: tuple = ()

    @property
    def passed(self):
        return all(e.passed for e in self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, name):
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def select(self, prefix):
        return [e for e in self.entries if e.name.startswith(prefix)]

    def failures(self):
        return [e for e in self.entries if not e.passed]

    def max_residual(self, prefix=""):
        vals = [e.value for e in self.entries if e.name.startswith(prefix)]
        return max(vals) if vals else 0.0

    def to_dict(self):
        return {"title": self.title, "pass": self.passed,
                "entries": [e.to_dict() for e in self.entries],
                "notes": list(self.notes)}

    def summary(self):
        lines = [f"{self.title}: {'PASS' if self.passed else 'FAIL'}"]
        for e in self.entries:
            flag = "ok " if e.passed else "BAD"
            extra = " (redundant)" if e.redundant else ""
            lines.append(f"  [{flag}] {e.name}: {e.value:.3e} "
                         f"(tol {e.tolerance:.3e}){extra}")
        lines.extend(f"  note: {n}" for n in self.notes)
        return "\n".join(lines)


def _entry(name, diff, tol, *scales, **kw):
    scale = max([1.0] + [float(s) for s in scales])
    return ConditionResidual(name, fro(diff), tol * scale, **kw)


# ---------------------------------------------------------------------------
# Data types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CommutingTuple:
    """A tuple of ``d`` complex ``n x n`` matrices."""

    A: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.A, dtype=complex)
        if a.ndim == 2:
            a = a[None]
        if a.ndim != 3 or a.shape[1] != a.shape[2]:
            raise DimensionMismatch(f"expected d x n x n array, got {a.shape}")
        object.__setattr__(self, "A", _frozen(a))

    @classmethod
    def of(cls, *mats):
        return cls(np.stack([as_matrix(m) for m in mats]))

    @property
    def d(self):
        return self.A.shape[0]

    @property
    def dim_h(self):
        return self.A.shape[1]

    def commutator_residuals(self):
        out = {}
        for j, k in _pairs(self.d):
            aj, ak = self.A[j], self.A[k]
            out[(j, k)] = (fro(commutator(aj, ak)),
                           max(1.0, fro(aj) * fro(ak)))
        return out

    def dissipativity_margins(self):
        return [float(np.linalg.eigvalsh(hermitian_part(imag_part(a)))[0])
                if self.dim_h else 0.0 for a in self.A]

    def validate(self, tol_commute=DEFAULT_TOL, tol_psd=PSD_TOL):
        """Raise unless the tuple commutes and every member is dissipative."""
        for (j, k), (res, scale) in self.commutator_residuals().items():
            if res > tol_commute * scale:
                raise NonCommuting(
                    f"[A_{j+1}, A_{k+1}] has norm {res:.3e} > "
                    f"{tol_commute * scale:.3e}")
        for j, margin in enumerate(self.dissipativity_margins()):
            scale = max(1.0, fro(self.A[j]))
            if margin < -tol_psd * scale:
                raise NonDissipative(
                    f"(A_{j+1} - A_{j+1}^*)/i has eigenvalue {margin:.3e}")
        return self


def _antisym(g, d, m):
    """Full antisymmetric array built from the strictly upper entries."""
    g = np.asarray(g, dtype=complex)
    if g.shape != (d, d, m, m):
        raise DimensionMismatch(f"gamma must have shape {(d, d, m, m)}, "
                                f"got {g.shape}")
    out = np.zeros_like(g)
    for j, k in _pairs(d):
        out[j, k] = g[j, k]
        out[k, j] = -g[j, k]
    return out


@dataclass(frozen=True)
class Vessel:
    """Vessel data ``(A_j, Phi, sigma_j, gamma_jk, gamma_star_jk)``.

    ``gamma`` and ``gamma_star`` are ``d x d x m x m`` arrays.  Only the
    entries with ``j < k`` are read; the lower triangle is rebuilt as their
    negatives and the diagonal is zero, so antisymmetry is exact.
    """

    A: np.ndarray
    Phi: np.ndarray
    sigma: np.ndarray
    gamma: np.ndarray
    gamma_star: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.A, dtype=complex)
        phi = np.asarray(self.Phi, dtype=complex)
        sig = np.asarray(self.sigma, dtype=complex)
        if a.ndim != 3 or a.shape[1] != a.shape[2]:
            raise DimensionMismatch(f"A must be d x n x n, got {a.shape}")
        d, n = a.shape[0], a.shape[1]
        if phi.ndim != 2 or phi.shape[1] != n:
            raise DimensionMismatch(f"Phi must be m x {n}, got {phi.shape}")
        m = phi.shape[0]
        if sig.shape != (d, m, m):
            raise DimensionMismatch(f"sigma must be {(d, m, m)}, got {sig.shape}")
        object.__setattr__(self, "A", _frozen(a))
        object.__setattr__(self, "Phi", _frozen(phi))
        object.__setattr__(self, "sigma", _frozen(sig))
        object.__setattr__(self, "gamma", _frozen(_antisym(self.gamma, d, m)))
        object.__setattr__(self, "gamma_star",
                           _frozen(_antisym(self.gamma_star, d, m)))

    @classmethod
    def from_pairs(cls, A, Phi, sigma, gamma, gamma_star):
        """Build from dicts ``{(j, k): matrix}`` with ``j < k``."""
        A = np.asarray(A, dtype=complex)
        d = A.shape[0]
        m = np.asarray(Phi).shape[0]
        g = np.zeros((d, d, m, m), dtype=complex)
        gs = np.zeros_like(g)
        for (j, k), val in dict(gamma).items():
            g[j, k] = val
        for (j, k), val in dict(gamma_star).items():
            gs[j, k] = val
        return cls(A, Phi, sigma, g, gs)

    @property
    def d(self):
        return self.A.shape[0]

    @property
    def dim_h(self):
        return self.A.shape[1]

    @property
    def dim_e(self):
        return self.Phi.shape[0]

    @property
    def tuple(self):
        return CommutingTuple(self.A)

    def sigma_at(self, xi):
        xi = np.asarray(xi, dtype=float)
        return np.tensordot(xi, self.sigma, axes=1)

    def generator(self, t):
        """The matrix ``t . A = sum_j t_j A_j``."""
        t = np.asarray(t, dtype=float)
        return np.tensordot(t, self.A, axes=1)

    def semigroup(self, t):
        """``exp(i t . A)``."""
        return expm(1j * self.generator(t))

    def replace(self, **changes):
        data = {k: getattr(self, k) for k in
                ("A", "Phi", "sigma", "gamma", "gamma_star")}
        data.update(changes)
        return Vessel(**data)

    def array_equal(self, other):
        return all(np.array_equal(getattr(self, k), getattr(other, k))
                   for k in ("A", "Phi", "sigma", "gamma", "gamma_star"))

    def allclose(self, other, atol=1e-12):
        return all(np.allclose(getattr(self, k), getattr(other, k), atol=atol,
                               rtol=0)
                   for k in ("A", "Phi", "sigma", "gamma", "gamma_star"))


@dataclass(frozen=True)
class NormalizedPencil:
    """Hermitian pencil ``alpha_j, beta_j`` with ``alpha_0 = I``, ``beta_0 = 0``.

    ``origin_direction`` is the direction whose sigma was normalized to the
    identity.  ``transform`` is the real coordinate change that maps the
    first unit vector to that direction; pencil coordinates ``t'`` relate to
    original coordinates by ``t = transform @ t'``.
    """

    alpha: np.ndarray
    beta: np.ndarray
    origin_direction: np.ndarray = None
    transform: np.ndarray = None

    def __post_init__(self):
        al = np.array(self.alpha, dtype=complex)
        be = np.array(self.beta, dtype=complex)
        if al.ndim != 3 or al.shape != be.shape or al.shape[1] != al.shape[2]:
            raise DimensionMismatch("alpha and beta must both be d x m x m")
        d, m = al.shape[0], al.shape[1]
        al[0] = np.eye(m)
        be[0] = 0.0
        object.__setattr__(self, "alpha", _frozen(al))
        object.__setattr__(self, "beta", _frozen(be))
        xi0 = (np.eye(d)[0] if self.origin_direction is None
               else np.asarray(self.origin_direction, dtype=float))
        T = (np.eye(d) if self.transform is None
             else np.asarray(self.transform, dtype=float))
        xi0 = xi0.copy()
        T = T.copy()
        xi0.setflags(write=False)
        T.setflags(write=False)
        object.__setattr__(self, "origin_direction", xi0)
        object.__setattr__(self, "transform", T)

    @property
    def d(self):
        return self.alpha.shape[0]

    @property
    def dim_e(self):
        return self.alpha.shape[1]

    def alpha_at(self, x):
        return np.tensordot(np.asarray(x, dtype=float), self.alpha, axes=1)

    def beta_at(self, x):
        return np.tensordot(np.asarray(x, dtype=float), self.beta, axes=1)

    def matrix(self, s, x):
        """``s alpha(x) + beta(x)``; ``s`` may be an array (batched)."""
        s = np.asarray(s, dtype=float)
        return s[..., None, None] * self.alpha_at(x) + self.beta_at(x)

    def commutativity_report(self, tol=DEFAULT_TOL, samples=(0.0, 1.0, -1.0, 0.7310585786300049)):
        entries = []
        for s in samples:
            for j, k in _pairs(self.d):
                mj = s * self.alpha[j] + self.beta[j]
                mk = s * self.alpha[k] + self.beta[k]
                entries.append(_entry(
                    f"pencil commutator s={s:g} [{j+1},{k+1}]",
                    commutator(mj, mk), tol, 2 * fro(mj) * fro(mk)))
        return ConditionReport("pencil commutativity", tuple(entries))

    def hermiticity_residual(self):
        return max([fro(x - dagger(x)) for x in self.alpha] +
                   [fro(x - dagger(x)) for x in self.beta] + [0.0])


# ---------------------------------------------------------------------------
# Strict embedding and basic checks
# ---------------------------------------------------------------------------

def make_strict_vessel(tup, rank_tol=DEFAULT_TOL, tol_commute=DEFAULT_TOL,
                       tol_psd=PSD_TOL):
    """Embed a commuting dissipative tuple into its strict vessel.

    The signal space is the span of the ranges of ``(A_j - A_j^*)/i``.  When
    that span is all of ``H`` the standard basis is kept (``Phi = I``);
    otherwise an orthonormal basis ``Q`` from the SVD is used and
    ``Phi = Q^*``.
    """
    if not isinstance(tup, CommutingTuple):
        tup = CommutingTuple(tup)
    tup.validate(tol_commute, tol_psd)
    A = tup.A
    d, n = tup.d, tup.dim_h
    imag = np.stack([imag_part(a) for a in A]) if d else np.zeros((0, n, n))
    stacked = np.concatenate(list(imag), axis=1) if d else np.zeros((n, 0))
    Q, rank = orth_range(stacked, rank_tol)
    if rank == n:
        Q = np.eye(n, dtype=complex)
    if rank == 0:
        warnings.warn("all operators are selfadjoint; signal space is empty",
                      DegenerateEmbeddingWarning, stacklevel=2)
    Qh = dagger(Q)
    sigma = np.stack([hermitian_part(Qh @ s @ Q) for s in imag])
    m = Q.shape[1]
    gamma = np.zeros((d, d, m, m), dtype=complex)
    gamma_star = np.zeros_like(gamma)
    for j, k in _pairs(d):
        aj, ak = A[j], A[k]
        g = (aj @ dagger(ak) - ak @ dagger(aj)) / 1j
        # sign fixed by the output vessel condition
        gs = (dagger(ak) @ aj - dagger(aj) @ ak) / 1j
        gamma[j, k] = hermitian_part(Qh @ g @ Q)
        gamma_star[j, k] = hermitian_part(Qh @ gs @ Q)
    return Vessel(A, Qh, sigma, gamma, gamma_star)


def _check_dims(v):
    d, n, m = v.d, v.dim_h, v.dim_e
    if v.A.shape != (d, n, n) or v.Phi.shape != (m, n) or \
            v.sigma.shape != (d, m, m) or v.gamma.shape != (d, d, m, m):
        raise DimensionMismatch("inconsistent vessel dimensions")


def check_vessel(v, tol=DEFAULT_TOL):
    """Residuals of every defining identity of a vessel."""
    _check_dims(v)
    A, Phi, sig, gam, gst = v.A, v.Phi, v.sigma, v.gamma, v.gamma_star
    Phis = dagger(Phi)
    nphi = fro(Phi)
    entries = []
    for j in range(v.d):
        entries.append(_entry(f"hermitian sigma[{j+1}]",
                              sig[j] - dagger(sig[j]), tol, fro(sig[j])))
    for j, k in _pairs(v.d):
        lab = f"[{j+1},{k+1}]"
        entries.append(_entry(f"hermitian gamma{lab}",
                              gam[j, k] - dagger(gam[j, k]), tol, fro(gam[j, k])))
        entries.append(_entry(f"hermitian gamma_star{lab}",
                              gst[j, k] - dagger(gst[j, k]), tol,
                              fro(gst[j, k])))
    anti = max([fro(gam[j, k] + gam[k, j]) + fro(gst[j, k] + gst[k, j])
                for j in range(v.d) for k in range(v.d)] + [0.0])
    entries.append(ConditionResidual("antisymmetry gamma, gamma_star", anti, 0.0))
    for j, k in _pairs(v.d):
        entries.append(_entry(f"commutativity A[{j+1},{k+1}]",
                              commutator(A[j], A[k]), tol,
                              2 * fro(A[j]) * fro(A[k])))
    for k in range(v.d):
        rhs = 1j * Phis @ sig[k] @ Phi
        entries.append(_entry(f"colligation[{k+1}]",
                              A[k] - dagger(A[k]) - rhs, tol,
                              2 * fro(A[k]), fro(rhs)))
    for j, k in _pairs(v.d):
        lab = f"[{j+1},{k+1}]"
        t1 = sig[j] @ Phi @ dagger(A[k])
        t2 = sig[k] @ Phi @ dagger(A[j])
        t3 = gam[j, k] @ Phi
        entries.append(_entry(f"input vessel condition{lab}", t1 - t2 - t3,
                              tol, fro(t1), fro(t2), fro(t3)))
        o1 = sig[j] @ Phi @ A[k]
        o2 = sig[k] @ Phi @ A[j]
        o3 = gst[j, k] @ Phi
        entries.append(_entry(f"output vessel condition{lab}", o1 - o2 - o3,
                              tol, fro(o1), fro(o2), fro(o3)))
        l1 = sig[j] @ Phi @ Phis @ sig[k]
        l2 = sig[k] @ Phi @ Phis @ sig[j]
        entries.append(_entry(f"linkage{lab}",
                              gst[j, k] - gam[j, k] - 1j * (l1 - l2), tol,
                              fro(gst[j, k]), fro(gam[j, k]), fro(l1), fro(l2)))
    notes = ("empty signal space; conditions hold vacuously",) if v.dim_e == 0 else ()
    if nphi == 0.0 and v.dim_e:
        notes += ("Phi vanishes",)
    return ConditionReport("vessel conditions", tuple(entries), notes)


# ---------------------------------------------------------------------------
# Coordinate changes, adjoint, cone
# ---------------------------------------------------------------------------

def coordinate_change(v, T, tol=1e-12):
    """Vessel in the coordinates ``t = T t'``.

    ``A'_j = sum_i T_ij A_i`` (likewise sigma) and
    ``gamma'_jk = sum_{p<q} (T_pj T_qk - T_pk T_qj) gamma_pq``.
    """
    T = np.asarray(T, dtype=float)
    d = v.d
    if T.shape != (d, d):
        raise DimensionMismatch(f"T must be {d} x {d}")
    scale = max(1.0, float(np.max(np.abs(T)))) ** d if d else 1.0
    if d and abs(np.linalg.det(T)) <= tol * scale:
        raise SingularTransform(f"|det T| = {abs(np.linalg.det(T)):.3e}")
    A = np.einsum("ij,iab->jab", T, v.A)
    sig = np.einsum("ij,iab->jab", T, v.sigma)
    m = v.dim_e
    g = np.zeros((d, d, m, m), dtype=complex)
    gs = np.zeros_like(g)
    for j, k in _pairs(d):
        for p, q in _pairs(d):
            minor = T[p, j] * T[q, k] - T[p, k] * T[q, j]
            if minor != 0.0:
                g[j, k] += minor * v.gamma[p, q]
                gs[j, k] += minor * v.gamma_star[p, q]
    return Vessel(A, v.Phi, sig, g, gs)


def direction_transform(xi):
    """A real invertible matrix whose first column is ``xi``.

    The remaining columns are unit vectors, chosen so that the determinant
    equals ``+-xi_p`` with ``|xi_p|`` maximal.
    """
    xi = np.asarray(xi, dtype=float)
    d = xi.size
    if not np.any(xi):
        raise SingularTransform("direction must be nonzero")
    p = int(np.argmax(np.abs(xi)))
    T = np.eye(d)
    T[:, p] = xi
    T[:, [0, p]] = T[:, [p, 0]]
    return T


def adjoint_vessel(v):
    """The adjoint vessel ``(-Phi, A^*, -sigma, -gamma_star, -gamma)``.

    The input and output families trade places: the adjoint's ``gamma`` is
    ``-gamma_star`` and its ``gamma_star`` is ``-gamma``.  Applying the map
    twice returns the original arrays bit for bit.
    """
    return Vessel(dagger(v.A), -v.Phi, -v.sigma, -v.gamma_star, -v.gamma)


def pos_cone_margin(v, xi):
    """Smallest eigenvalue of ``sigma(xi)`` (``inf`` for an empty signal space)."""
    if v.dim_e == 0:
        return float("inf")
    return float(np.linalg.eigvalsh(hermitian_part(v.sigma_at(xi)))[0])


# ---------------------------------------------------------------------------
# VR conditions
# ---------------------------------------------------------------------------

def _pivot_inverse(s, tol, label):
    smin = np.linalg.svd(s, compute_uv=False)[-1] if s.size else 1.0
    if s.size and smin <= tol * max(opnorm(s), 1e-300):
        raise SingularSigma(f"{label} has smallest singular value {smin:.3e}")
    return np.linalg.inv(s) if s.size else s


def _vr_entries(sig, gam, p, tol, tag):
    """VR residuals with pivot index ``p`` for one gamma family."""
    d = sig.shape[0]
    inv = _pivot_inverse(sig[p], tol, f"sigma[{p+1}]")
    cond = max(1.0, opnorm(sig[p])) * opnorm(inv) if sig[p].size else 1.0
    others = [j for j in range(d) if j != p]
    alpha = {j: inv @ sig[j] for j in others}
    beta = {j: inv @ gam[p, j] for j in others}
    entries = []
    for j, k in itertools.combinations(others, 2):
        lab = f"[{j+1},{k+1}]"
        aj, ak, bj, bk = alpha[j], alpha[k], beta[j], beta[k]
        entries.append(_entry(f"{tag}commutation alpha{lab}", commutator(aj, ak),
                              tol, 2 * fro(aj) * fro(ak)))
        entries.append(_entry(f"{tag}commutation beta{lab}", commutator(bj, bk),
                              tol, 2 * fro(bj) * fro(bk)))
        t1 = sig[j] @ inv @ gam[p, k]
        t2 = sig[k] @ inv @ gam[p, j]
        fourth = _entry(f"{tag}additional condition{lab}", gam[j, k] - t1 + t2,
                        tol, fro(gam[j, k]), fro(t1), fro(t2))
        mixed = commutator(ak, bj) - commutator(aj, bk)
        mscale = 2 * (fro(ak) * fro(bj) + fro(aj) * fro(bk))
        if fourth.passed:
            # Subtracting the adjoint of the additional condition gives the
            # mixed one after multiplying by sigma_p^{-1}.
            bound = 2 * cond * fourth.tolerance + tol * max(1.0, mscale)
            third = ConditionResidual(
                f"{tag}mixed commutation{lab}", fro(mixed),
                max(tol * max(1.0, mscale), bound), redundant=True,
                note="implied by the additional condition")
        else:
            third = _entry(f"{tag}mixed commutation{lab}", mixed, tol, mscale)
        entries.extend([third, fourth])
    return entries


def _resolve_direction(v, direction):
    """Return (vessel in pivot coordinates, pivot index, label)."""
    if np.ndim(direction) == 0:
        p = int(direction)
        if not 0 <= p < v.d:
            raise DimensionMismatch(f"direction index {p} out of range")
        return v, p, f"e_{p+1}"
    xi = np.asarray(direction, dtype=float)
    if xi.shape != (v.d,):
        raise DimensionMismatch(f"direction must have length {v.d}")
    return coordinate_change(v, direction_transform(xi)), 0, \
        "xi=(" + ",".join(f"{x:g}" for x in xi) + ")"


def check_vr(v, direction=0, tol=DEFAULT_TOL):
    """VR conditions of the input family in the given direction.

    ``direction`` is either a coordinate index or a real vector; a vector is
    first moved to the first unit vector by :func:`direction_transform`.
    For ``d = 2`` there are no index pairs and the report passes vacuously.
    """
    w, p, label = _resolve_direction(v, direction)
    if w.dim_e == 0:
        return ConditionReport(f"VR in direction {label}", (),
                               ("empty signal space",))
    entries = _vr_entries(w.sigma, w.gamma, p, tol, "")
    notes = () if entries else ("no index pairs; holds vacuously",)
    return ConditionReport(f"VR in direction {label}", tuple(entries), notes)


def check_vr_star(v, tol=DEFAULT_TOL, direction=0):
    """VR conditions of the output family ``gamma_star``."""
    w, p, label = _resolve_direction(v, direction)
    if w.dim_e == 0:
        return ConditionReport(f"VR* in direction {label}", (),
                               ("empty signal space",))
    entries = _vr_entries(w.sigma, w.gamma_star, p, tol, "output ")
    notes = () if entries else ("no index pairs; holds vacuously",)
    return ConditionReport(f"VR* in direction {label}", tuple(entries), notes)


def dissipative_embedding_report(v, tol=DEFAULT_TOL,
                                 eps_list=(1e-2, 1e-4, 1e-6)):
    """VR together with cone membership of ``(1,...,1)`` and every ``e_j``."""
    d = v.d
    ones = np.ones(d)
    entries = []
    notes = []
    margin = pos_cone_margin(v, ones)
    scale = max(1.0, opnorm(v.sigma_at(ones))) if v.dim_e else 1.0
    entries.append(ConditionResidual("Pos nonempty at (1,...,1)", -margin,
                                     -tol * scale, strict=True,
                                     note=f"margin {margin:.3e}"))
    if margin > tol * scale:
        direction = ones
    else:
        invertible = [j for j in range(d) if v.dim_e == 0 or
                      np.linalg.svd(v.sigma[j], compute_uv=False)[-1] >
                      tol * max(opnorm(v.sigma[j]), 1e-300)]
        direction = invertible[0] if invertible else None
    if direction is None:
        entries.append(ConditionResidual("VR", float("inf"), 0.0,
                                         note="no invertible direction"))
    else:
        try:
            vr = check_vr(v, direction, tol)
            entries.extend(ConditionResidual("VR: " + e.name, e.value,
                                             e.tolerance, e.strict,
                                             e.redundant, e.note) for e in vr)
            notes.extend(vr.notes)
        except SingularSigma as exc:
            entries.append(ConditionResidual("VR", float("inf"), 0.0,
                                             note=str(exc)))
    for j in range(d):
        margins = [pos_cone_margin(v, np.eye(d)[j] + eps * ones)
                   for eps in eps_list]
        worst = min(margins)
        note = "margins " + ", ".join(f"{m:.2e}" for m in margins)
        if worst > 0 and len(margins) > 1:
            ratio = margins[-1] / margins[0]
            if ratio < 10 * eps_list[-1] / eps_list[0]:
                note += "; extrapolation: boundary direction"
        entries.append(ConditionResidual(f"e_{j+1} in closure(Pos)", -worst,
                                         0.0, strict=True, note=note))
    return ConditionReport("dissipative embedding", tuple(entries), tuple(notes))


# ---------------------------------------------------------------------------
# Normalization and completion
# ---------------------------------------------------------------------------

def normalize(v, xi0=None, tol=DEFAULT_TOL):
    """Move ``xi0`` to the first axis and rescale so that ``sigma_1 = I``.

    Returns the normalized vessel and its input pencil.
    """
    d = v.d
    xi0 = np.eye(d)[0] if xi0 is None else np.asarray(xi0, dtype=float)
    G = v.sigma_at(xi0)
    margin = pos_cone_margin(v, xi0)
    if v.dim_e and margin <= tol * max(1.0, opnorm(G)):
        raise NotInCone(f"lambda_min(sigma(xi0)) = {margin:.3e}")
    T = np.eye(d) if np.array_equal(xi0, np.eye(d)[0]) else direction_transform(xi0)
    w = coordinate_change(v, T) if not np.array_equal(T, np.eye(d)) else v
    half, inv_half = psd_sqrt_pair(w.sigma[0], tol)
    sig = inv_half @ w.sigma @ inv_half
    sig = hermitian_part(sig)
    sig[0] = np.eye(v.dim_e)
    g = inv_half @ w.gamma @ inv_half
    gs = inv_half @ w.gamma_star @ inv_half
    nv = Vessel(w.A, half @ w.Phi, sig, g, gs)
    return nv, input_pencil(nv, xi0, T)


def input_pencil(v, origin_direction=None, transform=None):
    """Pencil ``alpha_j = sigma_j``, ``beta_j = gamma_1j`` of a vessel with
    ``sigma_1 = I``."""
    return NormalizedPencil(hermitian_part(v.sigma),
                            hermitian_part(v.gamma[0]),
                            origin_direction, transform)


def output_pencil(v, origin_direction=None, transform=None):
    """Output-side pencil ``alpha_j = sigma_j``, ``beta_j = gamma_star_1j``."""
    return NormalizedPencil(hermitian_part(v.sigma),
                            hermitian_part(v.gamma_star[0]),
                            origin_direction, transform)


def complete_partial_vessel(A, Phi, sigma, gamma_1j, tol=DEFAULT_TOL):
    """Complete ``(A, Phi, sigma, gamma_1j)`` to a VR vessel.

    ``gamma_jk`` for ``j, k >= 2`` comes from the additional condition and
    every ``gamma_star`` from the linkage condition.
    """
    tup = A if isinstance(A, CommutingTuple) else CommutingTuple(A)
    A = tup.A
    Phi = as_matrix(Phi)
    sigma = np.asarray(sigma, dtype=complex)
    d, m = tup.d, Phi.shape[0]
    g1 = [as_matrix(g) for g in gamma_1j]
    if len(g1) != d - 1 or sigma.shape != (d, m, m):
        raise DimensionMismatch("need d sigmas and d-1 gamma_1j matrices")
    for (j, k), (res, scale) in tup.commutator_residuals().items():
        if res > tol * scale:
            raise PreconditionResidual(f"commutativity A[{j+1},{k+1}]", res,
                                       tol * scale)
    try:
        inv = _pivot_inverse(sigma[0], tol, "sigma[1]")
    except SingularSigma as exc:
        raise PreconditionResidual("sigma_1 invertible", float("inf"), tol) from exc
    gamma = np.zeros((d, d, m, m), dtype=complex)
    for j in range(1, d):
        gamma[0, j] = g1[j - 1]
    Phis = dagger(Phi)
    checks = []
    for k in range(d):
        rhs = 1j * Phis @ sigma[k] @ Phi
        checks.append(_entry(f"colligation[{k+1}]", A[k] - dagger(A[k]) - rhs,
                             tol, 2 * fro(A[k]), fro(rhs)))
    for k in range(1, d):
        t1 = sigma[0] @ Phi @ dagger(A[k])
        t2 = sigma[k] @ Phi @ dagger(A[0])
        t3 = gamma[0, k] @ Phi
        checks.append(_entry(f"input vessel condition[1,{k+1}]", t1 - t2 - t3,
                             tol, fro(t1), fro(t2), fro(t3)))
    alpha = {j: inv @ sigma[j] for j in range(1, d)}
    beta = {j: inv @ gamma[0, j] for j in range(1, d)}
    for j, k in itertools.combinations(range(1, d), 2):
        lab = f"[{j+1},{k+1}]"
        aj, ak, bj, bk = alpha[j], alpha[k], beta[j], beta[k]
        checks.append(_entry(f"commutation alpha{lab}", commutator(aj, ak), tol,
                             2 * fro(aj) * fro(ak)))
        checks.append(_entry(f"commutation beta{lab}", commutator(bj, bk), tol,
                             2 * fro(bj) * fro(bk)))
        checks.append(_entry(f"mixed commutation{lab}",
                             commutator(ak, bj) - commutator(aj, bk), tol,
                             2 * (fro(ak) * fro(bj) + fro(aj) * fro(bk))))
    for e in checks:
        if not e.passed:
            raise PreconditionResidual(e.name, e.value, e.tolerance)
    for j, k in itertools.combinations(range(1, d), 2):
        gamma[j, k] = hermitian_part(sigma[j] @ inv @ gamma[0, k] -
                                     sigma[k] @ inv @ gamma[0, j])
    gamma_star = np.zeros_like(gamma)
    for j, k in _pairs(d):
        link = sigma[j] @ Phi @ Phis @ sigma[k] - sigma[k] @ Phi @ Phis @ sigma[j]
        gamma_star[j, k] = hermitian_part(gamma[j, k] + 1j * link)
    return Vessel(A, Phi, sigma, gamma, gamma_star)


def weakly_strict_report(v, tol=DEFAULT_TOL):
    """Common kernel ``W`` of the maps ``Phi^* sigma_j``.

    Returns ``(weakly_strict, basis)`` where ``basis`` is an ``m x k``
    orthonormal basis of ``W`` (``k = 0`` when weakly strict).
    """
    m = v.dim_e
    if m == 0:
        return True, np.zeros((0, 0), dtype=complex)
    stacked = np.concatenate([dagger(v.Phi) @ s for s in v.sigma], axis=0)
    W = null_space(stacked, tol)
    return W.shape[1] == 0, W


# ---------------------------------------------------------------------------
# Cayley layer
# ---------------------------------------------------------------------------

def cayley_cogenerator(A, tol=1e-14):
    """Cogenerator ``T = (A - iI)(A + iI)^{-1}`` of ``exp(i t A)``."""
    A = as_matrix(A)
    n = A.shape[0]
    shifted = A + 1j * np.eye(n)
    s = np.linalg.svd(shifted, compute_uv=False)
    if n and s[-1] <= tol * max(s[0], 1.0):
        raise SingularShift(f"A + iI has smallest singular value {s[-1]:.3e}")
    return np.linalg.solve(shifted.T, (A - 1j * np.eye(n)).T).T


def cogenerator_limit(A, s):
    """``phi_s(exp(isA))`` with ``phi_s(z) = (z - 1 + s)/(z - 1 - s)``.

    Tends to the cogenerator as ``s -> 0+`` at rate ``O(s)``.
    """
    A = as_matrix(A)
    n = A.shape[0]
    C = expm(1j * s * A)
    eye = np.eye(n)
    num = C - eye + s * eye
    den = C - eye - s * eye
    return np.linalg.solve(den.T, num.T).T
