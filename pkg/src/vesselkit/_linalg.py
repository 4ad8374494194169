"""Small dense linear-algebra helpers shared by the modules."""

import numpy as np
import scipy.linalg as sla


def dagger(a):
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(a, -1, -2))


def hermitian_part(a):
    return 0.5 * (a + dagger(a))


def imag_part(a):
    """The Hermitian matrix (a - a^*)/i."""
    return (a - dagger(a)) / 1j


def fro(a):
    return float(np.linalg.norm(a)) if np.size(a) else 0.0


def opnorm(a):
    return float(np.linalg.norm(a, 2)) if np.size(a) else 0.0


def commutator(a, b):
    return a @ b - b @ a


def as_matrix(a, dtype=complex):
    a = np.asarray(a, dtype=dtype)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {a.shape}")
    return a


def psd_sqrt_pair(g, tol):
    """Return (G^{1/2}, G^{-1/2}) of a Hermitian positive definite matrix.

    Eigenvalues below ``tol * max(1, ||G||)`` are clamped before the
    square roots are formed.
    """
    g = hermitian_part(g)
    w, u = np.linalg.eigh(g)
    floor = tol * max(1.0, float(np.max(np.abs(w))) if w.size else 1.0)
    w = np.maximum(w, floor)
    root = np.sqrt(w)
    half = (u * root) @ dagger(u)
    inv_half = (u / root) @ dagger(u)
    return hermitian_part(half), hermitian_part(inv_half)


def expm(a):
    """Matrix exponential (scaling and squaring), batched over leading axes."""
    a = np.asarray(a, dtype=complex)
    if a.shape[-1] == 0:
        return np.zeros_like(a)
    return sla.expm(a)


def orth_range(a, rtol):
    """Orthonormal basis of the numerical range of ``a`` and its rank."""
    if a.size == 0:
        return np.zeros((a.shape[0], 0), dtype=complex), 0
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[0], 0), dtype=complex), 0
    r = int(np.sum(s > rtol * s[0]))
    return u[:, :r], r


def null_space(a, rtol, atol=0.0):
    """Orthonormal basis of the numerical kernel of ``a``.

    Singular values at most ``rtol * sigma_max`` (or ``atol``) count as zero.
    """
    ncols = a.shape[1]
    if ncols == 0:
        return np.zeros((0, 0), dtype=complex)
    if a.shape[0] == 0:
        return np.eye(ncols, dtype=complex)
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    smax = s[0] if s.size else 0.0
    thresh = max(rtol * smax, atol)
    rank = int(np.sum(s > thresh)) if smax > 0 else 0
    return dagger(vh[rank:])


def unitary_exp_hermitian(h, tau=1.0):
    """exp(i tau h) for Hermitian h (batched) via eigendecomposition."""
    w, u = np.linalg.eigh(hermitian_part(h))
    return (u * np.exp(1j * tau * w)[..., None, :]) @ dagger(u)
