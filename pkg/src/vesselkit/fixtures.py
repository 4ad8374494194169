"""Seeded fixture families: commuting dissipative tuples and special vessels."""

import functools

import numpy as np

from ._linalg import dagger, hermitian_part
from .exceptions import RetryExhausted, VesselError
from .vessel import CommutingTuple, Vessel, make_strict_vessel, normalize

KIND_ALIASES = {"tensor-doubly-commuting": "tensor", "jordan": "jordan",
                "random-dissipative-pair": "polynomial", "decoupled-W": "decoupled"}


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_hermitian(n, rng, scale=1.0):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * hermitian_part(z) / np.sqrt(2 * n)


def random_dissipative(n, seed=None, margin=0.2, scale=1.0):
    """``H + i P`` with Hermitian ``H`` and ``P >= margin``."""
    rng = _rng(seed)
    H = random_hermitian(n, rng, scale)
    B = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2 * n)
    P = 0.5 * scale * B @ dagger(B) + margin * np.eye(n)
    return H + 1j * P


def _kron_all(mats):
    return functools.reduce(np.kron, mats)


def tensor_tuple(factors):
    """``A_j = I x ... x F_j x ... x I``: a doubly commuting tuple."""
    dims = [f.shape[0] for f in factors]
    out = []
    for j, f in enumerate(factors):
        mats = [np.eye(n) for n in dims]
        mats[j] = f
        out.append(_kron_all(mats))
    return CommutingTuple(np.array(out))


def tensor_fixture(d=2, size=2, seed=0, margin=0.3, scale=1.0):
    """Doubly commuting tuple of strictly dissipative ``size x size`` factors."""
    rng = _rng(seed)
    return tensor_tuple([random_dissipative(size, rng, margin, scale)
                         for _ in range(d)])


def jordan_fixture(n=3, d=2, seed=0, margin=1.0):
    """Polynomials of ``J + i P`` (Jordan block ``J``, ``P >= margin I``),
    shifted by ``i c_j`` to make each dissipative."""
    rng = _rng(seed)
    J = np.diag(np.full(n, rng.normal())) + np.diag(np.ones(n - 1), 1)
    B = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2 * n)
    M = J + 1j * (B @ dagger(B) + margin * np.eye(n))
    return _polynomial_tuple(M, d, rng)


def polynomial_fixture(n=3, d=2, seed=0):
    """Random polynomials of one random matrix, shifted to be dissipative."""
    rng = _rng(seed)
    M = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2 * n)
    return _polynomial_tuple(M, d, rng)


def _polynomial_tuple(M, d, rng, margin=0.1):
    n = M.shape[0]
    out = []
    for j in range(d):
        coeffs = rng.normal(size=3) + 1j * rng.normal(size=3)
        if j == 0:
            coeffs = np.array([0.0, 1.0, 0.0])
        P = coeffs[0] * np.eye(n) + coeffs[1] * M + coeffs[2] * M @ M
        low = float(np.min(np.linalg.eigvalsh((P - dagger(P)) / 2j)))
        out.append(P + 1j * (max(0.0, -low) + margin) * np.eye(n))
    return CommutingTuple(np.array(out))


def commuting_fixture(seed, max_n=8, max_d=3):
    """One tuple from a family picked by ``seed`` (``n <= max_n``, ``d <= max_d``)."""
    rng = np.random.default_rng(seed)
    kind = ("tensor", "jordan", "polynomial")[seed % 3]
    d = int(rng.integers(1, max_d + 1))
    if kind == "tensor":
        size = 2 if d == 3 else int(rng.integers(1, 3 if d == 2 else max_n + 1))
        size = max(size, 1)
        return tensor_fixture(d, size, rng)
    n = int(rng.integers(1, max_n + 1))
    if kind == "jordan":
        return jordan_fixture(n, d, rng)
    return polynomial_fixture(n, d, rng)


def strict_tensor_vessel(d=2, size=2, seed=0, margin=0.3, scale=1.0):
    return make_strict_vessel(tensor_fixture(d, size, seed, margin, scale))


def scalar_vessel(a):
    """The ``1 x 1`` vessel of a dissipative number ``a`` (``Im a > 0``)."""
    return make_strict_vessel(CommutingTuple(np.array([[[a]]], dtype=complex)))


def decoupled_w_vessel(seed=0, coupling=False, size=2, z_dim=1):
    """A two-operator vessel ``E_0 + Z`` with ``sigma_1 = I``.

    The state space of a strict tensor vessel ``E_0`` (``Phi_0`` square and
    invertible) is kept; the signal space gains a block ``Z`` with
    ``Phi = [Phi_0; 0]`` and ``sigma_j = [[s0_j, C_j], [C_j^*, S_j]]``.  The
    added blocks of ``gamma`` follow from the input condition and
    ``gamma_star`` from the linkage condition.  With ``coupling=False``
    (``C_j = 0``) every vector of ``Z`` spans a pencil-invariant subspace of
    the common kernel ``W``; with ``coupling=True`` (``C_2 = s0_2 C_1``,
    ``|C_1| = 0.3``) the coupling blocks move ``W`` off ``Z``.
    """
    rng = _rng(seed)
    base = make_strict_vessel(tensor_fixture(2, size, rng))
    base, _ = normalize(base)
    m0, mz = base.dim_e, z_dim
    m = m0 + mz
    Phi0 = base.Phi
    Phi = np.vstack([Phi0, np.zeros((mz, base.dim_h))])
    if coupling:
        C1 = rng.normal(size=(m0, mz)) + 1j * rng.normal(size=(m0, mz))
        C1 *= 0.3 / np.linalg.norm(C1, 2)  # keeps sigma_1 > 0
        C = [C1, base.sigma[1] @ C1]
    else:
        C = [np.zeros((m0, mz)), np.zeros((m0, mz))]
    S = [np.eye(mz), random_hermitian(mz, rng) + 2 * np.eye(mz)]
    sigma = np.zeros((2, m, m), dtype=complex)
    for j in range(2):
        sigma[j, :m0, :m0] = base.sigma[j]
        sigma[j, :m0, m0:] = C[j]
        sigma[j, m0:, :m0] = dagger(C[j])
        sigma[j, m0:, m0:] = S[j]
    A1, A2 = base.A
    # input condition: sigma_1 Phi A_2^* - sigma_2 Phi A_1^* = gamma_12 Phi
    g0 = base.gamma[0, 1]
    zrow = (dagger(C[0]) @ Phi0 @ dagger(A2) -
            dagger(C[1]) @ Phi0 @ dagger(A1)) @ np.linalg.inv(Phi0)
    gamma12 = np.zeros((m, m), dtype=complex)
    gamma12[:m0, :m0] = g0
    gamma12[m0:, :m0] = zrow
    gamma12[:m0, m0:] = dagger(zrow)
    gamma12[m0:, m0:] = random_hermitian(mz, rng)
    link = 1j * (sigma[0] @ Phi @ dagger(Phi) @ sigma[1] -
                 sigma[1] @ Phi @ dagger(Phi) @ sigma[0])
    gamma_star12 = gamma12 + link
    return Vessel.from_pairs(np.array([A1, A2]), Phi, sigma,
                             {(0, 1): gamma12}, {(0, 1): gamma_star12})


MAX_TRIES = 100


def _validated(make, seed):
    """First tuple from ``make(rng)`` that is commuting and dissipative; the
    generator is seeded once, so the result is deterministic."""
    rng = _rng(seed)
    for _ in range(MAX_TRIES):
        tup = make(rng)
        try:
            tup.validate()
        except VesselError:
            continue
        return tup
    raise RetryExhausted(f"no valid draw in {MAX_TRIES} tries")


def fixture_by_kind(kind, seed=0, n=3, d=2, size=2, coupling=False):
    """Problem data for the CLI ``fixture`` command.

    Returns a :class:`CommutingTuple` for the tensor, Jordan and polynomial
    kinds and a :class:`Vessel` for ``decoupled-W``.
    """
    kind = KIND_ALIASES.get(kind, kind)
    if kind == "tensor":
        return _validated(lambda r: tensor_fixture(d, size, r), seed)
    if kind == "jordan":
        return _validated(lambda r: jordan_fixture(n, d, r), seed)
    if kind == "polynomial":
        return _validated(lambda r: polynomial_fixture(n, d, r), seed)
    if kind == "decoupled":
        return decoupled_w_vessel(seed, coupling, size)
    raise ValueError(f"unknown fixture kind {kind!r}; choose from {sorted(KIND_ALIASES)}")
