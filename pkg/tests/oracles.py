"""Independent reference computations used by the tests.

These re-derive quantities from their defining formulas with plain loops and
share no code with the package beyond the data containers.
"""

import itertools
import math

import numpy as np
from scipy.integrate import solve_ivp


def H(a):
    return np.conj(np.swapaxes(a, -1, -2))


def vessel_identity_residuals(A, Phi, sigma, gamma, gamma_star):
    """Largest absolute residual of each defining identity."""
    d = len(A)
    out = {"colligation": 0.0, "input": 0.0, "output": 0.0, "linkage": 0.0}
    for k in range(d):
        r = A[k] - H(A[k]) - 1j * H(Phi) @ sigma[k] @ Phi
        out["colligation"] = max(out["colligation"], np.linalg.norm(r))
    for j, k in itertools.combinations(range(d), 2):
        r_in = sigma[j] @ Phi @ H(A[k]) - sigma[k] @ Phi @ H(A[j]) - gamma[j][k] @ Phi
        r_out = sigma[j] @ Phi @ A[k] - sigma[k] @ Phi @ A[j] - gamma_star[j][k] @ Phi
        link = (gamma_star[j][k] - gamma[j][k] -
                1j * (sigma[j] @ Phi @ H(Phi) @ sigma[k] - sigma[k] @ Phi @ H(Phi) @ sigma[j]))
        out["input"] = max(out["input"], np.linalg.norm(r_in))
        out["output"] = max(out["output"], np.linalg.norm(r_out))
        out["linkage"] = max(out["linkage"], np.linalg.norm(link))
    return out


def vr_residuals(sigma, gamma):
    """Largest residual of the VR identities with pivot ``sigma_1``."""
    d = len(sigma)
    inv = np.linalg.inv(sigma[0])
    worst = 0.0
    for j, k in itertools.combinations(range(1, d), 2):
        aj, ak = inv @ sigma[j], inv @ sigma[k]
        bj, bk = inv @ gamma[0][j], inv @ gamma[0][k]
        worst = max(worst,
                    np.linalg.norm(aj @ ak - ak @ aj),
                    np.linalg.norm(bj @ bk - bk @ bj),
                    np.linalg.norm(ak @ bj - bj @ ak - aj @ bk + bk @ aj),
                    np.linalg.norm(gamma[j][k] - sigma[j] @ inv @ gamma[0][k] +
                                   sigma[k] @ inv @ gamma[0][j]))
    return worst


def expm_oracle(M):
    """Matrix exponential through an eigendecomposition (diagonalizable input)."""
    w, V = np.linalg.eig(M)
    return V @ np.diag(np.exp(w)) @ np.linalg.inv(V)


def rk_state(T, B, u_func, x0, s_end):
    """``x' = i T x - i B u(s)`` integrated by DOP853 from 0 to ``s_end``."""
    def rhs(s, x):
        return 1j * T @ x - 1j * B @ u_func(s)
    sol = solve_ivp(rhs, (0.0, s_end), np.asarray(x0, dtype=complex),
                    method="DOP853", rtol=1e-12, atol=1e-14)
    return sol.y[:, -1]


def continuous_ft(f, s, a=-60.0, b=60.0, n=200001):
    """``(1/sqrt(2 pi)) int f(t) e^{-i s t} dt`` by a dense trapezoid rule."""
    t = np.linspace(a, b, n)
    vals = f(t)
    w = np.full(n, t[1] - t[0])
    w[0] = w[-1] = 0.5 * (t[1] - t[0])
    return np.array([np.sum(w * vals * np.exp(-1j * sk * t)) for sk in np.atleast_1d(s)]) \
        / np.sqrt(2 * np.pi)


def _spectrum(f):
    """Riemann-sum Fourier transform on the grid frequencies, one dense matrix."""
    g = f.grid
    kernel = np.exp(-1j * np.outer(g.freqs, g.nodes))
    return kernel @ f.values * g.step / math.sqrt(2 * math.pi)


def brute_lambda(pencil, x, y, f, taus):
    """Direct double sum with exponentials from a general eigensolver."""
    g = f.grid
    fh = _spectrum(f)
    out = np.zeros((taus.size, f.dim_e), dtype=complex)
    for k, s in enumerate(g.freqs):
        My = s * pencil.alpha_at(y) + pencil.beta_at(y)
        Mx = s * pencil.alpha_at(x) + pencil.beta_at(x)
        wy, Vy = np.linalg.eig(My)
        wx, Vx = np.linalg.eig(Mx)
        Vxi = np.linalg.inv(Vx)
        vec = Vy @ (np.exp(1j * wy) * np.linalg.solve(Vy, fh[k]))
        c = Vxi @ vec
        out += (np.exp(1j * np.outer(taus, wx)) * c) @ Vx.T
    return out * g.dfreq / math.sqrt(2 * math.pi)
