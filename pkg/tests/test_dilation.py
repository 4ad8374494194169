import numpy as np
import pytest
from scipy.linalg import expm

from vesselkit import (DilationOperatorConfig, GridSpec, dilation_check, embed,
                       make_strict_vessel, minimality_diagnostics, project, rho,
                       rho_one_dim)
from vesselkit.dilation import (commutativity_residual, compression_error,
                                group_law_residual, inverse_residual, isometry_residual,
                                largest_invariant_subspace, bump_vector,
                                smooth_continuation, smooth_state_vector, state_on_lines,
                                witness_orbit_check)
from vesselkit.exceptions import ConeWarning, DimensionMismatch, NotInCone, NotVR, \
    OffGridShiftWarning
from vesselkit.fixtures import (decoupled_w_vessel, jordan_fixture, random_dissipative,
                                scalar_vessel, strict_tensor_vessel)
from vesselkit.vessel import CommutingTuple

FINE = GridSpec(2048, 40.0)
COARSE = GridSpec(1024, 40.0)


@pytest.fixture(scope="module")
def cfg2():
    return DilationOperatorConfig.build(strict_tensor_vessel(2, 2, 0), COARSE)


@pytest.fixture(scope="module")
def cfg1():
    tup = CommutingTuple(random_dissipative(3, 11)[None])
    return DilationOperatorConfig.build(make_strict_vessel(tup), FINE)


def smooth_vector(cfg, seed=0):
    rng = np.random.default_rng(seed)
    n, m = cfg.vessel.dim_h, cfg.vessel.dim_e
    h = rng.normal(size=n) + 1j * rng.normal(size=n)
    bumps = [(6.0, rng.normal(size=m)), (-7.0, rng.normal(size=m) * 1j)]
    return smooth_state_vector(cfg, h) + bump_vector(cfg, bumps)


def test_embed_and_project(cfg2):
    assert embed(np.zeros(4), cfg2).norm() == 0.0
    h = np.array([1.0, -2j, 0.5, 0.0])
    vec = embed(h, cfg2)
    assert vec.norm() == np.linalg.norm(h)
    assert np.array_equal(project(vec), h)
    with pytest.raises(DimensionMismatch):
        embed(np.zeros(3), cfg2)


def test_scalar_semigroup_compression():
    cfg = DilationOperatorConfig.build(scalar_vessel(0.5j), FINE)
    h = np.array([1.0 + 0j])
    for k in (13, 26, 51):
        t = k * FINE.step
        x = project(rho_one_dim(cfg, t, embed(h, cfg)))
        assert abs(x[0] - np.exp(-t / 2)) <= 1e-12
    with pytest.warns(OffGridShiftWarning):
        x = project(rho_one_dim(cfg, 0.5, embed(h, cfg)))
    assert abs(x[0] - np.exp(-0.25)) <= 1e-6
    v0 = smooth_vector(cfg)
    assert (rho_one_dim(cfg, 0.0, v0) - v0).norm() <= 1e-12 * v0.norm()


@pytest.mark.parametrize("k", [13, 26, 51, -26])
def test_one_dim_rho_is_unitary(cfg1, k):
    t = k * FINE.step
    vec = smooth_vector(cfg1, 3)
    out = rho_one_dim(cfg1, t, vec)
    assert abs(out.norm() / vec.norm() - 1) <= 1e-6
    back = rho_one_dim(cfg1, -t, out)
    assert (back - vec).norm() <= 1e-6 * vec.norm()


def test_one_dim_group_law(cfg1):
    vec = smooth_vector(cfg1, 4)
    dt = FINE.step
    a = rho_one_dim(cfg1, 13 * dt, rho_one_dim(cfg1, 26 * dt, vec))
    b = rho_one_dim(cfg1, 39 * dt, vec)
    assert (a - b).norm() <= 1e-6 * vec.norm()


def test_one_dim_compression(cfg1):
    report = dilation_check(cfg1, [[0.5], [1.0], [2.0]], refine=False)
    assert report["max_error"] <= 1e-6
    assert dilation_check(cfg1, [[0.0]], refine=False)["max_error"] == 0.0


def test_off_grid_shift_warns(cfg1):
    vec = smooth_vector(cfg1, 1)
    with pytest.warns(OffGridShiftWarning):
        out = rho_one_dim(cfg1, 0.3 * cfg1.grid.step, vec)
    assert abs(out.norm() / vec.norm() - 1) <= 1e-4


def test_axis_rho_matches_one_dim(cfg2):
    # the samples shifted across the periodic boundary differ by construction
    vec = smooth_vector(cfg2, 2)
    g = cfg2.grid
    c = g.zero_index
    inner = np.abs(g.nodes) <= g.L / 2
    for k in (3, 25, -12):
        t = k * g.step
        a = rho(cfg2, [t, 0.0], vec).triple
        b = rho_one_dim(cfg2, t, vec).triple
        assert np.linalg.norm(a.h - b.h) <= 1e-12 * np.linalg.norm(vec.h)
        du = np.abs(a.u_future - b.u_future)[inner[c:]]
        dy = np.abs(a.y_past - b.y_past)[inner[:c + 1]]
        assert max(du.max(), dy.max()) <= 1e-8 * vec.norm()


def test_two_dim_compression(cfg2):
    h = np.array([1.0, 0.5j, -0.3, 0.2])
    assert compression_error(cfg2, [0.5, 0.5], h) <= 5e-3
    assert compression_error(cfg2, [0.0, 0.0], h) == 0.0


@pytest.mark.parametrize("t", [[0.5, 0.5], [-0.3, -0.6]])
def test_isometry_and_inverse_on_cone(cfg2, t):
    vec = smooth_vector(cfg2, 5)
    assert isometry_residual(cfg2, t, vec) <= 1e-4
    assert inverse_residual(cfg2, t, vec) <= 1e-4


def test_group_law_and_commutativity(cfg2):
    vec = smooth_vector(cfg2, 6)
    assert group_law_residual(cfg2, [0.4, 0.2], [0.3, 0.5], vec) <= 1e-4
    assert commutativity_residual(cfg2, [0.5, 0.0], [0.0, 0.5], vec) <= 1e-4


def test_cone_warning_outside_pos(cfg2):
    vec = smooth_vector(cfg2, 7)
    with pytest.warns(ConeWarning):
        isometry_residual(cfg2, [1.0, -1.0], vec)


def test_config_requires_vr_and_cone():
    tup = jordan_fixture(3, 3, 0)
    with pytest.raises(NotVR):
        DilationOperatorConfig.build(make_strict_vessel(tup), COARSE)
    with pytest.raises(NotInCone):
        DilationOperatorConfig.build(strict_tensor_vessel(2, 2, 0), COARSE, xi0=[1.0, -1.0])


def test_compression_refinement_report(cfg2):
    report = dilation_check(cfg2, [[0.5, 0.5]], h_basis=[np.eye(4)[0]])
    assert report["max_error"] <= 5e-3
    assert report["at_roundoff"] or report["order"] >= 1.8


def test_smooth_continuation_keeps_half():
    g = GridSpec(256, 10.0)
    vals = np.exp(-(g.nodes - 1.0) ** 2)[:, None] * np.array([1.0, 1j])
    c = g.zero_index
    right = smooth_continuation(vals, None, g, "right")
    assert np.array_equal(right[c:], vals[c:])
    assert np.max(np.abs(right[:c - 60])) <= 1e-12
    left = smooth_continuation(vals, None, g, "left")
    assert np.array_equal(left[:c + 1], vals[:c + 1])
    # the seam mismatch of a smooth signal shrinks at fifth order
    errs = []
    for N in (256, 512, 1024):
        gg = GridSpec(N, 10.0)
        cc = gg.zero_index
        f = np.exp(-(gg.nodes - 1.0) ** 2)[:, None]
        errs.append(abs(smooth_continuation(f, None, gg, "right")[cc - 1, 0] - f[cc - 1, 0]))
    assert np.all(np.log2(np.array(errs[:-1]) / np.array(errs[1:])) >= 4.5)


def test_state_on_axis_line(cfg2):
    h = np.array([1.0, 0.0, 0.5j, 0.0])
    traj = state_on_lines(cfg2, embed(h, cfg2), [1.0, 0.0], [0.0, 0.0], COARSE)
    g = COARSE
    A1 = cfg2.vessel.A[0]
    for k in (g.zero_index, g.zero_index + 10, g.zero_index + 40):
        s = g.nodes[k]
        assert np.allclose(traj.x[k], expm(1j * s * A1) @ h, atol=1e-10)


def test_state_on_oblique_line_refines(cfg2):
    vec = smooth_vector(cfg2, 8)
    xi, eta = np.array([1.0, 0.5]), np.array([0.0, 0.2])
    errs = []
    for N in (128, 256, 512):
        og = GridSpec(N, 2.0)
        traj = state_on_lines(cfg2, vec, xi, eta, og)
        dt = og.step
        T = cfg2.vessel.generator(xi)
        B = cfg2.vessel.Phi.conj().T @ cfg2.vessel.sigma_at(xi)
        dx = (traj.x[2:] - traj.x[:-2]) / (2 * dt)
        r = dx - 1j * traj.x[1:-1] @ T.T + 1j * traj.u.values[1:-1] @ B.T
        errs.append(np.max(np.linalg.norm(r[N // 4:3 * N // 4], axis=1)))
    slopes = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(slopes >= 1.8), slopes


def test_minimality_of_strict_vessel(cfg2):
    rep = minimality_diagnostics(cfg2)
    assert rep.weakly_strict and rep.witness.shape[1] == 0
    assert rep.verdict.startswith("minimal")


def test_decoupled_witness():
    cfg = DilationOperatorConfig.build(decoupled_w_vessel(0), COARSE)
    rep = minimality_diagnostics(cfg)
    assert not rep.weakly_strict
    assert rep.witness.shape[1] == 1
    w = rep.witness[:, 0]
    P = np.eye(w.size) - np.outer(w, w.conj())
    for M in list(cfg.pencil.alpha[1:]) + list(cfg.pencil.beta[1:]):
        assert np.linalg.norm(P @ M @ w) <= 1e-10
    x_norm, overlap = witness_orbit_check(cfg, w, [[0.5, 0.5], [1.0, 0.0], [-0.4, -0.4]])
    assert x_norm <= 1e-8 and overlap <= 1e-8


def test_invariant_subspace_iteration():
    V = np.eye(3)[:, :2]
    stays = [np.diag([1.0, 2.0, 3.0])]
    M, _ = largest_invariant_subspace(stays, V)
    assert M.shape[1] == 2
    leaks = [np.array([[0, 0, 0], [0, 0, 0], [1.0, 1.0, 0]])]
    M, _ = largest_invariant_subspace(leaks, V)
    # only e1 - e2 stays inside
    assert M.shape[1] == 1
    assert abs(abs(M[0, 0]) - abs(M[1, 0])) <= 1e-12
    escape = [np.array([[0, 0, 0], [0, 0, 0], [1.0, 2.0, 0]]),
              np.array([[0, 0, 0], [0, 0, 0], [1.0, 1.0, 0]])]
    M, _ = largest_invariant_subspace(escape, V)
    assert M.shape[1] == 0
