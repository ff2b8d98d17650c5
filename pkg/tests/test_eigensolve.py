import numpy as np
import pytest
import scipy.sparse as sp

from hbforms.assembly import GeometryMap, assemble, integrate_basis
from hbforms.eigensolve import (
    NumericalError,
    detect_spurious,
    eig_residuals,
    infsup_constant,
    maxwell_primal,
    maxwell_mixed_grad,
    maxwell_mixed_curl,
    square_spectrum,
    stokes_infsup,
    stokes_solve,
    sym_gen_eig,
)
from hbforms.hierarchy import HierarchicalComplex, LevelLadder


def test_identity_pencil():
    M = np.diag([1.0, 2.0, 3.0])
    s = sym_gen_eig(M, M)
    assert np.allclose(s.values, 1)


def test_diagonal_pencil_and_residuals():
    s = sym_gen_eig(np.diag([2.0, 8.0]), np.diag([1.0, 2.0]), vectors=True)
    assert np.allclose(s.values, [2, 4])
    assert eig_residuals(np.diag([2.0, 8.0]), np.diag([1.0, 2.0]), s).max() < 1e-13


def test_zero_counting():
    s = sym_gen_eig(np.diag([0.0, 1e-14, 1.0, 5.0]), np.eye(4))
    assert s.n_zeros == 2 and np.allclose(s.nonzero, [1, 5])


def test_non_spd_mass_raises():
    with pytest.raises(NumericalError):
        sym_gen_eig(np.eye(2), np.diag([1.0, -1.0]))


def test_square_spectrum():
    assert np.allclose(square_spectrum(8), [1, 1, 2, 4, 4, 5, 5, 8])
    assert np.allclose(square_spectrum(3, side=1.0), np.array([1, 1, 2]) * np.pi**2)


def test_detect_spurious():
    ex = square_spectrum(20)
    assert detect_spurious(ex * (1 + 1e-4), ex, 15).spurious_free
    comp = np.sort(np.concatenate([ex[:10], [3.0]]))
    rep = detect_spurious(comp, ex, 11)
    assert rep.spurious == [4]
    # a missing eigenvalue shifts nothing into spurious
    assert detect_spurious(np.delete(ex, 2), ex, 10).spurious_free


@pytest.fixture(scope="module")
def maxwell_uniform():
    hc = HierarchicalComplex(LevelLadder((3, 3), (6, 6), []), "standard")
    geom = GeometryMap((np.pi, np.pi))
    ops = {k: assemble(k, hc, geom).matrix for k in ("curlcurl", "mass_1", "grad_coupling", "curl_coupling", "mass_2")}
    return hc, geom, ops


def test_maxwell_uniform_mesh(maxwell_uniform):
    hc, geom, o = maxwell_uniform
    s_primal = maxwell_primal(o["curlcurl"], o["mass_1"])
    s_grad = maxwell_mixed_grad(o["curlcurl"], o["mass_1"], o["grad_coupling"])
    s_curl = maxwell_mixed_curl(o["curl_coupling"], o["mass_1"], o["mass_2"], integrate_basis(hc, 2, geom))
    assert s_primal.n_zeros == hc.dim(0)
    assert s_grad.n_zeros == 0 and s_curl.n_zeros == 0
    ex = square_spectrum(10)
    assert np.allclose(s_primal.nonzero[:10], ex, rtol=2e-3)
    assert np.allclose(s_primal.nonzero[:10], s_grad.nonzero[:10], rtol=1e-8)
    assert np.allclose(s_primal.nonzero[:10], s_curl.nonzero[:10], rtol=1e-8)
    assert detect_spurious(s_primal.nonzero, square_spectrum(60), 20).spurious_free


def test_infsup_hand_case():
    # B = I, A = I, Mp = I on mean-zero vectors: beta = 1
    n = 4
    f = np.ones(n)
    assert abs(infsup_constant(sp.identity(n), sp.identity(n), np.eye(n), f) - 1) < 1e-12
    assert abs(infsup_constant(2 * sp.identity(n), sp.identity(n), np.eye(n), f) - 2) < 1e-12


def test_infsup_positive_on_uniform_mesh():
    hc = HierarchicalComplex(LevelLadder((2, 2), (6, 6), []), "rotated")
    b = stokes_infsup(hc)
    assert 0.1 < b < 1.5
    assert stokes_infsup(hc, norm="sym") > 0
    with pytest.raises(ValueError):
        stokes_infsup(hc, norm="nope")
    with pytest.raises(ValueError):
        stokes_infsup(HierarchicalComplex(LevelLadder((2, 2), (4, 4), []), "standard"))


def test_zero_lid_gives_zero_flow():
    hc = HierarchicalComplex(LevelLadder((2, 2), (4, 4), []), "rotated")
    sol = stokes_solve(hc, lid={})
    assert np.abs(sol.velocity).max() < 1e-14 and np.abs(sol.pressure).max() < 1e-14


def test_cavity_flow_is_divergence_free():
    hc = HierarchicalComplex(LevelLadder((2, 2), (8, 8), []), "rotated")
    sol = stokes_solve(hc)
    pts = np.random.default_rng(0).random((50, 2))
    assert np.abs(sol.divergence(pts)).max() < 1e-10
    # mean-zero pressure
    assert abs(integrate_basis(hc, 2) @ sol.pressure) < 1e-12
    # lid drags the fluid near the top in +x
    from hbforms.assembly import evaluate_field
    u = evaluate_field(hc, 1, sol.velocity, np.array([[0.5, 0.97]]))
    assert u[0, 0] > 0.3
