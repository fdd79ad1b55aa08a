import numpy as np
import pytest

from weighted_spectra.density import FamilyParams, build_family_density, constant_density, mass
from weighted_spectra.eigsolve import solve_smallest
from weighted_spectra.femassembly import (assemble_mass, assemble_stiffness, build_problem,
                                          rayleigh_quotient)
from weighted_spectra.manifold import DegenerateMeshError, Mesh, build_icosphere


@pytest.fixture(scope="module")
def family_problem(ico4):
    fld = build_family_density(ico4, FamilyParams(alpha=2.0, j=10))
    return fld, build_problem(ico4, fld)


def test_stiffness_structure(family_problem):
    _, prob = family_problem
    K = prob.stiffness
    assert abs(K - K.T).max() <= 1e-12 * abs(K).max()
    row_scale = abs(K).sum(axis=1).A1
    assert np.all(np.abs(K @ np.ones(prob.dimension)) <= 1e-10 * row_scale)
    rng = np.random.default_rng(0)
    for _ in range(20):
        u = rng.standard_normal(prob.dimension)
        assert u @ (K @ u) >= 0


def test_mass_structure(family_problem, ico4):
    fld, prob = family_problem
    d = prob.mass.diagonal()
    assert np.all(d > 0)
    assert prob.mass.nnz == prob.dimension
    assert d.sum() == pytest.approx(mass(ico4, fld), rel=1e-14)


def test_stiffness_linear_in_weight(ico3):
    ones = np.ones(ico3.n_vertices)
    K1 = assemble_stiffness(ico3, ones)
    K3 = assemble_stiffness(ico3, 3.0 * ones)
    assert abs(K3 - 3.0 * K1).max() <= 1e-14 * abs(K1).max()


def test_mass_examples(torus64, ico3):
    M = assemble_mass(torus64, np.ones(torus64.n_vertices))
    np.testing.assert_allclose(M.diagonal(), 4 * np.pi ** 2 / 64 ** 2, rtol=1e-13)
    rho = np.linspace(1, 2, ico3.n_vertices)
    assert abs(assemble_mass(ico3, 2 * rho) - 2 * assemble_mass(ico3, rho)).max() == 0
    with pytest.raises(ValueError):
        assemble_mass(ico3, np.zeros(ico3.n_vertices))
    with pytest.raises(ValueError):
        assemble_stiffness(ico3, -rho)


def test_constant_density_is_alpha_independent(ico3):
    a = build_problem(ico3, constant_density(ico3, 1.5))
    b = build_problem(ico3, constant_density(ico3, 3.0))
    ref = assemble_stiffness(ico3, np.ones(ico3.n_vertices))
    for p in (a, b):
        assert (p.stiffness != ref).nnz == 0
        assert (p.mass != a.mass).nnz == 0


def test_flat_triangle_matches_textbook_stiffness():
    # unit right triangle: P1 Laplace element matrix
    m = Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]) + 0.1, np.array([[0, 1, 2]]), kind="torus")
    K = assemble_stiffness(m, np.ones(3)).toarray()
    np.testing.assert_allclose(K, 0.5 * np.array([[2, -1, -1], [-1, 1, 0], [-1, 0, 1]]), atol=1e-15)


def test_degenerate_triangle_rejected():
    v = np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0], [0.5, 0.5, 0.0]])
    with pytest.raises(DegenerateMeshError):
        Mesh(v, np.array([[0, 1, 2], [0, 1, 3]]), kind="sphere")


def test_rayleigh_quotient_examples(ico5):
    prob = build_problem(ico5, constant_density(ico5, 2.0))
    assert rayleigh_quotient(prob, np.ones(ico5.n_vertices)) == pytest.approx(0.0, abs=1e-12)
    assert rayleigh_quotient(prob, ico5.vertices[:, 2]) == pytest.approx(2.0, rel=1e-3)
    with pytest.raises(ValueError):
        rayleigh_quotient(prob, np.zeros(ico5.n_vertices))


def test_refinement_does_not_raise_lambda1():
    lams = []
    for level in (2, 3, 4, 5):
        m = build_icosphere(level)
        lams.append(solve_smallest(build_problem(m, constant_density(m, 2.0)), 2).eigenvalues[1])
    for coarse, fine in zip(lams, lams[1:]):
        assert fine <= coarse * (1 + 1e-3)
