import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weighted_spectra.density import (ConstantProfile, FamilyParams, RadialProfile, build_family_density,
                                      compute_c0, compute_Cj, constant_density, density_from_callback,
                                      lemma3_roots, mass, normalization)
from weighted_spectra.manifold import MeshError

mp.mp.dps = 40

P = FamilyParams(alpha=2.0, n=2, z=2.0, j=10)


def mp_c0(alpha, n, z, j):
    e = mp.e ** (alpha - 1)
    return mp.sqrt(n * (z + 1) * e * (e - mp.mpf(1) / j))


def test_c0_example_against_high_precision():
    ref = mp_c0(2, 2, 2, 10)
    assert compute_c0(P) == pytest.approx(float(ref), rel=1e-15)
    assert compute_c0(P) == pytest.approx(6.5348, abs=5e-5)


def test_c0_increases_toward_limit():
    vals = [compute_c0(FamilyParams(alpha=2.0, n=2, z=2.0, j=j)) for j in (2, 5, 10, 100, 10 ** 6)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    limit = math.sqrt(6) * math.e
    assert limit == pytest.approx(6.658403, abs=5e-7)
    assert vals[-1] < limit and vals[-1] == pytest.approx(limit, rel=1e-6)


def test_Cj_example():
    ref = -mp.log(mp_c0(2, 2, 2, 10)) / (2 - 1)
    assert compute_Cj(P) == pytest.approx(float(ref), rel=1e-15)
    assert compute_Cj(P) == pytest.approx(-1.87714, abs=5e-6)
    assert compute_Cj(P, c0=1.0) == 0.0


def test_roots_match_polynomial_solver():
    u1, u2 = lemma3_roots(P)
    b, jc0 = P.b, P.j * compute_c0(P)
    ref = np.sort(np.roots([b, -b / jc0, -1.0]))
    np.testing.assert_allclose([u1, u2], ref, rtol=1e-14)
    assert u2 == pytest.approx(0.4160, abs=5e-5)
    assert u1 * u2 == pytest.approx(-1 / b, rel=1e-14)


def test_root_equals_exp_of_max_h():
    _, u2 = lemma3_roots(P)
    assert math.exp((1 + compute_Cj(P)) * (P.alpha - 1)) == pytest.approx(u2, rel=1e-12)


def test_surd_identity_example():
    c0 = compute_c0(P)
    lhs = math.sqrt(4 / P.b + 1 / (P.j * c0) ** 2)
    rhs = (2 * math.e - 0.1) / c0
    assert lhs == pytest.approx(rhs, rel=1e-14)
    assert lhs == pytest.approx(0.81664, abs=5e-6)


def test_params_validation_and_theorem_constants():
    with pytest.raises(ValueError):
        FamilyParams(alpha=1.0)
    with pytest.raises(ValueError):
        FamilyParams(alpha=2.0, j=1)
    with pytest.raises(ValueError):
        FamilyParams(alpha=2.0, z=-1.0)
    p = FamilyParams(alpha=2.0, n=2, kappa=1.0)
    assert p.z == 2.0 and p.A == 0.5 and p.j0 == 8


params_st = st.builds(
    FamilyParams,
    alpha=st.floats(1.01, 6.0),
    n=st.integers(1, 6),
    z=st.floats(0.01, 50.0),
    j=st.integers(2, 10 ** 4),
)


@given(params_st)
@settings(max_examples=300, deadline=None)
def test_constants_invariants(p):
    c0 = compute_c0(p)
    u1, u2 = lemma3_roots(p)
    assert c0 > 0
    assert u1 < 0 < u2
    assert math.exp((1 + compute_Cj(p)) * (p.alpha - 1)) == pytest.approx(u2, rel=1e-12)


def test_profile_second_derivative_matches_finite_differences():
    prof = RadialProfile(j=10, Cj=-1.0)
    r = np.linspace(0.1, 3.0, 17)
    t = 1e-4
    fd1 = (prof.f(r + t) - prof.f(r - t)) / (2 * t)
    fd2 = (prof.f(r + t) - 2 * prof.f(r) + prof.f(r - t)) / t ** 2
    np.testing.assert_allclose(prof.fp(r), fd1, atol=1e-8)
    np.testing.assert_allclose(prof.fpp(r), fd2, atol=1e-6)
    assert prof.fpp(0.0) == pytest.approx(-2 / 10)


def test_family_density_values(ico4):
    fld = build_family_density(ico4, P)
    Cj = compute_Cj(P)
    assert fld.h[0] == pytest.approx(1 + Cj, abs=1e-15)
    assert np.all(fld.h > Cj + math.exp(-np.pi ** 2 / P.j) - 1e-15)
    assert np.all(fld.h <= Cj + 1 + 1e-15)
    assert np.all(fld.rho > 0)
    np.testing.assert_allclose(fld.rho_alpha, fld.rho ** P.alpha, rtol=1e-14)
    r = np.arccos(np.clip(ico4.vertices @ [0, 0, 1.0], -1, 1))
    np.testing.assert_allclose(fld.h, np.exp(-r ** 2 / P.j) + Cj, atol=1e-12)


def test_family_density_rejects_torus(torus64):
    with pytest.raises(MeshError):
        build_family_density(torus64, P)


def test_mass_examples(ico5, torus64):
    assert mass(ico5, constant_density(ico5, 2.0)) == pytest.approx(4 * np.pi, rel=1e-3)
    assert mass(torus64, constant_density(torus64, 2.0)) == pytest.approx(4 * np.pi ** 2, rel=1e-13)
    fld = build_family_density(ico5, P)
    assert mass(ico5, fld.scaled(2.0)) == pytest.approx(2 * mass(ico5, fld), rel=1e-15)


def test_normalization_examples(ico4):
    assert normalization(ico4, constant_density(ico4, 2.0), 2.0) == pytest.approx(1.0, rel=1e-14)
    assert normalization(ico4, constant_density(ico4, 3.0, value=0.25), 3.0) == pytest.approx(16.0, rel=1e-13)
    fld = build_family_density(ico4, P)
    a = 7.0
    assert normalization(ico4, fld.scaled(a), 2.0) == pytest.approx(normalization(ico4, fld, 2.0) / a, rel=1e-14)


def test_callback_density(ico3):
    fld = density_from_callback(ico3, 2.0, lambda v: 0.3 * v[:, 2])
    np.testing.assert_allclose(fld.rho, np.exp(-0.3 * ico3.vertices[:, 2]))


def test_constant_profile_is_flat():
    prof = ConstantProfile(0.0)
    rad, tan = prof.sphere_hessian(np.array([0.0, 1.0]))
    assert not rad.any() and not tan.any()
