import math

import numpy as np
import pytest

from weighted_spectra import exactcalc as ec
from weighted_spectra import verify as vf
from weighted_spectra.density import ConstantProfile, FamilyParams, build_family_density, constant_density
from weighted_spectra.exactcalc import cos, sin, x, y


def test_reilly_trivial_cases():
    assert vf.reilly_residual(ec.const(2.0), 0.3 * sin(x + y), 2.0).residual == 0.0
    r = vf.reilly_residual(cos(x), ec.const(0.0), 2.0)
    assert r.residual <= 1e-10 and abs(r.lhs) <= 1e-10 and r.rhs == 0


def test_reilly_single_case_with_convergence_pair():
    r = vf.reilly_residual(cos(x), 0.5 * cos(y), 2.0, n=256)
    assert r.residual <= 1e-9 and r.residual_2n <= 1e-9
    assert r.agreement <= 1e-9


def test_reilly_detects_a_wrong_identity():
    # dropping the Hessian-of-h term must leave a visible residual
    u, h, a = sin(x + 2 * y), 0.4 * cos(x), 2.0
    lhs, _ = vf.reilly_integrands(u, h, a)
    assert abs(ec.torus_quadrature(lhs, 128)) > 1e-2


def test_bochner_trivial_and_classical():
    assert vf.bochner_residual(ec.const(1.0), cos(y), 2.0).residual == 0.0
    u = sin(2 * x - y) + 0.5 * cos(3 * y)
    for c in (0.0, 0.8):
        assert vf.bochner_residual(u, ec.const(c), 2.0).residual <= 1e-9
    assert vf.classical_bochner_residual(u).residual <= 1e-9


def test_bochner_example():
    r = vf.bochner_residual(cos(x), sin(y) / 3, 1.5, n=256)
    assert r.residual <= 1e-8 and r.agreement <= 1e-9


def test_bochner_misreading_fails():
    # reading the last term as <grad u, grad L_h u + (alpha-1) grad h> (no L_h u factor) is wrong
    u, h, a = cos(x), sin(x) / 3, 1.5
    lhs, _ = vf.bochner_sides(u, h, a)
    Lu = ec.apply_Lh(u, h, a)
    damp = ec.exp(-(a - 1) * h)
    wrong = (-damp * (ec.hessian_norm_sq(u) + a * ec.hessian_form(h, u)) + ec.grad_dot(u, Lu)
             + (a - 1) * ec.grad_dot(h, u))
    xs, ys = ec.grid(64)
    assert np.max(np.abs(lhs(xs, ys) - wrong(xs, ys))) > 1e-2


def test_random_pairs_are_deterministic():
    a = vf.random_pairs(5, 3)
    b = vf.random_pairs(5, 3)
    xs, ys = ec.grid(16)
    for (u1, h1), (u2, h2) in zip(a, b):
        np.testing.assert_array_equal(u1(xs, ys), u2(xs, ys))
        assert np.max(np.abs(h1(xs, ys))) <= 0.5


def test_lemma3_example(ico5):
    p = FamilyParams(alpha=2.0, n=2, z=2.0, j=10)
    rep = vf.lemma3_check(p, ico5)
    assert rep.mass_ratio_power < rep.c0 == pytest.approx(6.5348, abs=5e-5)
    assert rep.margin_i > 0
    assert rep.passed_ii
    assert rep.basepoint_gap_ii <= 1e-12
    # at r = 0 clause (iii) is attained: f'(0) = 0, -alpha f''(0) = 2 alpha / j
    assert rep.margin_iii_flat == pytest.approx(0.0, abs=1e-14)
    assert rep.exp_h_max <= rep.u2 + 1e-12
    assert rep.h_minus_Cj_min > 0
    assert rep.excluded_fraction == pytest.approx(1 / ico5.n_vertices)


def test_hypothesis_examples(ico4):
    p = FamilyParams(alpha=2.0, j=10, kappa=1.0)
    flat = vf.hypothesis_check(p, ico4, A=0.5, profile=ConstantProfile(0.3))
    assert flat.margin == pytest.approx(0.5, abs=1e-15)
    assert flat.margin_flat == pytest.approx(0.5, abs=1e-15)
    assert p.j0 == 8
    rep8 = vf.hypothesis_check(p.with_j(8), ico4)
    # at the basepoint the margin is kappa - 2 alpha / j - kappa / 2 = 0 for j = j0
    assert rep8.margin == pytest.approx(0.0, abs=1e-12)
    assert vf.hypothesis_check(p.with_j(4), ico4).margin < 0


def test_scale_invariance(ico3):
    fld = build_family_density(ico3, FamilyParams(alpha=2.0, j=6))
    assert vf.scale_invariance_check(ico3, fld, 2.0, [1.0]).max_rel_deviation == 0.0
    rep = vf.scale_invariance_check(ico3, fld, 2.0, [0.1, 10.0, math.e])
    assert rep.max_rel_deviation <= 1e-10
    assert rep.max_factor_deviation <= 1e-10
    with pytest.raises(ValueError):
        vf.scale_invariance_check(ico3, fld, 2.0, [-1.0])


def test_scan_rows_small():
    rep = vf.theorem1_scan(2.0, [10, 8, 9], mesh_level=3)
    js = [r.j for r in rep.rows]
    assert js == [8, 9, 10]
    assert rep.j0 == 8
    for r in rep.rows:
        assert r.ok and r.lambda_tilde > 0
        assert r.lambda_tilde == pytest.approx(r.lambda1 * r.normalization, rel=1e-12)
        assert r.bound_proof == r.j / 2 and r.bound_stated == 2 * r.j
        assert np.isfinite(r.hypothesis_margin)
    assert rep.control.lambda_tilde == pytest.approx(2.0, rel=1e-2)
    assert rep.control.hypothesis_margin == pytest.approx(0.5)


def test_scan_rescaled_density_gives_same_lambda_tilde(ico3):
    p = FamilyParams(alpha=2.0, j=12)
    fld = build_family_density(ico3, p)
    for a in (0.3, 4.0):
        rep = vf.scale_invariance_check(ico3, fld, 2.0, [a])
        assert rep.max_rel_deviation <= 1e-10


def test_scan_records_solver_failure(monkeypatch):
    from weighted_spectra.eigsolve import ConvergenceError

    real = vf.solve_smallest
    calls = {"n": 0}

    def flaky(*args, **kw):
        calls["n"] += 1
        if calls["n"] == 2:
            raise ConvergenceError("forced", np.array([1.0]))
        return real(*args, **kw)

    monkeypatch.setattr(vf, "solve_smallest", flaky)
    rep = vf.theorem1_scan(2.0, [8, 9], mesh_level=2)
    assert not rep.rows[0].ok and "forced" in rep.rows[0].error
    assert rep.rows[1].ok


def test_hemisphere_scan():
    rep = vf.theorem1_scan(2.0, [8], mesh_level=3, manifold="hemisphere")
    assert rep.rows[0].ok and rep.rows[0].excluded_fraction == 0.0
    assert rep.control.lambda1 == pytest.approx(2.0, rel=1e-2)
