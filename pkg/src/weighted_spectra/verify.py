"""Numerical checks of the weighted Bochner and Reilly identities, the
pointwise properties of the h_j family, and the lambda_1 growth sweep."""
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import exactcalc as ec
from .density import (ConstantProfile, FamilyParams, build_family_density, compute_c0,
                      compute_Cj, constant_density, lemma3_roots, mass, normalization)
from .eigsolve import EigenSolveError, solve_smallest
from .femassembly import build_problem
from .manifold import (CUT_LOCUS_RADIUS, NORTH_POLE, build_hemisphere, build_icosphere,
                       distances_from)

log = logging.getLogger(__name__)

QUADRATURE_N = 256
PAIR_AGREEMENT = 1e-9


# identities on the flat torus


@dataclass
class IdentityCheck:
    name: str
    alpha: float
    n: int
    residual: float
    residual_2n: float
    lhs: float = 0.0
    lhs_2n: float = 0.0
    rhs: float = 0.0

    @property
    def agreement(self):
        return max(abs(self.residual - self.residual_2n), abs(self.lhs - self.lhs_2n))

    def passed(self, tol, relative=True):
        bound = tol * (1 + abs(self.lhs)) if relative else tol
        return self.residual <= bound and self.residual_2n <= bound and self.agreement <= PAIR_AGREEMENT


def reilly_integrands(u, h, alpha):
    """Integrands (w.r.t. dv) of both sides of the closed-manifold weighted Reilly identity."""
    Lu = ec.apply_Lh(u, h, alpha)
    damp = ec.exp(-(alpha - 1) * h)
    grow = ec.exp((alpha - 1) * h)
    dm = ec.exp(-h)
    lhs = (grow * Lu ** 2 - damp * ec.hessian_norm_sq(u)) * dm
    # flat torus: Ric = 0
    rhs = alpha * damp * ec.hessian_form(h, u) * dm
    return lhs, rhs


def reilly_residual(u, h, alpha, n=QUADRATURE_N):
    lhs_f, rhs_f = reilly_integrands(u, h, alpha)
    l1, r1 = ec.torus_quadrature_many([lhs_f, rhs_f], n)
    l2, r2 = ec.torus_quadrature_many([lhs_f, rhs_f], 2 * n)
    return IdentityCheck("reilly", alpha, n, abs(l1 - r1), abs(l2 - r2), l1, l2, r1)


def bochner_sides(u, h, alpha):
    """Pointwise left and right sides of the weighted Bochner formula (Ric = 0).

    The last term is read as <grad u, grad L_h u> + (alpha - 1) L_h u <grad h, grad u>.
    """
    Lu = ec.apply_Lh(u, h, alpha)
    damp = ec.exp(-(alpha - 1) * h)
    lhs = 0.5 * ec.apply_Lh(ec.grad_norm_sq(u), h, alpha)
    rhs = (-damp * (ec.hessian_norm_sq(u) + alpha * ec.hessian_form(h, u))
           + ec.grad_dot(u, Lu) + (alpha - 1) * Lu * ec.grad_dot(h, u))
    return lhs, rhs


def classical_bochner_sides(u):
    """1/2 Delta |grad u|^2 and -|D^2 u|^2 + <grad u, grad Delta u> on flat space."""
    lhs = 0.5 * ec.neg_laplacian(ec.grad_norm_sq(u))
    rhs = -ec.hessian_norm_sq(u) + ec.grad_dot(u, ec.neg_laplacian(u))
    return lhs, rhs


def _max_pointwise(lhs, rhs, n):
    worst = scale = 0.0
    for xs, ys in ec.grid_blocks(n):
        a, b = ec.evaluate_many([lhs, rhs], xs, ys)
        worst = max(worst, float(np.max(np.abs(a - b))))
        scale = max(scale, float(np.max(np.abs(a))))
    return worst, scale


def bochner_residual(u, h, alpha, n=QUADRATURE_N):
    lhs, rhs = bochner_sides(u, h, alpha)
    r1, scale = _max_pointwise(lhs, rhs, n)
    r2, _ = _max_pointwise(lhs, rhs, 2 * n)
    return IdentityCheck("bochner", alpha, n, r1, r2, lhs=scale, lhs_2n=scale)


def classical_bochner_residual(u, n=QUADRATURE_N):
    lhs, rhs = classical_bochner_sides(u)
    r1, scale = _max_pointwise(lhs, rhs, n)
    r2, _ = _max_pointwise(lhs, rhs, 2 * n)
    return IdentityCheck("bochner-classical", 1.0, n, r1, r2, lhs=scale, lhs_2n=scale)


def random_pairs(seed, count=20):
    """Deterministic (u, h) trigonometric-polynomial test pairs, |h| <= 0.5."""
    rng = np.random.default_rng(seed)
    return [(ec.random_trig_poly(rng, 3, 3, 1.0), ec.random_trig_poly(rng, 2, 2, 0.5))
            for _ in range(count)]


def identity_suite(kind, seed=0, count=20, alphas=(1.5, 2.0, 3.0), n=QUADRATURE_N):
    check = {"reilly": reilly_residual, "bochner": bochner_residual}[kind]
    return [check(u, h, a, n) for u, h in random_pairs(seed, count) for a in alphas]


# the h_j family on the sphere


@dataclass
class Lemma3Report:
    params: FamilyParams
    mass_ratio_power: float
    c0: float
    margin_i: float
    margin_ii: float
    basepoint_gap_ii: float
    margin_iii_flat: float
    margin_iii_sphere: float
    exp_h_max: float
    u2: float
    h_minus_Cj_min: float
    excluded_fraction: float

    @property
    def passed_i(self):
        return self.margin_i > 0

    @property
    def passed_ii(self):
        # rounding slack: the maximum of the clause-(ii) expression is attained exactly
        return self.margin_ii >= -1e-12 * (1 + 1 / (self.params.j * self.c0))


def lemma3_check(params, mesh, basepoint=NORTH_POLE, exclusion=CUT_LOCUS_RADIUS):
    """Worst-case margins of the three family-lemma clauses, positive meaning satisfied.

    Clause (iii) is measured twice: as the flat radial scalar f'^2 - alpha f''
    and as the worst direction of the sphere quadratic form
    |grad h|^2 - alpha D^2 h(v, v), whose tangential part is f' cot r.
    """
    field_ = build_family_density(mesh, params, basepoint)
    prof = field_.profile
    a, b, j = params.alpha, params.b, params.j
    c0 = compute_c0(params)
    _, u2 = lemma3_roots(params)

    ratio = (mass(mesh, field_) / mesh.total_area) ** (a - 1)

    def clause_ii(hv):
        return (np.exp(hv * (a - 1)) * b - np.exp(-hv * (a - 1))) / b

    bound_ii = 1.0 / (j * c0)
    margin_ii = float(np.min(bound_ii - clause_ii(field_.h)))
    gap = float(abs(bound_ii - clause_ii(prof.f(0.0))))

    r = field_.distances
    keep = r < np.pi - exclusion
    fp = prof.fp(r)
    flat = fp ** 2 - a * prof.fpp(r)
    radial, tangential = prof.sphere_hessian(r[keep])
    sphere = fp[keep] ** 2 - a * np.minimum(radial, tangential)
    bound_iii = 2 * a / j
    return Lemma3Report(
        params=params,
        mass_ratio_power=ratio,
        c0=c0,
        margin_i=c0 - ratio,
        margin_ii=margin_ii,
        basepoint_gap_ii=gap,
        margin_iii_flat=float(bound_iii - flat.max()),
        margin_iii_sphere=float(bound_iii - sphere.max()),
        exp_h_max=float(np.exp(field_.h.max() * (a - 1))),
        u2=u2,
        h_minus_Cj_min=float((field_.h - compute_Cj(params)).min()),
        excluded_fraction=float(1 - keep.mean()),
    )


@dataclass
class HypothesisReport:
    margin: float
    margin_flat: float
    excluded_fraction: float


def hypothesis_check(params, mesh, A=None, basepoint=NORTH_POLE, profile=None,
                     exclusion=CUT_LOCUS_RADIUS):
    """Minimum over sampled points of Ric + alpha D^2h - alpha^2 |grad h|^2/(n z) - A.

    On the unit sphere Ric = 1 in every unit direction. ``margin`` takes the worse
    of the radial and tangential Hessian eigenvalues; ``margin_flat`` uses the
    radial value f'' alone.
    """
    A = params.A if A is None else A
    if profile is None:
        profile = build_family_density(mesh, params, basepoint).profile
    r = distances_from(mesh, basepoint)
    keep = r < np.pi - exclusion
    rk = r[keep]
    radial, tangential = profile.sphere_hessian(rk)
    grad_sq = profile.fp(rk) ** 2
    a, kappa = params.alpha, 1.0
    base = kappa - a ** 2 * grad_sq / (params.n * params.z) - A
    return HypothesisReport(
        margin=float(np.min(base + a * np.minimum(radial, tangential))),
        margin_flat=float(np.min(base + a * radial)),
        excluded_fraction=float(1 - keep.mean()),
    )


# lambda_1 sweep


CSV_COLUMNS = ("j", "lambda1", "mass", "normalization", "lambda_tilde", "bound_proof",
               "bound_stated", "hypothesis_margin", "excluded_fraction", "residual_norm")


@dataclass
class ReportRow:
    j: int | None
    lambda1: float
    mass: float
    normalization: float
    lambda_tilde: float
    bound_proof: float
    bound_stated: float
    hypothesis_margin: float
    excluded_fraction: float
    residual_norm: float
    hypothesis_margin_flat: float = math.nan
    lemma2_lhs: float = math.nan
    lemma2_rhs: float = math.nan
    error: str | None = None
    telemetry: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.error is None

    def as_dict(self):
        return asdict(self)


@dataclass
class ScanReport:
    alpha: float
    kappa: float
    j0: int
    rows: list
    control: ReportRow


def _lemma2_sides(mesh, field_, params, lam, u):
    """Both sides of A lam int u^2 dm <= lam^2/b int u^2 (e^{h(a-1)} b - e^{-h(a-1)}) dm."""
    a, b = params.alpha, params.b
    w = u ** 2 * field_.rho * mesh.vertex_areas
    lhs = params.A * lam * w.sum()
    rhs = lam ** 2 / b * np.sum(w * (np.exp(field_.h * (a - 1)) * b - np.exp(-field_.h * (a - 1))))
    return float(lhs), float(rhs)


def _solve_row(mesh, field_, alpha, tol, method, seed):
    problem = build_problem(mesh, field_)
    res = solve_smallest(problem, 2, tol=tol, method=method, seed=seed)
    norm = normalization(mesh, field_, alpha)
    return res, norm


def theorem1_scan(alpha, j_values, mesh_level=5, kappa=1.0, n=2, basepoint=NORTH_POLE,
                  tol=1e-8, method="auto", seed=0, manifold="sphere"):
    """lambda_1 and its scale-invariant version for rho_j over ``j_values``.

    Nothing is asserted about the growth bound; both candidate bounds are
    recorded next to the measurement.
    """
    builder = {"sphere": build_icosphere, "hemisphere": build_hemisphere}[manifold]
    mesh = builder(mesh_level)
    base_params = FamilyParams(alpha=alpha, n=n, j=2, kappa=kappa)

    flat = constant_density(mesh, alpha)
    ctrl_res, ctrl_norm = _solve_row(mesh, flat, alpha, tol, method, seed)
    ctrl_h = hypothesis_check(base_params, mesh, basepoint=basepoint, profile=ConstantProfile())
    control = ReportRow(
        j=None, lambda1=float(ctrl_res.eigenvalues[1]), mass=mass(mesh, flat), normalization=ctrl_norm,
        lambda_tilde=float(ctrl_res.eigenvalues[1] * ctrl_norm), bound_proof=math.nan,
        bound_stated=math.nan, hypothesis_margin=ctrl_h.margin, excluded_fraction=ctrl_h.excluded_fraction,
        residual_norm=float(ctrl_res.residuals.max()), hypothesis_margin_flat=ctrl_h.margin_flat,
        telemetry={"iterations": ctrl_res.iterations, "method": ctrl_res.method})

    rows = []
    for j in sorted(set(int(v) for v in j_values)):
        params = base_params.with_j(j)
        bound_proof = kappa * j / 2.0
        bound_stated = 2.0 * kappa * j
        try:
            fld = build_family_density(mesh, params, basepoint)
            hyp = hypothesis_check(params, mesh, basepoint=basepoint, profile=fld.profile)
            res, norm = _solve_row(mesh, fld, alpha, tol, method, seed)
        except EigenSolveError as exc:
            log.warning("j=%d: solver failed: %s", j, exc)
            rows.append(ReportRow(j, math.nan, math.nan, math.nan, math.nan, bound_proof, bound_stated,
                                  math.nan, math.nan, math.nan, error=str(exc)))
            continue
        lam = float(res.eigenvalues[1])
        l2 = _lemma2_sides(mesh, fld, params, lam, res.eigenvectors[:, 1])
        rows.append(ReportRow(
            j=j, lambda1=lam, mass=mass(mesh, fld), normalization=norm, lambda_tilde=lam * norm,
            bound_proof=bound_proof, bound_stated=bound_stated, hypothesis_margin=hyp.margin,
            excluded_fraction=hyp.excluded_fraction, residual_norm=float(res.residuals.max()),
            hypothesis_margin_flat=hyp.margin_flat, lemma2_lhs=l2[0], lemma2_rhs=l2[1],
            telemetry={"iterations": res.iterations, "method": res.method}))
    return ScanReport(alpha=alpha, kappa=kappa, j0=base_params.j0, rows=rows, control=control)


@dataclass
class ScaleReport:
    max_rel_deviation: float
    max_factor_deviation: float
    lambda_tilde: float


def scale_invariance_check(mesh, field_, alpha, scales, tol=1e-10, method="auto"):
    """Worst relative change of lambda_tilde under rho -> a rho.

    Also reports the worst deviation of lambda_1(a rho) / (a^(alpha-1) lambda_1(rho))
    from 1.
    """
    if any(not a > 0 for a in scales):
        raise ValueError("scales must be positive")
    res, norm = _solve_row(mesh, field_, alpha, tol, method, 0)
    lam = float(res.eigenvalues[1])
    ref = lam * norm
    dev = fac = 0.0
    for a in scales:
        scaled = field_ if a == 1 else field_.scaled(a)
        r_a, n_a = _solve_row(mesh, scaled, alpha, tol, method, 0)
        lam_a = float(r_a.eigenvalues[1])
        dev = max(dev, abs(lam_a * n_a - ref) / ref)
        fac = max(fac, abs(lam_a / (a ** (alpha - 1) * lam) - 1))
    return ScaleReport(dev, fac, ref)
