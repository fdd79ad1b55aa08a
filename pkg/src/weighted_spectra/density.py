"""Densities rho = exp(-h) and the explicit radial family h_j."""
import math
from dataclasses import dataclass

import numpy as np

from .manifold import NORTH_POLE, MeshError, distances_from


@dataclass(frozen=True)
class FamilyParams:
    alpha: float
    n: int = 2
    z: float | None = None
    j: int = 2
    kappa: float = 1.0

    def __post_init__(self):
        if self.z is None:
            # the choice made for the growth theorem: z = alpha^2 / n
            object.__setattr__(self, "z", self.alpha ** 2 / self.n)
        if not self.alpha > 1:
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not self.z > 0:
            raise ValueError(f"z must be positive, got {self.z}")
        if int(self.j) != self.j or self.j < 2:
            raise ValueError(f"j must be an integer >= 2, got {self.j}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not math.exp(self.alpha - 1) - 1.0 / self.j > 0:
            raise ValueError("exp(alpha - 1) - 1/j must be positive")

    @property
    def b(self):
        return self.n * (self.z + 1)

    @property
    def A(self):
        return self.kappa / 2.0

    @property
    def j0(self):
        return math.ceil(4 * self.alpha / self.kappa)

    def with_j(self, j):
        return FamilyParams(alpha=self.alpha, n=self.n, z=self.z, j=j, kappa=self.kappa)


def compute_c0(params):
    e = math.exp(params.alpha - 1)
    return math.sqrt(params.b * e * (e - 1.0 / params.j))


def compute_Cj(params, c0=None):
    """Additive constant of h_j; ``c0`` may be passed to override the computed value."""
    c0 = compute_c0(params) if c0 is None else c0
    if not c0 > 0:
        raise ValueError("c0 must be positive")
    return -math.log(c0) / (params.alpha - 1)


def lemma3_roots(params):
    """Roots u1 < 0 < u2 of b*u^2 - b*u/(j*c0) - 1 = 0."""
    b = params.b
    jc0 = params.j * compute_c0(params)
    disc = math.sqrt(b * b + 4 * b * jc0 * jc0)
    return (b - disc) / (2 * b * jc0), (b + disc) / (2 * b * jc0)


@dataclass(frozen=True)
class RadialProfile:
    """f(r) = exp(-r^2 / j) + C_j with closed-form first and second derivatives."""

    j: int
    Cj: float

    def f(self, r):
        return np.exp(-np.square(r) / self.j) + self.Cj

    def fp(self, r):
        return -(2.0 * r / self.j) * np.exp(-np.square(r) / self.j)

    def fpp(self, r):
        r2 = np.square(r)
        return (-2.0 / self.j) * np.exp(-r2 / self.j) * (1.0 - 2.0 * r2 / self.j)

    def sphere_hessian(self, r):
        """Radial and tangential Hessian eigenvalues on the unit sphere.

        The tangential value f'(r) cot r is replaced by its limit f''(0) near
        r = 0. Callers must keep r away from pi.
        """
        r = np.asarray(r, dtype=float)
        radial = self.fpp(r)
        small = r < 1e-6
        safe = np.where(small, 1.0, r)
        tangential = np.where(small, self.fpp(0.0), self.fp(safe) * np.cos(safe) / np.sin(safe))
        return radial, tangential


@dataclass(frozen=True, eq=False)
class DensityField:
    h: np.ndarray
    rho: np.ndarray
    rho_alpha: np.ndarray
    alpha: float
    profile: RadialProfile | None = None
    basepoint: np.ndarray | None = None
    distances: np.ndarray | None = None
    label: str = "custom"

    def scaled(self, a):
        """The field for a * rho (h shifted by -log a); the radial profile is dropped."""
        if not a > 0:
            raise ValueError("scale must be positive")
        rho = a * self.rho
        return DensityField(h=self.h - math.log(a), rho=rho, rho_alpha=rho ** self.alpha,
                            alpha=self.alpha, basepoint=self.basepoint, distances=self.distances,
                            label=f"{self.label}*{a:g}")


def density_from_h(h, alpha, **kw):
    h = np.asarray(h, dtype=float)
    if not np.all(np.isfinite(h)):
        raise ValueError("h must be finite")
    rho = np.exp(-h)
    return DensityField(h=h, rho=rho, rho_alpha=np.exp(-alpha * h), alpha=alpha, **kw)


def constant_density(mesh, alpha, value=1.0):
    if not value > 0:
        raise ValueError("density must be positive")
    h = np.full(mesh.n_vertices, -math.log(value))
    rho = np.full(mesh.n_vertices, float(value))
    return DensityField(h=h, rho=rho, rho_alpha=rho ** alpha, alpha=alpha, label=f"const({value:g})")


def density_from_callback(mesh, alpha, h_of_points):
    """Density with h given by a callback evaluated on the (V, dim) vertex array."""
    return density_from_h(h_of_points(mesh.vertices), alpha, label="callback")


def build_family_density(mesh, params, basepoint=NORTH_POLE):
    """rho_j = exp(-h_j) with h_j(x) = exp(-d(x0, x)^2 / j) + C_j on a sphere mesh."""
    if not mesh.on_sphere:
        raise MeshError("the h_j family is defined through geodesic distance on the sphere")
    x0 = np.asarray(basepoint, dtype=float)
    r = distances_from(mesh, x0)
    profile = RadialProfile(j=params.j, Cj=compute_Cj(params))
    return density_from_h(profile.f(r), params.alpha, profile=profile, basepoint=x0,
                          distances=r, label=f"h_j(j={params.j})")


def mass(mesh, field):
    """Lumped quadrature of rho."""
    return float(np.dot(field.rho, mesh.vertex_areas))


def normalization(mesh, field, alpha):
    """(|M| / mass)^(alpha - 1), the factor making lambda_1 scale invariant."""
    if not alpha > 1:
        raise ValueError("alpha must exceed 1")
    return (mesh.total_area / mass(mesh, field)) ** (alpha - 1)


@dataclass(frozen=True)
class ConstantProfile:
    """Radial profile of a constant h; all derivatives vanish."""

    value: float = 0.0

    def f(self, r):
        return np.full(np.shape(r), self.value, dtype=float)

    def fp(self, r):
        return np.zeros(np.shape(r))

    def fpp(self, r):
        return np.zeros(np.shape(r))

    def sphere_hessian(self, r):
        return np.zeros(np.shape(r)), np.zeros(np.shape(r))
