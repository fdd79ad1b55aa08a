"""P1 assembly of the weighted Dirichlet form and the lumped weighted mass."""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels


@dataclass(eq=False)
class SpectralProblem:
    """Discrete pencil (stiffness, mass) for int |du|^2 rho^alpha / int u^2 rho."""

    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    mesh: object
    alpha: float
    rho: np.ndarray

    @property
    def dimension(self):
        return self.stiffness.shape[0]


def _positive(values, name, n):
    values = np.asarray(values, dtype=float)
    if values.shape != (n,):
        raise ValueError(f"{name} must have one value per vertex ({n}), got shape {values.shape}")
    if not np.all(values > 0):
        raise ValueError(f"{name} must be strictly positive at every vertex")
    return values


def assemble_stiffness(mesh, weight):
    """Cotangent stiffness with per-triangle multiplier sampled at the barycenter.

    For a P1 weight the barycentric value is the mean of the corner values.
    """
    weight = _positive(weight, "weight", mesh.n_vertices)
    tri_weight = weight[mesh.triangles].mean(axis=1)
    rows, cols, vals = kernels.stiffness_triplets(mesh.triangles, mesh.corner_cotangents, tri_weight)
    n = mesh.n_vertices
    K = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    K.sum_duplicates()
    return K


def assemble_mass(mesh, rho):
    """Diagonal lumped mass, entry v = rho(v) * vertex_area(v)."""
    rho = _positive(rho, "rho", mesh.n_vertices)
    return sp.diags(rho * mesh.vertex_areas, format="csr")


def build_problem(mesh, field):
    """Pencil for lambda_k(rho, rho^alpha) from a DensityField."""
    return SpectralProblem(
        stiffness=assemble_stiffness(mesh, field.rho_alpha),
        mass=assemble_mass(mesh, field.rho),
        mesh=mesh,
        alpha=field.alpha,
        rho=field.rho,
    )


def rayleigh_quotient(problem, u):
    u = np.asarray(u, dtype=float)
    denom = u @ (problem.mass @ u)
    if not np.any(u) or denom <= 0:
        raise ValueError("Rayleigh quotient of the zero vector is undefined")
    return float(u @ (problem.stiffness @ u) / denom)
