"""Eigenvalues of the weighted Laplacian -rho^{-1} div(rho^alpha grad .) on test surfaces."""
from .density import (FamilyParams, build_family_density, compute_c0, compute_Cj,
                      constant_density, lemma3_roots, mass, normalization)
from .eigsolve import EigenResult, lambda_tilde, solve_smallest
from .femassembly import SpectralProblem, assemble_mass, assemble_stiffness, build_problem, rayleigh_quotient
from .manifold import Mesh, build_hemisphere, build_icosphere, build_torus_grid, geodesic_distance

__version__ = "0.1.0"
