"""Smallest eigenpairs of the symmetric-definite pencil A u = lambda B u.

Small problems go to LAPACK. Larger ones use block inverse subspace
iteration with Rayleigh-Ritz. The constant vector spans the kernel of A
exactly, so it is split off analytically: iterates are kept B-orthogonal to
it and A is inverted on that complement through the grounded system with
one vertex pinned, which needs no spectral shift.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .density import normalization

DENSE_LIMIT = 3000
DEFAULT_TOL = 1e-8
MAX_BLOCKS = 500


class EigenSolveError(RuntimeError):
    pass


class ConvergenceError(EigenSolveError):
    def __init__(self, message, best_residuals):
        super().__init__(message)
        self.best_residuals = best_residuals


class IndefiniteMassError(EigenSolveError):
    pass


@dataclass
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    iterations: int
    method: str
    telemetry: dict = field(default_factory=dict)

    def to_json(self, include_vectors=False):
        out = {
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "residuals": [float(v) for v in self.residuals],
            "iterations": int(self.iterations),
            "method": self.method,
            "telemetry": self.telemetry,
        }
        if include_vectors:
            out["eigenvectors"] = self.eigenvectors.T.tolist()
        return out


def residual_norms(A, B, values, vectors):
    AX = A @ vectors
    BX = B @ vectors
    num = np.linalg.norm(AX - BX * values, axis=0)
    return num / ((1.0 + np.abs(values)) * np.linalg.norm(BX, axis=0))


def _check_mass(B):
    d = B.diagonal()
    if np.any(d <= 0):
        raise IndefiniteMassError("mass operator has non-positive diagonal entries")
    offdiag = B - sp.diags(d)
    # a diagonal B with positive entries is definite; otherwise LAPACK or the Ritz step decides
    return offdiag.nnz == 0 or not np.any(offdiag.data)


def _dense(A, B, count):
    try:
        vals, vecs = sla.eigh(A.toarray(), B.toarray(), subset_by_index=[0, count - 1])
    except np.linalg.LinAlgError as exc:
        raise IndefiniteMassError(f"dense generalized solve failed: {exc}") from exc
    return vals, vecs, 1, {}


def _b_orthonormalize(X, B):
    G = X.T @ (B @ X)
    R = np.linalg.cholesky(0.5 * (G + G.T))
    return sla.solve_triangular(R, X.T, lower=True).T


def _subspace(A, B, count, tol, seed, maxiter):
    n = A.shape[0]
    wanted = count - 1
    p = min(max(2 * wanted, 8), n - 1)
    c = np.ones(n)
    Bc = B @ c
    cBc = c @ Bc

    def deflate(X):
        return X - np.outer(c, (Bc @ X) / cBc)

    # ground vertex 0: A restricted to the others is SPD on a connected mesh
    A_red = A[1:, 1:].tocsc()
    lu = spla.splu(A_red)

    def solve(R):
        # R has zero column sums (B-image of constant-free vectors)
        Y = np.zeros_like(R)
        Y[1:] = lu.solve(R[1:])
        return Y

    rng = np.random.default_rng(seed)
    X = _b_orthonormalize(deflate(rng.standard_normal((n, p))), B)
    best = np.full(wanted, np.inf)
    for it in range(1, maxiter + 1):
        Y = deflate(solve(B @ X))
        Y = _b_orthonormalize(Y, B)
        Ar = Y.T @ (A @ Y)
        theta, Q = sla.eigh(0.5 * (Ar + Ar.T))
        X = Y @ Q
        res = residual_norms(A, B, theta[:wanted], X[:, :wanted])
        best = np.minimum(best, res)
        if np.all(res <= tol):
            break
    else:
        raise ConvergenceError(f"subspace iteration did not reach tol={tol:g} in {maxiter} blocks", best)
    vals = np.concatenate([[(c @ (A @ c)) / cBc], theta[:wanted]])
    vecs = np.column_stack([c / np.sqrt(cBc), X[:, :wanted]])
    return vals, vecs, it, {"block_size": int(p), "pinned_vertex": 0}


def solve_smallest(problem, count, tol=DEFAULT_TOL, method="auto", seed=0, maxiter=MAX_BLOCKS):
    """The ``count`` smallest eigenpairs, eigenvectors B-orthonormal.

    ``method`` is ``"dense"``, ``"iterative"`` or ``"auto"`` (dense up to
    ``DENSE_LIMIT`` unknowns).
    """
    A, B = problem.stiffness, problem.mass
    n = A.shape[0]
    if not 1 <= count <= n:
        raise ValueError(f"count must lie in [1, {n}], got {count}")
    if not 0 < tol <= 1e-4:
        raise ValueError(f"tol must lie in (0, 1e-4], got {tol}")
    _check_mass(B)
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "iterative"
    if method == "dense":
        vals, vecs, iters, tele = _dense(A, B, count)
    elif method == "iterative":
        if count >= n - 1:
            raise ValueError("iterative path needs count < dimension - 1")
        if count == 1:
            c = np.ones(n)
            cBc = c @ (B @ c)
            vals, vecs, iters, tele = np.array([(c @ (A @ c)) / cBc]), (c / np.sqrt(cBc))[:, None], 0, {}
        else:
            vals, vecs, iters, tele = _subspace(A, B, count, tol, seed, maxiter)
    else:
        raise ValueError(f"unknown method {method!r}")
    res = residual_norms(A, B, vals, vecs)
    if np.any(res > tol):
        raise ConvergenceError(f"residual {res.max():.3e} above tol {tol:g}", res)
    tele = {"dimension": int(n), "tol": tol, **tele}
    return EigenResult(vals, vecs, res, iters, method, tele)


def lambda_tilde(problem, field, alpha, result=None, **solve_kw):
    """lambda_1 times (|M| / mass)^(alpha - 1)."""
    if result is None:
        result = solve_smallest(problem, 2, **solve_kw)
    return float(result.eigenvalues[1] * normalization(problem.mesh, field, alpha))
