"""Test manifolds: the unit sphere (and its upper hemisphere) and the flat torus."""
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels

TWO_PI = 2.0 * np.pi
MAX_ICO_LEVEL = 8
NORTH_POLE = np.array([0.0, 0.0, 1.0])
# pointwise checks skip vertices this close (geodesically) to the antipode of x0
CUT_LOCUS_RADIUS = 1e-3


class MeshError(ValueError):
    pass


class DegenerateMeshError(MeshError):
    pass


@dataclass(eq=False)
class Mesh:
    """Triangulated compact surface with lumped P1 quadrature weights.

    ``kind`` is one of ``"sphere"``, ``"hemisphere"``, ``"torus"``. Torus
    vertices live in ``[0, 2pi)^2``; triangles crossing the seam are unwrapped
    by minimum image when corner coordinates are requested.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    kind: str
    level: int | None = None
    grid_n: int | None = None
    triangle_areas: np.ndarray = field(init=False, repr=False)
    vertex_areas: np.ndarray = field(init=False, repr=False)
    corner_cotangents: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        areas, cots = kernels.triangle_geometry(self.corners())
        scale = np.ptp(self.vertices, axis=0).max() ** 2
        bad = np.flatnonzero(areas < 1e-14 * scale)
        if bad.size:
            raise DegenerateMeshError(
                f"{bad.size} degenerate triangle(s), first index {bad[0]} with area {areas[bad[0]]:.3e}")
        self.triangle_areas = areas
        self.corner_cotangents = cots
        self.vertex_areas = kernels.scatter_add(
            self.triangles.ravel(), np.repeat(areas / 3.0, 3), self.n_vertices)

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    @property
    def periodic(self):
        return self.kind == "torus"

    @property
    def boundary(self):
        return self.kind == "hemisphere"

    @property
    def on_sphere(self):
        return self.kind in ("sphere", "hemisphere")

    @property
    def total_area(self):
        return float(self.triangle_areas.sum())

    @property
    def analytic_area(self):
        return {"sphere": 4 * np.pi, "hemisphere": 2 * np.pi, "torus": 4 * np.pi ** 2}[self.kind]

    def corners(self):
        """(T, 3, dim) corner coordinates, seam-unwrapped on the torus."""
        c = self.vertices[self.triangles]
        if self.periodic:
            rel = c - c[:, :1]
            rel -= TWO_PI * np.round(rel / TWO_PI)
            c = c[:, :1] + rel
        return c

    def edges(self):
        """Unique undirected edges and, for each, the number of incident triangles."""
        e = np.sort(self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        return np.unique(e, axis=0, return_counts=True)

    def max_edge_length(self):
        c = self.corners()
        return float(max(np.linalg.norm(c[:, (k + 1) % 3] - c[:, k], axis=1).max() for k in range(3)))

    def boundary_vertices(self):
        edges, counts = self.edges()
        return np.unique(edges[counts == 1])


@dataclass(frozen=True)
class CurvatureData:
    kappa: float
    ricci_form: Callable[[np.ndarray, np.ndarray], np.ndarray]


def _tangential_sq(points, vectors):
    points = np.atleast_2d(points)
    vectors = np.atleast_2d(vectors)
    normal = np.einsum("ij,ij->i", points, vectors)
    return np.einsum("ij,ij->i", vectors, vectors) - normal ** 2


def _flat_ricci(points, vectors):
    return np.zeros(np.atleast_2d(vectors).shape[0])


def curvature(mesh):
    """Analytic Ricci data; the unit 2-sphere has Ric = g, the flat torus Ric = 0."""
    if mesh.on_sphere:
        return CurvatureData(kappa=1.0, ricci_form=_tangential_sq)
    return CurvatureData(kappa=0.0, ricci_form=_flat_ricci)


def _icosahedron():
    z = 1.0 / np.sqrt(5.0)
    r = 2.0 / np.sqrt(5.0)
    k = np.arange(5)
    upper = np.c_[r * np.cos(2 * np.pi * k / 5), r * np.sin(2 * np.pi * k / 5), np.full(5, z)]
    lower = np.c_[r * np.cos(2 * np.pi * k / 5 + np.pi / 5), r * np.sin(2 * np.pi * k / 5 + np.pi / 5), np.full(5, -z)]
    verts = np.vstack([NORTH_POLE, upper, lower, -NORTH_POLE])
    U = 1 + k
    L = 6 + k
    U1 = 1 + (k + 1) % 5
    L1 = 6 + (k + 1) % 5
    faces = np.vstack([
        np.c_[np.zeros(5, int), U, U1],
        np.c_[U, L, U1],
        np.c_[U1, L, L1],
        np.c_[np.full(5, 11), L1, L],
    ])
    return verts, faces


def _orient_outward(verts, faces):
    p = verts[faces]
    normal = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    flip = np.einsum("ij,ij->i", normal, p.sum(axis=1)) < 0
    faces = faces.copy()
    faces[flip] = faces[flip][:, [0, 2, 1]]
    return faces


def _subdivide(verts, faces):
    """One 1-to-4 midpoint split with projection to the unit sphere; old indices kept."""
    nf = faces.shape[0]
    e = np.sort(np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]]), axis=1)
    uniq, inv = np.unique(e, axis=0, return_inverse=True)
    inv = inv.ravel()
    mid = verts[uniq[:, 0]] + verts[uniq[:, 1]]
    mid /= np.linalg.norm(mid, axis=1)[:, None]
    nv = verts.shape[0]
    a = nv + inv[:nf]
    b = nv + inv[nf:2 * nf]
    c = nv + inv[2 * nf:]
    new_faces = np.vstack([
        np.c_[faces[:, 0], a, c],
        np.c_[a, faces[:, 1], b],
        np.c_[c, b, faces[:, 2]],
        np.c_[a, b, c],
    ])
    return np.vstack([verts, mid]), new_faces


def _check_level(level):
    if int(level) != level or level < 0:
        raise MeshError(f"subdivision level must be a non-negative integer, got {level!r}")
    if level > MAX_ICO_LEVEL:
        raise MeshError(f"subdivision level {level} exceeds the limit {MAX_ICO_LEVEL}")


def build_icosphere(level):
    """Subdivided icosahedron on the unit sphere, 20 * 4**level triangles.

    Vertex 0 is the north pole and vertex 11 the south pole, so the default
    basepoint and its antipode are mesh vertices at every level.
    """
    _check_level(level)
    verts, faces = _icosahedron()
    faces = _orient_outward(verts, faces)
    for _ in range(level):
        verts, faces = _subdivide(verts, faces)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    return Mesh(verts, faces, kind="sphere", level=int(level))


def build_hemisphere(level):
    """Upper unit hemisphere from a subdivided octahedron.

    The equator is a union of mesh edges at every level, so the boundary is
    the totally geodesic great circle z = 0.
    """
    _check_level(level)
    verts = np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]], dtype=float)
    faces = np.array([[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1]])
    for _ in range(level):
        verts, faces = _subdivide(verts, faces)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    verts[np.abs(verts[:, 2]) < 1e-15, 2] = 0.0
    return Mesh(verts, _orient_outward(verts, faces), kind="hemisphere", level=int(level))


def build_torus_grid(n):
    """Periodic n x n grid on [0, 2pi)^2, each square cut along its main diagonal."""
    if int(n) != n or n < 8 or n % 2:
        raise MeshError(f"torus grid size must be an even integer >= 8, got {n!r}")
    n = int(n)
    h = TWO_PI / n
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    verts = np.c_[i.ravel() * h, j.ravel() * h]

    def idx(a, b):
        return (a % n) * n + (b % n)

    i, j = i.ravel(), j.ravel()
    v00, v10, v11, v01 = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
    faces = np.vstack([np.c_[v00, v10, v11], np.c_[v00, v11, v01]])
    return Mesh(verts, faces, kind="torus", grid_n=n)


def _unit(p, name):
    p = np.asarray(p, dtype=float)
    if abs(np.linalg.norm(p) - 1.0) > 1e-9:
        raise ValueError(f"{name} must lie on the unit sphere (|{name}| = {np.linalg.norm(p):.12g})")
    return p


def geodesic_distance(p, q):
    """Great-circle distance between two unit vectors."""
    p = _unit(p, "p")
    q = _unit(q, "q")
    return float(np.arccos(np.clip(np.dot(p, q), -1.0, 1.0)))


def distances_from(mesh, basepoint):
    """Geodesic distance from ``basepoint`` to every vertex of a sphere mesh."""
    if not mesh.on_sphere:
        raise MeshError("geodesic distance from a basepoint is only defined for sphere meshes here")
    x0 = _unit(basepoint, "basepoint")
    return np.arccos(np.clip(mesh.vertices @ x0, -1.0, 1.0))


def cut_locus_mask(mesh, basepoint, radius=CUT_LOCUS_RADIUS):
    """True at vertices within ``radius`` of the antipode of ``basepoint``."""
    return distances_from(mesh, basepoint) > np.pi - radius


def radial_hessian_sphere(f_prime, f_second, r):
    """Hessian eigenvalues of f(d(x0, .)) on the unit sphere at distance r.

    Returns ``(f''(r), f'(r) * cot(r))``: radial and tangential eigenvalue.
    """
    if not (1e-6 < r < np.pi - 1e-6):
        raise ValueError(f"r = {r!r} is too close to the basepoint or its cut locus")
    return float(f_second), float(f_prime * np.cos(r) / np.sin(r))
