"""Per-triangle inner loops of mesh construction and P1 assembly.

Each kernel exists twice: a vectorized numpy version and a loop version
compiled with numba. The module-level names (``triangle_geometry``,
``scatter_add``) point at whichever backend ``_accel`` selected; both
variants stay importable so they can be compared directly.
"""
import numpy as np

from ._accel import USE_NUMBA, njit


def triangle_geometry_numpy(corners):
    """Areas and corner cotangents of a batch of triangles.

    Parameters
    ----------
    corners : (T, 3, d) float array, d in {2, 3}
        Corner coordinates, already unwrapped for periodic meshes.

    Returns
    -------
    areas : (T,) array
    cots : (T, 3) array
        ``cots[t, k]`` is the cotangent of the interior angle at corner k.
    """
    e01 = corners[:, 1] - corners[:, 0]
    e02 = corners[:, 2] - corners[:, 0]
    if corners.shape[2] == 2:
        twice_area = np.abs(e01[:, 0] * e02[:, 1] - e01[:, 1] * e02[:, 0])
    else:
        twice_area = np.linalg.norm(np.cross(e01, e02), axis=1)
    cots = np.empty((corners.shape[0], 3))
    with np.errstate(divide="ignore", invalid="ignore"):
        for k in range(3):
            a = corners[:, (k + 1) % 3] - corners[:, k]
            b = corners[:, (k + 2) % 3] - corners[:, k]
            cots[:, k] = np.einsum("ij,ij->i", a, b) / twice_area
    return 0.5 * twice_area, cots


def _triangle_geometry_loop(corners):
    T = corners.shape[0]
    d = corners.shape[2]
    areas = np.empty(T)
    cots = np.empty((T, 3))
    for t in range(T):
        ux = corners[t, 1, 0] - corners[t, 0, 0]
        uy = corners[t, 1, 1] - corners[t, 0, 1]
        vx = corners[t, 2, 0] - corners[t, 0, 0]
        vy = corners[t, 2, 1] - corners[t, 0, 1]
        if d == 2:
            twice = abs(ux * vy - uy * vx)
        else:
            uz = corners[t, 1, 2] - corners[t, 0, 2]
            vz = corners[t, 2, 2] - corners[t, 0, 2]
            cx = uy * vz - uz * vy
            cy = uz * vx - ux * vz
            cz = ux * vy - uy * vx
            twice = np.sqrt(cx * cx + cy * cy + cz * cz)
        areas[t] = 0.5 * twice
        for k in range(3):
            k1 = (k + 1) % 3
            k2 = (k + 2) % 3
            dot = 0.0
            for c in range(d):
                dot += (corners[t, k1, c] - corners[t, k, c]) * (corners[t, k2, c] - corners[t, k, c])
            cots[t, k] = dot / twice
    return areas, cots


def scatter_add_numpy(index, values, n):
    """``out[index[i]] += values[i]`` into a length-n zero array."""
    return np.bincount(index, weights=values, minlength=n).astype(np.float64)


def _scatter_add_loop(index, values, n):
    out = np.zeros(n)
    for i in range(index.shape[0]):
        out[index[i]] += values[i]
    return out


def stiffness_triplets_numpy(triangles, cots, tri_weight):
    """COO triplets of the weighted cotangent stiffness.

    The edge opposite corner k couples the other two corners with
    ``-0.5 * w * cot_k``; diagonals receive the negated off-diagonal sums so
    every row sums to zero by construction.
    """
    T = triangles.shape[0]
    rows = np.empty(12 * T, dtype=np.int64)
    cols = np.empty(12 * T, dtype=np.int64)
    vals = np.empty(12 * T)
    for k in range(3):
        i = triangles[:, (k + 1) % 3]
        j = triangles[:, (k + 2) % 3]
        w = 0.5 * tri_weight * cots[:, k]
        base = 4 * k * T
        rows[base:base + T], cols[base:base + T], vals[base:base + T] = i, j, -w
        rows[base + T:base + 2 * T], cols[base + T:base + 2 * T], vals[base + T:base + 2 * T] = j, i, -w
        rows[base + 2 * T:base + 3 * T], cols[base + 2 * T:base + 3 * T], vals[base + 2 * T:base + 3 * T] = i, i, w
        rows[base + 3 * T:base + 4 * T], cols[base + 3 * T:base + 4 * T], vals[base + 3 * T:base + 4 * T] = j, j, w
    return rows, cols, vals


def _stiffness_triplets_loop(triangles, cots, tri_weight):
    T = triangles.shape[0]
    rows = np.empty(12 * T, dtype=np.int64)
    cols = np.empty(12 * T, dtype=np.int64)
    vals = np.empty(12 * T)
    for k in range(3):
        base = 4 * k * T
        for t in range(T):
            i = triangles[t, (k + 1) % 3]
            j = triangles[t, (k + 2) % 3]
            w = 0.5 * tri_weight[t] * cots[t, k]
            rows[base + t] = i
            cols[base + t] = j
            vals[base + t] = -w
            rows[base + T + t] = j
            cols[base + T + t] = i
            vals[base + T + t] = -w
            rows[base + 2 * T + t] = i
            cols[base + 2 * T + t] = i
            vals[base + 2 * T + t] = w
            rows[base + 3 * T + t] = j
            cols[base + 3 * T + t] = j
            vals[base + 3 * T + t] = w
    return rows, cols, vals


triangle_geometry_numba = njit(_triangle_geometry_loop)
scatter_add_numba = njit(_scatter_add_loop)
stiffness_triplets_numba = njit(_stiffness_triplets_loop)

if USE_NUMBA:
    triangle_geometry = triangle_geometry_numba
    scatter_add = scatter_add_numba
    stiffness_triplets = stiffness_triplets_numba
else:
    triangle_geometry = triangle_geometry_numpy
    scatter_add = scatter_add_numpy
    stiffness_triplets = stiffness_triplets_numpy
