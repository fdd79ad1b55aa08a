"""Time the numba and numpy assembly kernels on icosphere meshes.

    python benchmarks/bench_kernels.py --levels 5 6 7 --repeat 5
"""

import argparse
import timeit

import numpy as np

from weighted_spectra import kernels
from weighted_spectra._accel import HAVE_NUMBA
from weighted_spectra.manifold import build_icosphere


def _cases(mesh):
    corners = mesh.corners()
    areas, cots = kernels.triangle_geometry_numpy(corners)
    weight = np.ones(mesh.n_triangles)
    index = mesh.triangles.ravel()
    values = np.repeat(areas / 3.0, 3)
    n = mesh.n_vertices
    return {
        "triangle_geometry": (
            lambda: kernels.triangle_geometry_numpy(corners),
            lambda: kernels.triangle_geometry_numba(corners),
        ),
        "stiffness_triplets": (
            lambda: kernels.stiffness_triplets_numpy(mesh.triangles, cots, weight),
            lambda: kernels.stiffness_triplets_numba(mesh.triangles, cots, weight),
        ),
        "scatter_add": (
            lambda: kernels.scatter_add_numpy(index, values, n),
            lambda: kernels.scatter_add_numba(index, values, n),
        ),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=int, nargs="+", default=[5, 6, 7])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed")

    print(f"{'level':>5} {'triangles':>9} {'kernel':<20} {'numpy ms':>9} {'numba ms':>9} {'speedup':>7}")
    for level in args.levels:
        mesh = build_icosphere(level)
        for name, (np_fn, nb_fn) in _cases(mesh).items():
            nb_fn()  # compile outside the timed region
            t_np = min(timeit.repeat(np_fn, number=1, repeat=args.repeat)) * 1e3
            t_nb = min(timeit.repeat(nb_fn, number=1, repeat=args.repeat)) * 1e3
            print(f"{level:>5} {mesh.n_triangles:>9} {name:<20} {t_np:>9.2f} {t_nb:>9.2f} {t_np / t_nb:>7.1f}")


if __name__ == "__main__":
    main()
