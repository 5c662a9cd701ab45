"""Compare the compiled bond kernel with the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--sizes 60 120 240] [--m-ratio 3] [--repeat 5]

Each size is the number of cells along both sides of a square lattice.  The
script checks that the two kernels agree before timing them.
"""

import argparse
import timeit

import numpy as np

from porepd import _ext
from porepd.discretization import Domain2D, build_families, build_grid
from porepd.pd_core import ElasticConstants, internal_force


def make_case(cells: int, m_ratio: int, seed: int = 0):
    spacing = 1e-3
    grid, _ = build_grid(Domain2D(cells * spacing, cells * spacing, spacing))
    build_families(grid, m_ratio)
    rng = np.random.default_rng(seed)
    u = 1e-7 * rng.standard_normal((grid.n_nodes, 2))
    return grid, u


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[60, 120, 240])
    ap.add_argument("--m-ratio", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    if _ext.compiled_bond_forces is None:
        raise SystemExit("compiled kernel not built; run `pip install -e . --no-build-isolation` first")
    solid = ElasticConstants(10e9, 0.25, 1.0, 1000.0)
    kernels = {"cython": _ext.compiled_bond_forces, "numpy": _ext.python_bond_forces}

    print(f"{'nodes':>8} {'bonds':>9} {'cython ms':>10} {'numpy ms':>10} {'speedup':>8} {'max |df|/|f|':>13}")
    for cells in args.sizes:
        grid, u = make_case(cells, args.m_ratio)
        ref = internal_force(grid, u, solid, kernel=kernels["numpy"]).force
        got = internal_force(grid, u, solid, kernel=kernels["cython"]).force
        rel = float(np.abs(got - ref).max() / np.abs(ref).max())
        times = {}
        for name, kern in kernels.items():
            timer = timeit.Timer(lambda k=kern: internal_force(grid, u, solid, kernel=k))
            times[name] = min(timer.repeat(repeat=args.repeat, number=1)) * 1e3
        print(f"{grid.n_nodes:8d} {grid.n_bonds:9d} {times['cython']:10.2f} {times['numpy']:10.2f} "
              f"{times['numpy'] / times['cython']:8.2f} {rel:13.2e}")


if __name__ == "__main__":
    main()
