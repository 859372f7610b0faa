"""Benchmark the compiled basis-table kernel against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [n]
"""

import sys
import time

import numpy as np

from lepnc import build_space, gen_hexagonal
from lepnc.kernels import _ckernels, _pykernels
from lepnc.quadrature import triangle_rule


def run(kernel, space, rule, repeats):
    t0 = time.perf_counter()
    acc = 0.0
    for _ in range(repeats):
        for cb in space.cell_basis:
            _, wts, vals, _ = kernel(cb.xk, cb.verts, cb.coefs, cb.normals,
                                     cb.psi_const, cb.psi_grad, cb.psibar,
                                     rule.points, rule.weights)
            acc += wts @ vals[:, 0]
    return time.perf_counter() - t0, acc


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 32
    mesh = gen_hexagonal(n)
    space = build_space(mesh)
    rule = triangle_rule(6)
    repeats = 5
    t_py, a_py = run(_pykernels.cell_tables, space, rule, repeats)
    print(f"mesh: {mesh.n_cells} cells, rule: {len(rule.weights)} pts/pyramid")
    print(f"python backend: {t_py / repeats * 1e3:8.2f} ms/pass")
    if _ckernels is None:
        print("cython backend: not built")
        return
    t_cy, a_cy = run(_ckernels.cell_tables, space, rule, repeats)
    print(f"cython backend: {t_cy / repeats * 1e3:8.2f} ms/pass")
    print(f"speedup: {t_py / t_cy:.2f}x   (checksum diff {abs(a_py - a_cy):.2e})")


if __name__ == "__main__":
    main()
