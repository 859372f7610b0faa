import numpy as np
import pytest
import scipy.linalg
import scipy.sparse.linalg as spla

from lepnc.gdm import (conformity_wd, consistency_sd, gd_matrices,
                       poincare_cd)
from lepnc.mesh import build_mesh, gen_cartesian, gen_hexagonal
from lepnc.space import build_space, interpolate_J, masslump


def phi(p):
    return np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1])


def gphi(p):
    px, py = np.pi * p[:, 0], np.pi * p[:, 1]
    return np.pi * np.column_stack([np.cos(px) * np.sin(py),
                                    np.sin(px) * np.cos(py)])


def lap_phi(p):
    return -2.0 * np.pi ** 2 * phi(p)


def test_poincare_matches_dense_eigensolve():
    space = build_space(gen_cartesian(2))
    m, g = gd_matrices(space)
    lam = scipy.linalg.eigh(m.toarray(), g.toarray(),
                            eigvals_only=True)[-1]
    cd = poincare_cd(space)
    assert abs(cd - np.sqrt(lam)) < 1e-6 * cd


def test_poincare_scales_with_domain():
    mesh = gen_cartesian(4)
    scaled = build_mesh(2.0 * mesh.vertices,
                        [c.vertex_ids for c in mesh.cells])
    cd1 = poincare_cd(build_space(mesh))
    cd2 = poincare_cd(build_space(scaled))
    assert abs(cd2 - 2.0 * cd1) < 1e-6 * cd1


def test_poincare_lumped_approaches_identity():
    diffs = []
    for n in (4, 8, 16):
        space = build_space(gen_cartesian(n))
        ml = masslump(space, 0.0)
        diffs.append(abs(poincare_cd(space, lumped=True, ml=ml)
                         - poincare_cd(space)))
    assert diffs[0] > diffs[1] > diffs[2]


def test_gram_matrix_spd():
    for gen, n in ((gen_cartesian, 4), (gen_hexagonal, 4)):
        space = build_space(gen(n))
        _, g = gd_matrices(space)
        lam = spla.eigsh(g, k=1, which="SA", return_eigenvectors=False)[0]
        assert lam > 0.0


def test_consistency_upper_bounded_by_interpolant():
    space = build_space(gen_cartesian(4))
    sd = consistency_sd(space, phi, gphi)
    fld = interpolate_J(space, phi)
    e2 = h2 = 0.0
    for k in range(space.mesh.n_cells):
        pts, wts, vals, grads = space.cell_tables(k)
        loc = space.cell_coeffs(fld, k)
        d = vals @ loc - phi(pts)
        dg = np.einsum("qld,l->qd", grads, loc) - gphi(pts)
        e2 += wts @ (d * d)
        h2 += wts @ (dg * dg).sum(axis=1)
    bound = np.sqrt(e2) + np.sqrt(h2)
    assert sd <= np.sqrt(2.0) * bound + 1e-12


def test_consistency_zero_function():
    space = build_space(gen_cartesian(3))
    sd = consistency_sd(space, lambda p: np.zeros(len(p)),
                        lambda p: np.zeros((len(p), 2)))
    assert sd < 1e-12


def test_consistency_decays():
    vals = [consistency_sd(build_space(gen_cartesian(n)), phi, gphi)
            for n in (4, 8, 16)]
    assert vals[0] > 1.7 * vals[1] > 1.7 ** 2 * vals[2] / 1.7


def test_conformity_constant_flux_zero():
    for n in (3, 6):
        space = build_space(gen_hexagonal(n))
        wd = conformity_wd(space,
                           lambda p: np.tile([0.8, -1.2], (len(p), 1)),
                           lambda p: np.zeros(len(p)))
        assert wd < 1e-10


def test_conformity_zero_and_homogeneous():
    space = build_space(gen_cartesian(4))
    assert conformity_wd(space, lambda p: np.zeros((len(p), 2)),
                         lambda p: np.zeros(len(p))) == 0.0
    w1 = conformity_wd(space, gphi, lap_phi)
    w2 = conformity_wd(space, lambda p: 2.0 * gphi(p),
                       lambda p: 2.0 * lap_phi(p))
    assert abs(w2 - 2.0 * w1) < 1e-12 * max(1.0, w2)


def test_conformity_lumped_variant_runs():
    space = build_space(gen_cartesian(4))
    ml = masslump(space, 0.0)
    wd = conformity_wd(space, gphi, lap_phi, lumped=True, ml=ml)
    assert np.isfinite(wd) and wd > 0.0
    with pytest.raises(ValueError):
        conformity_wd(space, gphi, lap_phi, lumped=True)
