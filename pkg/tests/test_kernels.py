import numpy as np
import pytest

from lepnc import kernels
from lepnc.kernels import _ckernels, _pykernels
from lepnc.mesh import gen_hexagonal, gen_kershaw
from lepnc.quadrature import triangle_rule
from lepnc.space import build_space


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")
    assert kernels.cell_tables is not None


@pytest.mark.skipif(_ckernels is None, reason="compiled backend not built")
def test_backends_agree():
    rule = triangle_rule(6)
    for mesh in (gen_hexagonal(4), gen_kershaw(4)):
        space = build_space(mesh)
        for cb in space.cell_basis:
            args = (cb.xk, cb.verts, cb.coefs, cb.normals, cb.psi_const,
                    cb.psi_grad, cb.psibar, rule.points, rule.weights)
            p_out = _pykernels.cell_tables(*args)
            c_out = _ckernels.cell_tables(*args)
            for a, b in zip(p_out, c_out):
                assert np.allclose(a, b, rtol=0, atol=1e-13)


def test_tables_shapes_and_weights():
    mesh = gen_hexagonal(3)
    space = build_space(mesh)
    k = 0
    nf = len(mesh.cells[k].face_ids)
    pts, wts, vals, grads = space.cell_tables(k, degree=4)
    nq = len(triangle_rule(4).weights)
    assert pts.shape == (nf * nq, 2)
    assert vals.shape == (nf * nq, 3 + nf)
    assert grads.shape == (nf * nq, 3 + nf, 2)
    assert abs(wts.sum() - mesh.cells[k].area) < 1e-13
    # each bubble column is nonzero only in its own pyramid's point block
    for j in range(nf):
        col = vals[:, 3 + j].reshape(nf, nq)
        mask = np.zeros(nf, bool)
        mask[j] = True
        assert np.all(col[~mask] == 0.0)
