import numpy as np
import pytest

from conftest import random_polygon_mesh
from lepnc.errors import PointOutsideCell, PointOutsideDomain
from lepnc.mesh import gen_cartesian, gen_hexagonal
from lepnc.quadrature import map_segment, segment_rule
from lepnc.space import (DiscreteField, build_space, eval_bubble, eval_field,
                         eval_local, interpolate_I, interpolate_J, l2_norm,
                         broken_h1_norm, lumped_l2_norm, lumped_reconstruct,
                         masslump)


def face_average(space, k, fid, func, degree=10):
    """Average over a face of a per-point callable evaluated from cell k."""
    mesh = space.mesh
    f = mesh.faces[fid]
    pts, wts = map_segment(segment_rule(degree), mesh.vertices[f.v0],
                           mesh.vertices[f.v1])
    j = list(mesh.cells[k].face_ids).index(fid)
    vals = np.array([func(k, j, p) for p in pts])
    return (wts @ vals) / wts.sum()


def test_unit_square_bubble_constants():
    mesh = build_space(gen_cartesian(1)).mesh
    space = build_space(gen_cartesian(1))
    cb = space.cell_basis[0]
    # pyramid over the bottom face of the unit square: c = 12 and the
    # bubble value at the face midpoint is 3/2
    assert np.allclose(cb.coefs, 12.0)
    fid = mesh.cells[0].face_ids[0]
    f = mesh.faces[fid]
    mid = 0.5 * (mesh.vertices[f.v0] + mesh.vertices[f.v1])
    val, _ = eval_bubble(space, 0, fid, mid)
    assert abs(val - 1.5) < 1e-13


def test_bubble_face_averages_random_polygons(rng):
    for _ in range(20):
        mesh = random_polygon_mesh(rng)
        space = build_space(mesh)
        for fid in mesh.cells[0].face_ids:
            for other in mesh.cells[0].face_ids:
                avg = face_average(
                    space, 0, other,
                    lambda k, j, p: eval_bubble(space, k, fid, p)[0])
                assert abs(avg - (1.0 if other == fid else 0.0)) < 1e-11


def test_nodal_functions_vanish_on_face_averages(rng):
    for _ in range(10):
        mesh = random_polygon_mesh(rng)
        space = build_space(mesh)
        for i in range(3):
            for fid in mesh.cells[0].face_ids:
                avg = face_average(
                    space, 0, fid,
                    lambda k, j, p: eval_local(space, k, j, p)[0][i])
                assert abs(avg) < 1e-11
        # nodal at the chosen vertices: Kronecker delta
        cb = space.cell_basis[0]
        for i in range(3):
            for j, s in enumerate(cb.chosen_points):
                kk, pj = 0, space._find_pyramid(0, s, tol=1e-9)
                vals, _ = eval_local(space, kk, pj, s)
                assert abs(vals[i] - (1.0 if i == j else 0.0)) < 1e-10


@pytest.mark.parametrize("interp", [interpolate_I, interpolate_J])
def test_p1_reproduction(rng, interp):
    def u(p):
        return 0.4 - 1.3 * p[:, 0] + 2.2 * p[:, 1]

    for mesh in (gen_hexagonal(3), random_polygon_mesh(rng)):
        space = build_space(mesh)
        field = interp(space, u)
        for x in rng.uniform(0.05, 0.95, (10, 2)):
            try:
                val, grad = eval_field(space, field, x)
            except PointOutsideDomain:
                continue
            assert abs(val - u(x[None, :])[0]) < 1e-12
            assert np.allclose(grad, [-1.3, 2.2], atol=1e-11)


def test_patch_test_random_field(rng):
    """One-sided face averages of any discrete function agree on interior
    faces (and equal the face DOF value)."""
    mesh = gen_hexagonal(4)
    space = build_space(mesh)
    field = DiscreteField(space, rng.standard_normal(space.dofmap.ndofs))
    for fid in mesh.interior_faces[:40]:
        dof_val = field.coeffs[space.dofmap.face_dof[fid]]
        for k in mesh.faces[fid].cells:
            avg = face_average(
                space, k, fid,
                lambda kk, j, p: eval_local(space, kk, j, p)[0]
                @ space.cell_coeffs(field, kk))
            assert abs(avg - dof_val) < 1e-11


def test_point_location_errors():
    space = build_space(gen_cartesian(2))
    with pytest.raises(PointOutsideDomain):
        space.locate([2.0, 2.0])
    with pytest.raises(PointOutsideCell):
        eval_bubble(space, 0, space.mesh.cells[0].face_ids[0], [0.9, 0.9])


def test_norms_of_interpolated_polynomial():
    space = build_space(gen_cartesian(4))

    def u(p):
        return p[:, 0]

    field = interpolate_I(space, u)
    assert abs(l2_norm(field) - 1.0 / np.sqrt(3.0)) < 1e-12
    assert abs(broken_h1_norm(field) - 1.0) < 1e-12


def test_masslump_measures_partition():
    space = build_space(gen_hexagonal(3))
    for varpi in (0.0, 0.3, 1.0):
        ml = masslump(space, varpi)
        total = 3.0 * ml.cell_measures.sum() + ml.face_measures.sum()
        assert abs(total - 1.0) < 1e-12
    with pytest.raises(ValueError):
        masslump(space, 1.5)


def test_lumped_reconstruct_nearest_vertex():
    space = build_space(gen_cartesian(2))
    ml = masslump(space, 0.0)
    field = DiscreteField(space, np.arange(space.dofmap.ndofs, dtype=float))
    k = 0
    cb = space.cell_basis[k]
    for i in range(3):
        x = cb.chosen_points[i] * 0.9 + cb.xk * 0.1
        val = lumped_reconstruct(ml, field, x)
        assert val == field.coeffs[space.dofmap.cell_dofs(k)[i]]


def test_lumped_norm_uses_measures():
    space = build_space(gen_cartesian(2))
    ml = masslump(space, 0.0)
    field = DiscreteField(space, np.ones(space.dofmap.ndofs))
    # all measures at varpi=0 are |K|/3 per cell slot; total measure 1
    assert abs(lumped_l2_norm(ml, field) - 1.0) < 1e-12
