import numpy as np
import pytest

from lepnc.errors import (DegenerateCell, NonManifoldFace, NotStarShaped,
                          ParseError)
from lepnc.mesh import (build_mesh, estimate_rho, gen_cartesian,
                        gen_hexagonal, gen_kershaw, gen_locally_refined,
                        read_mesh, regularity_gamma, write_mesh)

ALL_FAMILIES = [gen_cartesian, gen_hexagonal, gen_kershaw,
                gen_locally_refined]


def test_cartesian_counts_and_measures():
    n = 5
    mesh = gen_cartesian(n)
    assert mesh.n_cells == n * n
    assert mesh.n_faces == 2 * n * (n + 1)
    assert len(mesh.boundary_faces) == 4 * n
    assert abs(sum(c.area for c in mesh.cells) - 1.0) < 1e-13
    assert abs(mesh.h_max - np.sqrt(2.0) / n) < 1e-13


def test_cartesian_regularity_constants():
    mesh = gen_cartesian(4)
    # squares with centroid star-centers: h/d = 2*sqrt(2), 4 faces,
    # interior distance ratios all 1
    assert abs(regularity_gamma(mesh) - (6.0 + 2.0 * np.sqrt(2.0))) < 1e-12
    # smallest pyramid-triangle inradius over cell diameter
    expected = 0.5 / (1.0 + np.sqrt(2.0)) / np.sqrt(2.0)
    assert abs(estimate_rho(mesh) - expected) < 1e-12


@pytest.mark.parametrize("gen", ALL_FAMILIES)
def test_families_cover_unit_square(gen):
    mesh = gen(6)
    assert abs(sum(c.area for c in mesh.cells) - 1.0) < 1e-12
    for f in mesh.faces:
        assert len(f.cells) in (1, 2)
        assert f.boundary == (len(f.cells) == 1)
    for k, cell in enumerate(mesh.cells):
        for fid in cell.face_ids:
            assert mesh.face_dist(fid, k) > 0.0


def test_refinement_decreases_h():
    for gen in ALL_FAMILIES:
        hs = [gen(n).h_max for n in (4, 8, 16)]
        assert hs[0] > hs[1] > hs[2]


def test_locally_refined_has_hanging_nodes():
    mesh = gen_locally_refined(4)
    sizes = {len(c.vertex_ids) for c in mesh.cells}
    assert 5 in sizes  # coarse cells on the refinement line list the midpoint
    assert 4 in sizes


def test_kershaw_zero_distortion_matches_cartesian():
    a = gen_kershaw(4, 0.0)
    b = gen_cartesian(4)
    assert np.allclose(a.vertices, b.vertices)
    with pytest.raises(ValueError):
        gen_kershaw(4, 1.5)
    with pytest.raises(ValueError):
        gen_locally_refined(3)


def test_build_mesh_validation():
    # zero-area cell
    with pytest.raises(DegenerateCell):
        build_mesh([[0, 0], [1, 0], [2, 0]], [[0, 1, 2]])
    # an edge with three owner cells
    verts = [[0, 0], [1, 0], [1, 1], [0, 1], [2, 0], [2, 1]]
    loops = [[0, 1, 2, 3], [1, 4, 5, 2], [1, 4, 2]]
    with pytest.raises(NonManifoldFace):
        build_mesh(verts, loops)
    # star-center outside the cell
    with pytest.raises(NotStarShaped):
        build_mesh([[0, 0], [1, 0], [1, 1], [0, 1]], [[0, 1, 2, 3]],
                   star_centers=[[2.0, 0.5]])


def test_mesh_io_roundtrip(tmp_path):
    mesh = gen_locally_refined(4)
    path = tmp_path / "mesh.txt"
    write_mesh(mesh, path)
    back = read_mesh(path)
    assert back.n_cells == mesh.n_cells
    assert back.n_faces == mesh.n_faces
    assert np.allclose(back.vertices, mesh.vertices)
    assert abs(back.h_max - mesh.h_max) < 1e-15
    for a, b in zip(mesh.cells, back.cells):
        assert np.array_equal(a.vertex_ids, b.vertex_ids)
        assert np.allclose(a.x_center, b.x_center)


def test_read_mesh_errors(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("wrong header\n")
    with pytest.raises(ParseError):
        read_mesh(p)
    p.write_text("polymesh 2\n3 1\n0 0\n1 0\n0 1\n2 0 1\n")
    with pytest.raises(ParseError) as exc:
        read_mesh(p)
    assert exc.value.line == 6  # cell loop with fewer than 3 vertices
    p.write_text("polymesh 2\n3 1\n0 0\n1 0\n0 1\n3 0 1 5\n")
    with pytest.raises(ParseError):
        read_mesh(p)  # vertex index out of range


def test_random_polygons_are_valid(rng):
    from conftest import random_polygon_mesh
    for _ in range(25):
        mesh = random_polygon_mesh(rng)
        assert mesh.n_cells == 1
        assert regularity_gamma(mesh) > 3.0
        assert estimate_rho(mesh) > 0.0
