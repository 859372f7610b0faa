import numpy as np
import pytest

from lepnc.errors import MeshError
from lepnc.mesh import build_mesh


def random_polygon_mesh(rng, min_sides=3, max_sides=8):
    """One-cell mesh on a random star-shaped polygon around the origin."""
    while True:
        nv = int(rng.integers(min_sides, max_sides + 1))
        ang = np.sort(rng.uniform(0.0, 2.0 * np.pi, nv))
        if np.min(np.diff(ang, append=ang[0] + 2.0 * np.pi)) < 0.3:
            continue
        rad = rng.uniform(0.55, 1.0, nv)
        verts = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
        try:
            return build_mesh(verts, [list(range(nv))])
        except MeshError:
            continue


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
