"""Quadrature rules on segments and triangles, and mapped cell/face integrals.

Triangle rules are collapsed Gauss-Legendre x Gauss-Jacobi product rules on
the reference triangle (0,0)-(1,0)-(0,1): all weights are positive and
exactness to the requested total degree is guaranteed by construction.
Cell integrals are assembled pyramid-by-pyramid so that integrands that are
only piecewise smooth on the pyramid subdivision are resolved exactly.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import ceil

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .errors import UnsupportedDegree

MAX_TRIANGLE_DEGREE = 10
MAX_SEGMENT_DEGREE = 19


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray   # (n, dim) reference coordinates
    weights: np.ndarray  # (n,), positive, summing to the reference measure
    exact_degree: int


@lru_cache(maxsize=None)
def segment_rule(degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on the reference segment [0, 1]."""
    if degree < 0 or degree > MAX_SEGMENT_DEGREE:
        raise UnsupportedDegree(f"segment rule of degree {degree}")
    n = max(1, ceil((degree + 1) / 2))
    x, w = roots_legendre(n)
    pts = (x + 1.0) / 2.0
    wts = w / 2.0
    return QuadratureRule(pts.reshape(-1, 1), wts, 2 * n - 1)


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadratureRule:
    """Product rule on the unit reference triangle, exact to `degree`."""
    if degree < 1 or degree > MAX_TRIANGLE_DEGREE:
        raise UnsupportedDegree(f"triangle rule of degree {degree}")
    n = max(1, ceil((degree + 1) / 2))
    gx, gw = roots_legendre(n)
    gx = (gx + 1.0) / 2.0
    gw = gw / 2.0
    # Gauss-Jacobi with weight (1-t) on [-1,1], mapped to [0,1]:
    # int_0^1 (1-y) f(y) dy = sum (jw/4) f((jx+1)/2)
    jx, jw = roots_jacobi(n, 1.0, 0.0)
    jy = (jx + 1.0) / 2.0
    jw = jw / 4.0
    # Duffy map (x, y) -> (x (1-y), y) collapses the square onto the triangle.
    xs = gx[:, None] * (1.0 - jy[None, :])
    ys = np.broadcast_to(jy[None, :], xs.shape)
    wts = gw[:, None] * jw[None, :]
    pts = np.column_stack([xs.ravel(), ys.ravel()])
    return QuadratureRule(pts, wts.ravel(), degree)


def map_triangle(rule: QuadratureRule, v0, v1, v2):
    """Map a reference-triangle rule to the triangle (v0, v1, v2).

    Returns (points (n,2), weights (n,)); weights sum to the triangle area.
    """
    v0 = np.asarray(v0, float)
    e1 = np.asarray(v1, float) - v0
    e2 = np.asarray(v2, float) - v0
    det = e1[0] * e2[1] - e1[1] * e2[0]
    pts = v0 + rule.points[:, :1] * e1 + rule.points[:, 1:2] * e2
    return pts, rule.weights * abs(det)


def map_segment(rule: QuadratureRule, a, b):
    """Map a reference-segment rule to the segment [a, b] in the plane."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    pts = a + rule.points[:, :1] * (b - a)
    length = float(np.hypot(*(b - a)))
    return pts, rule.weights * length


def cell_integrate(mesh, cell_id: int, f, degree: int = 6) -> float:
    """Integrate f over a cell by summing mapped rules on its pyramids.

    `f` must accept an (n, 2) array of points and return an (n,) array.
    """
    rule = triangle_rule(degree)
    cell = mesh.cells[cell_id]
    xk = cell.x_center
    verts = mesh.vertices[cell.vertex_ids]
    total = 0.0
    nv = len(verts)
    for j in range(nv):
        pts, wts = map_triangle(rule, verts[j], verts[(j + 1) % nv], xk)
        total += float(wts @ np.asarray(f(pts), float))
    return total


def face_integrate(mesh, face_id: int, f, degree: int = 6) -> float:
    """Integrate f over a face (segment); same vectorized-callable contract."""
    rule = segment_rule(degree)
    face = mesh.faces[face_id]
    a = mesh.vertices[face.v0]
    b = mesh.vertices[face.v1]
    pts, wts = map_segment(rule, a, b)
    return float(wts @ np.asarray(f(pts), float))
