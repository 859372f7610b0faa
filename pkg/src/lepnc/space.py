"""The locally enriched non-conforming space: per-cell bubble + nodal basis,
global DOF map, interpolators and the mass-lumping operator.

Per cell the local basis has 3 + Card(F_K) functions, ordered
[nodal 0..2, one bubble per face].  The nodal functions are the P1 nodal
basis of three chosen vertices, corrected by bubbles so that their average
on every face vanishes; each bubble is supported on one pyramid of the cell
and has unit average on its face.  Global coefficients are face averages
(one DOF per interior face, a fixed slot per boundary face) and vertex
values (3 per cell).
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import kernels
from .errors import (DegenerateVertexSet, PointOutsideCell, PointOutsideDomain,
                     SingularGram)
from .mesh import pyramid_subdivision
from .quadrature import map_segment, segment_rule, triangle_rule

DEFAULT_DEGREE = 6


def _cross2(u, v):
    return u[0] * v[1] - u[1] * v[0]


@dataclass
class CellBasis:
    xk: np.ndarray
    verts: np.ndarray        # (F, 2) loop order
    coefs: np.ndarray        # (F,) bubble normalizations c_{K,sigma}
    normals: np.ndarray      # (F, 2, 2) internal-face normals per pyramid
    psi_const: np.ndarray    # (3,)
    psi_grad: np.ndarray     # (3, 2)
    psibar: np.ndarray       # (3, F) face averages of the nodal basis
    chosen: np.ndarray       # (3,) local loop indices of the chosen vertices

    @property
    def chosen_points(self):
        return self.verts[self.chosen]


@dataclass
class DofMap:
    n_int: int               # interior-face DOFs come first
    n_cells: int
    face_dof: np.ndarray     # (nfaces,) DOF index or -1 for boundary faces
    boundary_slot: np.ndarray  # (nfaces,) extended slot index or -1

    @property
    def ndofs(self):
        return self.n_int + 3 * self.n_cells

    @property
    def n_boundary(self):
        return int((self.boundary_slot >= 0).sum())

    def cell_dof(self, k, i):
        return self.n_int + 3 * k + i

    def cell_dofs(self, k):
        base = self.n_int + 3 * k
        return np.arange(base, base + 3)


class DiscreteField:
    """Coefficient vector over the free DOFs plus fixed boundary-face values."""

    def __init__(self, space, coeffs=None, bc=None):
        self.space = space
        n = space.dofmap.ndofs
        self.coeffs = np.zeros(n) if coeffs is None else np.asarray(coeffs, float)
        self.bc = np.zeros(space.mesh.n_faces) if bc is None else np.asarray(bc, float)

    def __sub__(self, other):
        return DiscreteField(self.space, self.coeffs - other.coeffs,
                             self.bc - other.bc)

    def __add__(self, other):
        return DiscreteField(self.space, self.coeffs + other.coeffs,
                             self.bc + other.bc)

    def __mul__(self, a):
        return DiscreteField(self.space, a * self.coeffs, a * self.bc)

    __rmul__ = __mul__

    def face_value(self, face_id):
        d = self.space.dofmap.face_dof[face_id]
        return self.coeffs[d] if d >= 0 else self.bc[face_id]


@dataclass
class MassLumping:
    """Region measures and representative points; shapes are never stored."""
    space: object
    varpi: float
    cell_measures: np.ndarray   # (ncells,) measure of each vertex region
    face_measures: np.ndarray   # (nfaces,) measure of each face region

    def free_measures(self):
        """Measure per free DOF (boundary-face regions carry the value 0 of
        the reconstruction and therefore never enter lumped norms)."""
        space = self.space
        meas = np.zeros(space.dofmap.ndofs)
        for f in space.mesh.interior_faces:
            meas[space.dofmap.face_dof[f]] = self.face_measures[f]
        for k in range(space.mesh.n_cells):
            meas[space.dofmap.cell_dofs(k)] = self.cell_measures[k]
        return meas

    def rep_point(self, k, local):
        """Representative point of a cell DOF (local 0..2) or face (local>=3)."""
        cb = self.space.cell_basis[k]
        if local < 3:
            return cb.chosen_points[local]
        fid = self.space.mesh.cells[k].face_ids[local - 3]
        return self.space.mesh.faces[fid].centroid


class LepncSpace:
    def __init__(self, mesh, cell_basis, dofmap):
        self.mesh = mesh
        self.cell_basis = cell_basis
        self.dofmap = dofmap
        self._subdivisions = [pyramid_subdivision(mesh, k)
                              for k in range(mesh.n_cells)]

    # -- kernels -----------------------------------------------------------
    def cell_tables(self, k, degree=DEFAULT_DEGREE):
        """Quadrature points/weights and basis values/gradients on cell k."""
        rule = triangle_rule(degree)
        cb = self.cell_basis[k]
        return kernels.cell_tables(cb.xk, cb.verts, cb.coefs, cb.normals,
                                   cb.psi_const, cb.psi_grad, cb.psibar,
                                   rule.points, rule.weights)

    def local_dofs(self, k):
        """Extended DOF index per local basis column (boundary faces map to
        slots appended after the free DOFs)."""
        dm = self.dofmap
        fids = self.mesh.cells[k].face_ids
        out = np.empty(3 + len(fids), int)
        out[:3] = dm.cell_dofs(k)
        for j, f in enumerate(fids):
            d = dm.face_dof[f]
            out[3 + j] = d if d >= 0 else dm.ndofs + dm.boundary_slot[f]
        return out

    def cell_coeffs(self, field, k):
        """Local coefficient vector [v_{K,0..2}, v_{sigma}] of a field."""
        dm = self.dofmap
        fids = self.mesh.cells[k].face_ids
        out = np.empty(3 + len(fids))
        out[:3] = field.coeffs[dm.cell_dofs(k)]
        for j, f in enumerate(fids):
            out[3 + j] = field.face_value(f)
        return out

    # -- point location ----------------------------------------------------
    def locate(self, x, tol=1e-12):
        x = np.asarray(x, float)
        for k in range(self.mesh.n_cells):
            j = self._find_pyramid(k, x, tol)
            if j is not None:
                return k, j
        raise PointOutsideDomain(f"point {x} not in any cell")

    def _find_pyramid(self, k, x, tol=1e-12):
        """First pyramid of cell k containing x (<= comparisons, loop order)."""
        sub = self._subdivisions[k]
        scale = self.mesh.cells[k].diameter ** 2
        for j, tri in enumerate(sub.triangles):
            a, b, c = tri
            d1 = _cross2(b - a, x - a)
            d2 = _cross2(c - b, x - b)
            d3 = _cross2(a - c, x - c)
            if (d1 >= -tol * scale and d2 >= -tol * scale
                    and d3 >= -tol * scale):
                return j
        return None


def build_space(mesh, quad_degree=DEFAULT_DEGREE) -> LepncSpace:
    """Choose per-cell vertex triples, normalize bubbles and build the DOF map."""
    seg = segment_rule(quad_degree)
    cell_basis = []
    for k, cell in enumerate(mesh.cells):
        verts = mesh.vertices[cell.vertex_ids]
        sub = pyramid_subdivision(mesh, k)
        chosen = _choose_vertices(verts, cell.diameter)
        s = verts[chosen]
        a = np.column_stack([np.ones(3), s])
        coef = np.linalg.inv(a)          # psi_i(x) = coef[0,i] + coef[1:,i].x
        psi_const = coef[0, :].copy()
        psi_grad = coef[1:, :].T.copy()

        nf = len(verts)
        coefs = np.empty(nf)
        psibar = np.empty((3, nf))
        for j in range(nf):
            va, vb = verts[j], verts[(j + 1) % nf]
            pts, wts = map_segment(seg, va, vb)
            length = wts.sum()
            diff = cell.x_center[None, :] - pts
            la = diff @ sub.internal_normals[j, 0]
            lb = diff @ sub.internal_normals[j, 1]
            avg = (wts @ (la * lb)) / length
            coefs[j] = 1.0 / avg
            psi_at = psi_const[:, None] + psi_grad @ pts.T
            psibar[:, j] = (psi_at @ wts) / length
        cell_basis.append(CellBasis(cell.x_center, np.ascontiguousarray(verts),
                                    coefs, sub.internal_normals,
                                    psi_const, psi_grad, psibar,
                                    np.asarray(chosen, int)))

    face_dof = np.full(mesh.n_faces, -1, int)
    for i, f in enumerate(mesh.interior_faces):
        face_dof[f] = i
    boundary_slot = np.full(mesh.n_faces, -1, int)
    for i, f in enumerate(mesh.boundary_faces):
        boundary_slot[f] = i
    dofmap = DofMap(len(mesh.interior_faces), mesh.n_cells, face_dof,
                    boundary_slot)
    return LepncSpace(mesh, cell_basis, dofmap)


def _choose_vertices(verts, diameter):
    """Vertex triple of maximal triangle area; first (lexicographic) wins ties."""
    best, best_area = None, 0.0
    for tri in combinations(range(len(verts)), 3):
        a, b, c = (verts[t] for t in tri)
        area = 0.5 * abs(_cross2(b - a, c - a))
        if area > best_area:
            best, best_area = tri, area
    if best is None or best_area <= 1e-12 * diameter ** 2:
        raise DegenerateVertexSet("no vertex triple with positive area")
    return np.asarray(best, int)


# ---------------------------------------------------------------------------
# pointwise evaluation


def eval_bubble(space, k, face_id, x):
    """Value and gradient of the bubble of (cell k, face) at a point of the cell.

    The gradient on pyramid boundaries is the limit from inside the bubble's
    pyramid (quadrature points never sit there, so the convention is free).
    """
    x = np.asarray(x, float)
    if space._find_pyramid(k, x) is None:
        raise PointOutsideCell(f"point {x} not in cell {k}")
    cb = space.cell_basis[k]
    fids = list(space.mesh.cells[k].face_ids)
    j = fids.index(face_id)
    diff = cb.xk - x
    la = diff @ cb.normals[j, 0]
    lb = diff @ cb.normals[j, 1]
    value = cb.coefs[j] * max(la, 0.0) * max(lb, 0.0)
    if la >= 0.0 and lb >= 0.0:
        grad = -cb.coefs[j] * (la * cb.normals[j, 1] + lb * cb.normals[j, 0])
    else:
        grad = np.zeros(2)
    return value, grad


def eval_local(space, k, pyramid, x):
    """Values/gradients of all local basis columns at a point of one pyramid."""
    cb = space.cell_basis[k]
    nf = len(cb.verts)
    vals = np.zeros(3 + nf)
    grads = np.zeros((3 + nf, 2))
    diff = cb.xk - np.asarray(x, float)
    la = diff @ cb.normals[pyramid, 0]
    lb = diff @ cb.normals[pyramid, 1]
    bub = cb.coefs[pyramid] * la * lb
    gbub = -cb.coefs[pyramid] * (la * cb.normals[pyramid, 1]
                                 + lb * cb.normals[pyramid, 0])
    psi = cb.psi_const + cb.psi_grad @ np.asarray(x, float)
    vals[:3] = psi - cb.psibar[:, pyramid] * bub
    grads[:3] = cb.psi_grad - np.outer(cb.psibar[:, pyramid], gbub)
    vals[3 + pyramid] = bub
    grads[3 + pyramid] = gbub
    return vals, grads


def eval_field(space, field, x):
    """Pointwise value and broken gradient of a discrete field."""
    k, j = space.locate(x)
    vals, grads = eval_local(space, k, j, x)
    loc = space.cell_coeffs(field, k)
    return float(loc @ vals), loc @ grads


# ---------------------------------------------------------------------------
# interpolators


def interpolate_I(space, u, degree=DEFAULT_DEGREE) -> DiscreteField:
    """Natural interpolator: face averages + values at the chosen vertices."""
    seg = segment_rule(degree)
    mesh = space.mesh
    field = DiscreteField(space)
    for fid, face in enumerate(mesh.faces):
        pts, wts = map_segment(seg, mesh.vertices[face.v0],
                               mesh.vertices[face.v1])
        avg = float(wts @ np.asarray(u(pts), float)) / wts.sum()
        d = space.dofmap.face_dof[fid]
        if d >= 0:
            field.coeffs[d] = avg
        else:
            field.bc[fid] = avg
    for k in range(mesh.n_cells):
        s = space.cell_basis[k].chosen_points
        field.coeffs[space.dofmap.cell_dofs(k)] = np.asarray(u(s), float)
    return field


def interpolate_J(space, u, degree=DEFAULT_DEGREE) -> DiscreteField:
    """Average-based interpolator: face averages + per-cell L2 projection of
    the remainder onto the localized nodal functions (3x3 Gram solve)."""
    seg = segment_rule(degree)
    mesh = space.mesh
    field = DiscreteField(space)
    face_avg = np.empty(mesh.n_faces)
    for fid, face in enumerate(mesh.faces):
        pts, wts = map_segment(seg, mesh.vertices[face.v0],
                               mesh.vertices[face.v1])
        face_avg[fid] = float(wts @ np.asarray(u(pts), float)) / wts.sum()
        d = space.dofmap.face_dof[fid]
        if d >= 0:
            field.coeffs[d] = face_avg[fid]
        else:
            field.bc[fid] = face_avg[fid]
    for k in range(mesh.n_cells):
        pts, wts, vals, _ = space.cell_tables(k, degree)
        uq = np.asarray(u(pts), float)
        jf = vals[:, 3:] @ face_avg[mesh.cells[k].face_ids]
        phi = vals[:, :3]
        gram = phi.T @ (wts[:, None] * phi)
        rhs = phi.T @ (wts * (uq - jf))
        try:
            coef = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularGram(f"cell {k}: {exc}")
        field.coeffs[space.dofmap.cell_dofs(k)] = coef
    return field


# ---------------------------------------------------------------------------
# mass lumping


def masslump(space, varpi: float) -> MassLumping:
    """Region measures for the piecewise-constant reconstruction with face
    weight `varpi` (only measures and representative points are kept)."""
    if not (0.0 <= varpi <= 1.0):
        raise ValueError("varpi must be in [0, 1]")
    mesh = space.mesh
    cell_meas = np.array([(1.0 - varpi) * c.area / 3.0 for c in mesh.cells])
    face_meas = np.zeros(mesh.n_faces)
    for k, cell in enumerate(mesh.cells):
        share = varpi * cell.area / len(cell.face_ids)
        for f in cell.face_ids:
            face_meas[f] += share
    return MassLumping(space, varpi, cell_meas, face_meas)


def lumped_reconstruct(ml, field, x) -> float:
    """Pointwise value of the lumped reconstruction.

    Regions are realized as nearest-representative subsets of the containing
    cell (the scheme itself only ever uses the measures); boundary-face
    regions carry the value 0 as the reconstruction ignores fixed slots.
    """
    space = ml.space
    k, _ = space.locate(x)
    cb = space.cell_basis[k]
    x = np.asarray(x, float)
    cands = [(np.hypot(*(cb.chosen_points[i] - x)), float(field.coeffs[
        space.dofmap.cell_dofs(k)[i]])) for i in range(3)
        if ml.cell_measures[k] > 0.0]
    if ml.varpi > 0.0:
        for f in space.mesh.cells[k].face_ids:
            d = space.dofmap.face_dof[f]
            val = float(field.coeffs[d]) if d >= 0 else 0.0
            cands.append((np.hypot(*(space.mesh.faces[f].centroid - x)), val))
    return min(cands)[1]


# ---------------------------------------------------------------------------
# norms


def l2_norm(field, degree=DEFAULT_DEGREE) -> float:
    space = field.space
    total = 0.0
    for k in range(space.mesh.n_cells):
        _, wts, vals, _ = space.cell_tables(k, degree)
        v = vals @ space.cell_coeffs(field, k)
        total += float(wts @ (v * v))
    return np.sqrt(total)


def broken_h1_norm(field, degree=DEFAULT_DEGREE) -> float:
    space = field.space
    total = 0.0
    for k in range(space.mesh.n_cells):
        _, wts, _, grads = space.cell_tables(k, degree)
        g = np.einsum("qld,l->qd", grads, space.cell_coeffs(field, k))
        total += float(wts @ (g * g).sum(axis=1))
    return np.sqrt(total)


def lumped_l2_norm(ml, field) -> float:
    meas = ml.free_measures()
    return float(np.sqrt(meas @ (field.coeffs * field.coeffs)))
