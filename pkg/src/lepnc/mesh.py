"""Polytopal meshes in 2D: construction, benchmark generators, regularity
measures and a line-oriented text format.

A mesh is a triplet of cells, faces and star-centers.  Faces are always
derived from the cell boundary loops by edge matching, which is what makes
hanging nodes work: a coarse cell whose side is split by a neighbouring fine
pair simply lists the intermediate vertex in its loop, producing two mesh
faces on one geometric side.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateCell, NonManifoldFace, NotStarShaped, ParseError

GEOM_RTOL = 1e-12


@dataclass
class PolyCell:
    vertex_ids: np.ndarray   # CCW boundary loop
    face_ids: np.ndarray     # aligned with the loop: face j joins loop[j], loop[j+1]
    x_center: np.ndarray     # star-center
    diameter: float
    area: float
    centroid: np.ndarray


@dataclass
class Face:
    v0: int
    v1: int
    centroid: np.ndarray
    length: float
    cells: tuple            # owner cell ids (1 for boundary, 2 for interior)
    normals: np.ndarray     # (k, 2) outward unit normal per owner
    dists: np.ndarray       # (k,) signed orthogonal distance d_{K,sigma} per owner
    boundary: bool


@dataclass
class PyramidSubdivision:
    """Triangles (x_K, v_j, v_{j+1}) of one cell, with internal-face normals."""
    cell_id: int
    triangles: np.ndarray        # (F, 3, 2): [v_j, v_{j+1}, x_K]
    areas: np.ndarray            # (F,)
    internal_normals: np.ndarray  # (F, 2, 2): outward normals of the 2 internal faces


@dataclass
class PolytopalMesh:
    dim: int
    vertices: np.ndarray
    cells: list
    faces: list
    h_max: float
    interior_faces: np.ndarray = field(default=None)
    boundary_faces: np.ndarray = field(default=None)

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_faces(self):
        return len(self.faces)

    def face_normal(self, face_id, cell_id):
        f = self.faces[face_id]
        return f.normals[f.cells.index(cell_id)]

    def face_dist(self, face_id, cell_id):
        f = self.faces[face_id]
        return f.dists[f.cells.index(cell_id)]

    def pyramid_subdivision(self, cell_id) -> PyramidSubdivision:
        return pyramid_subdivision(self, cell_id)


def _polygon_area_centroid(pts):
    x, y = pts[:, 0], pts[:, 1]
    xs, ys = np.roll(x, -1), np.roll(y, -1)
    cross = x * ys - xs * y
    area = 0.5 * cross.sum()
    if abs(area) < 1e-300:
        return area, pts.mean(axis=0)
    cx = ((x + xs) * cross).sum() / (6.0 * area)
    cy = ((y + ys) * cross).sum() / (6.0 * area)
    return area, np.array([cx, cy])


def _diameter(pts):
    d = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((d * d).sum(-1)).max())


def build_mesh(vertices, cell_loops, star_centers=None) -> PolytopalMesh:
    """Assemble and validate a mesh from vertex coordinates and CCW cell loops.

    Star-centers default to polygon centroids; a cell that is not strictly
    star-shaped with respect to its center is rejected.
    """
    vertices = np.asarray(vertices, float)
    cells = []
    edge_owners = {}
    for k, loop in enumerate(cell_loops):
        loop = np.asarray(loop, int)
        pts = vertices[loop]
        area, centroid = _polygon_area_centroid(pts)
        diam = _diameter(pts)
        if area <= GEOM_RTOL * max(diam, 1.0) ** 2:
            raise DegenerateCell(f"cell {k} has area {area:.3e}")
        if star_centers is not None and star_centers[k] is not None:
            xk = np.asarray(star_centers[k], float)
        else:
            xk = centroid
        nv = len(loop)
        for j in range(nv):
            a, b = int(loop[j]), int(loop[(j + 1) % nv])
            if np.hypot(*(vertices[b] - vertices[a])) <= GEOM_RTOL * diam:
                raise DegenerateCell(f"cell {k} has a zero-length edge {a}-{b}")
            key = (a, b) if a < b else (b, a)
            owners = edge_owners.setdefault(key, [])
            if len(owners) >= 2:
                raise NonManifoldFace(f"edge {key} has more than 2 owner cells")
            owners.append((k, j, a, b))
        cells.append(PolyCell(loop, None, xk, diam, area, centroid))

    faces = []
    for key, owners in edge_owners.items():
        k0, j0, a, b = owners[0]
        pa, pb = vertices[a], vertices[b]
        t = pb - pa
        length = float(np.hypot(*t))
        n0 = np.array([t[1], -t[0]]) / length  # outward for CCW traversal a->b
        cids, normals, dists = [k0], [n0], []
        if len(owners) == 2:
            cids.append(owners[1][0])
            normals.append(-n0)
        for cid, nrm in zip(cids, normals):
            d = float((0.5 * (pa + pb) - cells[cid].x_center) @ nrm)
            if d <= GEOM_RTOL * cells[cid].diameter:
                raise NotStarShaped(cid, face=(a, b))
            dists.append(d)
        faces.append(Face(a, b, 0.5 * (pa + pb), length, tuple(cids),
                          np.array(normals), np.array(dists),
                          boundary=(len(cids) == 1)))

    # cell -> face ids aligned with the boundary loop
    face_index = {}
    for i, f in enumerate(faces):
        face_index[(f.v0, f.v1) if f.v0 < f.v1 else (f.v1, f.v0)] = i
    for cell in cells:
        loop = cell.vertex_ids
        nv = len(loop)
        fids = [face_index[tuple(sorted((int(loop[j]), int(loop[(j + 1) % nv]))))]
                for j in range(nv)]
        cell.face_ids = np.asarray(fids, int)

    interior = np.array([i for i, f in enumerate(faces) if not f.boundary], int)
    boundary = np.array([i for i, f in enumerate(faces) if f.boundary], int)
    h_max = max(c.diameter for c in cells)
    return PolytopalMesh(2, vertices, cells, faces, h_max, interior, boundary)


def pyramid_subdivision(mesh, cell_id) -> PyramidSubdivision:
    cell = mesh.cells[cell_id]
    verts = mesh.vertices[cell.vertex_ids]
    xk = cell.x_center
    nv = len(verts)
    tris = np.empty((nv, 3, 2))
    areas = np.empty(nv)
    normals = np.empty((nv, 2, 2))
    for j in range(nv):
        va, vb = verts[j], verts[(j + 1) % nv]
        tris[j] = [va, vb, xk]
        d1, d2 = vb - va, xk - va
        areas[j] = 0.5 * abs(d1[0] * d2[1] - d1[1] * d2[0])
        normals[j, 0] = _internal_normal(xk, va, vb)
        normals[j, 1] = _internal_normal(xk, vb, va)
    return PyramidSubdivision(cell_id, tris, areas, normals)


def _internal_normal(xk, vert, other):
    """Unit normal of the internal face [x_K, vert], outward of the pyramid."""
    t = vert - xk
    n = np.array([t[1], -t[0]])
    n /= np.hypot(*n)
    if n @ (other - xk) > 0:
        n = -n
    return n


# ---------------------------------------------------------------------------
# regularity measures


def regularity_gamma(mesh) -> float:
    """Mesh regularity: flatness + face-count term plus the cross-face
    distance-ratio term over interior faces (0 if there are none)."""
    cell_term = 0.0
    for k, cell in enumerate(mesh.cells):
        dmin_term = max(cell.diameter / mesh.face_dist(fid, k)
                        for fid in cell.face_ids)
        cell_term = max(cell_term, dmin_term + len(cell.face_ids))
    face_term = 0.0
    for i in mesh.interior_faces:
        dk, dl = mesh.faces[i].dists
        face_term = max(face_term, dk / dl + dl / dk)
    return cell_term + face_term


def estimate_rho(mesh) -> float:
    """Smallest inradius-to-cell-diameter ratio over all pyramid triangles."""
    rho = np.inf
    for k, cell in enumerate(mesh.cells):
        sub = pyramid_subdivision(mesh, k)
        for tri, area in zip(sub.triangles, sub.areas):
            a = np.hypot(*(tri[1] - tri[0]))
            b = np.hypot(*(tri[2] - tri[1]))
            c = np.hypot(*(tri[0] - tri[2]))
            inradius = 2.0 * area / (a + b + c)
            rho = min(rho, inradius / cell.diameter)
    return float(rho)


# ---------------------------------------------------------------------------
# generators on the unit square


def _quad_grid(n, shift=None):
    """Logically Cartesian n x n grid with optional vertical node shifts."""
    xs = np.linspace(0.0, 1.0, n + 1)
    verts = np.empty(((n + 1) * (n + 1), 2))
    for i in range(n + 1):
        for j in range(n + 1):
            y = j / n
            if shift is not None:
                y = y + shift(xs[i], j / n)
            verts[i * (n + 1) + j] = (xs[i], y)
    loops = []
    for i in range(n):
        for j in range(n):
            v00 = i * (n + 1) + j
            v10 = (i + 1) * (n + 1) + j
            loops.append([v00, v10, v10 + 1, v00 + 1])
    return build_mesh(verts, loops)


def gen_cartesian(n: int) -> PolytopalMesh:
    if n < 1:
        raise ValueError("n must be >= 1")
    return _quad_grid(n)


def gen_kershaw(n: int, distortion: float = 0.6) -> PolytopalMesh:
    """Sheared logically-Cartesian grid with a two-period zig-zag skew.

    The zig-zag runs in the horizontal direction (two full periods across the
    domain) with a domain-scale amplitude proportional to `distortion`,
    tapered to zero at the bottom and top so the outer boundary stays square.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if not (0.0 <= distortion < 1.0):
        raise ValueError("distortion must be in [0, 1)")
    if distortion == 0.0:
        return _quad_grid(n)
    amp = 0.25 * distortion

    def zigzag(x):
        s = (2.0 * x) % 1.0
        if s < 0.25:
            return 4.0 * s
        if s < 0.75:
            return 2.0 - 4.0 * s
        return 4.0 * s - 4.0

    def shift(x, y):
        return amp * zigzag(x) * 4.0 * y * (1.0 - y)

    return _quad_grid(n, shift)


def gen_locally_refined(n: int) -> PolytopalMesh:
    """Uniform n x n grid with the quadrant (0, 1/2)^2 refined 2x2.

    Coarse cells along the refinement line list the hanging vertex in their
    loop, so the shared side is split into two matching faces.
    """
    if n < 2 or n % 2:
        raise ValueError("n must be even and >= 2")
    h = 1.0 / n
    hf = h / 2.0
    vert_ids = {}
    verts = []

    def vid(x, y):
        key = (round(x * 4 * n), round(y * 4 * n))
        if key not in vert_ids:
            vert_ids[key] = len(verts)
            verts.append((x, y))
        return vert_ids[key]

    loops = []
    half = n // 2
    # fine cells in the refined quadrant
    for i in range(n):
        for j in range(n):
            x0, y0 = i * hf, j * hf
            loops.append([vid(x0, y0), vid(x0 + hf, y0),
                          vid(x0 + hf, y0 + hf), vid(x0, y0 + hf)])
    # coarse cells outside the quadrant
    for i in range(n):
        for j in range(n):
            if i < half and j < half:
                continue
            x0, y0 = i * h, j * h
            loop = [vid(x0, y0), vid(x0 + h, y0),
                    vid(x0 + h, y0 + h), vid(x0, y0 + h)]
            if i == half and j < half:
                # left side touches the fine region: split it
                loop = [vid(x0, y0), vid(x0 + h, y0), vid(x0 + h, y0 + h),
                        vid(x0, y0 + h), vid(x0, y0 + hf)]
            elif j == half and i < half:
                # bottom side touches the fine region: split it
                loop = [vid(x0, y0), vid(x0 + hf, y0), vid(x0 + h, y0),
                        vid(x0 + h, y0 + h), vid(x0, y0 + h)]
            loops.append(loop)
    return build_mesh(np.asarray(verts, float), loops)


def _clip_halfplane(poly, inside, intersect):
    """Sutherland-Hodgman step clipping `poly` against one half-plane."""
    out = []
    m = len(poly)
    for i in range(m):
        p, q = poly[i], poly[(i + 1) % m]
        pin, qin = inside(p), inside(q)
        if pin:
            out.append(p)
            if not qin:
                out.append(intersect(p, q))
        elif qin:
            out.append(intersect(p, q))
    return out


def _clip_unit_square(poly):
    eps = 1e-12
    planes = [
        (lambda p: p[0] >= -eps, 0, 0.0),
        (lambda p: p[0] <= 1 + eps, 0, 1.0),
        (lambda p: p[1] >= -eps, 1, 0.0),
        (lambda p: p[1] <= 1 + eps, 1, 1.0),
    ]
    for inside, axis, level in planes:
        def intersect(p, q, axis=axis, level=level):
            t = (level - p[axis]) / (q[axis] - p[axis])
            r = [0.0, 0.0]
            r[axis] = level
            r[1 - axis] = p[1 - axis] + t * (q[1 - axis] - p[1 - axis])
            return tuple(r)
        poly = _clip_halfplane(poly, inside, intersect)
        if not poly:
            return []
    return poly


def gen_hexagonal(n: int) -> PolytopalMesh:
    """Regular flat-top hexagon tiling of pitch ~1/n clipped to the square."""
    if n < 2:
        raise ValueError("n must be >= 2")
    r = 2.0 / (3.0 * n)
    dy = np.sqrt(3.0) * r
    angles = np.arange(6) * np.pi / 3.0
    hex_dx = np.cos(angles) * r
    hex_dy = np.sin(angles) * r
    snap = 1e-9

    vert_ids = {}
    verts = []

    def vid(x, y):
        # snap to the square boundary, then to a shared lattice key
        if abs(x) < snap:
            x = 0.0
        if abs(x - 1) < snap:
            x = 1.0
        if abs(y) < snap:
            y = 0.0
        if abs(y - 1) < snap:
            y = 1.0
        key = (round(x / snap), round(y / snap))
        if key not in vert_ids:
            vert_ids[key] = len(verts)
            verts.append((x, y))
        return vert_ids[key]

    loops = []
    ncols = int(np.ceil(1.0 / (1.5 * r))) + 2
    nrows = int(np.ceil(1.0 / dy)) + 2
    for i in range(-1, ncols):
        cx = 1.5 * r * i
        for j in range(-1, nrows):
            cy = dy * (j + 0.5 * (i % 2))
            poly = [(cx + hx, cy + hy) for hx, hy in zip(hex_dx, hex_dy)]
            clipped = _clip_unit_square(poly)
            if len(clipped) < 3:
                continue
            ids = []
            for x, y in clipped:
                v = vid(x, y)
                if not ids or v != ids[-1]:
                    ids.append(v)
            if len(ids) > 1 and ids[0] == ids[-1]:
                ids.pop()
            if len(ids) < 3:
                continue
            pts = np.array([verts[v] for v in ids])
            area, _ = _polygon_area_centroid(pts)
            if abs(area) < 1e-13:
                continue
            if area < 0:
                ids.reverse()
            loops.append(ids)
    return build_mesh(np.asarray(verts, float), loops)


# ---------------------------------------------------------------------------
# text format


def write_mesh(mesh, path):
    with open(path, "w") as fh:
        fh.write("polymesh 2\n")
        fh.write(f"{len(mesh.vertices)} {len(mesh.cells)}\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g}\n")
        for cell in mesh.cells:
            idx = " ".join(str(int(v)) for v in cell.vertex_ids)
            cx, cy = cell.x_center
            fh.write(f"{len(cell.vertex_ids)} {idx} {cx:.17g} {cy:.17g}\n")


def read_mesh(path) -> PolytopalMesh:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].split() != ["polymesh", "2"]:
        raise ParseError("expected header 'polymesh 2'", line=1)
    try:
        nv, nc = (int(t) for t in lines[1].split())
    except (IndexError, ValueError) as exc:
        raise ParseError(f"bad count line: {exc}", line=2)
    if len(lines) < 2 + nv + nc:
        raise ParseError(
            f"declared {nv} vertices and {nc} cells but file has "
            f"{len(lines) - 2} body lines", line=len(lines))
    verts = np.empty((nv, 2))
    for i in range(nv):
        try:
            x, y = (float(t) for t in lines[2 + i].split())
        except ValueError as exc:
            raise ParseError(f"bad vertex: {exc}", line=3 + i)
        verts[i] = (x, y)
    loops, centers = [], []
    for c in range(nc):
        lineno = 3 + nv + c
        toks = lines[2 + nv + c].split()
        try:
            k = int(toks[0])
        except (IndexError, ValueError):
            raise ParseError("bad cell line", line=lineno)
        if k < 3:
            raise ParseError(f"cell loop with {k} vertices", line=lineno)
        if len(toks) not in (1 + k, 3 + k):
            raise ParseError(
                f"expected {k} indices (+ optional center), got "
                f"{len(toks) - 1} values", line=lineno)
        try:
            loop = [int(t) for t in toks[1:1 + k]]
        except ValueError as exc:
            raise ParseError(f"bad vertex index: {exc}", line=lineno)
        if any(v < 0 or v >= nv for v in loop):
            raise ParseError("vertex index out of range", line=lineno)
        loops.append(loop)
        if len(toks) == 3 + k:
            centers.append(np.array([float(toks[-2]), float(toks[-1])]))
        else:
            centers.append(None)
    if all(c is None for c in centers):
        centers = None
    return build_mesh(verts, loops, centers)
