"""Assembly and solvers: the linear diffusion scheme with optional static
condensation, and the mass-lumped nonlinear (Stefan / porous-medium) scheme
solved by damped Newton.

The stiffness is assembled once over an extended index set (free DOFs
followed by one fixed slot per boundary face); Dirichlet data is moved to
the right-hand side.  Nonlinear unknowns follow the weight-dependent
convention: with face weight 0 the face unknowns carry values of the
transformed variable z = zeta(u) while cell unknowns carry u; with weight 1
the convention swaps; strictly interior weights use u everywhere.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (ConventionError, NewtonDiverged, NonSymmetric,
                     SingularCellBlock, SolverBreakdown)
from .quadrature import map_segment, segment_rule
from .space import DEFAULT_DEGREE, DiscreteField

SYMMETRY_TOL = 1e-10


@dataclass
class LinearProblem:
    f: object = None             # source, (n,2) points -> (n,)
    g: object = None             # Dirichlet trace
    diffusion: object = None     # (n,2) points -> (n,2,2) SPD; None = identity
    flux_source: object = None   # F, (n,2) points -> (n,2)


@dataclass
class NonlinearProblem:
    zeta: object                 # vectorized, non-decreasing, zeta(0)=0
    dzeta: object                # one-sided derivative at kinks
    f: object = None
    flux_source: object = None
    dirichlet_u: object = None   # trace of the exact u
    dirichlet_z: object = None   # trace of zeta(u)
    zeta_inverse: object = None  # used only to report u on z-carrying DOFs
    diffusion: object = None


@dataclass
class NewtonConfig:
    tol: float = 1e-8
    max_iter: int = 50
    min_damping: float = 2.0 ** -30


@dataclass
class SolveReport:
    iterations: int = 0
    final_residual: float = np.inf
    damping_events: int = 0
    escape_events: int = 0       # full steps taken after a failed line search
    converged: bool = False
    residuals: list = field(default_factory=list)


@dataclass
class SparseSystem:
    space: object
    A: sp.csr_matrix             # free-free block
    b: np.ndarray                # Dirichlet contribution already moved here
    bc: np.ndarray               # fixed value per face (0 on interior faces)


def _assemble_stiffness_ext(space, diffusion=None, degree=DEFAULT_DEGREE):
    """Stiffness over free DOFs + boundary slots; csr, symmetric."""
    dm = space.dofmap
    n_ext = dm.ndofs + dm.n_boundary
    rows, cols, data = [], [], []
    for k in range(space.mesh.n_cells):
        pts, wts, _, grads = space.cell_tables(k, degree)
        if diffusion is None:
            flux = grads
        else:
            lam = np.asarray(diffusion(pts), float)
            flux = np.einsum("qab,qlb->qla", lam, grads)
        loc = np.einsum("q,qld,qmd->lm", wts, grads, flux)
        ldofs = space.local_dofs(k)
        rows.append(np.repeat(ldofs, len(ldofs)))
        cols.append(np.tile(ldofs, len(ldofs)))
        data.append(loc.ravel())
    a = sp.coo_matrix((np.concatenate(data),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n_ext, n_ext)).tocsr()
    amax = np.abs(a.data).max() if a.nnz else 1.0
    asym = np.abs(a - a.T)
    if asym.nnz and asym.data.max() > SYMMETRY_TOL * amax:
        raise NonSymmetric(
            f"stiffness asymmetry {asym.data.max():.3e} exceeds tolerance")
    return a


def _boundary_values(space, g, degree=DEFAULT_DEGREE):
    """Face averages of the Dirichlet trace, indexed by face id."""
    bc = np.zeros(space.mesh.n_faces)
    if g is None:
        return bc
    seg = segment_rule(degree)
    mesh = space.mesh
    for fid in mesh.boundary_faces:
        f = mesh.faces[fid]
        pts, wts = map_segment(seg, mesh.vertices[f.v0], mesh.vertices[f.v1])
        bc[fid] = float(wts @ np.asarray(g(pts), float)) / wts.sum()
    return bc


def _bc_slots(space, bc):
    """Fixed-slot vector (boundary order) from a per-face value array."""
    dm = space.dofmap
    out = np.zeros(dm.n_boundary)
    for fid in space.mesh.boundary_faces:
        out[dm.boundary_slot[fid]] = bc[fid]
    return out


def _quadrature_rhs(space, f, flux_source, degree=DEFAULT_DEGREE):
    """b[a] = int f chi_a - int F . grad chi_a over the free DOFs."""
    b = np.zeros(space.dofmap.ndofs)
    n = len(b)
    for k in range(space.mesh.n_cells):
        pts, wts, vals, grads = space.cell_tables(k, degree)
        loc = np.zeros(vals.shape[1])
        if f is not None:
            loc += vals.T @ (wts * np.asarray(f(pts), float))
        if flux_source is not None:
            fq = np.asarray(flux_source(pts), float)
            loc -= np.einsum("q,qld,qd->l", wts, grads, fq)
        ldofs = space.local_dofs(k)
        free = ldofs < n
        np.add.at(b, ldofs[free], loc[free])
    return b


def assemble_linear(space, problem, degree=DEFAULT_DEGREE) -> SparseSystem:
    a_ext = _assemble_stiffness_ext(space, problem.diffusion, degree)
    n = space.dofmap.ndofs
    bc = _boundary_values(space, problem.g, degree)
    b = _quadrature_rhs(space, problem.f, problem.flux_source, degree)
    b -= a_ext[:n, n:] @ _bc_slots(space, bc)
    return SparseSystem(space, a_ext[:n, :n].tocsr(), b, bc)


def solve_spd(system, method="direct", tol=1e-12) -> DiscreteField:
    if system.A.shape[0] == 0:
        x = np.zeros(0)
    elif method == "direct":
        x = spla.spsolve(system.A.tocsc(), system.b)
        if not np.all(np.isfinite(x)):
            raise SolverBreakdown("direct solve produced non-finite values")
    elif method == "cg":
        x, info = spla.cg(system.A, system.b, rtol=tol, atol=0.0,
                          maxiter=10 * system.A.shape[0])
        if info != 0:
            raise SolverBreakdown(f"CG did not converge (info={info})")
    else:
        raise ValueError(f"unknown method {method!r}")
    return DiscreteField(system.space, x, system.bc.copy())


@dataclass
class CondensedSystem:
    space: object
    S: sp.csr_matrix             # Schur complement on interior-face DOFs
    g: np.ndarray
    bc: np.ndarray
    _acf: sp.csr_matrix = None
    _acc_inv: sp.csr_matrix = None
    _bc_cells: np.ndarray = None

    @property
    def A(self):                 # lets solve_spd run unchanged
        return self.S

    @property
    def b(self):
        return self.g

    def recover(self, face_field) -> DiscreteField:
        """Complete a face-only solution with the eliminated cell DOFs."""
        xf = face_field.coeffs[:self.S.shape[0]] if isinstance(
            face_field, DiscreteField) else np.asarray(face_field, float)
        xc = self._acc_inv @ (self._bc_cells - self._acf @ xf)
        return DiscreteField(self.space, np.concatenate([xf, xc]),
                             self.bc.copy())


def static_condense(system) -> CondensedSystem:
    """Eliminate the per-cell 3x3 blocks by a Schur complement on face DOFs."""
    space = system.space
    ni = space.dofmap.n_int
    a, b = system.A, system.b
    aff = a[:ni, :ni]
    afc = a[:ni, ni:].tocsr()
    acf = a[ni:, :ni].tocsr()
    acc = a[ni:, ni:].tocsc()
    blocks = []
    for k in range(space.mesh.n_cells):
        blk = acc[3 * k:3 * k + 3, 3 * k:3 * k + 3].toarray()
        try:
            blocks.append(np.linalg.inv(blk))
        except np.linalg.LinAlgError:
            raise SingularCellBlock(f"cell {k} block is singular")
    acc_inv = sp.block_diag(blocks, format="csr") if blocks else \
        sp.csr_matrix((0, 0))
    s = (aff - afc @ acc_inv @ acf).tocsr()
    g = b[:ni] - afc @ (acc_inv @ b[ni:])
    return CondensedSystem(space, s, g, system.bc.copy(),
                           _acf=acf, _acc_inv=acc_inv, _bc_cells=b[ni:])


# ---------------------------------------------------------------------------
# nonlinear scheme


def zeta_carrier_mask(space, varpi):
    """Free-DOF mask of unknowns carrying z = zeta(u) values: interior faces
    at weight 0, cells at weight 1, nobody for strictly interior weights."""
    dm = space.dofmap
    mask = np.zeros(dm.ndofs, bool)
    if varpi == 0.0:
        mask[:dm.n_int] = True
    elif varpi == 1.0:
        mask[dm.n_int:] = True
    return mask


class LumpedOperator:
    """Residual/Jacobian of the mass-lumped scheme in the convention-dependent
    unknown vector X (precomputes the stiffness and the lumped source)."""

    def __init__(self, space, ml, problem, degree=DEFAULT_DEGREE):
        self.space = space
        self.ml = ml
        self.problem = problem
        dm = space.dofmap
        n = dm.ndofs
        a_ext = _assemble_stiffness_ext(space, problem.diffusion, degree)
        self.A = a_ext[:n, :n].tocsr()
        self.meas = ml.free_measures()

        self.ubc = _boundary_values(space, problem.dirichlet_u, degree)
        self.zbc = _boundary_values(space, problem.dirichlet_z, degree)
        self.b = -(a_ext[:n, n:] @ _bc_slots(space, self.zbc))
        if problem.f is not None:
            lumped = np.zeros(n)
            # one representative point per DOF with positive measure
            for k in range(space.mesh.n_cells):
                for i in range(3):
                    d = dm.cell_dofs(k)[i]
                    if self.meas[d] > 0.0:
                        x = ml.rep_point(k, i)
                        lumped[d] = self.meas[d] * float(
                            problem.f(x[None, :])[0])
            for fid in space.mesh.interior_faces:
                d = dm.face_dof[fid]
                if self.meas[d] > 0.0:
                    x = space.mesh.faces[fid].centroid
                    lumped[d] = self.meas[d] * float(problem.f(x[None, :])[0])
            self.b += lumped
        if problem.flux_source is not None:
            self.b += _quadrature_rhs(space, None, problem.flux_source,
                                      degree)

        carries = zeta_carrier_mask(space, ml.varpi)
        self.carries_zeta = carries
        if np.any(carries & (self.meas > 0.0)):
            raise ConventionError(
                "a zeta-carrying unknown has positive lumped measure")

    def z_of(self, x):
        z = self.problem.zeta(x)
        return np.where(self.carries_zeta, x, z)

    def u_of(self, x):
        """u-values for reporting; needs zeta_inverse on z-carrying DOFs."""
        if not self.carries_zeta.any() or self.problem.zeta_inverse is None:
            return x.copy()
        return np.where(self.carries_zeta, self.problem.zeta_inverse(x), x)

    def residual(self, x):
        return self.meas * x + self.A @ self.z_of(x) - self.b

    def jacobian(self, x):
        dz = np.where(self.carries_zeta, 1.0, self.problem.dzeta(x))
        j = sp.diags(self.meas * ~self.carries_zeta) + self.A @ sp.diags(dz)
        j = j.tocsr()
        row_nnz = np.diff(j.indptr)
        if np.any(row_nnz == 0):
            raise ConventionError("Jacobian has an identically zero row")
        return j


def newton_solve(space, ml, problem, config=None, x0=None,
                 degree=DEFAULT_DEGREE):
    """Damped Newton on the lumped scheme.

    Returns (u field, z field, report).  The residual is scaled by
    max(1, |b|_2); each step is halved until the scaled residual strictly
    decreases.
    """
    if config is None:
        config = NewtonConfig()
    op = LumpedOperator(space, ml, problem, degree)
    x = np.zeros(space.dofmap.ndofs) if x0 is None else np.array(x0, float)
    scale = max(1.0, float(np.linalg.norm(op.b)))
    report = SolveReport()
    r = op.residual(x)
    rnorm = float(np.linalg.norm(r)) / scale
    report.residuals.append(rnorm)
    for _ in range(config.max_iter):
        if rnorm <= config.tol:
            report.converged = True
            break
        j = op.jacobian(x)
        dx = spla.spsolve(j.tocsc(), r)
        if not np.all(np.isfinite(dx)):
            raise NewtonDiverged("singular Jacobian", report)
        t = 1.0
        while True:
            x_new = x - t * dx
            r_new = op.residual(x_new)
            rnorm_new = float(np.linalg.norm(r_new)) / scale
            if rnorm_new < rnorm or rnorm_new <= config.tol:
                break
            t *= 0.5
            report.damping_events += 1
            if t < config.min_damping:
                # the residual norm has non-root local minima when zeta is
                # piecewise affine; escape by accepting the undamped step
                # (active-set style), leaving global control to max_iter
                x_new = x - dx
                r_new = op.residual(x_new)
                rnorm_new = float(np.linalg.norm(r_new)) / scale
                report.escape_events += 1
                break
        x, r, rnorm = x_new, r_new, rnorm_new
        report.iterations += 1
        report.residuals.append(rnorm)
    else:
        if rnorm > config.tol:
            report.final_residual = rnorm
            raise NewtonDiverged("max iterations reached", report)
        report.converged = True
    report.final_residual = rnorm
    u_field = DiscreteField(space, op.u_of(x), op.ubc.copy())
    z_field = DiscreteField(space, op.z_of(x), op.zbc.copy())
    return u_field, z_field, report
