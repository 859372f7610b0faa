"""Gradient-discretisation diagnostics: the discrete Poincare constant C_D,
the interpolation (consistency) measure S_D and the conformity defect W_D,
all over the homogeneous-Dirichlet DOF space (boundary face slots = 0).
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import EigenFailure, SolverBreakdown
from .schemes import _assemble_stiffness_ext
from .space import DEFAULT_DEGREE, DiscreteField


def _free_stiffness(space, degree=DEFAULT_DEGREE):
    n = space.dofmap.ndofs
    return _assemble_stiffness_ext(space, None, degree)[:n, :n].tocsr()


def _free_mass(space, degree=DEFAULT_DEGREE):
    n = space.dofmap.ndofs
    rows, cols, data = [], [], []
    for k in range(space.mesh.n_cells):
        _, wts, vals, _ = space.cell_tables(k, degree)
        loc = np.einsum("q,ql,qm->lm", wts, vals, vals)
        ldofs = space.local_dofs(k)
        rows.append(np.repeat(ldofs, len(ldofs)))
        cols.append(np.tile(ldofs, len(ldofs)))
        data.append(loc.ravel())
    n_ext = n + space.dofmap.n_boundary
    m = sp.coo_matrix((np.concatenate(data),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n_ext, n_ext)).tocsr()
    return m[:n, :n].tocsr()


def gd_matrices(space, lumped=False, ml=None, degree=DEFAULT_DEGREE):
    """(M, G) over free DOFs; M is the lumped diagonal when requested."""
    g = _free_stiffness(space, degree)
    if lumped:
        if ml is None:
            raise ValueError("lumped=True requires a MassLumping")
        m = sp.diags(ml.free_measures()).tocsr()
    else:
        m = _free_mass(space, degree)
    return m, g


def poincare_cd(space, lumped=False, ml=None, degree=DEFAULT_DEGREE,
                tol=1e-8, max_iter=5000):
    """sqrt of the largest eigenvalue of M v = lambda G v by power iteration
    on G^{-1} M (deterministic all-ones start, Rayleigh-quotient stopping)."""
    m, g = gd_matrices(space, lumped, ml, degree)
    if g.shape[0] == 0:
        raise EigenFailure("no free DOFs")
    lu = spla.splu(g.tocsc())
    v = np.ones(g.shape[0])
    lam = 0.0
    for _ in range(max_iter):
        w = m @ v
        v_new = lu.solve(w)
        nrm = np.linalg.norm(v_new)
        if nrm == 0.0:
            raise EigenFailure("power iteration collapsed to zero")
        v_new /= nrm
        lam_new = float((v_new @ (m @ v_new)) / (v_new @ (g @ v_new)))
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-300):
            return float(np.sqrt(lam_new))
        v, lam = v_new, lam_new
    raise EigenFailure("power iteration did not converge")


def consistency_sd(space, phi, grad_phi, degree=DEFAULT_DEGREE):
    """min over the space of |v - phi|_L2 + |grad v - grad phi|_L2, evaluated
    at the minimizer of the sum-of-squares surrogate (within sqrt(2))."""
    m, g = gd_matrices(space, degree=degree)
    n = space.dofmap.ndofs
    r = np.zeros(n)
    for k in range(space.mesh.n_cells):
        pts, wts, vals, grads = space.cell_tables(k, degree)
        pv = np.asarray(phi(pts), float)
        pg = np.asarray(grad_phi(pts), float)
        loc = vals.T @ (wts * pv) + np.einsum("q,qld,qd->l", wts, grads, pg)
        ldofs = space.local_dofs(k)
        free = ldofs < n
        np.add.at(r, ldofs[free], loc[free])
    v = spla.spsolve((m + g).tocsc(), r)
    if not np.all(np.isfinite(v)):
        raise SolverBreakdown("normal-equations solve failed")
    fld = DiscreteField(space, v)
    e_l2 = e_h1 = 0.0
    for k in range(space.mesh.n_cells):
        pts, wts, vals, grads = space.cell_tables(k, degree)
        loc = space.cell_coeffs(fld, k)
        dv = vals @ loc - np.asarray(phi(pts), float)
        dg = np.einsum("qld,l->qd", grads, loc) - np.asarray(grad_phi(pts),
                                                            float)
        e_l2 += float(wts @ (dv * dv))
        e_h1 += float(wts @ (dg * dg).sum(axis=1))
    return float(np.sqrt(e_l2) + np.sqrt(e_h1))


def conformity_wd(space, psi, div_psi, lumped=False, ml=None,
                  degree=DEFAULT_DEGREE):
    """Exact dual norm sqrt(l^T G^{-1} l) of the conformity functional
    l[a] = int (Pi chi_a) div(psi) + grad chi_a . psi."""
    n = space.dofmap.ndofs
    ell = np.zeros(n)
    dm = space.dofmap
    for k in range(space.mesh.n_cells):
        pts, wts, vals, grads = space.cell_tables(k, degree)
        pq = np.asarray(psi(pts), float)
        loc = np.einsum("q,qld,qd->l", wts, grads, pq)
        if not lumped:
            dq = np.asarray(div_psi(pts), float)
            loc += vals.T @ (wts * dq)
        ldofs = space.local_dofs(k)
        free = ldofs < n
        np.add.at(ell, ldofs[free], loc[free])
    if lumped:
        if ml is None:
            raise ValueError("lumped=True requires a MassLumping")
        meas = ml.free_measures()
        for k in range(space.mesh.n_cells):
            for i in range(3):
                d = dm.cell_dofs(k)[i]
                if meas[d] > 0.0:
                    x = ml.rep_point(k, i)
                    ell[d] += meas[d] * float(div_psi(x[None, :])[0])
        for fid in space.mesh.interior_faces:
            d = dm.face_dof[fid]
            if meas[d] > 0.0:
                x = space.mesh.faces[fid].centroid
                ell[d] += meas[d] * float(div_psi(x[None, :])[0])
    g = _free_stiffness(space, degree)
    y = spla.spsolve(g.tocsc(), ell)
    if not np.all(np.isfinite(y)):
        raise SolverBreakdown("dual-norm solve failed")
    val = float(ell @ y)
    return float(np.sqrt(max(val, 0.0)))
