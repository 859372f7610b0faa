"""Pure-numpy fallback for the per-cell basis-table kernel.

`cell_tables` is the hot loop of assembly and error norms: it maps a
reference triangle rule onto every pyramid of a cell and evaluates the local
basis (3 localized nodal functions + one bubble per face) together with its
gradient at every mapped quadrature point.  Local columns are ordered
[nodal 0..2, face 0..F-1]; a bubble is identically zero outside its own
pyramid, which the tables exploit.
"""

import numpy as np


def cell_tables(xk, verts, coefs, normals, psi_const, psi_grad, psibar,
                ref_pts, ref_wts):
    """Evaluate quadrature points, weights, basis values and gradients.

    Parameters
    ----------
    xk : (2,) star-center.
    verts : (F, 2) cell vertex loop (CCW).
    coefs : (F,) bubble normalization constants.
    normals : (F, 2, 2) internal-face outward normals of each pyramid.
    psi_const, psi_grad : (3,), (3, 2) affine nodal basis psi_i = c_i + g_i.x.
    psibar : (3, F) face averages of the nodal basis.
    ref_pts, ref_wts : reference triangle rule (weights summing to 1/2).

    Returns (pts (N,2), wts (N,), vals (N, 3+F), grads (N, 3+F, 2)) with
    N = F * len(ref_wts), grouped pyramid by pyramid.
    """
    nf = len(verts)
    nq = len(ref_wts)
    nloc = 3 + nf
    v0 = verts
    v1 = np.roll(verts, -1, axis=0)
    e1 = v1 - v0                     # (F,2)
    e2 = xk[None, :] - v0            # (F,2)
    # pyramid j is the triangle (v_j, v_{j+1}, x_K)
    pts = (v0[:, None, :]
           + ref_pts[None, :, 0, None] * e1[:, None, :]
           + ref_pts[None, :, 1, None] * e2[:, None, :])          # (F,q,2)
    det = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])       # = 2*area
    wts = ref_wts[None, :] * det[:, None]                          # (F,q)

    diff = xk[None, None, :] - pts                                 # (F,q,2)
    na = normals[:, 0, :]
    nb = normals[:, 1, :]
    la = np.einsum("fqd,fd->fq", diff, na)
    lb = np.einsum("fqd,fd->fq", diff, nb)
    bub = coefs[:, None] * la * lb                                 # (F,q)
    gbub = -coefs[:, None, None] * (la[..., None] * nb[:, None, :]
                                    + lb[..., None] * na[:, None, :])

    psi = psi_const[None, None, :] + np.einsum("fqd,id->fqi", pts, psi_grad)

    vals = np.zeros((nf, nq, nloc))
    grads = np.zeros((nf, nq, nloc, 2))
    # nodal columns: psi_i minus its own-face bubble correction (only the
    # bubble of the current pyramid is nonzero there)
    vals[:, :, :3] = psi - psibar.T[:, None, :] * bub[:, :, None]
    grads[:, :, :3, :] = (psi_grad[None, None, :, :]
                          - psibar.T[:, None, :, None] * gbub[:, :, None, :])
    idx = np.arange(nf)
    vals[idx, :, 3 + idx] = bub
    grads[idx, :, 3 + idx, :] = gbub
    return (pts.reshape(-1, 2), wts.ravel(),
            vals.reshape(-1, nloc), grads.reshape(-1, nloc, 2))
