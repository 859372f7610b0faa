# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled basis-table kernel; mirrors kernels._pykernels.cell_tables."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def cell_tables(cnp.ndarray[double, ndim=1] xk,
                cnp.ndarray[double, ndim=2] verts,
                cnp.ndarray[double, ndim=1] coefs,
                cnp.ndarray[double, ndim=3] normals,
                cnp.ndarray[double, ndim=1] psi_const,
                cnp.ndarray[double, ndim=2] psi_grad,
                cnp.ndarray[double, ndim=2] psibar,
                cnp.ndarray[double, ndim=2] ref_pts,
                cnp.ndarray[double, ndim=1] ref_wts):
    cdef int nf = verts.shape[0]
    cdef int nq = ref_wts.shape[0]
    cdef int nloc = 3 + nf
    cdef cnp.ndarray[double, ndim=2] pts = np.empty((nf * nq, 2))
    cdef cnp.ndarray[double, ndim=1] wts = np.empty(nf * nq)
    cdef cnp.ndarray[double, ndim=2] vals = np.zeros((nf * nq, nloc))
    cdef cnp.ndarray[double, ndim=3] grads = np.zeros((nf * nq, nloc, 2))

    cdef int j, q, i, row
    cdef double v0x, v0y, e1x, e1y, e2x, e2y, det
    cdef double px, py, dx, dy, la, lb, bub, gbx, gby
    cdef double nax, nay, nbx, nby, pb

    for j in range(nf):
        v0x = verts[j, 0]
        v0y = verts[j, 1]
        e1x = verts[(j + 1) % nf, 0] - v0x
        e1y = verts[(j + 1) % nf, 1] - v0y
        e2x = xk[0] - v0x
        e2y = xk[1] - v0y
        det = e1x * e2y - e1y * e2x
        if det < 0:
            det = -det
        nax = normals[j, 0, 0]
        nay = normals[j, 0, 1]
        nbx = normals[j, 1, 0]
        nby = normals[j, 1, 1]
        for q in range(nq):
            row = j * nq + q
            px = v0x + ref_pts[q, 0] * e1x + ref_pts[q, 1] * e2x
            py = v0y + ref_pts[q, 0] * e1y + ref_pts[q, 1] * e2y
            pts[row, 0] = px
            pts[row, 1] = py
            wts[row] = ref_wts[q] * det
            dx = xk[0] - px
            dy = xk[1] - py
            la = dx * nax + dy * nay
            lb = dx * nbx + dy * nby
            bub = coefs[j] * la * lb
            gbx = -coefs[j] * (la * nbx + lb * nax)
            gby = -coefs[j] * (la * nby + lb * nay)
            for i in range(3):
                pb = psibar[i, j]
                vals[row, i] = (psi_const[i] + psi_grad[i, 0] * px
                                + psi_grad[i, 1] * py - pb * bub)
                grads[row, i, 0] = psi_grad[i, 0] - pb * gbx
                grads[row, i, 1] = psi_grad[i, 1] - pb * gby
            vals[row, 3 + j] = bub
            grads[row, 3 + j, 0] = gbx
            grads[row, 3 + j, 1] = gby
    return pts, wts, vals, grads
