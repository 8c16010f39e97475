# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled staged pair-rotation kernels.

Same contract as _kernels_py; pairs within a stage are disjoint, so a
sequential sweep over the flattened pair list matches the stage-parallel
semantics exactly.  Compiled with fp-contract off so results stay
bit-identical to the numpy fallback's forward pass.
"""

import numpy as np

cimport numpy as cnp

COMPILED = True


def apply_blocks(double[:, :, ::1] blocks, cnp.intp_t[::1] pair_i,
                 cnp.intp_t[::1] pair_j, cnp.intp_t[::1] stage_starts,
                 double[:, ::1] V, tape=None):
    cdef Py_ssize_t m = blocks.shape[0]
    cdef Py_ssize_t n = V.shape[1]
    cdef Py_ssize_t k, c, i, j
    cdef double b00, b01, b10, b11, vi, vj
    cdef double[:, :, ::1] T

    if tape is None:
        for k in range(m):
            i = pair_i[k]
            j = pair_j[k]
            b00 = blocks[k, 0, 0]
            b01 = blocks[k, 0, 1]
            b10 = blocks[k, 1, 0]
            b11 = blocks[k, 1, 1]
            for c in range(n):
                vi = V[i, c]
                vj = V[j, c]
                V[i, c] = b00 * vi + b01 * vj
                V[j, c] = b10 * vi + b11 * vj
    else:
        T = tape
        for k in range(m):
            i = pair_i[k]
            j = pair_j[k]
            b00 = blocks[k, 0, 0]
            b01 = blocks[k, 0, 1]
            b10 = blocks[k, 1, 0]
            b11 = blocks[k, 1, 1]
            for c in range(n):
                vi = V[i, c]
                vj = V[j, c]
                T[k, 0, c] = vi
                T[k, 1, c] = vj
                V[i, c] = b00 * vi + b01 * vj
                V[j, c] = b10 * vi + b11 * vj


def backward_blocks(double[:, :, ::1] blocks, cnp.intp_t[::1] pair_i,
                    cnp.intp_t[::1] pair_j, cnp.intp_t[::1] stage_starts,
                    double[:, :, ::1] tape, double[:, ::1] G):
    cdef Py_ssize_t m = blocks.shape[0]
    cdef Py_ssize_t n = G.shape[1]
    cdef Py_ssize_t k, c, i, j
    cdef double b00, b01, b10, b11, gi, gj, vi, vj
    cdef double d00, d01, d10, d11

    out = np.empty((m, 2, 2), dtype=np.float64)
    cdef double[:, :, ::1] D = out

    for k in range(m - 1, -1, -1):
        i = pair_i[k]
        j = pair_j[k]
        b00 = blocks[k, 0, 0]
        b01 = blocks[k, 0, 1]
        b10 = blocks[k, 1, 0]
        b11 = blocks[k, 1, 1]
        d00 = d01 = d10 = d11 = 0.0
        for c in range(n):
            gi = G[i, c]
            gj = G[j, c]
            vi = tape[k, 0, c]
            vj = tape[k, 1, c]
            d00 += gi * vi
            d01 += gi * vj
            d10 += gj * vi
            d11 += gj * vj
            G[i, c] = b00 * gi + b10 * gj
            G[j, c] = b01 * gi + b11 * gj
        D[k, 0, 0] = d00
        D[k, 0, 1] = d01
        D[k, 1, 0] = d10
        D[k, 1, 1] = d11
    return out
