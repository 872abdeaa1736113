# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled statevector kernels (hot loop).

Mirrors the interface of ``_kernels_np``; see that module for the
conventions.  Kept allocation-free: callers own all buffers.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt
from libc.string cimport memset

BACKEND_NAME = "cython"


def rotate_left(double complex[::1] src, double complex[::1] dst, int L):
    cdef Py_ssize_t half = src.shape[0] >> 1
    cdef Py_ssize_t i
    with nogil:
        for i in range(half):
            dst[2 * i] = src[i]
            dst[2 * i + 1] = src[i + half]


def rotate_right(double complex[::1] src, double complex[::1] dst, int L):
    cdef Py_ssize_t half = src.shape[0] >> 1
    cdef Py_ssize_t i
    with nogil:
        for i in range(half):
            dst[i] = src[2 * i]
            dst[i + half] = src[2 * i + 1]


def apply_x(double complex[::1] vec, int bit):
    cdef Py_ssize_t n = vec.shape[0]
    cdef Py_ssize_t stride = (<Py_ssize_t> 1) << bit
    cdef Py_ssize_t nblocks = n >> (bit + 1)
    cdef Py_ssize_t blk, base, k
    cdef double complex tmp
    with nogil:
        for blk in range(nblocks):
            base = blk * (stride << 1)
            for k in range(base, base + stride):
                tmp = vec[k]
                vec[k] = vec[k + stride]
                vec[k + stride] = tmp


def born_prob0(double complex[::1] vec, int bit):
    cdef Py_ssize_t n = vec.shape[0]
    cdef Py_ssize_t stride = (<Py_ssize_t> 1) << bit
    cdef Py_ssize_t nblocks = n >> (bit + 1)
    cdef Py_ssize_t blk, base, k
    cdef double p = 0.0
    cdef double complex a
    with nogil:
        for blk in range(nblocks):
            base = blk * (stride << 1)
            for k in range(base, base + stride):
                a = vec[k]
                p += a.real * a.real + a.imag * a.imag
    return p


def project(double complex[::1] vec, int bit, int outcome, double scale):
    cdef Py_ssize_t n = vec.shape[0]
    cdef Py_ssize_t stride = (<Py_ssize_t> 1) << bit
    cdef Py_ssize_t nblocks = n >> (bit + 1)
    cdef Py_ssize_t keep_off = outcome * stride
    cdef Py_ssize_t zero_off = (1 - outcome) * stride
    cdef Py_ssize_t blk, base, k
    with nogil:
        for blk in range(nblocks):
            base = blk * (stride << 1)
            for k in range(base + keep_off, base + keep_off + stride):
                vec[k] = vec[k] * scale
            for k in range(base + zero_off, base + zero_off + stride):
                vec[k] = 0.0


cdef void _u4_contiguous(double complex[::1] vec, double complex[:, ::1] u):
    # Fast path for the pair (bit 1, bit 0): groups of 4 amplitudes are
    # contiguous and the complex matvec is written in real arithmetic so the
    # compiler can vectorize it.
    cdef Py_ssize_t ngroups = vec.shape[0] >> 2
    cdef double* x = <double*> &vec[0]
    cdef double ur[4][4]
    cdef double ui[4][4]
    cdef Py_ssize_t g, r, c
    cdef double ar0, ai0, ar1, ai1, ar2, ai2, ar3, ai3, yr, yi
    for r in range(4):
        for c in range(4):
            ur[r][c] = u[r, c].real
            ui[r][c] = u[r, c].imag
    with nogil:
        for g in range(ngroups):
            ar0 = x[8 * g + 0]; ai0 = x[8 * g + 1]
            ar1 = x[8 * g + 2]; ai1 = x[8 * g + 3]
            ar2 = x[8 * g + 4]; ai2 = x[8 * g + 5]
            ar3 = x[8 * g + 6]; ai3 = x[8 * g + 7]
            for r in range(4):
                yr = ur[r][0] * ar0 - ui[r][0] * ai0 \
                   + ur[r][1] * ar1 - ui[r][1] * ai1 \
                   + ur[r][2] * ar2 - ui[r][2] * ai2 \
                   + ur[r][3] * ar3 - ui[r][3] * ai3
                yi = ur[r][0] * ai0 + ui[r][0] * ar0 \
                   + ur[r][1] * ai1 + ui[r][1] * ar1 \
                   + ur[r][2] * ai2 + ui[r][2] * ar2 \
                   + ur[r][3] * ai3 + ui[r][3] * ar3
                x[8 * g + 2 * r] = yr
                x[8 * g + 2 * r + 1] = yi


def apply_two_qubit(double complex[::1] vec, double complex[:, ::1] u,
                    int bit_hi, int bit_lo):
    if bit_hi == 1 and bit_lo == 0:
        _u4_contiguous(vec, u)
        return
    cdef Py_ssize_t n = vec.shape[0]
    cdef Py_ssize_t quarter = n >> 2
    cdef int lo = bit_lo if bit_lo < bit_hi else bit_hi
    cdef int hi = bit_hi if bit_hi > bit_lo else bit_lo
    cdef Py_ssize_t mask_hi = (<Py_ssize_t> 1) << bit_hi
    cdef Py_ssize_t mask_lo = (<Py_ssize_t> 1) << bit_lo
    cdef Py_ssize_t m, i0, i1, i2, i3, t
    cdef double complex a0, a1, a2, a3
    cdef double complex u00 = u[0, 0], u01 = u[0, 1], u02 = u[0, 2], u03 = u[0, 3]
    cdef double complex u10 = u[1, 0], u11 = u[1, 1], u12 = u[1, 2], u13 = u[1, 3]
    cdef double complex u20 = u[2, 0], u21 = u[2, 1], u22 = u[2, 2], u23 = u[2, 3]
    cdef double complex u30 = u[3, 0], u31 = u[3, 1], u32 = u[3, 2], u33 = u[3, 3]
    with nogil:
        for m in range(quarter):
            t = ((m >> lo) << (lo + 1)) | (m & (((<Py_ssize_t> 1) << lo) - 1))
            i0 = ((t >> hi) << (hi + 1)) | (t & (((<Py_ssize_t> 1) << hi) - 1))
            i1 = i0 | mask_lo
            i2 = i0 | mask_hi
            i3 = i0 | mask_hi | mask_lo
            a0 = vec[i0]
            a1 = vec[i1]
            a2 = vec[i2]
            a3 = vec[i3]
            vec[i0] = u00 * a0 + u01 * a1 + u02 * a2 + u03 * a3
            vec[i1] = u10 * a0 + u11 * a1 + u12 * a2 + u13 * a3
            vec[i2] = u20 * a0 + u21 * a1 + u22 * a2 + u23 * a3
            vec[i3] = u30 * a0 + u31 * a1 + u32 * a2 + u33 * a3


def adder_scatter(double complex[::1] src, double complex[::1] dst,
                  cnp.int64_t[::1] targets):
    cdef Py_ssize_t n = src.shape[0]
    cdef Py_ssize_t half = n >> 1
    cdef Py_ssize_t i
    cdef double residual = 0.0
    cdef double complex a
    with nogil:
        memset(<void*> &dst[0], 0, n * sizeof(double complex))
        for i in range(half):
            dst[targets[i]] = src[i]
        for i in range(half, n):
            a = src[i]
            residual += a.real * a.real + a.imag * a.imag
    return residual


def haar_from_ginibre(double complex[:, ::1] z):
    """Modified Gram-Schmidt QR of a 4x4 matrix, positive-real R diagonal."""
    out = np.empty((4, 4), dtype=np.complex128)
    cdef double complex[:, ::1] q = out
    cdef double complex v[4]
    cdef double complex r
    cdef double nrm
    cdef Py_ssize_t k, j, i
    with nogil:
        for k in range(4):
            for i in range(4):
                v[i] = z[i, k]
            for j in range(4):
                if j >= k:
                    break
                r = 0.0
                for i in range(4):
                    r = r + q[i, j].conjugate() * v[i]
                for i in range(4):
                    v[i] = v[i] - r * q[i, j]
            nrm = 0.0
            for i in range(4):
                nrm += v[i].real * v[i].real + v[i].imag * v[i].imag
            nrm = sqrt(nrm)
            for i in range(4):
                q[i, k] = v[i] / nrm
    return out


def norm_sq(double complex[::1] vec):
    cdef Py_ssize_t i
    cdef double s = 0.0
    cdef double complex a
    with nogil:
        for i in range(vec.shape[0]):
            a = vec[i]
            s += a.real * a.real + a.imag * a.imag
    return s
