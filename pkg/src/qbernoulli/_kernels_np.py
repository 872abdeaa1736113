"""Pure-NumPy statevector kernels.

Reference implementation of the hot-loop primitives; the Cython module
``_kernels_cy`` provides drop-in replacements selected at import time by
``qbernoulli.backend``.  All kernels operate on a dense complex128 array of
2**L amplitudes.  Bit positions count from the least significant bit, so
qubit q (1-based, MSB-first) lives at bit position L - q.
"""

import numpy as np

BACKEND_NAME = "numpy"


def rotate_left(src, dst, L):
    """dst[rotl(i)] = src[i]: relabel |b1 b2 .. bL> -> |b2 .. bL b1>."""
    np.copyto(dst.reshape(-1, 2), src.reshape(2, -1).T)


def rotate_right(src, dst, L):
    """dst[rotr(i)] = src[i]: relabel |b1 .. bL> -> |bL b1 .. b(L-1)>."""
    np.copyto(dst.reshape(2, -1), src.reshape(-1, 2).T)


def apply_x(vec, bit):
    """Swap the two branches of the given bit in place."""
    v = vec.reshape(-1, 2, 1 << bit)
    tmp = v[:, 0, :].copy()
    v[:, 0, :] = v[:, 1, :]
    v[:, 1, :] = tmp


def born_prob0(vec, bit):
    """Total weight on basis states whose given bit is 0."""
    v = vec.reshape(-1, 2, 1 << bit)[:, 0, :]
    return float((v.real ** 2).sum() + (v.imag ** 2).sum())


def project(vec, bit, outcome, scale):
    """Zero out the discarded branch and rescale the kept one, in place."""
    v = vec.reshape(-1, 2, 1 << bit)
    v[:, 1 - outcome, :] = 0.0
    v[:, outcome, :] *= scale


def apply_two_qubit(vec, u, bit_hi, bit_lo):
    """Apply a 4x4 unitary to the qubit pair (bit_hi, bit_lo) in place.

    The local 4-dimensional index is 2*b(bit_hi) + b(bit_lo).
    """
    n = vec.shape[0]
    L = n.bit_length() - 1
    if bit_hi == 1 and bit_lo == 0:
        r = vec.reshape(-1, 4)
        np.copyto(r, r @ u.T)
        return
    t = vec.reshape((2,) * L)
    ax_hi = L - 1 - bit_hi
    ax_lo = L - 1 - bit_lo
    t2 = np.moveaxis(t, (ax_hi, ax_lo), (0, 1)).reshape(4, -1)
    t2 = (u @ t2).reshape((2, 2) + (2,) * (L - 2))
    np.copyto(t, np.moveaxis(t2, (0, 1), (ax_hi, ax_lo)))


def adder_scatter(src, dst, targets):
    """Scatter the lower half-space through the adder permutation.

    dst[targets[x]] = src[x] for x < 2**(L-1); dst is zeroed first.
    Returns the residual weight found on the upper half-space (which the
    adder's precondition requires to be negligible).
    """
    half = src.shape[0] >> 1
    dst[:] = 0.0
    dst[targets] = src[:half]
    hi = src[half:]
    return float((hi.real ** 2).sum() + (hi.imag ** 2).sum())


def haar_from_ginibre(z):
    """Unique QR factor of ``z`` with positive-real R diagonal.

    For Gaussian ``z`` this is an exactly Haar-distributed unitary.
    """
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def norm_sq(vec):
    return float((vec.real ** 2).sum() + (vec.imag ** 2).sum())
