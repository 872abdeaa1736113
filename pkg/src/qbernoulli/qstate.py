"""Statevector representation and low-level unitary/measurement kernels.

Conventions
-----------
A state over L qubits is a dense array of 2**L complex amplitudes.  Qubit 1
is the most significant bit of the basis index, so the basis state
|b1 b2 ... bL> sits at integer index sum_i b_i 2**(L-i), mirroring the
binary fraction x = 0.b1 b2 ... bL.  Operations mutate the amplitude buffer
in place (or via an internal scratch swap) and return the same StateVector,
so callers that need the old state must copy first.
"""

import numpy as np

from .backend import kernels
from .errors import NumericalCorruptionError

MAX_QUBITS = 28

# Sampled Born probabilities below this total signal a corrupt state.
_CORRUPTION_EPS = 1e-14


class StateVector:
    """Dense 2**L-amplitude pure state with qubit 1 as the MSB."""

    __slots__ = ("num_qubits", "amps", "_scratch")

    def __init__(self, num_qubits, amps):
        if not 2 <= num_qubits <= MAX_QUBITS:
            raise ValueError(
                f"num_qubits must be in [2, {MAX_QUBITS}], got {num_qubits}"
            )
        amps = np.ascontiguousarray(amps, dtype=np.complex128)
        if amps.shape != (1 << num_qubits,):
            raise ValueError(
                f"expected {1 << num_qubits} amplitudes, got shape {amps.shape}"
            )
        self.num_qubits = num_qubits
        self.amps = amps
        self._scratch = None

    def _get_scratch(self):
        if self._scratch is None:
            self._scratch = np.empty_like(self.amps)
        return self._scratch

    def _swap_scratch(self):
        self.amps, self._scratch = self._scratch, self.amps

    def bit_position(self, q):
        """Bit position (from the LSB) of 1-based qubit index q."""
        if not 1 <= q <= self.num_qubits:
            raise ValueError(f"qubit index {q} outside [1, {self.num_qubits}]")
        return self.num_qubits - q

    def norm_sq(self):
        return kernels.norm_sq(self.amps)

    def copy(self):
        sv = StateVector(self.num_qubits, self.amps.copy())
        return sv

    def __repr__(self):
        return f"StateVector(L={self.num_qubits})"


def basis_state(L, x_int):
    """Computational basis state |x_int> on L qubits.

    x_int encodes the bit string b1..bL with b1 as the most significant
    bit: basis_state(2, 1) is |01>.
    """
    if not 2 <= L <= MAX_QUBITS:
        raise ValueError(f"L must be in [2, {MAX_QUBITS}], got {L}")
    if not 0 <= x_int < (1 << L):
        raise ValueError(f"x_int {x_int} outside [0, 2**{L})")
    amps = np.zeros(1 << L, dtype=np.complex128)
    amps[x_int] = 1.0
    return StateVector(L, amps)


def haar_random_two_qubit(rng):
    """Haar-random U(4) matrix via QR of a complex Ginibre matrix.

    The R-diagonal phase is fixed (positive real diagonal), which makes the
    distribution exactly Haar rather than merely approximately so.
    """
    z = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    return kernels.haar_from_ginibre(np.ascontiguousarray(z))


def apply_two_qubit(state, q_hi, q_lo, u):
    """Apply a 4x4 unitary to the ordered qubit pair (q_hi, q_lo).

    The local 4-dimensional index is 2*b(q_hi) + b(q_lo).
    """
    if q_hi == q_lo:
        raise ValueError("q_hi and q_lo must be distinct")
    b_hi = state.bit_position(q_hi)
    b_lo = state.bit_position(q_lo)
    u = np.ascontiguousarray(u, dtype=np.complex128)
    if u.shape != (4, 4):
        raise ValueError(f"two-qubit unitary must be 4x4, got {u.shape}")
    kernels.apply_two_qubit(state.amps, u, b_hi, b_lo)
    return state


def cyclic_shift_left(state):
    """Relabel |b1 b2 ... bL> -> |b2 ... bL b1> (index rotate-left)."""
    kernels.rotate_left(state.amps, state._get_scratch(), state.num_qubits)
    state._swap_scratch()
    return state


def cyclic_shift_right(state):
    """Inverse of cyclic_shift_left (index rotate-right)."""
    kernels.rotate_right(state.amps, state._get_scratch(), state.num_qubits)
    state._swap_scratch()
    return state


def apply_x(state, q):
    """Pauli X on qubit q: flip that bit in every basis index."""
    kernels.apply_x(state.amps, state.bit_position(q))
    return state


def born_probability(state, q, m):
    """Probability of outcome m in {0, 1} when measuring qubit q."""
    if m not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {m}")
    p0 = kernels.born_prob0(state.amps, state.bit_position(q))
    return p0 if m == 0 else 1.0 - p0


def measure_qubit(state, q, rng):
    """Projective measurement of qubit q with Born-rule sampling.

    Samples the outcome, projects, and renormalizes.  Returns
    (outcome, state).  Raises NumericalCorruptionError if the state carries
    essentially no weight on either branch.
    """
    bit = state.bit_position(q)
    p0 = kernels.born_prob0(state.amps, bit)
    p1 = kernels.norm_sq(state.amps) - p0
    if p0 < _CORRUPTION_EPS and p1 < _CORRUPTION_EPS:
        raise NumericalCorruptionError(
            f"state norm collapsed measuring qubit {q}: p0={p0:.3e}, p1={p1:.3e}"
        )
    # Sample only over outcomes with nonzero probability.
    if p1 < _CORRUPTION_EPS:
        m = 0
    elif p0 < _CORRUPTION_EPS:
        m = 1
    else:
        m = 0 if rng.random() < p0 / (p0 + p1) else 1
    p_m = p0 if m == 0 else p1
    kernels.project(state.amps, bit, m, 1.0 / np.sqrt(p_m))
    return m, state
