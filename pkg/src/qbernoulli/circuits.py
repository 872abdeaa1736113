"""One-step channels for the six stochastic circuit variants.

Each variant interleaves a chaotic map (cyclic left shift followed by a
fresh Haar-random two-qubit scrambler on the last two qubits, with optional
feedback-free projective measurements) with a control map (reset of the
last qubit, right shift, and for the AFM-targeted global variant an adder
permutation).  All control maps act as classical permutations on
computational basis states and absorb onto their target orbit.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import ConfigError, ProtocolError
from .qstate import (
    MAX_QUBITS,
    apply_two_qubit,
    apply_x,
    cyclic_shift_left,
    cyclic_shift_right,
    haar_random_two_qubit,
    measure_qubit,
)
from .backend import kernels

# Residual weight tolerated outside the adder's b1=0 domain.
_ADDER_DOMAIN_EPS = 1e-12


class ModelVariant(str, Enum):
    """The six circuit variants, named by control locality/target."""

    GLOBAL_AFM = "global_afm"
    LOCAL_FM = "local_fm"
    LOCAL_AFM = "local_afm"
    GLOBAL_AFM_PROJ = "global_afm_proj"
    LOCAL_FM_PROJ = "local_fm_proj"
    INTERPOLATED_AFM = "interpolated_afm"

    @property
    def uses_projections(self):
        return self in (ModelVariant.GLOBAL_AFM_PROJ, ModelVariant.LOCAL_FM_PROJ)

    @property
    def order_parameter(self):
        """Name of the natural order parameter for this variant's target."""
        if self in (ModelVariant.LOCAL_FM, ModelVariant.LOCAL_FM_PROJ):
            return "O_FM"
        return "O_AFM"


VARIANT_NAMES = tuple(v.value for v in ModelVariant)


def neel_states(L):
    """Integer indices of |0101...01> and |1010...10> for even L."""
    if L % 2:
        raise ValueError(f"Neel states need even L, got {L}")
    odd = ((1 << L) - 1) // 3
    return odd, 2 * odd


@dataclass(frozen=True)
class ModelConfig:
    """One simulation cell: variant plus all tuning knobs.

    ``steps`` defaults to 2 L**2 when left as None.
    """

    variant: ModelVariant
    L: int
    p_ctrl: float
    p_proj: float = 0.0
    p_global: float = 0.0
    steps: int = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "variant", ModelVariant(self.variant))
        if self.steps is None:
            object.__setattr__(self, "steps", 2 * self.L * self.L)
        self.validate()

    def validate(self):
        if self.L % 4 or not 4 <= self.L <= MAX_QUBITS:
            raise ConfigError(
                f"L must be a multiple of 4 in [4, {MAX_QUBITS}], got {self.L}"
            )
        for name in ("p_ctrl", "p_proj", "p_global"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {p}")
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if self.p_proj > 0 and not self.variant.uses_projections:
            raise ConfigError(
                f"variant {self.variant.value} does not take projective "
                f"measurements; p_proj must be 0"
            )
        if self.p_global > 0 and self.variant is not ModelVariant.INTERPOLATED_AFM:
            raise ConfigError(
                f"p_global is only meaningful for interpolated_afm, "
                f"got {self.p_global} for {self.variant.value}"
            )
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed}")


@dataclass(frozen=True)
class StepRecord:
    """Outcome bookkeeping for one circuit step.

    ``outcomes`` lists (qubit, m) pairs in the order measured; for chaotic
    steps it contains only the projective measurements that actually fired.
    """

    kind: str  # "control" or "chaotic"
    control_kind: str = None  # which control map fired, if kind == "control"
    outcomes: tuple = ()


@dataclass(eq=False)
class AdderSpec:
    """Finite-L global adder steering onto the Neel orbit.

    ``a_large`` is the L-bit truncation of 1/3 (bits 0101...01) and
    ``a_small`` that of 1/6 rounded up, fixed by requiring that the full
    control map holds both Neel states exactly.  ``targets`` is the
    precomputed permutation image of the b1=0 half-space, including the
    swap that removes the two spurious fixed points x = 2*a_small and
    x = 2*a_large - 1 which the plain shifted addition would create; without
    it the control dynamics would not be absorbing.
    """

    L: int
    a_small: int
    a_large: int
    condition_qubit: int = 2
    targets: np.ndarray = field(default=None, repr=False)


@lru_cache(maxsize=8)
def make_adder_afm(L):
    """Build the adder permutation for even L (cached per L)."""
    if L % 2:
        raise ValueError(f"the AFM adder needs even L, got {L}")
    a_large = ((1 << L) - 1) // 3
    a_small = (a_large + 1) // 2
    half = 1 << (L - 1)
    quarter = 1 << (L - 2)
    x = np.arange(half, dtype=np.int64)
    t = np.where(x < quarter, x + a_small, x + a_large)
    # Divert the two would-be fixed points outside the Neel orbit by
    # flipping bit b_{L-1} on the index classes (b1=1, b_{L-2}=0, b_L=1)
    # and (b1=0, b_{L-2}=1, b_L=0); this pairs up images within each class,
    # so the map stays a permutation.
    msb = np.int64(1) << (L - 1)
    upper = (t & msb) == msb
    third = (t & 4) == 4
    lsb = (t & 1) == 1
    swap = (upper & ~third & lsb) | (~upper & third & ~lsb)
    t[swap] ^= 2
    if np.unique(t).size != half:
        raise AssertionError("adder permutation is not injective")
    return AdderSpec(L=L, a_small=a_small, a_large=a_large, targets=t)


def apply_adder(state, adder):
    """Scatter amplitudes through the adder permutation.

    Requires (up to 1e-12 weight) that the state lives on the b1=0
    half-space, which the preceding reset + right shift guarantees.
    """
    if adder.L != state.num_qubits:
        raise ValueError("adder size does not match state size")
    residual = kernels.adder_scatter(
        state.amps, state._get_scratch(), adder.targets
    )
    if residual > _ADDER_DOMAIN_EPS:
        raise ProtocolError(
            f"adder applied to state with weight {residual:.3e} on the b1=1 "
            f"half-space; reset/shift ordering is broken"
        )
    state._swap_scratch()
    return state


def control_global_afm(state, rng):
    """Reset last qubit, right shift, adder: steers onto the Neel orbit."""
    L = state.num_qubits
    m, state = measure_qubit(state, L, rng)
    if m == 1:
        apply_x(state, L)
    cyclic_shift_right(state)
    apply_adder(state, make_adder_afm(L))
    return state, StepRecord("control", "global_afm", ((L, m),))


def control_local_fm(state, rng):
    """Reset last qubit then right shift: steers onto |00...0>."""
    L = state.num_qubits
    m, state = measure_qubit(state, L, rng)
    if m == 1:
        apply_x(state, L)
    cyclic_shift_right(state)
    return state, StepRecord("control", "local_fm", ((L, m),))


def control_local_afm(state, rng):
    """Measure qubits 1 and L, flip L when outcomes agree, right shift.

    Cycles through the Neel orbit without any adder.
    """
    L = state.num_qubits
    m1, state = measure_qubit(state, 1, rng)
    mL, state = measure_qubit(state, L, rng)
    if m1 == mL:  # exponent m1 + mL + 1 is odd
        apply_x(state, L)
    cyclic_shift_right(state)
    return state, StepRecord("control", "local_afm", ((1, m1), (L, mL)))


def chaotic_step(state, p_proj, rng, u=None):
    """Quantum Bernoulli map, optionally followed by projective measurements.

    Left shift, then a fresh Haar unitary on qubits (L-1, L); afterwards
    each of qubits L-1 and L is independently measured with probability
    p_proj (no feedback).  A pre-drawn unitary may be passed via ``u``.
    """
    L = state.num_qubits
    cyclic_shift_left(state)
    if u is None:
        u = haar_random_two_qubit(rng)
    apply_two_qubit(state, L - 1, L, u)
    if p_proj <= 0.0:
        return state, StepRecord("chaotic")
    outcomes = []
    for q in (L - 1, L):
        if rng.random() < p_proj:
            m, state = measure_qubit(state, q, rng)
            outcomes.append((q, m))
    return state, StepRecord("chaotic", None, tuple(outcomes))


def circuit_step(state, config, rng):
    """One step of the stochastic circuit: control or chaos, never both."""
    if rng.random() < config.p_ctrl:
        variant = config.variant
        if variant in (ModelVariant.GLOBAL_AFM, ModelVariant.GLOBAL_AFM_PROJ):
            return control_global_afm(state, rng)
        if variant in (ModelVariant.LOCAL_FM, ModelVariant.LOCAL_FM_PROJ):
            return control_local_fm(state, rng)
        if variant is ModelVariant.LOCAL_AFM:
            return control_local_afm(state, rng)
        # Interpolated: fresh coin at each control step.
        if rng.random() < config.p_global:
            return control_global_afm(state, rng)
        return control_local_afm(state, rng)
    return chaotic_step(state, config.p_proj, rng)
