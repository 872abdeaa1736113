"""Classical Bernoulli-map control oracle.

Bit-register dynamics reproducing the classical control transition at
p_ctrl = 0.5: the chaotic branch doubles x and injects a fresh random bit
at the least significant position (finite-precision doubling of a generic
irrational is exactly this process), the control branch halves the distance
to the nearest target-orbit point (a = 1/2).  Registers are plain integers,
so the classical system sizes can far exceed the quantum ones.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .scaling import CollapsePoint

_TARGETS = ("fm", "afm")


@dataclass(frozen=True)
class ClassicalRegister:
    """L-bit register representing x = 0.b1 b2 ... bL."""

    bits: int
    L: int

    def __post_init__(self):
        if not 0 <= self.bits < (1 << self.L):
            raise ValueError(f"bits {self.bits} outside [0, 2**{self.L})")


def neel_pair(L):
    odd = ((1 << L) - 1) // 3
    return odd, 2 * odd


def classical_step(reg, p_ctrl, target, rng):
    """One stochastic step: control with probability p_ctrl, else chaos."""
    if target not in _TARGETS:
        raise ValueError(f"target must be one of {_TARGETS}, got {target!r}")
    L, x = reg.L, reg.bits
    mask = (1 << L) - 1
    if rng.random() < p_ctrl:
        if target == "fm":
            xf = 0
        else:
            n1, n2 = neel_pair(L)
            # ties break toward the smaller orbit point
            xf = n1 if abs(x - n1) <= abs(x - n2) else n2
        x = (x + xf) >> 1
    else:
        x = ((x << 1) | int(rng.integers(0, 2))) & mask
    return ClassicalRegister(x, L)


def order_parameter_bits(x, L, target):
    """Bitstring order parameter: O_FM for 'fm', O_AFM for 'afm'."""
    if target == "fm":
        pop = bin(x).count("1")
        return (L - 2 * pop) / L
    mask = (1 << L) - 1
    rot = ((x << 1) | (x >> (L - 1))) & mask
    flips = bin(x ^ rot).count("1")
    return (2 * flips - L) / L


def _vector_order_parameter(x, L, target):
    if target == "fm":
        pop = np.bitwise_count(x).astype(np.float64)
        return (L - 2.0 * pop) / L
    mask = np.uint64((1 << L) - 1)
    rot = ((x << np.uint64(1)) | (x >> np.uint64(L - 1))) & mask
    flips = np.bitwise_count(x ^ rot).astype(np.float64)
    return (2.0 * flips - L) / L


def _random_registers(rng, L, n):
    if L <= 63:
        return rng.integers(0, 1 << L, size=n, dtype=np.uint64)
    if L == 64:
        lo = rng.integers(0, 1 << 32, size=n, dtype=np.uint64)
        hi = rng.integers(0, 1 << 32, size=n, dtype=np.uint64)
        return (hi << np.uint64(32)) | lo
    raise ConfigError(f"classical registers support L <= 64, got {L}")


def classical_transition_scan(L, p_grid, n_traj, steps=None, seed=0, target="afm"):
    """Monte Carlo order-parameter scan over p_ctrl at one system size.

    All trajectories of a (L, p) cell are evolved together as uint64
    vectors; one RNG stream per cell keeps the scan deterministic in the
    seed.  Returns one CollapsePoint (with raw per-trajectory samples) per
    grid value, ready for fit_collapse.
    """
    if target not in _TARGETS:
        raise ConfigError(f"target must be one of {_TARGETS}, got {target!r}")
    if not 2 <= L <= 64:
        raise ConfigError(f"classical L must be in [2, 64], got {L}")
    if steps is None:
        steps = 2 * L * L
    one = np.uint64(1)
    mask = np.uint64((1 << L) - 1)
    if target == "afm":
        n1, n2 = (np.uint64(v) for v in neel_pair(L))
    points = []
    for cell_index, p in enumerate(p_grid):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(L, cell_index))
        )
        x = _random_registers(rng, L, n_traj)
        for _ in range(steps):
            ctrl = rng.random(n_traj) < p
            inject = rng.integers(0, 2, size=n_traj, dtype=np.uint64)
            chaos = ((x << one) | inject) & mask
            if target == "fm":
                ctrl_x = x >> one
            else:
                d1 = np.where(x >= n1, x - n1, n1 - x)
                d2 = np.where(x >= n2, x - n2, n2 - x)
                xf = np.where(d1 <= d2, n1, n2)
                # overflow-safe (x + xf) >> 1
                ctrl_x = (x >> one) + (xf >> one) + (x & xf & one)
            x = np.where(ctrl, ctrl_x, chaos)
        samples = _vector_order_parameter(x, L, target)
        points.append(CollapsePoint.from_samples(p=float(p), L=L, samples=samples))
    return points
