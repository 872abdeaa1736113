"""Trajectory evolution, ensemble Monte Carlo, and deterministic seeding.

Every trajectory gets its own RNG stream spawned from the cell seed via
``SeedSequence(entropy=seed, spawn_key=(traj_index,))``, so results are a
pure function of (seed, traj_index) regardless of worker count or
scheduling.  Sweep cells derive their seeds from the master seed and the
cell's physical identity (not its position in the grid), which makes
per-cell results invariant under grid reordering.
"""

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import observables as obs
from .circuits import ModelConfig, circuit_step, neel_states
from .errors import ConfigError, NumericalCorruptionError
from .qstate import StateVector, basis_state

DEFAULT_OBSERVABLES = ("O_AFM", "O_FM", "I3_1", "S_half")


@dataclass(frozen=True)
class RunOptions:
    """Per-run knobs that are not part of the physical model cell."""

    observables: tuple = DEFAULT_OBSERVABLES
    s0_thresholds: tuple = (obs.DEFAULT_S0_THRESHOLD,)
    initial_state: object = "random_basis"  # or "neel", "haar_product", int
    record_timeseries: bool = False
    record_times: tuple = None  # None -> every step (when recording)
    average_last: int = 1
    workers: int = 1
    retain_samples: bool = True


@dataclass
class TrajectoryRecord:
    config_id: str
    traj_index: int
    final_observables: dict
    times: np.ndarray = None
    series: np.ndarray = None  # S_half at `times`


@dataclass
class ObservableStats:
    mean: float
    sem: float
    samples: np.ndarray = field(default=None, repr=False)


@dataclass
class TimeSeriesEnsemble:
    """Half-cut entropy trajectories on a common time grid."""

    L: int
    times: np.ndarray
    samples: np.ndarray  # (n_traj, n_times)

    def mean(self):
        return self.samples.mean(axis=0)

    def sem(self):
        n = self.samples.shape[0]
        return self.samples.std(axis=0, ddof=1) / np.sqrt(n)


@dataclass
class EnsembleSummary:
    config: ModelConfig
    n_traj: int
    stats: dict  # observable name -> ObservableStats
    timeseries: TimeSeriesEnsemble = None


def config_digest(config):
    """Stable identity of the physical cell (seed excluded)."""
    key = (
        f"{config.variant.value}|L={config.L}|p_ctrl={config.p_ctrl!r}"
        f"|p_proj={config.p_proj!r}|p_global={config.p_global!r}"
        f"|steps={config.steps}"
    )
    return hashlib.sha256(key.encode()).hexdigest()[:16]


def derive_cell_seed(master_seed, config):
    """Mix the master seed with the cell identity into a 64-bit seed."""
    digest = hashlib.sha256(
        f"{master_seed}|{config_digest(config)}".encode()
    ).digest()
    return int.from_bytes(digest[:8], "little")


def trajectory_rng(seed, traj_index):
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(traj_index,))
    )


def _initial_state(config, options, rng):
    L = config.L
    spec = options.initial_state
    if isinstance(spec, (int, np.integer)):
        return basis_state(L, int(spec))
    if spec == "random_basis":
        return basis_state(L, int(rng.integers(0, 1 << L)))
    if spec == "neel":
        return basis_state(L, neel_states(L)[0])
    if spec == "haar_product":
        amps = np.ones(1, dtype=np.complex128)
        for _ in range(L):
            z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            z /= np.linalg.norm(z)
            amps = np.kron(amps, z)
        return StateVector(L, amps)
    raise ConfigError(f"unknown initial_state {spec!r}")


def _record_times(config, options):
    if options.record_times is not None:
        times = np.asarray(sorted(set(int(t) for t in options.record_times)))
        if times.size == 0 or times[0] < 1 or times[-1] > config.steps:
            raise ConfigError("record_times must lie in [1, steps]")
        return times
    return np.arange(1, config.steps + 1)


def run_trajectory(config, traj_index, options=RunOptions()):
    """Evolve one trajectory for config.steps steps and record observables.

    Fully deterministic given (config.seed, traj_index).
    """
    rng = trajectory_rng(config.seed, traj_index)
    state = _initial_state(config, options, rng)
    times = _record_times(config, options) if options.record_timeseries else None
    series = np.empty(times.size, dtype=np.float64) if times is not None else None
    next_rec = 0

    window = max(1, int(options.average_last))
    window = min(window, config.steps)
    accum = None

    try:
        for t in range(1, config.steps + 1):
            state, _ = circuit_step(state, config, rng)
            if times is not None and next_rec < times.size and t == times[next_rec]:
                series[next_rec] = obs.half_cut_entropy(state, n=1)
                next_rec += 1
            if t > config.steps - window:
                vals = obs.evaluate_observables(
                    state, options.observables, options.s0_thresholds
                )
                if accum is None:
                    accum = {k: v / window for k, v in vals.items()}
                else:
                    for k, v in vals.items():
                        accum[k] += v / window
    except NumericalCorruptionError as exc:
        raise NumericalCorruptionError(
            f"trajectory {traj_index} of cell {config_digest(config)} "
            f"aborted: {exc}"
        ) from exc

    return TrajectoryRecord(
        config_id=config_digest(config),
        traj_index=traj_index,
        final_observables=accum,
        times=times,
        series=series,
    )


def _run_trajectory_task(args):
    config, traj_index, options = args
    return run_trajectory(config, traj_index, options)


def run_ensemble(config, n_traj, options=RunOptions()):
    """Run n_traj independent trajectories and aggregate mean/SEM.

    Aggregation happens in trajectory-index order after collection, so the
    result does not depend on worker count.  A failed trajectory fails the
    whole ensemble; silent dropping would bias the averages.
    """
    if n_traj < 2:
        raise ConfigError(f"n_traj must be >= 2, got {n_traj}")
    tasks = [(config, i, options) for i in range(n_traj)]
    if options.workers > 1:
        with ProcessPoolExecutor(max_workers=options.workers) as pool:
            records = list(
                pool.map(_run_trajectory_task, tasks, chunksize=max(1, n_traj // (4 * options.workers)))
            )
    else:
        records = [_run_trajectory_task(t) for t in tasks]
    records.sort(key=lambda r: r.traj_index)

    names = list(records[0].final_observables)
    stats = {}
    for name in names:
        samples = np.array([r.final_observables[name] for r in records])
        if not np.all(np.isfinite(samples)):
            raise NumericalCorruptionError(f"non-finite {name} sample in ensemble")
        stats[name] = ObservableStats(
            mean=float(samples.mean()),
            sem=float(samples.std(ddof=1) / np.sqrt(n_traj)),
            samples=samples if options.retain_samples else None,
        )

    timeseries = None
    if options.record_timeseries:
        timeseries = TimeSeriesEnsemble(
            L=config.L,
            times=records[0].times,
            samples=np.vstack([r.series for r in records]),
        )
    return EnsembleSummary(config=config, n_traj=n_traj, stats=stats, timeseries=timeseries)


def sweep(grid, n_traj, options=RunOptions(), master_seed=None):
    """Run one ensemble per cell of the grid.

    With a master_seed, each cell's seed is derived from the master seed
    and the cell identity, so distinct cells get independent streams and
    reordering the grid leaves every cell's result unchanged.
    """
    if not grid:
        raise ConfigError("sweep grid is empty")
    summaries = []
    for config in grid:
        if master_seed is not None:
            config = replace(config, seed=derive_cell_seed(master_seed, config))
        summaries.append(run_ensemble(config, n_traj, options))
    return summaries
