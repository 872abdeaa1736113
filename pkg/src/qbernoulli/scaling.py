"""Finite-size-scaling data collapse.

The loss is a reduced chi-square over interpolation residuals: rescale
every point to x = (p - p_c) L**(1/nu), sort by x (ties broken by (L, p)
for determinism), predict each y from the straight line through its two
sorted neighbors, and propagate the neighbor SEMs into the denominator.
Endpoints are extrapolated from the two nearest interior points and
contribute like interior points.  The same machinery collapses entropy
growth curves in x = t / L**z for the dynamical exponent.

Degrees of freedom are N - k with k the number of fitted parameters
(k = 2 for (p_c, nu), k = 1 for z); k is carried in the fit result.
"""

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares, minimize

from .errors import FitConvergenceError

DEFAULT_NU_BOUNDS = (0.3, 3.0)
DEFAULT_BOOTSTRAP = 100


@dataclass
class CollapsePoint:
    """One (p, L) cell: trajectory samples of an observable."""

    p: float
    L: int
    samples: np.ndarray = field(repr=False)
    mean: float = None
    sem: float = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.size == 0:
            raise ValueError("CollapsePoint needs at least one sample")
        if self.mean is None:
            self.mean = float(self.samples.mean())
        if self.sem is None:
            self.sem = _sem(self.samples)

    @classmethod
    def from_samples(cls, p, L, samples):
        return cls(p=p, L=L, samples=samples)


def _sem(samples):
    n = samples.size
    if n < 2:
        raise ValueError("need >= 2 samples for a standard error")
    return float(samples.std(ddof=1) / np.sqrt(n))


@dataclass
class CollapseFit:
    p_c: float
    nu: float
    err_p_c: float
    err_nu: float
    chi2_reduced: float
    n_points: int
    n_params: int = 2
    pinned: bool = False
    hessian_err: tuple = (np.nan, np.nan)
    bootstrap_err: tuple = None
    n_bootstrap: int = 0
    alternates: tuple = ()  # (p_c, nu, chi2_reduced) of competing optima


@dataclass
class DynamicalFit:
    z: float
    err_z: float
    chi2_reduced: float
    n_points: int
    n_params: int = 1
    hessian_err: float = np.nan
    bootstrap_err: float = None
    n_bootstrap: int = 0


def _interp_residuals(x, y, sem, tie_keys):
    """Residuals (y - y_interp)/sigma on x-sorted points.

    ``tie_keys`` is a tuple of arrays used to break x ties
    deterministically (least significant first, numpy lexsort order).
    """
    n = x.size
    if n < 3:
        raise ValueError(f"collapse needs >= 3 points, got {n}")
    if np.any(sem <= 0.0):
        raise ValueError("every point needs a positive SEM (sample variance)")
    order = np.lexsort(tie_keys + (x,))
    xs, ys, ss = x[order], y[order], sem[order]
    j = np.arange(n) - 1
    k = np.arange(n) + 1
    j[0], k[0] = 1, 2
    j[-1], k[-1] = n - 3, n - 2
    denom = xs[k] - xs[j]
    with np.errstate(divide="ignore", invalid="ignore"):
        wj = np.where(denom != 0.0, (xs[k] - xs) / denom, 0.5)
        wk = np.where(denom != 0.0, (xs - xs[j]) / denom, 0.5)
    y_pred = wj * ys[j] + wk * ys[k]
    sigma = np.sqrt(ss ** 2 + (wj * ss[j]) ** 2 + (wk * ss[k]) ** 2)
    return (ys - y_pred) / sigma


def _point_arrays(points):
    p = np.array([pt.p for pt in points], dtype=np.float64)
    L = np.array([pt.L for pt in points], dtype=np.float64)
    y = np.array([pt.mean for pt in points], dtype=np.float64)
    sem = np.array([pt.sem for pt in points], dtype=np.float64)
    return p, L, y, sem


def collapse_residuals(points, p_c, nu):
    if nu <= 0:
        raise ValueError(f"nu must be positive, got {nu}")
    p, L, y, sem = _point_arrays(points)
    x = (p - p_c) * L ** (1.0 / nu)
    return _interp_residuals(x, y, sem, (p, L))


def collapse_loss(points, p_c, nu, n_params=2):
    """Reduced chi-square of the interpolation residuals."""
    r = collapse_residuals(points, p_c, nu)
    return float((r ** 2).sum() / (r.size - n_params))


def _minimize_ls(fun, x0, bounds_lo, bounds_hi, n_params):
    """Least-squares pass polished by a derivative-free simplex step.

    The interpolation loss is piecewise smooth (neighbor assignments change
    with the sort order), which can stall gradient-based trust regions on
    micro-kinks; Nelder-Mead from the least-squares point recovers the true
    minimum.  The better of the two results wins.
    """
    dof = max(len(fun(x0)) - n_params, 1)
    scaled = lambda v: fun(v) / np.sqrt(dof)
    loss = lambda v: float((scaled(v) ** 2).sum())
    candidates = []
    try:
        res = least_squares(
            scaled, x0, bounds=(bounds_lo, bounds_hi),
            method="trf", diff_step=1e-3, xtol=1e-12, ftol=1e-12, gtol=1e-12,
        )
        if res.success and np.isfinite(res.cost):
            candidates.append(np.asarray(res.x))
    except (ValueError, np.linalg.LinAlgError):
        pass
    for start in candidates + [np.asarray(x0, dtype=float)]:
        res = minimize(
            loss, start, method="Nelder-Mead",
            bounds=list(zip(bounds_lo, bounds_hi)),
            options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 4000},
        )
        if res.success and np.isfinite(res.fun):
            candidates.append(np.asarray(res.x))
    if not candidates:
        raise FitConvergenceError(f"collapse fit did not converge from {x0}")
    best = min(candidates, key=loss)
    return best, loss(best)


def _hessian_errors(loss, opt, steps):
    """sqrt(diag(H^-1)) of the loss at the optimum (finite differences)."""
    k = len(opt)
    H = np.empty((k, k))
    f0 = loss(opt)
    for a in range(k):
        ea = np.zeros(k)
        ea[a] = steps[a]
        H[a, a] = (loss(opt + ea) - 2 * f0 + loss(opt - ea)) / steps[a] ** 2
        for b in range(a + 1, k):
            eb = np.zeros(k)
            eb[b] = steps[b]
            H[a, b] = H[b, a] = (
                loss(opt + ea + eb) - loss(opt + ea - eb)
                - loss(opt - ea + eb) + loss(opt - ea - eb)
            ) / (4 * steps[a] * steps[b])
    try:
        cov = np.linalg.inv(H)
        d = np.diagonal(cov)
        if np.any(d <= 0):
            return np.full(k, np.nan)
        return np.sqrt(d)
    except np.linalg.LinAlgError:
        return np.full(k, np.nan)


def fit_collapse(points, initial_p_c, initial_nu, bounds=None, multi_start=None):
    """Fit (p_c, nu) by minimizing the interpolation chi-square.

    ``bounds`` is ((p_c_lo, p_c_hi), (nu_lo, nu_hi)); the default brackets
    p_c by the data range and nu by (0.3, 3).  ``multi_start`` adds extra
    initial guesses; all distinct local optima with loss within 2x of the
    best are reported in ``alternates``.  Optima pinned at a bound are
    flagged, not silently accepted.
    """
    points = list(points)
    p, _, _, _ = _point_arrays(points)
    if bounds is None:
        bounds = ((float(p.min()), float(p.max())), DEFAULT_NU_BOUNDS)
    (pc_lo, pc_hi), (nu_lo, nu_hi) = bounds
    if not (pc_lo <= initial_p_c <= pc_hi and nu_lo <= initial_nu <= nu_hi):
        raise ValueError("initial guess outside bounds")

    fun = lambda v: collapse_residuals(points, v[0], v[1])
    starts = [(initial_p_c, initial_nu)] + [tuple(s) for s in (multi_start or [])]
    optima = []
    last_err = None
    for x0 in starts:
        try:
            opt, loss_val = _minimize_ls(
                fun, np.asarray(x0, dtype=float), (pc_lo, nu_lo), (pc_hi, nu_hi), 2
            )
            optima.append((opt, loss_val))
        except FitConvergenceError as exc:
            last_err = exc
    if not optima:
        raise last_err
    # deduplicate and rank
    unique = []
    for opt, lv in sorted(optima, key=lambda t: t[1]):
        if not any(np.allclose(opt, u[0], atol=1e-4) for u in unique):
            unique.append((opt, lv))
    (best, best_loss) = unique[0]
    alternates = tuple(
        (float(o[0]), float(o[1]), lv) for o, lv in unique[1:] if lv <= 2.0 * best_loss
    )

    span_p = max(pc_hi - pc_lo, 1e-6)
    loss_fn = lambda v: collapse_loss(points, v[0], v[1])
    herr = _hessian_errors(loss_fn, best, steps=(1e-3 * span_p, 1e-3 * max(best[1], 0.1)))

    pin_tol = 1e-6
    pinned = bool(
        min(best[0] - pc_lo, pc_hi - best[0]) < pin_tol * max(span_p, 1.0)
        or min(best[1] - nu_lo, nu_hi - best[1]) < pin_tol
    )
    if pinned:
        warnings.warn("collapse optimum pinned at a bound", stacklevel=2)

    return CollapseFit(
        p_c=float(best[0]),
        nu=float(best[1]),
        err_p_c=float(herr[0]),
        err_nu=float(herr[1]),
        chi2_reduced=best_loss,
        n_points=len(points),
        pinned=pinned,
        hessian_err=(float(herr[0]), float(herr[1])),
        alternates=alternates,
    )


def _resample_point(point, rng):
    idx = rng.integers(0, point.samples.size, point.samples.size)
    return CollapsePoint.from_samples(point.p, point.L, point.samples[idx])


def bootstrap_errors(points, fit, n_resamples=DEFAULT_BOOTSTRAP, seed=0):
    """Bootstrap std of (p_c, nu) by resampling trajectories per point.

    Each resample redraws every point's samples with replacement, rebuilds
    mean/SEM, and refits starting from the original optimum.  Diverged
    resamples are counted; more than 20% failures aborts.
    """
    points = list(points)
    if n_resamples < 10:
        raise ValueError(f"n_resamples must be >= 10, got {n_resamples}")
    for pt in points:
        if pt.samples is None or pt.samples.size < 2:
            raise ValueError("bootstrap needs the raw per-trajectory samples")
        if pt.samples.std() == 0.0:
            raise ValueError(f"zero sample variance at (p={pt.p}, L={pt.L})")
    rng = np.random.default_rng(seed)
    fits = []
    failures = 0
    for _ in range(n_resamples):
        resampled = [_resample_point(pt, rng) for pt in points]
        try:
            fun = lambda v: collapse_residuals(resampled, v[0], v[1])
            pspan = [pt.p for pt in points]
            opt, _ = _minimize_ls(
                fun,
                np.array([fit.p_c, fit.nu]),
                (min(pspan), DEFAULT_NU_BOUNDS[0]),
                (max(pspan), DEFAULT_NU_BOUNDS[1]),
                2,
            )
            fits.append(opt)
        except (FitConvergenceError, ValueError):
            failures += 1
    if failures > 0.2 * n_resamples:
        raise FitConvergenceError(
            f"{failures}/{n_resamples} bootstrap resamples diverged"
        )
    arr = np.array(fits)
    return float(arr[:, 0].std(ddof=1)), float(arr[:, 1].std(ddof=1))


def finalize_errors(fit, bootstrap, n_resamples=DEFAULT_BOOTSTRAP):
    """Combine Hessian and bootstrap error bars, keeping the larger."""
    def comb(h, b):
        if b is None:
            return h
        if not np.isfinite(h):
            return b
        return max(h, b)

    return replace(
        fit,
        err_p_c=comb(fit.hessian_err[0], bootstrap[0]),
        err_nu=comb(fit.hessian_err[1], bootstrap[1]),
        bootstrap_err=(bootstrap[0], bootstrap[1]),
        n_bootstrap=n_resamples,
    )


def _series_blocks(series, window):
    """Trim (L, times, samples) series to the fit window.

    ``window`` keeps the first fraction of each series' recorded times.
    Recorded times with zero sample variance (e.g. the deterministic zeros
    before any entanglement reaches the half cut) carry no information for
    the chi-square and are dropped.
    """
    if not 0 < window <= 1:
        raise ValueError(f"window must be in (0, 1], got {window}")
    blocks = []
    for L, times, samples in series:
        times = np.asarray(times, dtype=np.float64)
        samples = np.asarray(samples, dtype=np.float64)
        keep = min(times.size, max(3, int(np.ceil(window * times.size))))
        times, samples = times[:keep], samples[:, :keep]
        informative = samples.std(axis=0) > 0.0
        blocks.append((int(L), times[informative], samples[:, informative]))
    if sum(1 for _, t, _ in blocks if t.size) < 2:
        raise ValueError("dynamical collapse needs >= 2 system sizes")
    return blocks


def _z_residuals(blocks, z):
    L = np.concatenate([np.full(times.size, size) for size, times, _ in blocks])
    t = np.concatenate([times for _, times, _ in blocks])
    y = np.concatenate([s.mean(axis=0) for _, _, s in blocks])
    ntraj = np.concatenate(
        [np.full(times.size, s.shape[0]) for _, times, s in blocks]
    )
    sem = np.concatenate(
        [s.std(axis=0, ddof=1) for _, _, s in blocks]
    ) / np.sqrt(ntraj)
    x = t / L ** z
    return _interp_residuals(x, y, sem, (t, L))


def fit_dynamical_exponent(
    series, window=1.0, initial_z=1.5, bounds=(0.3, 3.0),
    n_bootstrap=0, seed=0,
):
    """Collapse half-cut entropy growth as S(t, L) = f(t / L**z).

    ``series`` is a list of (L, times, samples) with samples shaped
    (n_traj, n_times).  Minimizes the interpolation chi-square over z alone
    (k = 1 degree of freedom), with optional bootstrap over trajectories
    (each resample redraws whole trajectories per system size, keeping the
    correlation of a trajectory across time).
    """
    blocks = _series_blocks(series, window)
    n_points = sum(t.size for _, t, _ in blocks)
    fun = lambda v: _z_residuals(blocks, v[0])
    opt, loss_val = _minimize_ls(
        fun, np.array([initial_z]), (bounds[0],), (bounds[1],), 1
    )
    z = float(opt[0])
    loss_fn = lambda v: float((fun(v) ** 2).sum()) / (n_points - 1)
    herr = _hessian_errors(loss_fn, np.array([z]), steps=(1e-3 * max(z, 0.1),))

    boot_std = None
    if n_bootstrap:
        rng = np.random.default_rng(seed)
        zs = []
        failures = 0
        for _ in range(n_bootstrap):
            res_blocks = []
            for L, t, s in blocks:
                idx = rng.integers(0, s.shape[0], s.shape[0])
                res_blocks.append((L, t, s[idx]))
            try:
                o, _ = _minimize_ls(
                    lambda v: _z_residuals(res_blocks, v[0]),
                    np.array([z]), (bounds[0],), (bounds[1],), 1,
                )
                zs.append(float(o[0]))
            except (FitConvergenceError, ValueError):
                failures += 1
        if failures > 0.2 * n_bootstrap:
            raise FitConvergenceError(
                f"{failures}/{n_bootstrap} bootstrap resamples diverged"
            )
        boot_std = float(np.std(zs, ddof=1))

    err = herr[0]
    if boot_std is not None:
        err = boot_std if not np.isfinite(err) else max(err, boot_std)
    return DynamicalFit(
        z=z,
        err_z=float(err),
        chi2_reduced=loss_val,
        n_points=n_points,
        hessian_err=float(herr[0]),
        bootstrap_err=boot_std,
        n_bootstrap=n_bootstrap,
    )
