"""Desk-scale experiments on the correlated Gaussian benchmark.

* :func:`run_staircase` -- true MI steps through a list of levels while a
  fresh batch is drawn every iteration; DiME (and matrix-based MI) are
  tracked with sliding-window statistics, optionally while learning the
  kernel bandwidths.
* :func:`run_bandwidth_sweep` -- DiME and matrix-based MI of one dataset
  over a log-spaced bandwidth grid.
* :func:`run_grid` -- DiME statistics over batch size x dimensionality x
  {fixed, learned} bandwidth at a fixed correlation.

Each experiment is a pure function of its configuration and seed.  Every
batch and permutation set is drawn from a stream derived from the seed and
the iteration (or cell) index, so replaying a configuration reproduces
every output exactly.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .entropy import DEFAULT_ALPHA, EntropyOrder
from .errors import DegenerateAnchorError, NumericalError, RejectedInputError
from .estimator import (
    DEFAULT_LR,
    DEFAULT_PERMUTATIONS,
    FD_STEP,
    Adam,
    BandwidthParams,
    DistanceCache,
    bandwidth_step,
    dime_from_grams,
    matrix_mi_from_grams,
    sample_permutations,
)
from .kernels import KernelFamily, kernel_family
from .seeding import check_seed, derive_seed
from .synthdata import GaussianPairConfig, rho_for_mi, sample_correlated_gaussian, true_mi

log = logging.getLogger(__name__)

PAPER_ITERATIONS_PER_LEVEL = 4000


def _positive_int(name, value):
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise RejectedInputError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class StaircaseConfig:
    """Configuration of the MI staircase.

    ``sigma_init=None`` starts both bandwidths at ``sqrt(d)``.
    ``iterations_per_level`` defaults to a desk-scale 500; the original
    protocol used 4000.
    """

    d: int = 20
    mi_levels: tuple = (2.0, 4.0, 6.0, 8.0, 10.0)
    iterations_per_level: int = 500
    batch_size: int = 1024
    alpha: float = DEFAULT_ALPHA
    permutations: int = DEFAULT_PERMUTATIONS
    sigma_init: float = None
    optimize: bool = False
    lr: float = DEFAULT_LR
    window: int = 200
    seed: int = 0
    family: str = KernelFamily.GAUSSIAN.value
    tie: bool = False
    track_matrix_mi: bool = True

    def __post_init__(self):
        _positive_int("d", self.d)
        _positive_int("iterations_per_level", self.iterations_per_level)
        _positive_int("permutations", self.permutations)
        _positive_int("window", self.window)
        if int(self.batch_size) != self.batch_size or self.batch_size < 2:
            raise RejectedInputError(f"batch_size must be an integer >= 2, got {self.batch_size!r}")
        levels = tuple(float(m) for m in self.mi_levels)
        if not levels:
            raise RejectedInputError("mi_levels must not be empty")
        if any(not math.isfinite(m) or m < 0.0 for m in levels):
            raise RejectedInputError(f"mi_levels must be non-negative, got {levels}")
        if any(b < a for a, b in zip(levels, levels[1:])):
            raise RejectedInputError(f"mi_levels must be nondecreasing, got {levels}")
        object.__setattr__(self, "mi_levels", levels)
        EntropyOrder(self.alpha)
        kernel_family(self.family)
        check_seed(self.seed)
        if self.sigma_init is not None and not (self.sigma_init > 0.0 and math.isfinite(self.sigma_init)):
            raise RejectedInputError(f"sigma_init must be positive and finite, got {self.sigma_init!r}")
        if not (self.lr >= 0.0 and math.isfinite(self.lr)):
            raise RejectedInputError(f"lr must be non-negative and finite, got {self.lr!r}")

    @property
    def initial_sigma(self):
        return math.sqrt(self.d) if self.sigma_init is None else float(self.sigma_init)

    @property
    def total_iterations(self):
        return len(self.mi_levels) * self.iterations_per_level


@dataclass(frozen=True)
class ExperimentRecord:
    iteration: int
    level: int
    rho: float
    true_mi: float
    dime_value: float
    matrix_mi: float
    sigma_x: float
    sigma_y: float
    window_mean: float
    window_var: float


def _with_iteration(exc, iteration):
    wrapped = type(exc)(f"iteration {iteration}: {exc}", iteration=iteration)
    wrapped.__cause__ = exc
    return wrapped


def run_staircase(cfg):
    """Run the MI staircase, yielding one :class:`ExperimentRecord` per iteration.

    Per iteration: set ``rho`` for the current MI level, draw a fresh batch,
    compute DiME at the current bandwidths (plus matrix-based MI when
    ``cfg.track_matrix_mi``), and with ``cfg.optimize`` take one Adam step on
    the log-bandwidths using the same permutations.  The recorded bandwidths
    are those the DiME value was computed with.
    """
    order = EntropyOrder(cfg.alpha)
    sigma = cfg.initial_sigma
    params = BandwidthParams.from_sigmas(sigma, sigma)
    adam = Adam(cfg.lr)
    recent = deque(maxlen=cfg.window)
    iteration = 0
    for level, target in enumerate(cfg.mi_levels):
        rho = rho_for_mi(cfg.d, target)
        mi = true_mi(cfg.d, rho)
        for _ in range(cfg.iterations_per_level):
            try:
                X, Y = sample_correlated_gaussian(
                    GaussianPairConfig(cfg.d, rho, cfg.batch_size, derive_seed(cfg.seed, "staircase-batch", iteration))
                )
                perms = sample_permutations(
                    cfg.batch_size, cfg.permutations, derive_seed(cfg.seed, "staircase-permutations", iteration)
                )
                cache = DistanceCache(X, Y, cfg.family)
                K_x, K_y = cache.grams(params.log_sigma_x, params.log_sigma_y)
                est = dime_from_grams(K_x, K_y, order, perms)
                mbmi = matrix_mi_from_grams(K_x, K_y, order, est.paired_joint) if cfg.track_matrix_mi else math.nan
                used = params
                if cfg.optimize:
                    params = bandwidth_step(cache, params, adam, order, perms, cfg.tie, FD_STEP, iteration)
            except NumericalError as exc:
                raise _with_iteration(exc, iteration) from exc
            recent.append(est.value)
            window = np.fromiter(recent, dtype=np.float64)
            yield ExperimentRecord(
                iteration=iteration,
                level=level,
                rho=rho,
                true_mi=mi,
                dime_value=est.value,
                matrix_mi=mbmi,
                sigma_x=used.sigma_x,
                sigma_y=used.sigma_y,
                window_mean=float(np.mean(window)),
                window_var=float(np.var(window)),
            )
            iteration += 1
            if iteration % 100 == 0:
                log.info("staircase iteration %d/%d", iteration, cfg.total_iterations)


def _series(values):
    values = list(values)
    if values and hasattr(values[0], "dime_value"):
        values = [r.dime_value for r in values]
    return np.asarray(values, dtype=np.float64)


def relative_normalize(records, anchor):
    """Divide every DiME value by its mean over the half-open index range ``anchor``.

    ``records`` may be :class:`ExperimentRecord` objects or plain numbers.
    """
    series = _series(records)
    start, end = anchor
    if not (0 <= start < end <= len(series)):
        raise RejectedInputError(f"anchor window {anchor} is empty or outside a series of length {len(series)}")
    ref = float(np.mean(series[start:end]))
    if abs(ref) <= 1e-12:
        raise DegenerateAnchorError(f"anchor window mean {ref!r} is too close to zero to normalize by")
    return series / ref


def sliding_stats(series, window):
    """Trailing-window mean and population variance at every index.

    Entry ``i`` uses ``series[max(0, i - window + 1) : i + 1]``.
    """
    values = _series(series)
    if values.size == 0:
        raise RejectedInputError("sliding_stats needs a non-empty series")
    window = _positive_int("window", window)
    means = np.empty_like(values)
    variances = np.empty_like(values)
    for i in range(values.size):
        chunk = values[max(0, i - window + 1) : i + 1]
        means[i] = np.mean(chunk)
        variances[i] = np.var(chunk)
    return means, variances


@dataclass(frozen=True)
class SweepRow:
    sigma: float
    dime_value: float
    matrix_mi: float


def log_sigma_grid(d, points=20, low=1e-2, high=1e2):
    """``points`` log-spaced bandwidths from ``low * sqrt(d)`` to ``high * sqrt(d)``."""
    return np.geomspace(low * math.sqrt(d), high * math.sqrt(d), int(points))


def _check_log_grid(grid):
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size < 10:
        raise RejectedInputError(f"sigma grid needs at least 10 points, got {grid.size}")
    if not np.all(np.isfinite(grid)) or np.any(grid <= 0.0):
        raise RejectedInputError("sigma grid must be positive and finite")
    steps = np.diff(np.log(grid))
    if np.any(steps <= 0.0) or not np.allclose(steps, steps[0], rtol=1e-6, atol=0.0):
        raise RejectedInputError("sigma grid must be increasing and log-spaced")
    return grid


def run_bandwidth_sweep(d=20, n=1024, target_mi=10.0, sigma_grid=None, alpha=DEFAULT_ALPHA, permutations=DEFAULT_PERMUTATIONS, seed=0):
    """DiME and matrix-based MI of one dataset across bandwidths.

    The same bandwidth is used for ``X`` and ``Y``, and one permutation set is
    shared by every grid point.
    """
    grid = _check_log_grid(log_sigma_grid(d) if sigma_grid is None else sigma_grid)
    order = EntropyOrder(alpha)
    rho = rho_for_mi(d, target_mi)
    X, Y = sample_correlated_gaussian(GaussianPairConfig(d, rho, n, derive_seed(seed, "sweep-data")))
    perms = sample_permutations(n, permutations, derive_seed(seed, "sweep-permutations"))
    cache = DistanceCache(X, Y, KernelFamily.GAUSSIAN)
    rows = []
    for sigma in grid:
        log_sigma = math.log(sigma)
        K_x, K_y = cache.grams(log_sigma, log_sigma)
        est = dime_from_grams(K_x, K_y, order, perms)
        rows.append(SweepRow(float(sigma), est.value, matrix_mi_from_grams(K_x, K_y, order, est.paired_joint)))
    return rows


GRID_MODES = ("fixed", "learned")


@dataclass(frozen=True)
class GridRow:
    """Summary of one ``(n, d, mode, repeat)`` cell."""

    n: int
    d: int
    mode: str
    repeat: int
    rho: float
    dime_mean: float
    dime_std: float
    sigma_x: float
    sigma_y: float


@dataclass(frozen=True)
class GridSummary:
    """Seed-averaged statistics of one ``(n, d, mode)`` configuration."""

    n: int
    d: int
    mode: str
    repeats: int
    dime_mean: float
    dime_std: float
    sigma_x: float
    sigma_y: float


def run_grid(
    batch_sizes=(64, 1024),
    dims=(5, 128),
    target_mi=10.0,
    modes=GRID_MODES,
    iterations=20,
    repeats=20,
    seed=0,
    alpha=DEFAULT_ALPHA,
    permutations=1,
    lr=0.05,
):
    """DiME statistics over batch size x dimensionality x bandwidth mode.

    Every cell runs ``iterations`` fresh batches at the correlation giving
    ``target_mi`` nats.  ``fixed`` keeps ``sigma = sqrt(d / 2)``; ``learned``
    starts there and takes one Adam step per batch.  Both modes of a
    ``(n, d, repeat)`` cell see the same batches and permutations.

    Returns one :class:`GridRow` per cell and repeat, ordered by
    ``(n, d, mode, repeat)``; see :func:`summarize_grid`.
    """
    if not batch_sizes or not dims or not modes:
        raise RejectedInputError("grid axes must be non-empty")
    for mode in modes:
        if mode not in GRID_MODES:
            raise RejectedInputError(f"unknown grid mode {mode!r}; expected one of {GRID_MODES}")
    for n in batch_sizes:
        if int(n) != n or n < 2:
            raise RejectedInputError(f"batch sizes must be integers >= 2, got {n!r}")
    for d in dims:
        _positive_int("dimension", d)
    iterations = _positive_int("iterations", iterations)
    repeats = _positive_int("repeats", repeats)
    permutations = _positive_int("permutations", permutations)
    order = EntropyOrder(alpha)
    rows = []
    for n in batch_sizes:
        for d in dims:
            rho = rho_for_mi(d, target_mi)
            for mode in modes:
                for rep in range(repeats):
                    cell_seed = derive_seed(seed, "grid", int(n), int(d), rep)
                    rows.append(_grid_cell(int(n), int(d), rho, mode, rep, cell_seed, iterations, order, permutations, lr))
                log.info("grid cell n=%d d=%d mode=%s done", n, d, mode)
    return rows


def _grid_cell(n, d, rho, mode, rep, cell_seed, iterations, order, permutations, lr):
    sigma = math.sqrt(d / 2.0)
    params = BandwidthParams.from_sigmas(sigma, sigma)
    adam = Adam(lr)
    values = np.empty(iterations)
    for it in range(iterations):
        X, Y = sample_correlated_gaussian(GaussianPairConfig(d, rho, n, derive_seed(cell_seed, "batch", it)))
        perms = sample_permutations(n, permutations, derive_seed(cell_seed, "permutations", it))
        cache = DistanceCache(X, Y, KernelFamily.GAUSSIAN)
        try:
            values[it] = dime_from_grams(*cache.grams(params.log_sigma_x, params.log_sigma_y), order, perms).value
            if mode == "learned":
                params = bandwidth_step(cache, params, adam, order, perms, False, FD_STEP, it)
        except NumericalError as exc:
            raise _with_iteration(exc, it) from exc
    return GridRow(
        n=n,
        d=d,
        mode=mode,
        repeat=rep,
        rho=rho,
        dime_mean=float(np.mean(values)),
        dime_std=float(np.std(values)),
        sigma_x=params.sigma_x,
        sigma_y=params.sigma_y,
    )


def summarize_grid(rows):
    """Average :class:`GridRow` statistics over repeats, keyed by ``(n, d, mode)``."""
    groups = {}
    for row in rows:
        groups.setdefault((row.n, row.d, row.mode), []).append(row)
    out = []
    for (n, d, mode), group in groups.items():
        out.append(
            GridSummary(
                n=n,
                d=d,
                mode=mode,
                repeats=len(group),
                dime_mean=float(np.mean([r.dime_mean for r in group])),
                dime_std=float(np.mean([r.dime_std for r in group])),
                sigma_x=float(np.mean([r.sigma_x for r in group])),
                sigma_y=float(np.mean([r.sigma_y for r in group])),
            )
        )
    return out
