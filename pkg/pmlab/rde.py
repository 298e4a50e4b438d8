# SPDX-FileCopyrightText: 2024 The pmlab Authors
#
# SPDX-License-Identifier: BSD-3-Clause

"""
Population dynamics for the message equations

    X = min_i (zeta_i - Y_i)        zeta a rate-1 Poisson process
    Y = min(eta - X, X')            eta ~ exp(lam)

with all Y_i, X, X' independent copies.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import stats

from . import config
from .exceptions import ConvergenceError, NoSolutionError, ParameterError

__all__ = ['SampledDistribution', 'RdePool', 'RdeRun', 'initial_pool',
           'rde_step', 'solve_rde', 'estimate_alpha_from_samples',
           'ks_distance', 'save_pool', 'load_pool']

logger = logging.getLogger(__name__)

_MIN_POOL = 10_000
# fraction of the samples used for each exponential tail fit
_TAIL_FRACTION = 0.01
_U_FLOOR = 1e-300


def _tail_rate(excess: np.ndarray) -> float:
    mean = float(np.mean(excess)) if excess.size else 0.0
    return 1 / mean if mean > 0 else math.inf


@dataclass(eq=False)
class SampledDistribution:
    """
    Distribution carried by sorted samples.

    Sample k sits at plotting position (k + 1/2) / size. Between positions
    the quantile function interpolates linearly, outside it continues with
    exponential tails fitted on the outer percent of the samples.
    """
    sorted_samples: np.ndarray = field(repr=False)
    lower_rate: float = math.inf
    upper_rate: float = math.inf

    @classmethod
    def from_samples(cls, samples) -> 'SampledDistribution':
        ordered = np.sort(np.asarray(samples, dtype=np.float64))
        if not ordered.size:
            raise ParameterError("A sampled distribution needs samples")
        m = max(int(ordered.size * _TAIL_FRACTION), 1)
        if ordered.size <= m:
            return cls(ordered)
        return cls(ordered,
                   lower_rate=_tail_rate(ordered[m] - ordered[:m]),
                   upper_rate=_tail_rate(ordered[-m:] - ordered[-m - 1]))

    @classmethod
    def from_cdf(cls, grid: np.ndarray, cdf: np.ndarray,
                 size: Optional[int] = None) -> 'SampledDistribution':
        """
        Tabulate the quantile function of a CDF given on a grid
        :param grid: increasing abscissae
        :param cdf: CDF values on the grid
        :param size: number of table entries, defaults to pwit.table_size
        :return: the distribution
        """
        size = size or config.get_int('pwit', 'table_size')
        running = np.maximum.accumulate(np.asarray(cdf, dtype=np.float64))
        keep = np.concatenate(([True], running[1:] > running[:-1]))
        positions = (np.arange(size) + 0.5) / size
        return cls.from_samples(
            np.interp(positions, running[keep], np.asarray(grid)[keep]))

    @property
    def size(self) -> int:
        return self.sorted_samples.size

    def quantile(self, u) -> np.ndarray:
        u = np.clip(np.atleast_1d(np.asarray(u, dtype=np.float64)),
                    _U_FLOOR, 1 - 1e-16)
        positions = (np.arange(self.size) + 0.5) / self.size
        values = np.interp(u, positions, self.sorted_samples)
        first, last = positions[0], positions[-1]
        low, high = u < first, u > last
        values[low] = (self.sorted_samples[0]
                       - np.log(first / u[low]) / self.lower_rate)
        values[high] = (self.sorted_samples[-1]
                        + np.log((1 - last) / (1 - u[high])) / self.upper_rate)
        return values

    def cdf(self, x) -> np.ndarray:
        """Empirical P[X <= x]"""
        return np.searchsorted(self.sorted_samples, x,
                               side='right') / self.size

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        """Inverse transform draws through :meth:`quantile`"""
        return self.quantile(rng.random(size))

    def resample(self, rng: np.random.Generator, size) -> np.ndarray:
        """Draws with replacement from the stored samples"""
        return self.sorted_samples[rng.integers(0, self.size, size)]


@dataclass(eq=False)
class RdePool:
    lam: float
    x_samples: np.ndarray = field(repr=False)
    y_samples: np.ndarray = field(repr=False)
    iteration: int = 0

    def __post_init__(self):
        if self.x_samples.size != self.y_samples.size:
            raise ParameterError("X and Y pools must have the same size")

    @property
    def pool_size(self) -> int:
        return self.x_samples.size

    def x_distribution(self) -> SampledDistribution:
        return SampledDistribution.from_samples(self.x_samples)

    def y_distribution(self) -> SampledDistribution:
        return SampledDistribution.from_samples(self.y_samples)


@dataclass(eq=False)
class RdeRun:
    """Result of :func:`solve_rde`"""
    pool: RdePool
    ks_trace: np.ndarray = field(repr=False)
    converged_at: int
    checks: List[float] = field(default_factory=list)


def _segment_minima(values: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Minimum of each consecutive segment, +inf for empty segments"""
    minima = np.full(counts.size, np.inf)
    nonempty = counts > 0
    if values.size:
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        minima[nonempty] = np.minimum.reduceat(values, starts[nonempty])
    return minima


def _unplanted_update(y: np.ndarray, z_cut: float, size: int,
                      rng: np.random.Generator) -> np.ndarray:
    # Poisson arrivals on [0, z_cut] are a Poisson count of uniforms
    counts = rng.poisson(z_cut, size)
    total = int(counts.sum())
    zeta = rng.uniform(0.0, z_cut, total)
    return _segment_minima(zeta - y[rng.integers(0, y.size, total)], counts)


def _planted_update(x: np.ndarray, lam: float, size: int,
                    rng: np.random.Generator) -> np.ndarray:
    eta = rng.exponential(1 / lam, size)
    return np.minimum(eta - x[rng.integers(0, x.size, size)],
                      x[rng.integers(0, x.size, size)])


def initial_pool(lam: float, pool_size: int,
                 rng: np.random.Generator) -> RdePool:
    """X from the standard logistic law, Y one update away from it"""
    x = rng.logistic(0.0, 1.0, pool_size)
    return RdePool(lam, x, _planted_update(x, lam, pool_size, rng))


def rde_step(pool: RdePool, rng: np.random.Generator,
             z_cut: Optional[float] = None) -> RdePool:
    """
    One synchronous population dynamics update of both pools
    :param pool: current pools, left untouched
    :param rng: random generator of this step
    :param z_cut: arrival horizon, defaults to the 0.9999 quantile of Y
        plus rde.cut_margin
    :return: the next pools
    :raises ParameterError: if the pool is empty
    """
    if pool.pool_size == 0:
        raise ParameterError("Population dynamics needs a non-empty pool")
    if z_cut is None:
        q = float(np.quantile(pool.y_samples,
                              config.get_float('rde', 'tail_quantile')))
        z_cut = max(q, 0.0) + config.get_float('rde', 'cut_margin')
    size = pool.pool_size
    return RdePool(
        lam=pool.lam,
        x_samples=_unplanted_update(pool.y_samples, z_cut, size, rng),
        y_samples=_planted_update(pool.x_samples, pool.lam, size, rng),
        iteration=pool.iteration + 1)


def _step_rng(seed: int, step: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, step]))


def ks_distance(a: np.ndarray, b) -> float:
    """
    Kolmogorov-Smirnov distance of samples to other samples or to a CDF
    :param a: samples
    :param b: samples, or a callable CDF
    :return: the statistic
    """
    if callable(b):
        return float(stats.kstest(a, b).statistic)
    return float(stats.ks_2samp(a, b, method='asymp').statistic)


def solve_rde(lam: float, pool_size: Optional[int] = None,
              iters: Optional[int] = None, seed: int = 0,
              initial: Optional[RdePool] = None) -> RdeRun:
    """
    Iterate the population dynamics.

    Step k draws from SeedSequence([seed, k]), step 0 being the
    initialisation. Every rde.check_interval steps the X pool is compared
    with the one of the previous check; the run has converged once
    rde.check_streak comparisons in a row are below rde.ks_factor over the
    square root of the pool size.

    :param lam: planted rate in (0, 4)
    :param pool_size: pool size >= 10^4, defaults to rde.pool_size
    :param iters: number of steps, defaults to rde.iters
    :param seed: master seed
    :param initial: start from these pools instead of the logistic law
    :return: final pool, per-step KS trace and the convergence step
    :raises ConvergenceError: if the criterion is never met
    """
    if not 0 < lam:
        raise ParameterError(f"lambda must be positive, got {lam!r}")
    if lam >= 4:
        raise NoSolutionError(lam)
    pool_size = pool_size or config.get_int('rde', 'pool_size')
    iters = config.get_int('rde', 'iters') if iters is None else iters
    if pool_size < _MIN_POOL:
        raise ParameterError(
            f"pool size must be at least {_MIN_POOL}, got {pool_size}")
    interval = config.get_int('rde', 'check_interval')
    streak_needed = config.get_int('rde', 'check_streak')
    threshold = config.get_float('rde', 'ks_factor') / math.sqrt(pool_size)

    pool = initial or initial_pool(lam, pool_size, _step_rng(seed, 0))
    trace = np.empty(iters)
    checks = []
    reference = pool.x_samples
    streak, converged_at = 0, -1
    for k in range(1, iters + 1):
        following = rde_step(pool, _step_rng(seed, k))
        trace[k - 1] = ks_distance(pool.x_samples, following.x_samples)
        pool = following
        if k % interval:
            continue
        checks.append(ks_distance(reference, pool.x_samples))
        reference = pool.x_samples
        streak = streak + 1 if checks[-1] < threshold else 0
        logger.debug("rde lambda=%g step %d: check %.4g streak %d", lam, k,
                     checks[-1], streak)
        if streak >= streak_needed and converged_at < 0:
            converged_at = k
            logger.info("rde lambda=%g converged at step %d", lam, k)
    if converged_at < 0:
        raise ConvergenceError(
            f"Population dynamics at lambda={lam} did not settle below "
            f"KS {threshold:.3g} within {iters} steps")
    return RdeRun(pool, trace, converged_at, checks)


def estimate_alpha_from_samples(x_pool: SampledDistribution, lam: float,
                                draws: int, rng: np.random.Generator):
    """
    Monte Carlo estimate of P[eta < X + X']
    :param x_pool: samples of X
    :param lam: planted rate
    :param draws: number of draws
    :param rng: random generator
    :return: (estimate, standard error)
    """
    x = x_pool.resample(rng, draws)
    x_prime = x_pool.resample(rng, draws)
    eta = rng.exponential(1 / lam, draws)
    p = float(np.mean(eta < x + x_prime))
    return p, math.sqrt(p * (1 - p) / draws)


def save_pool(pool: RdePool, path: str, kind: str) -> None:
    """Dump the X or Y pool, one sample per line after a header comment"""
    samples = {'X': pool.x_samples, 'Y': pool.y_samples}[kind]
    with open(path, 'w', encoding='UTF-8', newline='\n') as file:
        file.write(f'# rde lambda={pool.lam!r} iter={pool.iteration} '
                   f'kind={kind}\n')
        file.writelines('%.17g\n' % value for value in samples)


def load_pool(path: str) -> SampledDistribution:
    """Read a pool dump back as a sampled distribution"""
    return SampledDistribution.from_samples(
        np.loadtxt(path, comments='#', dtype=np.float64, ndmin=1))