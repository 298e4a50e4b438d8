# SPDX-FileCopyrightText: 2024 The pmlab Authors
#
# SPDX-License-Identifier: BSD-3-Clause

import os
import tempfile
import unittest

import numpy as np

from ..exceptions import ConvergenceError, NoSolutionError, ParameterError
from ..rde import (
    RdePool, SampledDistribution, _segment_minima, estimate_alpha_from_samples,
    initial_pool, ks_distance, load_pool, rde_step, save_pool, solve_rde)
from .common import long_test, ode_solution


class SampledDistributionTestCase(unittest.TestCase):
    """Test the sample-backed distribution"""

    def test_from_cdf(self):
        """Tabulating the logistic CDF reproduces its quantiles"""
        grid = np.linspace(-30.0, 30.0, 6001)
        dist = SampledDistribution.from_cdf(grid, 1 / (1 + np.exp(-grid)),
                                            size=4096)
        self.assertEqual(dist.size, 4096)
        self.assertAlmostEqual(dist.quantile(0.5)[0], 0.0, delta=1e-2)
        self.assertAlmostEqual(dist.quantile(0.9)[0], np.log(9), delta=1e-2)
        self.assertAlmostEqual(dist.quantile(0.1)[0], -np.log(9), delta=1e-2)

    def test_quantile_tails(self):
        """Quantiles are monotone and extend beyond the samples"""
        dist = SampledDistribution.from_samples(
            np.random.default_rng(1).exponential(1.0, 5000))
        u = np.concatenate(([1e-12, 1e-6], np.linspace(0.001, 0.999, 999),
                            [1 - 1e-6, 1 - 1e-12]))
        values = dist.quantile(u)
        self.assertTrue(np.all(np.diff(values) >= 0))
        self.assertLess(values[0], dist.sorted_samples[0])
        self.assertGreater(values[-1], dist.sorted_samples[-1])
        self.assertTrue(np.all(np.isfinite(values)))

    def test_cdf_and_sampling(self):
        """Inverse transform draws follow the stored samples"""
        rng = np.random.default_rng(2)
        dist = SampledDistribution.from_samples(rng.normal(size=20000))
        self.assertAlmostEqual(dist.cdf(0.0), 0.5, delta=0.02)
        self.assertEqual(dist.cdf(dist.sorted_samples[-1]), 1.0)
        draws = dist.sample(rng, 20000)
        self.assertLess(ks_distance(draws, dist.sorted_samples), 0.03)
        resampled = dist.resample(rng, 100)
        self.assertTrue(np.all(np.isin(resampled, dist.sorted_samples)))

    def test_empty(self):
        """Distributions need at least one sample"""
        with self.assertRaises(ParameterError):
            SampledDistribution.from_samples([])


class RdeStepTestCase(unittest.TestCase):
    """Test single population dynamics updates"""

    def test_segment_minima(self):
        """Minima of consecutive segments, +inf when empty"""
        minima = _segment_minima(np.array([3.0, 1.0, 2.0, 5.0, 4.0, 0.0]),
                                 np.array([3, 0, 1, 2]))
        self.assertEqual(list(minima), [1.0, np.inf, 5.0, 0.0])
        self.assertEqual(list(_segment_minima(np.empty(0), np.array([0, 0]))),
                         [np.inf, np.inf])

    def test_step(self):
        """A step keeps the size, counts the iteration and leaves its input"""
        rng = np.random.default_rng(3)
        pool = initial_pool(1.0, 10000, rng)
        x_before = pool.x_samples.copy()
        following = rde_step(pool, rng)
        self.assertEqual(following.pool_size, 10000)
        self.assertEqual(following.iteration, pool.iteration + 1)
        self.assertTrue(np.array_equal(pool.x_samples, x_before))
        self.assertTrue(np.all(np.isfinite(following.x_samples)))
        self.assertTrue(np.all(np.isfinite(following.y_samples)))

    def test_empty_pool(self):
        """Steps on an empty pool are refused"""
        pool = RdePool(1.0, np.empty(0), np.empty(0))
        with self.assertRaises(ParameterError):
            rde_step(pool, np.random.default_rng(0))

    def test_mismatched_pools(self):
        """X and Y pools must have equal sizes"""
        with self.assertRaises(ParameterError):
            RdePool(1.0, np.zeros(3), np.zeros(4))

    def test_degenerate_alpha(self):
        """Point masses far out give an overlap of exactly 1 or 0"""
        rng = np.random.default_rng(4)
        high = SampledDistribution.from_samples(np.full(100, 1e6))
        low = SampledDistribution.from_samples(np.full(100, -1e6))
        self.assertEqual(estimate_alpha_from_samples(high, 1.0, 1000, rng),
                         (1.0, 0.0))
        self.assertEqual(estimate_alpha_from_samples(low, 1.0, 1000, rng),
                         (0.0, 0.0))


class SolveRdeTestCase(unittest.TestCase):
    """Test the population dynamics fixed point against the ODE"""

    pool_size = 20000

    @classmethod
    def setUpClass(cls):
        cls.solution = ode_solution(1.0)
        cls.rde_run = solve_rde(1.0, pool_size=cls.pool_size, iters=100,
                                seed=5)

    def test_converged(self):
        """The run settles and records its trace"""
        run = self.rde_run
        self.assertGreaterEqual(run.converged_at, 30)
        self.assertEqual(run.ks_trace.size, 100)
        self.assertEqual(len(run.checks), 10)
        self.assertEqual(run.pool.iteration, 100)

    def test_matches_ode(self):
        """X and Y pools follow the laws of the ODE solution"""
        pool = self.rde_run.pool
        self.assertLess(ks_distance(pool.x_samples, self.solution.cdf_x),
                        0.03)
        self.assertLess(ks_distance(pool.y_samples, self.solution.cdf_y),
                        0.03)
        positive = np.mean(pool.x_samples > 0)
        self.assertGreaterEqual(positive, 0.48)
        self.assertAlmostEqual(positive, 1 - self.solution.epsilon0 / 2,
                               delta=0.02)

    def test_stationary(self):
        """One more step barely moves the pool"""
        pool = self.rde_run.pool
        following = rde_step(pool, np.random.default_rng(6))
        self.assertLess(ks_distance(pool.x_samples, following.x_samples),
                        5 / np.sqrt(self.pool_size))

    def test_alpha(self):
        """The overlap estimated from the pool matches the ODE"""
        estimate, stderr = estimate_alpha_from_samples(
            self.rde_run.pool.x_distribution(), 1.0, self.pool_size,
            np.random.default_rng(7))
        self.assertAlmostEqual(estimate, self.solution.alpha,
                               delta=3 * stderr + 0.01)

    def test_point_mass_start(self):
        """Starting from point masses reaches the same fixed point"""
        size = self.pool_size
        start = RdePool(1.0, np.full(size, 5.0), np.full(size, 5.0))
        run = solve_rde(1.0, pool_size=size, iters=100, seed=8,
                        initial=start)
        self.assertLess(ks_distance(run.pool.x_samples, self.solution.cdf_x),
                        0.03)

    def test_exponential_tail(self):
        """P[X > x] stays below exp(-x P[Y > 0]) in the pool"""
        pool = self.rde_run.pool
        size = pool.pool_size
        rate = np.mean(pool.y_samples > 0)
        self.assertGreater(rate, 0)
        for q in (0.5, 0.9, 0.99, 0.999):
            x = float(np.quantile(pool.x_samples, q))
            if x <= 0:
                continue
            bound = np.exp(-x * rate)
            slack = 4 * np.sqrt(bound * (1 - bound) / size) + 1 / size
            self.assertLessEqual(np.mean(pool.x_samples > x), bound + slack)

    def test_point_mass_contraction(self):
        """Point masses at 0 move toward the fixed point within 10 steps"""
        size = self.pool_size
        pool = RdePool(1.0, np.zeros(size), np.zeros(size))
        start = ks_distance(pool.x_samples, self.solution.cdf_x)
        self.assertGreaterEqual(start, 0.5)
        rng = np.random.default_rng(10)
        for _ in range(10):
            pool = rde_step(pool, rng)
        self.assertEqual(pool.iteration, 10)
        self.assertLess(ks_distance(pool.x_samples, self.solution.cdf_x),
                        0.75 * start)

    def test_determinism(self):
        """Equal seeds give equal pools"""
        first = solve_rde(1.0, pool_size=10000, iters=60, seed=9)
        second = solve_rde(1.0, pool_size=10000, iters=60, seed=9)
        self.assertTrue(np.array_equal(first.pool.x_samples,
                                       second.pool.x_samples))

    def test_not_converged(self):
        """Too few steps for a single check raise a convergence error"""
        with self.assertRaises(ConvergenceError):
            solve_rde(1.0, pool_size=10000, iters=5, seed=1)

    def test_invalid(self):
        """Small pools and the no-solution regime are refused"""
        with self.assertRaises(ParameterError):
            solve_rde(1.0, pool_size=9999, iters=10)
        with self.assertRaises(NoSolutionError):
            solve_rde(4.0, pool_size=10000, iters=10)
        with self.assertRaises(ParameterError):
            solve_rde(0.0, pool_size=10000, iters=10)

    def test_pool_file(self):
        """Pool dumps carry a header and read back"""
        pool = self.rde_run.pool
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'rde.x.pool')
            save_pool(pool, path, 'X')
            with open(path, encoding='UTF-8') as file:
                header = file.readline()
            loaded = load_pool(path)
        self.assertEqual(header, '# rde lambda=1.0 iter=100 kind=X\n')
        self.assertEqual(loaded.size, self.pool_size)
        self.assertTrue(np.array_equal(loaded.sorted_samples,
                                       np.sort(pool.x_samples)))

    @long_test
    def test_acceptance_pool(self):
        """A pool of 10^5 matches the ODE to KS 0.02 in X and Y"""
        for lam in (0.5, 1.0, 2.0, 3.0):
            solution = ode_solution(lam)
            run = solve_rde(lam, pool_size=100000, iters=300, seed=11)
            self.assertLess(
                ks_distance(run.pool.x_samples, solution.cdf_x), 0.02)
            self.assertLess(
                ks_distance(run.pool.y_samples, solution.cdf_y), 0.02)
            self.assertGreaterEqual(np.mean(run.pool.x_samples > 0), 0.48)
            estimate, stderr = estimate_alpha_from_samples(
                run.pool.x_distribution(), lam, 100000,
                np.random.default_rng(12))
            self.assertAlmostEqual(estimate, solution.alpha,
                                   delta=3 * stderr + 0.005)

    @long_test
    def test_density_asymmetry(self):
        """Histogram of X puts more mass at x0 than at -x0"""
        run = solve_rde(1.0, pool_size=100000, iters=300, seed=13)
        samples = run.pool.x_samples
        for x0 in (0.5, 1.0, 2.0, 3.0):
            right = np.count_nonzero(np.abs(samples - x0) < 0.25)
            left = np.count_nonzero(np.abs(samples + x0) < 0.25)
            self.assertGreaterEqual(right, left - 4 * np.sqrt(right + left))
