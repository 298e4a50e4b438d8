# SPDX-FileCopyrightText: 2024 The pmlab Authors
#
# SPDX-License-Identifier: BSD-3-Clause

import dataclasses
import math
import unittest

import numpy as np

from ..command.simulate_command import run_simulation, summarize
from ..exceptions import NoSolutionError, ParameterError
from ..ode import (
    BasinKind, NoSolution, OdeSolution, TrajectoryPoint, compute_alpha,
    find_epsilon0, integrate, integrate_classify, reconstruct_solution, rhs,
    scan_basins, solve_ode)
from .common import long_test, ode_solution


class RightHandSideTestCase(unittest.TestCase):
    """Test the vector field"""

    def test_saddle_is_fixed(self):
        """(1, 1, 0) is an equilibrium for every lambda"""
        for lam in (0.1, 1.0, 3.9, 6.0):
            self.assertEqual(rhs(TrajectoryPoint(0.0, 1.0, 1.0, 0.0), lam),
                             (0.0, 0.0, 0.0))

    def test_initial_slope(self):
        """At the start U' = -lam/4 + (1 - eps/2)^2"""
        for lam, eps in ((1.0, 0.3), (2.5, 0.7), (3.99, 0.01)):
            dU, dV, dW = rhs(TrajectoryPoint(0.0, 0.5, eps, eps), lam)
            self.assertAlmostEqual(dU, -lam / 4 + (1 - eps / 2) ** 2)
            self.assertAlmostEqual(dV, lam * eps / 2)
            self.assertAlmostEqual(dW, -lam * eps / 2)

    def test_no_exit_at_threshold(self):
        """For lam >= 4 U decreases at the start whenever eps > 0"""
        for lam in (4.0, 4.5, 6.0):
            for eps in (1e-6, 0.1, 0.9):
                dU, _, _ = rhs(TrajectoryPoint(0.0, 0.5, eps, eps), lam)
                self.assertLess(dU, 0)


class ClassificationTestCase(unittest.TestCase):
    """Test the basin classification of single trajectories"""

    def test_endpoints(self):
        """eps=0 escapes through U and eps=1 through V"""
        for lam in (0.5, 1.0, 3.0):
            self.assertEqual(integrate_classify(lam, 0.0, 100.0).kind,
                             BasinKind.ESCAPED_U)
            basin = integrate_classify(lam, 1.0, 100.0)
            self.assertEqual(basin.kind, BasinKind.ESCAPED_V)
            self.assertEqual(basin.x_hit, 0.0)

    def test_closed_form_escape(self):
        """The eps=0 escape time matches the integrator"""
        for lam in (0.5, 1.0, 3.0):
            closed = integrate_classify(lam, 0.0, 100.0).x_hit
            result = integrate(lam, 0.0, 100.0)
            self.assertAlmostEqual(result.t_events[0][0], closed, delta=1e-8)

    def test_single_change_point(self):
        """The basin is a step function of eps"""
        kinds = [basin.kind for basin
                 in scan_basins(1.0, np.linspace(0.0, 1.0, 101))]
        self.assertNotIn(BasinKind.UNDETERMINED, kinds)
        changes = sum(a != b for a, b in zip(kinds, kinds[1:]))
        self.assertEqual(changes, 1)
        self.assertEqual(kinds[0], BasinKind.ESCAPED_U)
        self.assertEqual(kinds[-1], BasinKind.ESCAPED_V)

    def test_undetermined_near_saddle(self):
        """A short horizon on the saddle orbit leaves the class open"""
        solution = ode_solution(1.0)
        basin = integrate_classify(1.0, solution.epsilon0, 5.0)
        self.assertEqual(basin.kind, BasinKind.UNDETERMINED)
        self.assertEqual(basin.x_max, 5.0)
        self.assertAlmostEqual(basin.final_point.x, 5.0)

    def test_invalid_arguments(self):
        """Out of range eps, lambda or horizon are refused"""
        with self.assertRaises(ParameterError):
            integrate_classify(1.0, 1.5, 10.0)
        with self.assertRaises(ParameterError):
            integrate_classify(1.0, -0.1, 10.0)
        with self.assertRaises(ParameterError):
            integrate_classify(0.0, 0.5, 10.0)
        with self.assertRaises(ParameterError):
            integrate_classify(1.0, 0.5, 0.0)

    def test_trajectory_invariants(self):
        """Positivity, F < 1, G < 1 and V = W exp(lam x) before escape"""
        for lam in (0.25, 0.5, 1.0, 2.0, 3.5):
            for eps in np.linspace(0.05, 0.95, 10):
                result = integrate(lam, float(eps), 60.0, dense=True)
                grid = np.linspace(0.0, result.t[-1], 400)[:-1]
                U, V, W = result.sol(grid)
                self.assertTrue(np.all(U > 0) and np.all(V > 0)
                                and np.all(W > 0))
                self.assertTrue(np.all(U * V < 1))
                self.assertTrue(np.all((1 - U) * W < 1))
                self.assertTrue(np.all(
                    np.abs(V - W * np.exp(lam * grid)) <= 1e-8 * V))

    def test_monotone_in_epsilon(self):
        """Larger eps lowers U and raises V and W while both stay below 1"""
        lam = 1.0
        for eps, larger in ((0.2, 0.21), (0.5, 0.51), (0.8, 0.81)):
            first = integrate(lam, eps, 60.0, dense=True)
            second = integrate(lam, larger, 60.0, dense=True)
            end = min(first.t[-1], second.t[-1])
            grid = np.linspace(0.05, end, 200)[:-1]
            U1, V1, W1 = first.sol(grid)
            U2, V2, W2 = second.sol(grid)
            self.assertTrue(np.all(U2 < U1))
            self.assertTrue(np.all(V2 > V1))
            self.assertTrue(np.all(W2 > W1))


class ShootingTestCase(unittest.TestCase):
    """Test the shooting for eps0 and the reconstructed solution"""

    @classmethod
    def setUpClass(cls):
        cls.solution = ode_solution(1.0)

    def test_no_solution(self):
        """lambda >= 4 has no saddle orbit"""
        for lam in (4.0, 4.5, 5.0):
            with self.assertRaises(NoSolutionError):
                find_epsilon0(lam)
            result = solve_ode(lam)
            self.assertIsInstance(result, NoSolution)
            self.assertEqual(result.lam, lam)
        with self.assertRaises(NoSolutionError):
            reconstruct_solution(4.0, 0.5)

    def test_invalid_lambda(self):
        """Non-positive lambda is a parameter error"""
        with self.assertRaises(ParameterError):
            find_epsilon0(0.0)
        with self.assertRaises(ParameterError):
            solve_ode(-1.0)

    def test_bracket(self):
        """eps0 separates the two basins"""
        eps0 = self.solution.epsilon0
        self.assertTrue(0 < eps0 < 1)
        self.assertLess(self.solution.diagnostics.bisection_width, 1e-12)
        self.assertEqual(integrate_classify(1.0, eps0 - 1e-9, 200.0).kind,
                         BasinKind.ESCAPED_U)
        self.assertEqual(integrate_classify(1.0, eps0 + 1e-9, 200.0).kind,
                         BasinKind.ESCAPED_V)

    def test_tolerance_refinement(self):
        """Tightening rtol from 1e-10 to 1e-13 moves eps0 by less than 1e-8"""
        loose = find_epsilon0(1.0, rtol=1e-10)
        tight = find_epsilon0(1.0, rtol=1e-13)
        self.assertAlmostEqual(loose.epsilon0, tight.epsilon0, delta=1e-8)
        self.assertAlmostEqual(tight.epsilon0, self.solution.epsilon0,
                               delta=1e-8)

    def test_initial_values(self):
        """F(0) = G(0) = eps0 / 2"""
        solution = self.solution
        self.assertIsInstance(solution, OdeSolution)
        self.assertEqual(solution.x[0], 0.0)
        self.assertAlmostEqual(solution.F[0], solution.epsilon0 / 2,
                               delta=1e-15)
        self.assertAlmostEqual(solution.G[0], solution.epsilon0 / 2,
                               delta=1e-15)
        self.assertAlmostEqual(solution.V[0], 2 * solution.F[0], delta=1e-12)

    def test_conservation(self):
        """F W + G V - V W vanishes along the orbit"""
        s = self.solution
        residual = s.F * s.W + s.G * s.V - s.V * s.W
        self.assertLessEqual(np.abs(residual).max(), 1e-12)

    def test_approach_to_saddle(self):
        """W falls, V and F rise, G falls and the saddle gets closer"""
        s = self.solution
        self.assertTrue(np.all(np.diff(s.W) < 0))
        self.assertTrue(np.all(np.diff(s.V) >= 0))
        self.assertTrue(np.all(np.diff(s.F) >= 0))
        self.assertTrue(np.all(np.diff(s.G) <= 0))
        distance = np.max(np.abs([1 - s.U, 1 - s.V, s.W]), axis=0)
        self.assertLess(distance[-1], distance[int(0.9 * distance.size)])
        self.assertLess(s.diagnostics.saddle_distance, 0.05)
        self.assertEqual(s.x_T, s.diagnostics.x_T)
        self.assertGreater(s.x_T, 5.0)

    def test_trajectory_points(self):
        """The trajectory view lists the grid points"""
        points = self.solution.trajectory
        self.assertEqual(len(points), self.solution.x.size)
        self.assertEqual(points[0].x, 0.0)
        self.assertEqual(points[0].U, 0.5)
        self.assertAlmostEqual(points[-1].saddle_distance,
                               self.solution.diagnostics.saddle_distance)

    def test_profile(self):
        """The full-line profile is symmetric and a distribution function"""
        s = self.solution
        x = np.linspace(-30.0, 30.0, 601)
        F, G, V, W = s.profile(x)
        F_reflected, G_reflected, V_reflected, W_reflected = s.profile(-x)
        self.assertTrue(np.allclose(F, G_reflected, rtol=0, atol=1e-15))
        self.assertTrue(np.allclose(V, W_reflected, rtol=0, atol=1e-15))
        self.assertTrue(np.all(np.diff(F) >= 0))
        self.assertLess(s.cdf_x(-60.0)[0], 1e-6)
        self.assertGreater(s.cdf_x(60.0)[0], 1 - 1e-6)
        cdf_y = s.cdf_y(x)
        self.assertTrue(np.all((cdf_y >= 0) & (cdf_y <= 1)))
        self.assertLess(s.cdf_y(-60.0)[0], 1e-6)
        self.assertGreater(s.cdf_y(60.0)[0], 1 - 1e-6)

    def test_density_asymmetry(self):
        """f_X(x) >= f_X(-x) for x > 0 since V = W e^{lam x}"""
        for lam in (0.5, 1.0, 2.0):
            x = np.linspace(0.01, 20.0, 400)
            F, G, V, _ = ode_solution(lam).profile(x)
            F_mirror, G_mirror, V_mirror, _ = ode_solution(lam).profile(-x)
            density = (1 - F) * (1 - G) * V
            mirrored = (1 - F_mirror) * (1 - G_mirror) * V_mirror
            self.assertTrue(np.all(density >= mirrored))

    def test_exponential_tail(self):
        """P[X > x] <= exp(-x P[Y > 0])"""
        for lam in (0.5, 1.0, 2.0):
            s = ode_solution(lam)
            x = np.linspace(0.0, 30.0, 301)
            rate = 1 - s.cdf_y(0.0)[0]
            self.assertGreater(rate, 0)
            bound = np.exp(-x * rate)
            self.assertTrue(np.all(1 - s.cdf_x(x) <= bound + 1e-9))

    def test_small_lambda_orbit(self):
        """At lambda=0.05 the orbit ends near U = V = 1 with W still large"""
        s = solve_ode(0.05)
        self.assertIsInstance(s, OdeSolution)
        self.assertLess(s.diagnostics.uv_distance, 0.05)
        self.assertGreater(s.W[-1], 0.05)
        self.assertEqual(s.diagnostics.saddle_distance, s.W[-1])
        self.assertTrue(0 < s.alpha < 0.1)
        self.assertAlmostEqual(s.alpha, s.diagnostics.alpha_nested,
                               delta=1e-3)
        self.assertAlmostEqual(s.beta / (math.pi ** 2 / 6), 1.0, delta=0.15)

    def test_near_threshold(self):
        """Near lambda=4 alpha stays below 1 and 1 - alpha is kept"""
        s = solve_ode(3.99)
        self.assertIsInstance(s, OdeSolution)
        self.assertLess(s.alpha, 1.0)
        self.assertGreater(s.diagnostics.one_minus_alpha, 0.0)
        self.assertLess(s.diagnostics.one_minus_alpha, 1e-3)
        reference = ode_solution(1.0)
        self.assertEqual(reference.alpha,
                         1 - reference.diagnostics.one_minus_alpha)

    @long_test
    def test_tiny_lambda_orbit(self):
        """At lambda=0.02 the orbit is accepted and beta is near zeta(2)"""
        s = solve_ode(0.02)
        self.assertIsInstance(s, OdeSolution)
        self.assertTrue(0 < s.alpha < 0.05)
        self.assertAlmostEqual(s.beta / (math.pi ** 2 / 6), 1.0, delta=0.1)


class OverlapWeightTestCase(unittest.TestCase):
    """Test alpha and beta integrated from the orbit"""

    def test_alpha_range(self):
        """0 < alpha < 1 and alpha grows with lambda"""
        values = [ode_solution(lam).alpha for lam in (0.25, 1.0, 2.0, 3.5)]
        for value in values:
            self.assertTrue(0 < value < 1)
        self.assertEqual(values, sorted(values))
        self.assertLess(values[0], values[2])

    def test_alpha_quadrature(self):
        """Halving the quadrature tolerance moves alpha by less than 1e-6"""
        solution = ode_solution(1.0)
        copy = dataclasses.replace(
            solution, diagnostics=dataclasses.replace(solution.diagnostics))
        first = compute_alpha(copy, 1e-10)
        second = compute_alpha(copy, 5e-11)
        self.assertAlmostEqual(first, second, delta=1e-6)
        self.assertAlmostEqual(first, solution.alpha, delta=1e-6)
        self.assertFalse(solution.diagnostics.tail_warning)

    def test_alpha_cross_check(self):
        """alpha equals P[eta < X + X'] integrated on the grid"""
        for lam in (1.0, 2.0):
            solution = ode_solution(lam)
            self.assertAlmostEqual(solution.alpha,
                                   solution.diagnostics.alpha_nested,
                                   delta=1e-3)

    def test_weight_components(self):
        """beta_p and beta_u are non-negative and add up to beta"""
        for lam in (0.25, 1.0, 2.0, 3.5):
            solution = ode_solution(lam)
            self.assertGreaterEqual(solution.beta_p, 0)
            self.assertGreaterEqual(solution.beta_u, 0)
            self.assertEqual(solution.beta,
                             solution.beta_p + solution.beta_u)

    def test_weight_small_lambda(self):
        """For small lambda the weight approaches zeta(2)"""
        solution = ode_solution(0.1)
        self.assertAlmostEqual(solution.beta / (math.pi ** 2 / 6), 1.0,
                               delta=0.15)

    @long_test
    def test_simulation_agreement(self):
        """Simulated overlap and weight at n=2000 agree with the limit"""
        for lam in (0.5, 1.0, 2.0, 3.0):
            solution = ode_solution(lam)
            records = run_simulation(2000, lam, 200, seed=21, threads=4)
            alpha, alpha_err = summarize(records, 'overlap')
            beta, beta_err = summarize(records, 'weight_per_n')
            self.assertAlmostEqual(alpha, solution.alpha,
                                   delta=3 * alpha_err + 0.01)
            self.assertAlmostEqual(beta, solution.beta,
                                   delta=3 * beta_err + 0.01)

    @long_test
    def test_simulation_small_lambda(self):
        """At lambda=0.1 the simulated weight matches the limit"""
        solution = ode_solution(0.1)
        records = run_simulation(1000, 0.1, 20, seed=22, threads=4)
        beta, beta_err = summarize(records, 'weight_per_n')
        self.assertAlmostEqual(beta, solution.beta, delta=3 * beta_err + 0.01)
