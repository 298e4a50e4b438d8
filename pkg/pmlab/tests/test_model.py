# SPDX-FileCopyrightText: 2024 The pmlab Authors
#
# SPDX-License-Identifier: BSD-3-Clause

import os
import tempfile
import unittest

import numpy as np
from scipy import stats

from ..exceptions import ParameterError
from ..model import generate, load_instance, planted_weight, save_instance


class ModelTestCase(unittest.TestCase):
    """Test the planted instance generator"""

    def test_single_edge(self):
        """A 1x1 instance holds one positive planted weight"""
        instance = generate(1, 2.0, 5)
        self.assertEqual(instance.weights.shape, (1, 1))
        self.assertGreater(instance.weights[0, 0], 0)
        self.assertEqual(planted_weight(instance), instance.weights[0, 0])

    def test_determinism(self):
        """Equal (n, lambda, seed) give identical matrices"""
        first = generate(40, 1.5, 123)
        second = generate(40, 1.5, 123)
        self.assertEqual(first.weights.tobytes(), second.weights.tobytes())
        other = generate(40, 1.5, 124)
        self.assertFalse(np.array_equal(first.weights, other.weights))

    def test_block_boundaries(self):
        """Instances spanning several generation blocks stay deterministic"""
        first = generate(1100, 1.0, 9)
        second = generate(1100, 1.0, 9)
        self.assertTrue(np.array_equal(first.weights, second.weights))
        self.assertTrue(np.all(first.weights > 0))
        self.assertTrue(np.all(np.isfinite(first.weights)))

    def test_means(self):
        """Diagonal mean 1/lambda, off-diagonal mean n"""
        n = 1000
        instance = generate(n, 1.0, 2024)
        diagonal = np.diag(instance.weights)
        off = instance.weights[~np.eye(n, dtype=bool)]
        self.assertAlmostEqual(diagonal.mean(), 1.0, delta=0.1)
        self.assertAlmostEqual(off.mean() / n, 1.0, delta=0.05)
        stderr = 1 / np.sqrt(off.size)
        self.assertLess(abs(off.mean() / n - 1), 4 * stderr)

    def test_planted_distribution(self):
        """Diagonal weights pass a KS test against exp(lambda)"""
        lam = 2.5
        samples = np.concatenate(
            [np.diag(generate(100, lam, seed).weights) for seed in range(100)])
        result = stats.kstest(samples, lambda x: 1 - np.exp(-lam * x))
        self.assertGreater(result.pvalue, 1e-3)

    def test_weights_read_only(self):
        """Instances are immutable after construction"""
        instance = generate(3, 1.0, 1)
        with self.assertRaises(ValueError):
            instance.weights[0, 0] = 1.0

    def test_invalid_parameters(self):
        """Invalid n, lambda or seed raise a parameter error"""
        with self.assertRaises(ParameterError):
            generate(0, 1.0, 1)
        with self.assertRaises(ParameterError):
            generate(3, 0.0, 1)
        with self.assertRaises(ParameterError):
            generate(3, -1.0, 1)
        with self.assertRaises(ParameterError):
            generate(3, 1.0, -1)
        with self.assertRaises(ParameterError):
            generate(2 ** 16 + 1, 1.0, 1)

    def test_file_format(self):
        """Instances are stored as a header and rows of 17 digit weights"""
        instance = generate(3, 2.0, 7)
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'instance.csv')
            save_instance(instance, path)
            with open(path, 'rb') as file:
                content = file.read()
            loaded = load_instance(path)
        lines = content.decode('UTF-8').split('\n')
        self.assertEqual(lines[0], '3,2.0,7')
        self.assertEqual(len(lines[1].split(',')), 3)
        self.assertNotIn(b'\r', content)
        self.assertTrue(np.array_equal(loaded.weights, instance.weights))
        self.assertEqual((loaded.n, loaded.lam, loaded.seed), (3, 2.0, 7))

    def test_malformed_file(self):
        """A truncated instance file is refused"""
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'bad.csv')
            with open(path, 'w') as file:
                file.write('3,1.0,1\n1,2,3\n')
            with self.assertRaises(ParameterError):
                load_instance(path)
