# vim: set expandtab sw=4 softtabstop=4 fileencoding=utf8 :

import math
import unittest

import numpy as np
import numpy.testing as npt

from pyegnet.estimators import EstimatorFactory
from pyegnet.estimators.base import EpsGamma, EstimatorSpec, WeightOperand
from pyegnet.estimators.ripe import *
from pyegnet.exception import DomainError, EstimatorError
from pyegnet.experiment import DEMO_PAIR

FEJER_BOUND = 8.0 / math.pi ** 2


def inside_fraction(samples, ip, epsilon):
    return float(np.mean(np.abs(samples - ip) <= epsilon * max(1.0, abs(ip))))


class GridTest(unittest.TestCase):
    def testGridSize(self):
        for eps_a in (0.5, 0.2, 0.09192, 0.01, 0.001):
            M = ripe_grid_size(eps_a)
            self.assertLessEqual(math.pi / M + math.pi ** 2 / M ** 2, eps_a * (1 + 1e-12))
            if M > 2:
                self.assertGreater(math.pi / (M - 1) + math.pi ** 2 / (M - 1) ** 2, eps_a)

    def testDemoPairGrid(self):
        x, y = DEMO_PAIR
        params = RipeParams.for_pair(float(np.dot(x, x) + np.dot(y, y)), float(np.dot(x, y)),
                                     0.3 * float(np.dot(x, y)), 0.05)
        self.assertEqual(params.M, 38)
        self.assertEqual(params.Q, 17)
        self.assertAlmostEqual(params.a, 0.1936, delta=0.001)

    def testMedianCount(self):
        self.assertEqual(ripe_median_count(0.05), 17)
        self.assertEqual(ripe_median_count(0.5) % 2, 1)
        self.assertGreater(ripe_median_count(0.001), ripe_median_count(0.05))

    def testInvalid(self):
        self.assertRaises(EstimatorError, ripe_grid_size, 0.0)
        self.assertRaises(EstimatorError, ripe_outcome_distribution, 0.3, 1)


class OutcomeDistributionTest(unittest.TestCase):
    def testNormalized(self):
        for theta in (0.0, 0.1, 0.4575, 1.2, math.pi / 2):
            grid, probs = ripe_outcome_distribution(theta, 38)
            self.assertEqual(grid.shape, (38,))
            self.assertAlmostEqual(probs.sum(), 1.0)
            self.assertTrue(np.all(probs >= 0))

    def testOnGridPointMass(self):
        grid, probs = ripe_outcome_distribution(math.pi * 5 / 38, 38)
        self.assertAlmostEqual(probs[5], 1.0, places=9)
        self.assertAlmostEqual(grid[5], math.sin(math.pi * 5 / 38) ** 2)

    def testMassNearAmplitude(self):
        M = 38
        theta_a = math.asin(math.sqrt(0.1951))
        grid, probs = ripe_outcome_distribution(theta_a, M)
        j = np.arange(M)
        diff = j / M - theta_a / math.pi
        near = np.abs(diff - np.round(diff)) <= 1.0 / M
        self.assertGreaterEqual(probs[near].sum(), FEJER_BOUND - 1e-9)
        self.assertEqual(sorted(j[near]), [5, 6])

    def testMedianConcentrates(self):
        theta = math.asin(math.sqrt(0.3))
        rng = np.random.default_rng(0)
        single = sample_amplitudes(np.full(4000, theta), np.full(4000, 20), 1, rng)
        median = sample_amplitudes(np.full(4000, theta), np.full(4000, 20), 9, rng)
        eps_a = math.pi / 20 + math.pi ** 2 / 400
        self.assertGreater(np.mean(np.abs(median - 0.3) <= eps_a), np.mean(np.abs(single - 0.3) <= eps_a))


class RipeSampleTest(unittest.TestCase):
    def testDemoPairConcentration(self):
        x, y = (np.asarray(v) for v in DEMO_PAIR)
        ip = float(np.dot(x, y))
        tol = EpsGamma(0.3, 0.05)
        fractions = []
        for q, seed in ((1, 11), (3, 12), (5, 13)):
            s = ripe_samples(x, y, tol, np.random.default_rng(seed), 10000, q=q)
            fractions.append(inside_fraction(s, ip, 0.3))
        self.assertAlmostEqual(fractions[0], 0.86, delta=0.03)
        self.assertAlmostEqual(fractions[1], 0.97, delta=0.03)
        self.assertGreater(fractions[2], 0.96)
        self.assertLess(fractions[0], fractions[1])

    def testEqualVectors(self):
        # a = 0 lies on the grid: every draw returns |x|^2 exactly
        x = np.array([1.0, 2.0, 2.0])
        s = ripe_samples(x, x, EpsGamma(0.2, 0.05), np.random.default_rng(1), 200)
        npt.assert_allclose(s, 9.0)

    def testOppositeVectors(self):
        x = np.array([3.0, 4.0])
        s = ripe_samples(x, -x, EpsGamma(0.2, 0.05), np.random.default_rng(1), 500)
        self.assertTrue(np.all(s >= -25.0))
        self.assertGreaterEqual(inside_fraction(s, -25.0, 0.2), 0.99)

    def testContract(self):
        rng = np.random.default_rng(21)
        tol = EpsGamma(0.3, 0.05)
        violations = 0
        total = 0
        for _ in range(30):
            x = rng.normal(size=10)
            y = rng.normal(size=10)
            s = ripe_samples(x, y, tol, rng, 1000)
            violations += int(np.sum(np.abs(s - np.dot(x, y)) > tol.bound(np.dot(x, y))))
            total += s.size
        self.assertLessEqual(violations / total, 0.05)

    def testScalarSample(self):
        x, y = DEMO_PAIR
        ip = float(np.dot(x, y))
        tol = EpsGamma(0.3, 0.05)
        rng = np.random.default_rng(2)
        s = np.array([ripe_sample(x, y, tol, rng) for _ in range(200)])
        self.assertGreaterEqual(inside_fraction(s, ip, 0.3), 0.95)

    def testNoisyNorms(self):
        x, y = DEMO_PAIR
        ip = float(np.dot(x, y))
        tol = EpsGamma(0.3, 0.05)
        rng = np.random.default_rng(3)
        s = np.array([ripe_sample(x, y, tol, rng, noisy_norms=True) for _ in range(200)])
        self.assertGreaterEqual(inside_fraction(s, ip, 0.3), 0.95)
        self.assertFalse(np.all(s == s[0]))

    def testZeroEpsilon(self):
        self.assertEqual(ripe_sample([1.0, 2.0], [3.0, 4.0], EpsGamma(0.0, 0.05), np.random.default_rng(0)), 11.0)
        self.assertRaises(EstimatorError, ripe_samples, [1.0], [2.0], EpsGamma(0.0, 0.05),
                          np.random.default_rng(0), 10)

    def testZeroVector(self):
        tol = EpsGamma(0.3, 0.05)
        rng = np.random.default_rng(0)
        self.assertRaises(DomainError, ripe_sample, [0.0, 0.0], [1.0, 2.0], tol, rng)
        self.assertRaises(DomainError, ripe_samples, [1.0, 2.0], [0.0, 0.0], tol, rng, 5)


class RipeEstimatorTest(unittest.TestCase):
    def make(self, kind, epsilon=0.3, **kw):
        return EstimatorFactory().create(EstimatorSpec(kind, EpsGamma(epsilon, 0.05), **kw))

    def testBlockContract(self):
        rng = np.random.default_rng(4)
        W = rng.normal(size=(8, 12))
        Y = rng.normal(size=(200, 12))
        exact = Y @ W.T
        bound = 0.3 * np.maximum(1.0, np.abs(exact))
        for kind in ('ripe_exact_norms', 'ripe_noisy_norms'):
            out = self.make(kind).estimate_block(WeightOperand(W), Y, rng)
            self.assertEqual(out.shape, (200, 8))
            self.assertLessEqual(np.mean(np.abs(out - exact) > bound), 0.05)

    def testZeroRowsGiveZero(self):
        W = np.array([[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]])
        Y = np.array([[1.0, 1.0, 1.0], [0.0, 0.0, 0.0]])
        out = self.make('ripe_exact_norms').estimate_block(WeightOperand(W), Y, np.random.default_rng(0))
        self.assertEqual(out[0, 0], 0.0)
        npt.assert_array_equal(out[1], [0.0, 0.0])

    def testEstimatedNorms(self):
        # supplied norms replace the drawn perturbation of the weight norms
        W = np.array([[3.0, 4.0]])
        Y = np.array([[3.0, 4.0]])
        est = self.make('ripe_noisy_norms')
        out = est.estimate_block(WeightOperand(W, norms=[5.0]), Y, np.random.default_rng(0))
        self.assertAlmostEqual(out[0, 0], 25.0, delta=1e-9)

    def testSampleBudget(self):
        est = self.make('ripe_exact_norms', epsilon=0.001, max_samples=1000)
        self.assertRaises(EstimatorError, est.estimate_block, WeightOperand([[1.0, 1.0]]),
                          np.array([[1.0, -1.0]]), np.random.default_rng(0))

    def testQOverride(self):
        est = self.make('ripe_exact_norms', q=3)
        rng = np.random.default_rng(5)
        est.estimate_block(WeightOperand([[1.0, 2.0]]), np.array([[2.0, 0.5]]), rng)
        self.assertEqual(est.stats.get('samples.ripe_exact_norms'), 3)


if __name__ == '__main__':
    unittest.main()
