# vim: set expandtab sw=4 softtabstop=4 fileencoding=utf8 :

import math
import unittest

import numpy as np
import numpy.testing as npt

from pyegnet.estimators.dequantized import implicit_raw_samples
from pyegnet.exception import HistoryError, ShapeError
from pyegnet.implicit import *
from pyegnet.network import (Architecture, NetworkParameters, classical_backprop, classical_feedforward,
                             sgd_update)
from pyegnet.stats import RunStatistics


def train_classically(history, params, T, eta, seed=0, check=None):
    """Plain SGD on random data, recording every iteration into history; check(t, params) follows each update"""
    rng = np.random.default_rng(seed)
    arch = params.arch
    for t in range(1, T + 1):
        A1 = rng.normal(size=(history.M, arch.n(1)))
        Y = rng.uniform(-0.5, 0.5, size=(history.M, arch.n(arch.L)))
        z, a = classical_feedforward(params, A1)
        delta = classical_backprop(params, z, a, Y)
        for l in range(2, arch.L + 1):
            history.record_iteration(t, l, eta, a[l - 2], delta[l - 1])
        params = sgd_update(params, [(a, delta)], eta)
        if check is not None:
            check(t, params)
    return params


class HelperTest(unittest.TestCase):
    def testDefaultRank(self):
        self.assertEqual(default_rank(1), 1)
        self.assertEqual(default_rank(2), 1)
        self.assertEqual(default_rank(8), 3)
        self.assertEqual(default_rank(100), 7)

    def testChooseMode(self):
        self.assertEqual(choose_history_mode('full', 10 ** 6, 100, 1000), MODE_FULL)
        self.assertEqual(choose_history_mode('norms', 1, 1, 1), MODE_NORMS)
        self.assertEqual(choose_history_mode('auto', 100, 10, 17), MODE_FULL)
        self.assertEqual(choose_history_mode('auto', 60000, 100, 924), MODE_NORMS)
        self.assertRaises(HistoryError, choose_history_mode, 'partial', 1, 1, 1)

    def testNormEstimationCost(self):
        self.assertEqual(norm_estimation_cost(3.0, 0.0, 4, 2, 0.1), 0.0)
        self.assertAlmostEqual(norm_estimation_cost(3.0, 1.5, 4, 2, 0.1), 2.0 * math.sqrt(8) / 0.1)


class LowRankInitTest(unittest.TestCase):
    def testRank(self):
        arch = Architecture([6, 8, 5, 3])
        history = WeightHistory.low_rank_init(arch, 2, 4, np.random.default_rng(0))
        self.assertEqual(history.num_rows, 1)
        self.assertEqual(history.rank, 2)
        for l, W in zip(range(2, 5), history.initial_weights()):
            self.assertEqual(W.shape, (arch.n(l), arch.n(l - 1)))
            self.assertEqual(np.linalg.matrix_rank(W), 2)
            h = history.layer(l)
            self.assertEqual(np.count_nonzero(h.a_norms[0]), 2)
            self.assertEqual(h.etas, [-1.0])

    def testVariance(self):
        arch = Architecture([1000, 1000])
        history = WeightHistory.low_rank_init(arch, 10, 10, np.random.default_rng(1))
        W = history.initial_weights()[0]
        self.assertAlmostEqual(W.var() * 1000, 1.0, delta=0.1)
        self.assertAlmostEqual(W.mean(), 0.0, delta=0.01)

    def testInvalidRank(self):
        arch = Architecture([3, 2])
        self.assertRaises(HistoryError, WeightHistory.low_rank_init, arch, 5, 4, np.random.default_rng(0))
        self.assertRaises(HistoryError, WeightHistory.low_rank_init, arch, 0, 4, np.random.default_rng(0))

    def testStreamReplay(self):
        arch = Architecture([4, 5, 3])
        full = WeightHistory.low_rank_init(arch, 2, 3, np.random.default_rng(7))
        norms = WeightHistory.low_rank_init(arch, 2, 3, np.random.default_rng(7), MODE_NORMS)
        npt.assert_array_equal(full.x_frobenius(2), norms.x_frobenius(2))
        npt.assert_array_equal(full.xt_frobenius(3), norms.xt_frobenius(3))


class ReconstructionTest(unittest.TestCase):
    def testLowRankMatchesShadowWeights(self):
        arch = Architecture([6, 8, 5, 3])
        history = WeightHistory.low_rank_init(arch, 2, 4, np.random.default_rng(2))
        params = NetworkParameters(arch, history.initial_weights(), [np.zeros(arch.n(l)) for l in range(2, 5)])
        T = 25
        params = train_classically(history, params, T, 0.1, seed=3)
        self.assertEqual(history.num_rows, T + 1)
        for l in range(2, 5):
            W = history.weight_matrix(T + 1, l)
            npt.assert_allclose(W, params.W(l), atol=1e-10)
            npt.assert_allclose(history.weight_row(T + 1, l, 1), params.W(l)[1], atol=1e-10)
            npt.assert_allclose(history.weight_col(T + 1, l, 0), params.W(l)[:, 0], atol=1e-10)

    def testLongRunEveryTenth(self):
        arch = Architecture([6, 8, 5, 3])
        history = WeightHistory.low_rank_init(arch, 2, 4, np.random.default_rng(12))
        params = NetworkParameters(arch, history.initial_weights(), [np.zeros(arch.n(l)) for l in range(2, 5)])
        checked = []

        def check(t, current):
            if t % 10:
                return
            for l in range(2, 5):
                W = current.W(l)
                npt.assert_allclose(history.weight_matrix(t + 1, l), W, rtol=0,
                                    atol=1e-6 * max(1.0, np.abs(W).max()))
            checked.append(t)

        train_classically(history, params, 200, 0.05, seed=13, check=check)
        self.assertEqual(checked, list(range(10, 201, 10)))
        self.assertEqual(history.num_rows, 201)

    def testStandardBase(self):
        arch = Architecture([4, 6, 2])
        params = NetworkParameters.standard(arch, np.random.default_rng(4))
        history = WeightHistory.from_parameters(params, 3)
        npt.assert_array_equal(history.weight_matrix(1, 2), params.W(2))
        npt.assert_array_equal(history.x_frobenius(2), np.zeros(6))

        trained = train_classically(history, params, 10, 0.05, seed=5)
        for l in (2, 3):
            npt.assert_allclose(history.weight_matrix(11, l), trained.W(l), atol=1e-10)

    def testIntermediateIterations(self):
        arch = Architecture([3, 4, 2])
        history = WeightHistory.low_rank_init(arch, 1, 2, np.random.default_rng(6))
        params = NetworkParameters(arch, history.initial_weights(), [np.zeros(4), np.zeros(2)])
        after5 = train_classically(history, params.copy(), 5, 0.2, seed=8)
        after2 = train_classically(WeightHistory.low_rank_init(arch, 1, 2, np.random.default_rng(6)),
                                   params.copy(), 2, 0.2, seed=8)
        npt.assert_allclose(history.weight_matrix(6, 3), after5.W(3), atol=1e-10)
        npt.assert_allclose(history.weight_matrix(3, 3), after2.W(3), atol=1e-10)
        npt.assert_allclose(history.weight_matrix(1, 3), params.W(3), atol=1e-12)
        self.assertRaises(HistoryError, history.weight_matrix, 7, 3)


class RecordTest(unittest.TestCase):
    def setUp(self):
        self.arch = Architecture([3, 4, 2])
        self.history = WeightHistory.low_rank_init(self.arch, 1, 2, np.random.default_rng(0))

    def testDuplicateAndGap(self):
        A = np.ones((2, 3))
        D = np.ones((2, 4))
        self.history.record_iteration(1, 2, 0.1, A, D)
        self.assertRaises(HistoryError, self.history.record_iteration, 1, 2, 0.1, A, D)
        self.assertRaises(HistoryError, self.history.record_iteration, 3, 2, 0.1, A, D)
        self.assertRaises(HistoryError, self.history.record_iteration, 1, 5, 0.1, A, D)

    def testShape(self):
        self.assertRaises(ShapeError, self.history.record_iteration, 1, 2, 0.1, np.ones((2, 4)), np.ones((2, 4)))
        self.assertRaises(ShapeError, self.history.record_iteration, 1, 3, 0.1, np.ones((3, 4)), np.ones((3, 2)))

    def testNumRowsIsMinimum(self):
        self.history.record_iteration(1, 2, 0.1, np.ones((2, 3)), np.ones((2, 4)))
        self.assertEqual(self.history.layer(2).num_rows, 2)
        self.assertEqual(self.history.num_rows, 1)

    def testUnknownMode(self):
        self.assertRaises(HistoryError, WeightHistory, self.arch, 2, 'sparse')


class NormsModeTest(unittest.TestCase):
    def testFrobeniusWithoutVectors(self):
        arch = Architecture([5, 4, 3])
        full = WeightHistory.low_rank_init(arch, 2, 3, np.random.default_rng(9))
        norms = WeightHistory.low_rank_init(arch, 2, 3, np.random.default_rng(9), MODE_NORMS)
        params = NetworkParameters(arch, full.initial_weights(), [np.zeros(4), np.zeros(3)])
        train_classically(full, params.copy(), 6, 0.1, seed=10)
        train_classically(norms, params.copy(), 6, 0.1, seed=10)

        for l in (2, 3):
            npt.assert_allclose(norms.x_frobenius(l), full.x_frobenius(l), rtol=1e-12)
            npt.assert_allclose(norms.xt_frobenius(l), full.xt_frobenius(l), rtol=1e-12)
            for j in range(arch.n(l)):
                self.assertAlmostEqual(full.layer(l).x_matrix(j).frobenius_norm(), full.x_frobenius(l)[j])

        self.assertRaises(HistoryError, norms.weight_row, 3, 2, 0)
        self.assertRaises(HistoryError, norms.weight_matrix, 3, 2)
        self.assertRaises(HistoryError, norms.implicit_row(2), 0)


class ImplicitAccessTest(unittest.TestCase):
    def testRowSampling(self):
        arch = Architecture([4, 3, 2])
        history = WeightHistory.low_rank_init(arch, 2, 3, np.random.default_rng(11))
        params = NetworkParameters(arch, history.initial_weights(), [np.zeros(3), np.zeros(2)])
        train_classically(history, params, 4, 0.3, seed=12)

        current = np.array([0.5, -1.0, 0.25, 2.0])
        X, a_tree = history.implicit_row(2)(1)
        self.assertEqual(X.shape, (5, 3))
        n = 300000
        z = implicit_raw_samples(X, a_tree, current, np.random.default_rng(13), n)
        exact = float(np.dot(history.weight_row(5, 2, 1), current))
        self.assertAlmostEqual(z.mean(), exact, delta=5 * z.std() / math.sqrt(n))

    def testColumnSampling(self):
        arch = Architecture([4, 3, 2])
        history = WeightHistory.low_rank_init(arch, 2, 3, np.random.default_rng(14))
        params = NetworkParameters(arch, history.initial_weights(), [np.zeros(3), np.zeros(2)])
        train_classically(history, params, 3, 0.3, seed=15)

        current = np.array([1.0, -2.0])
        X, d_tree = history.implicit_col(3)(2)
        n = 300000
        z = implicit_raw_samples(X, d_tree, current, np.random.default_rng(16), n)
        exact = float(np.dot(history.weight_col(4, 3, 2), current))
        self.assertAlmostEqual(z.mean(), exact, delta=5 * z.std() / math.sqrt(n))


class NormEstimateTest(unittest.TestCase):
    def testWithinXi(self):
        arch = Architecture([5, 6, 3])
        history = WeightHistory.low_rank_init(arch, 2, 3, np.random.default_rng(17))
        W = history.weight_matrix(1, 2)
        stats = RunStatistics()
        rows, cols = history.estimate_norms(1, 2, W, 0.1, np.random.default_rng(18), stats)
        true_rows = np.linalg.norm(W, axis=1)
        true_cols = np.linalg.norm(W, axis=0)
        self.assertTrue(np.all(np.abs(rows - true_rows) <= 0.1 * true_rows + 1e-12))
        self.assertTrue(np.all(np.abs(cols - true_cols) <= 0.1 * true_cols + 1e-12))
        self.assertGreater(stats.get('cost.norm_estimation'), 0)

    def testExactWithoutBudget(self):
        arch = Architecture([3, 2])
        history = WeightHistory.low_rank_init(arch, 1, 1, np.random.default_rng(19))
        W = history.weight_matrix(1, 2)
        rows, cols = history.estimate_norms(1, 2, W, 0.0, np.random.default_rng(0))
        npt.assert_array_equal(rows, np.linalg.norm(W, axis=1))
        npt.assert_array_equal(cols, np.linalg.norm(W, axis=0))

    def testSingleNorms(self):
        arch = Architecture([3, 2])
        history = WeightHistory.low_rank_init(arch, 1, 2, np.random.default_rng(20))
        stats = RunStatistics()
        est = history.estimate_row_norm(1, 2, 0, 0.05, np.random.default_rng(1), stats, stale_at=2)
        true = float(np.linalg.norm(history.weight_row(1, 2, 0)))
        self.assertEqual(est.true_value, true)
        self.assertLessEqual(abs(est.value - true), 0.05 * true)
        self.assertEqual(est.stale_at, 2)

        zero = WeightHistory.from_parameters(NetworkParameters.zeros(arch), 2)
        est = zero.estimate_col_norm(1, 2, 1, 0.05, np.random.default_rng(1), stats)
        self.assertTrue(est.zero)
        self.assertEqual(stats.get('norms.zero_rows'), 1)


if __name__ == '__main__':
    unittest.main()
