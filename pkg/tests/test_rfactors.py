# vim: set expandtab sw=4 softtabstop=4 fileencoding=utf8 :

import unittest

import numpy as np
import numpy.testing as npt

from pyegnet.implicit import LayerHistory, WeightHistory
from pyegnet.network import Architecture, NetworkParameters, classical_backprop, classical_feedforward, sgd_update
from pyegnet.stats import RunStatistics
from pyegnet.telemetry.rfactors import *


def trained_history(sizes=(4, 5, 3), T=5, M=3, seed=0):
    rng = np.random.default_rng(seed)
    arch = Architecture(list(sizes))
    history = WeightHistory.low_rank_init(arch, 2, M, rng)
    params = NetworkParameters(arch, history.initial_weights(), [np.zeros(n) for n in sizes[1:]])
    for t in range(1, T + 1):
        A1 = rng.normal(size=(M, sizes[0]))
        Y = rng.uniform(-0.5, 0.5, size=(M, sizes[-1]))
        z, a = classical_feedforward(params, A1)
        delta = classical_backprop(params, z, a, Y)
        for l in range(2, arch.L + 1):
            history.record_iteration(t, l, 0.1, a[l - 2], delta[l - 1])
        params = sgd_update(params, [(a, delta)], 0.1)
    z, a = classical_feedforward(params, rng.normal(size=(M, sizes[0])))
    delta = classical_backprop(params, z, a, rng.uniform(-0.5, 0.5, size=(M, sizes[-1])))
    return arch, history, params, a, delta


class RFactorTest(unittest.TestCase):
    def testZeroHistory(self):
        arch = Architecture([3, 4, 2])
        params = NetworkParameters.standard(arch, np.random.default_rng(0))
        history = WeightHistory.from_parameters(params, 2)
        z, a = classical_feedforward(params, np.ones((2, 3)))
        delta = classical_backprop(params, z, a, np.zeros((2, 2)))

        ra, ra_cl = r_a(history, params.weights, a, arch)
        rd, rd_cl = r_delta(history, params.weights, delta, arch)
        npt.assert_array_equal(ra, [0.0, 0.0])
        npt.assert_array_equal(rd_cl, [0.0, 0.0])
        self.assertEqual(r_w(history, params.weights, arch), (0.0, 0.0))

    def testClassicalDominatesSquare(self):
        arch, history, params, a, delta = trained_history()
        for r, r_cl in (r_a(history, params.weights, a, arch),
                        r_delta(history, params.weights, delta, arch),
                        r_e(params, a)):
            self.assertEqual(r.shape, (3,))
            self.assertTrue(np.all(r > 0))
            self.assertTrue(np.all(r_cl >= r * r * (1 - 1e-12)))

    def testHandComputed(self):
        # one weight, one input: R_e = |w| |a| / max{1, |w a|} / (N - n_1)
        arch = Architecture([1, 1])
        params = NetworkParameters(arch, [np.array([[0.5]])], [np.zeros(1)])
        re, re_cl = r_e(params, [np.array([[4.0]]), None])
        npt.assert_allclose(re, [2.0 / 2.0])
        npt.assert_allclose(re_cl, re * re)

        re, _ = r_e(params, [np.array([[1.0]]), None])
        npt.assert_allclose(re, [0.5])

    def testSingleTermIsSquare(self):
        arch = Architecture([2, 1])
        params = NetworkParameters(arch, [np.array([[3.0, -1.0]])], [np.zeros(1)])
        re, re_cl = r_e(params, [np.array([[0.2, 0.7], [1.0, 1.0]]), None])
        npt.assert_allclose(re_cl, re * re)

    def testRwMatchesDefinition(self):
        arch, history, params, _, _ = trained_history()
        rwr, rwc = r_w(history, params.weights, arch)
        expected_r = 0.0
        expected_c = 0.0
        for l in (2, 3):
            W = params.W(l)
            expected_r += (history.x_frobenius(l) / np.linalg.norm(W, axis=1)).sum()
            expected_c += (history.xt_frobenius(l) / np.linalg.norm(W, axis=0)).sum()
        self.assertAlmostEqual(rwr, expected_r / (3 * 8))
        self.assertAlmostEqual(rwc, expected_c / (3 * 9))

    def testRankOneRa(self):
        # W^2 = [[3, 4], [6, 8]] from one update, so the row norms of X are 5 and 10
        history = WeightHistory(Architecture([2, 2]), 1)
        history.layers[2] = LayerHistory(2, 2, 2, 1, 'full')
        history.layers[2].append(-1.0, np.array([[3.0, 4.0]]), np.array([[1.0, 2.0]]))
        npt.assert_allclose(history.x_frobenius(2), [5.0, 10.0])

        W = np.array([[3.0, 4.0], [6.0, 8.0]])
        a = [np.array([[1.0, 0.0], [0.1, 0.0]]), None]
        ra, ra_cl = r_a(history, [W], a, history.arch)
        npt.assert_allclose(ra, [5.0 / 3.0, 0.75])
        npt.assert_allclose(ra_cl, [25.0 / 9.0, 0.625])

    def testRdeltaUsesColumnCount(self):
        # four terms of 0.5 over N - n_L = 4 weight columns
        history = WeightHistory(Architecture([3, 1, 1]), 1)
        history.layers[2] = LayerHistory(2, 1, 3, 1, 'full')
        history.layers[2].append(-1.0, np.ones((1, 3)), np.ones((1, 1)))
        history.layers[3] = LayerHistory(3, 1, 1, 1, 'full')
        history.layers[3].append(-1.0, np.ones((1, 1)), np.ones((1, 1)))

        weights = [np.ones((1, 3)), np.ones((1, 1))]
        delta = [None, np.array([[0.5]]), np.array([[0.5]])]
        rd, rd_cl = r_delta(history, weights, delta, history.arch)
        npt.assert_allclose(rd, [0.5])
        npt.assert_allclose(rd_cl, [0.25])

    def testRwSkipsZeroRows(self):
        arch, history, params, _, _ = trained_history()
        weights = [w.copy() for w in params.weights]
        weights[0][1] = 0.0
        stats = RunStatistics()
        with self.assertLogs('pyegnet.telemetry.rfactors', level='WARNING'):
            rwr, _ = r_w(history, weights, arch, stats)
        self.assertTrue(np.isfinite(rwr))
        self.assertEqual(stats.get('rfactor.skipped_zero_norm'), 1)

    def testClassicalFactors(self):
        arch, history, params, a, delta = trained_history()
        ra_cl, rd_cl, re_cl = classical_r_factors(history, params.weights, a, delta, params, arch)
        npt.assert_array_equal(ra_cl, r_a(history, params.weights, a, arch)[1])
        npt.assert_array_equal(re_cl, r_e(params, a)[1])


class RFactorSeriesTest(unittest.TestCase):
    def testAverages(self):
        series = RFactorSeries()
        series.append(1, 1.0, 2.0, 0.5, 0.25, 1.0, 4.0)
        series.append(2, 3.0, 4.0, 1.5, 0.75, 9.0, 16.0, full_batch=True)
        series.append_evaluation(2.0, 4.0)
        avg = series.averages()
        self.assertEqual(avg['R_a'], 2.0)
        self.assertEqual(avg['R_delta'], 3.0)
        self.assertEqual(avg['R_W'], 1.5)
        self.assertEqual(avg['R_a_cl'], 5.0)
        self.assertEqual(avg['R_e'], 2.0)
        self.assertEqual(avg['R_e_cl'], 4.0)
        self.assertEqual(len(series), 2)
        npt.assert_array_equal(series.column('t'), [1, 2])

    def testEmpty(self):
        self.assertEqual(RFactorSeries().averages(), {})

    def testNonFiniteWarns(self):
        series = RFactorSeries()
        with self.assertLogs('pyegnet.telemetry.rfactors', level='WARNING'):
            series.append(1, float('nan'), 0.0, 0.0, 0.0, 0.0, 0.0)
        self.assertEqual(len(series), 1)

    def testStabilization(self):
        series = RFactorSeries()
        for t in range(1, 11):
            series.append(t, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0)
        self.assertEqual(series.stabilization('R_W_r'), 0.0)
        self.assertEqual(series.stabilization('R_W_c'), 0.0)


if __name__ == '__main__':
    unittest.main()
