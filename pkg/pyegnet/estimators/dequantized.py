# vim: set expandtab sw=4 softtabstop=4 fileencoding=utf8 :
#
# This python package is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.
#
"""Quantum-inspired estimators built on l2 sampling.

Both estimators average an unbiased importance-sampled random variable Z
with median-of-means. The explicit one samples i ~ x_i^2/|x|^2 from an l2
tree over x and uses Z = y_i |x|^2 / x_i. The implicit one never forms the
weight row: it samples an entry (tau, mu) of the history matrix X ~ X^2/|X|_F^2,
then k ~ (a^{tau,mu}_k)^2 / |a^{tau,mu}|^2, and uses
    Z = a_k |a^{tau,mu}| / a^{tau,mu}_k * |X|_F^2 / X_{tau,mu}
whose mean is <W_j, a> for W_j = sum_{tau,mu} X_{tau,mu} a^{tau,mu} / |a^{tau,mu}|.
"""
import math

import numpy as np

from pyegnet.estimators.base import (InnerProductEstimator, MedianOfMeansPlan, DEFAULT_MAX_SAMPLES,
                                     median_of_means)
from pyegnet.exception import DomainError, EstimatorError
from pyegnet.l2bst import L2Bst


def explicit_raw_samples(x_tree, y, rng, count):
    """count raw copies of Z = y_i |x|^2 / x_i"""
    i = x_tree.sample_many(rng, count)
    return np.asarray(y, dtype=float)[i] * x_tree.norm_squared() / x_tree.leaves[i]


def implicit_raw_samples(X, history_tree, current, rng, count):
    """count raw copies of the implicit-row estimator Z(k, tau, mu)

    history_tree(tau, mu) returns the l2 tree of the stored vector paired
    with entry (tau, mu) of X.
    """
    current = np.asarray(current, dtype=float)
    taus, mus = X.sample_entries(rng, count)
    fro2 = X.frobenius_norm_squared()
    z = np.empty(count)

    keys = taus * X.width + mus
    order = np.argsort(keys, kind='stable')
    uniq, starts, counts = np.unique(keys[order], return_index=True, return_counts=True)
    for key, start, n in zip(uniq, starts, counts):
        tau, mu = divmod(int(key), X.width)
        tree = history_tree(tau, mu)
        ks = tree.sample_many(rng, n)
        sel = order[start:start + n]
        z[sel] = current[ks] * (tree.norm() / tree.leaves[ks]) * (fro2 / X.entry(tau, mu))
    return z


def two_phase(run, epsilon, scale):
    """Resolve the unknown |ip| in eps' = eps max{1,|ip|} / scale.

    A first pass targets the absolute error eps; if its result exceeds 1 in
    magnitude a second pass uses |s0|/(1+eps) as the bound on |ip|.
    """
    s0 = run(epsilon / scale)
    if abs(s0) <= 1.0:
        return s0
    bound = max(1.0, abs(s0) / (1.0 + epsilon))
    return run(epsilon * bound / scale)


class _DrawCounter(object):
    def __init__(self, draw):
        self.draw = draw
        self.total = 0

    def __call__(self, rng, n):
        self.total += n
        return self.draw(rng, n)


def _mom_two_phase(draw, tol, scale, rng, max_samples):
    # each phase gets half the failure budget
    gamma = tol.gamma / 2.0
    return two_phase(lambda eps_prime: median_of_means(draw, MedianOfMeansPlan(eps_prime, gamma), rng, max_samples),
                     tol.epsilon, scale)


def dequantized_explicit(x_tree, y, tol, rng, max_samples=DEFAULT_MAX_SAMPLES, y_norm=None):
    if not x_tree.norm_squared() > 0:
        raise DomainError("Explicit sampling needs a non-zero x")
    if not tol.epsilon > 0:
        raise EstimatorError("Sampling estimators need epsilon > 0")
    y = np.asarray(y, dtype=float)
    if y_norm is None:
        y_norm = float(np.linalg.norm(y))
    if y_norm == 0:
        return 0.0

    draw = lambda rng_, n: explicit_raw_samples(x_tree, y, rng_, n)
    return _mom_two_phase(draw, tol, x_tree.norm() * y_norm, rng, max_samples)


def dequantized_implicit(X, history_tree, current, tol, rng, max_samples=DEFAULT_MAX_SAMPLES):
    if X is None or not X.frobenius_norm_squared() > 0:
        raise DomainError("Implicit sampling needs a non-empty history")
    if not tol.epsilon > 0:
        raise EstimatorError("Sampling estimators need epsilon > 0")
    current = np.asarray(current, dtype=float)
    a_norm = float(np.linalg.norm(current))
    if a_norm == 0:
        return 0.0

    scale = math.sqrt(X.num_rows * X.width) * a_norm * X.frobenius_norm()
    draw = lambda rng_, n: implicit_raw_samples(X, history_tree, current, rng_, n)
    return _mom_two_phase(draw, tol, scale, rng, max_samples)


class DequantizedExplicitEstimator(InnerProductEstimator):
    """l2-sampling estimate against explicitly stored operand rows"""
    kind = 'dequantized_explicit'

    def estimate_block(self, operand, Y, rng):
        Y = np.atleast_2d(Y)
        trees = operand.trees
        if trees is None:
            trees = [L2Bst(row) if np.any(row) else None for row in operand.matrix]

        y_norms = np.sqrt(np.einsum('ij,ij->i', Y, Y))
        out = np.zeros((Y.shape[0], operand.rows))
        for m in range(Y.shape[0]):
            for j in range(operand.rows):
                tree = trees[j]
                if tree is None or not tree.norm_squared() > 0 or y_norms[m] == 0:
                    continue
                counter = _DrawCounter(lambda rng_, n, t=tree, y=Y[m]: explicit_raw_samples(t, y, rng_, n))
                out[m, j] = _mom_two_phase(counter, self.tol, tree.norm() * y_norms[m], rng, self.spec.max_samples)
                self.stats.increment('samples.%s' % self.kind, counter.total)
        self._count(out.size)
        return out


class DequantizedImplicitEstimator(InnerProductEstimator):
    """l2-sampling estimate straight from the update history of a weight row"""
    kind = 'dequantized_implicit'

    def estimate_block(self, operand, Y, rng):
        if operand.implicit is None:
            raise EstimatorError("%s needs an implicit weight representation" % self.kind)

        Y = np.atleast_2d(Y)
        out = np.zeros((Y.shape[0], operand.rows))
        rows = [operand.implicit(j) for j in range(operand.rows)]
        for m in range(Y.shape[0]):
            if not np.any(Y[m]):
                continue
            a_norm = float(np.linalg.norm(Y[m]))
            for j, (X, history_tree) in enumerate(rows):
                if X is None or not X.frobenius_norm_squared() > 0:
                    continue
                scale = math.sqrt(X.num_rows * X.width) * a_norm * X.frobenius_norm()
                counter = _DrawCounter(lambda rng_, n, X=X, h=history_tree, a=Y[m]:
                                       implicit_raw_samples(X, h, a, rng_, n))
                out[m, j] = _mom_two_phase(counter, self.tol, scale, rng, self.spec.max_samples)
                self.stats.increment('samples.%s' % self.kind, counter.total)
        self._count(out.size)
        return out


def register(factory):
    factory.register(DequantizedExplicitEstimator.kind, DequantizedExplicitEstimator)
    factory.register(DequantizedImplicitEstimator.kind, DequantizedImplicitEstimator)
