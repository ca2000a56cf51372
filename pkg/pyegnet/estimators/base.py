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
import logging
import math

import numpy as np

from pyegnet.exception import EstimatorError
from pyegnet.stats import RunStatistics

DEFAULT_MAX_SAMPLES = 20000000

# raw draws materialized at once by median_of_means
CHUNK = 1 << 20


def odd_ceil(v):
    """Smallest odd integer >= v (and >= 1)"""
    n = max(1, int(math.ceil(v)))
    return n if n % 2 else n + 1


class EpsGamma(object):
    """Error tolerance epsilon, failure probability gamma and norm budget xi"""
    def __init__(self, epsilon, gamma, xi=None):
        self.epsilon = float(epsilon)
        self.gamma = float(gamma)
        self.xi = self.epsilon / 3.0 if xi is None else float(xi)

        if self.epsilon < 0:
            raise EstimatorError("epsilon must be >= 0, got %g" % self.epsilon)
        if not 0 < self.gamma < 1:
            raise EstimatorError("gamma must lie in (0,1), got %g" % self.gamma)
        if self.xi < 0 or self.xi > self.epsilon / 3.0 + 1e-15:
            raise EstimatorError("xi must lie in [0, epsilon/3], got %g" % self.xi)

    def bound(self, ip):
        """Allowed deviation max{eps |ip|, eps}"""
        return self.epsilon * np.maximum(1.0, np.abs(ip))

    def __repr__(self):
        return "EpsGamma(epsilon=%g, gamma=%g, xi=%g)" % (self.epsilon, self.gamma, self.xi)


class EstimatorSpec(object):
    def __init__(self, kind, tolerances, seed=None, q=None, max_samples=DEFAULT_MAX_SAMPLES):
        self.kind = kind
        self.tolerances = tolerances
        self.seed = seed
        self.q = q
        self.max_samples = int(max_samples)

    @classmethod
    def from_config(cls, cfg, section='estimator'):
        return cls(cfg.get((section, 'kind'), 'exact'),
                   EpsGamma(cfg.get((section, 'epsilon'), 0.0),
                            cfg.get((section, 'gamma'), 0.05),
                            cfg.get((section, 'xi'))),
                   seed=cfg.get('seed'),
                   q=cfg.get((section, 'q')),
                   max_samples=cfg.get((section, 'max_samples'), DEFAULT_MAX_SAMPLES))

    def __repr__(self):
        return "EstimatorSpec(%s, %r, seed=%s)" % (self.kind, self.tolerances, self.seed)


class MedianOfMeansPlan(object):
    """copies_per_group = ceil(3/eps'^2) keeps each group mean within eps' sigma-units
    with probability >= 2/3 (Chebyshev); an odd number ceil(18 ln(1/gamma)) of groups
    pushes the median's failure probability below gamma."""
    def __init__(self, eps_prime, gamma):
        if not eps_prime > 0:
            raise EstimatorError("eps' must be > 0, got %r" % (eps_prime,))
        self.eps_prime = float(eps_prime)
        self.copies_per_group = max(1, int(math.ceil(3.0 / (self.eps_prime ** 2))))
        self.groups = odd_ceil(18.0 * math.log(1.0 / gamma))

    @property
    def total(self):
        return self.copies_per_group * self.groups

    def __repr__(self):
        return "MedianOfMeansPlan(eps'=%g, copies=%d, groups=%d)" % (
            self.eps_prime, self.copies_per_group, self.groups)


def median_of_means(draw, plan, rng, max_samples=DEFAULT_MAX_SAMPLES):
    """Median over plan.groups of the mean of plan.copies_per_group raw draws.

    draw(rng, n) must return n i.i.d. copies of an unbiased estimator.
    """
    if plan.total > max_samples:
        raise EstimatorError("Median-of-means plan needs %d raw samples, budget is %d (%r)"
                             % (plan.total, max_samples, plan))

    c = plan.copies_per_group
    means = np.empty(plan.groups)
    if c <= CHUNK:
        per_chunk = max(1, CHUNK // c)
        g = 0
        while g < plan.groups:
            n = min(per_chunk, plan.groups - g)
            z = draw(rng, n * c).reshape(n, c)
            means[g:g + n] = z.mean(axis=1)
            g += n
    else:
        for g in range(plan.groups):
            acc = 0.0
            left = c
            while left:
                n = min(CHUNK, left)
                acc += draw(rng, n).sum()
                left -= n
            means[g] = acc / c

    return float(np.median(means))


class WeightOperand(object):
    """Left-hand sides of a block of inner products.

    matrix holds the operands as rows (W for feedforward, W^T for backprop).
    norms optionally replaces the true row norms by estimates. implicit, when
    set, is a callable j -> (X matrix, history tree lookup (tau, mu) -> L2Bst)
    giving the implicit representation of row j.
    """
    def __init__(self, matrix, norms=None, implicit=None, trees=None):
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        self.norms = norms
        self.implicit = implicit
        self.trees = trees

    @property
    def rows(self):
        return self.matrix.shape[0]

    def true_norms(self):
        return np.sqrt(np.einsum('ij,ij->i', self.matrix, self.matrix))


class InnerProductEstimator(object):
    """Estimates blocks of inner products S[m, j] ~ <operand_j, y_m>

    Every implementation obeys the (epsilon, gamma) contract per entry:
    P(|S - exact| > max{eps |exact|, eps}) <= gamma.
    """
    kind = None

    def __init__(self, spec, stats=None):
        self.log = logging.getLogger(type(self).__name__)
        self.spec = spec
        self.tol = spec.tolerances
        self.stats = stats if stats is not None else RunStatistics()

    def estimate_block(self, operand, Y, rng):
        raise NotImplementedError()

    def estimate(self, x, y, rng):
        """Single inner product <x, y>"""
        return float(self.estimate_block(WeightOperand(x), np.atleast_2d(y), rng)[0, 0])

    def _count(self, n, samples=0):
        self.stats.increment('inner_products.%s' % self.kind, n)
        if samples:
            self.stats.increment('samples.%s' % self.kind, samples)

    def __repr__(self):
        return "%s(%r)" % (type(self).__name__, self.tol)


def exact_block(operand, Y):
    return np.atleast_2d(Y) @ operand.matrix.T
