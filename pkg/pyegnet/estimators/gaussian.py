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
import numpy as np

from pyegnet.estimators.base import InnerProductEstimator, exact_block


def _add_noise(S, epsilon, noise):
    return S + noise * (0.5 * epsilon) * np.maximum(1.0, np.abs(S))


def estimate_gaussian(x, y, tol, rng):
    ip = float(np.dot(x, y))
    return float(_add_noise(ip, tol.epsilon, rng.standard_normal()))


class GaussianEstimator(InnerProductEstimator):
    """Exact value plus zero-mean normal noise of std (eps/2) max{1, |ip|}

    At two standard deviations this violates the contract with probability
    2 Phi(-2) ~ 0.0455, i.e. it models gamma ~ 0.05.
    """
    kind = 'gaussian'

    def estimate_block(self, operand, Y, rng):
        S = exact_block(operand, Y)
        self._count(S.size)
        return _add_noise(S, self.tol.epsilon, rng.standard_normal(S.shape))

    def estimate(self, x, y, rng):
        self._count(1)
        return estimate_gaussian(x, y, self.tol, rng)


def register(factory):
    factory.register(GaussianEstimator.kind, GaussianEstimator)
