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
"""Inner product estimators.

Every module listed in __all__ provides register(factory) adding its
estimator classes under their kind tag.
"""
import importlib
import logging

import numpy as np

from pyegnet.estimators.base import EpsGamma, EstimatorSpec, WeightOperand
from pyegnet.exception import EstimatorError

__all__ = ['exact', 'gaussian', 'ripe', 'dequantized']


class EstimatorFactory(object):
    def __init__(self, stats=None):
        self.log = logging.getLogger(type(self).__name__)
        self.stats = stats
        self.estimator_types = {}

        for name in __all__:
            m = importlib.import_module('pyegnet.estimators.' + name)
            m.register(self)

    def register(self, kind, class_ref):
        assert self.estimator_types.get(kind) is None, "Estimator kind %s already registered" % kind
        self.estimator_types[kind] = class_ref

    @property
    def kinds(self):
        return sorted(self.estimator_types.keys())

    def create(self, spec):
        est_type = self.estimator_types.get(spec.kind)
        if est_type is None:
            raise EstimatorError("Unknown estimator kind '%s' (known: %s)" % (spec.kind, ', '.join(self.kinds)))
        self.log.debug("Creating %s estimator with %r", spec.kind, spec.tolerances)
        return est_type(spec, self.stats)


def estimate(spec, x, y, rng, stats=None):
    """One inner product <x, y> under spec.

    x may be given as a plain vector or, for the dequantized kinds, as a
    WeightOperand carrying l2 trees or an implicit representation.
    """
    estimator = EstimatorFactory(stats).create(spec)
    if isinstance(x, WeightOperand):
        return float(estimator.estimate_block(x, np.atleast_2d(y), rng)[0, 0])
    return estimator.estimate(np.asarray(x, dtype=float), np.asarray(y, dtype=float), rng)
