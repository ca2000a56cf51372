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
"""Running-time figures of merit for quantum, quantum-inspired and classical training/evaluation.

Polylogarithmic factors are dropped, logarithms are natural. The numbers are
comparable with each other, not wall-clock times.
"""
import math

from pyegnet.exception import ConfigurationError, DomainError

REQUIRED = ('T', 'M', 'N', 'E', 'epsilon', 'gamma')
R_FIELDS = ('R_a', 'R_delta', 'R_W', 'R_e', 'R_a_cl', 'R_delta_cl', 'R_e_cl')


class CostModelInput(object):
    def __init__(self, T, M, N, E, epsilon, gamma, R_a=0.0, R_delta=0.0, R_W=0.0, R_e=0.0,
                 R_a_cl=None, R_delta_cl=None, R_e_cl=None):
        self.T = T
        self.M = M
        self.N = N
        self.E = E
        self.epsilon = float(epsilon)
        self.gamma = float(gamma)
        self.R_a = float(R_a)
        self.R_delta = float(R_delta)
        self.R_W = float(R_W)
        self.R_e = float(R_e)
        # without measured classical factors fall back to their lower bounds R^2
        self.R_a_cl = self.R_a ** 2 if R_a_cl is None else float(R_a_cl)
        self.R_delta_cl = self.R_delta ** 2 if R_delta_cl is None else float(R_delta_cl)
        self.R_e_cl = self.R_e ** 2 if R_e_cl is None else float(R_e_cl)
        self.check()

    def check(self):
        for name in ('T', 'M', 'N', 'E', 'epsilon'):
            if not getattr(self, name) > 0:
                raise ConfigurationError("Cost model input %s must be > 0, got %r" % (name, getattr(self, name)))
        if not 0 < self.gamma < 1:
            raise ConfigurationError("Cost model input gamma must lie in (0,1), got %r" % self.gamma)
        for name in R_FIELDS:
            if getattr(self, name) < 0:
                raise ConfigurationError("Cost model input %s must be >= 0" % name)
        for name in ('R_a', 'R_delta', 'R_e'):
            r = getattr(self, name)
            r_cl = getattr(self, name + '_cl')
            if r_cl < r * r * (1 - 1e-9):
                raise DomainError("Cost model input %s_cl=%g is below %s^2=%g" % (name, r_cl, name, r * r))

    @classmethod
    def from_mapping(cls, d):
        missing = [k for k in REQUIRED if d.get(k) is None]
        if missing:
            raise ConfigurationError("Cost model input is missing %s" % ', '.join(missing))
        kwargs = dict((k, d[k]) for k in REQUIRED)
        kwargs.update((k, d[k]) for k in R_FIELDS if d.get(k) is not None)
        return cls(**kwargs)

    def as_dict(self):
        return dict((k, getattr(self, k)) for k in REQUIRED + R_FIELDS)


def log_ratio(epsilon, gamma):
    """log(1/gamma)/epsilon"""
    return math.log(1.0 / gamma) / epsilon


def cost_compare(inp):
    TM = float(inp.T) * float(inp.M)
    N = float(inp.N)
    E = float(inp.E)
    lg = math.log(1.0 / inp.gamma)
    eps = inp.epsilon
    r_q = inp.R_a + inp.R_delta + inp.R_W
    r_qi = inp.R_a_cl + inp.R_delta_cl

    report = {
        'quantum_train': TM ** 1.5 * N * lg / eps * r_q,
        'qi_train': TM ** 2 * N * lg / eps ** 2 * r_qi,
        'classical_train': TM * E,
        'quantum_eval': N * lg / eps * inp.R_e,
        'qi_eval': N * lg / eps ** 2 * inp.R_e_cl,
        'classical_eval': E,
        'quantum_advantage_ratio': math.sqrt(TM) * (N / E) * (lg / eps) * r_q,
        'qi_advantage_ratio': TM * (N / E) * (lg / eps ** 2) * r_qi,
        'log_ratio': lg / eps,
    }
    r_sq = inp.R_a ** 2 + inp.R_delta ** 2
    report['qi_slowdown'] = math.sqrt(TM) / eps * r_sq / r_q if r_q > 0 else float('inf')
    return report


def format_report(report):
    width = max(len(k) for k in report)
    return '\n'.join("%-*s  %.4g" % (width, k, v) for k, v in report.items())
