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
"""Sampling the output distribution of amplitude estimation.

The pair (x, y) is mapped onto the amplitude
    a = (|x|^2 + |y|^2 - 2<x,y>) / (2 (|x|^2 + |y|^2))
which amplitude estimation with M grid points returns as one of the values
sin^2(pi j / M). The probability of outcome j is the Fejer kernel
    sin^2(M pi d) / (M^2 sin^2(pi d)),   d = distance of j/M - theta_a/pi to the nearest integer
normalized over j = 0..M-1. The median of Q outcomes gives a-bar, and
    s = (|x|^2 + |y|^2)(1 - 2 a-bar) / 2
estimates <x,y>.
"""
import math

import numpy as np

from pyegnet.estimators.base import InnerProductEstimator, exact_block, odd_ceil
from pyegnet.exception import DomainError, EstimatorError

# median success boost per sample, 8/pi^2 - 1/2
_BOOST = 8.0 / math.pi ** 2 - 0.5

# upper bound on rows*Q*M cells materialized by one sampling step
_TABLE_CELLS = 1 << 22


def ripe_grid_size(eps_a):
    """Smallest M with pi/M + pi^2/M^2 <= eps_a"""
    if not eps_a > 0:
        raise EstimatorError("Amplitude tolerance must be > 0, got %r" % (eps_a,))
    return max(2, int(math.ceil(math.pi / (2.0 * eps_a) * (1.0 + math.sqrt(1.0 + 4.0 * eps_a)))))


def ripe_median_count(gamma):
    """Q = ceil(ln(1/gamma) / (2 (8/pi^2 - 1/2)^2)) rounded up to odd"""
    return odd_ceil(math.log(1.0 / gamma) / (2.0 * _BOOST ** 2))


class RipeParams(object):
    def __init__(self, a, eps_a, M, Q):
        self.a = float(a)
        self.theta_a = float(np.arcsin(np.sqrt(self.a)))
        self.eps_a = float(eps_a)
        self.M = int(M)
        self.Q = int(Q)

    @classmethod
    def for_pair(cls, norm_sq_sum, ip, abs_tol, gamma, q=None):
        a = min(1.0, max(0.0, (norm_sq_sum - 2.0 * ip) / (2.0 * norm_sq_sum)))
        eps_a = abs_tol / norm_sq_sum
        return cls(a, eps_a, ripe_grid_size(eps_a), q if q else ripe_median_count(gamma))

    def __repr__(self):
        return "RipeParams(a=%.6g, eps_a=%.4g, M=%d, Q=%d)" % (self.a, self.eps_a, self.M, self.Q)


def _outcome_table(thetas, M):
    """Normalized outcome probabilities, one row per theta"""
    j = np.arange(M) / M
    diff = j[None, :] - np.asarray(thetas, dtype=float)[:, None] / np.pi
    d = np.abs(diff - np.round(diff))
    den = M * np.sin(np.pi * d)
    with np.errstate(divide='ignore', invalid='ignore'):
        p = np.where(np.abs(den) < 1e-12, 1.0, (np.sin(M * np.pi * d) / den) ** 2)
    return p / p.sum(axis=1, keepdims=True)


def ripe_outcome_distribution(theta_a, M):
    """(grid values sin^2(pi j/M), probabilities) for j = 0..M-1"""
    if M < 2:
        raise EstimatorError("Amplitude estimation needs M >= 2, got %d" % M)
    grid = np.sin(np.pi * np.arange(M) / M) ** 2
    return grid, _outcome_table([theta_a], M)[0]


def sample_amplitudes(thetas, Ms, Q, rng):
    """Median of Q outcome draws per (theta, M) pair"""
    thetas = np.asarray(thetas, dtype=float).ravel()
    Ms = np.asarray(Ms, dtype=np.int64).ravel()
    out = np.empty(thetas.size)
    for M in np.unique(Ms):
        M = int(M)
        sel = np.flatnonzero(Ms == M)
        step = max(1, _TABLE_CELLS // (Q * M))
        for start in range(0, sel.size, step):
            idx = sel[start:start + step]
            cdf = np.cumsum(_outcome_table(thetas[idx], M), axis=1)
            u = rng.random((idx.size, Q))
            j = np.minimum((cdf[:, None, :] < u[:, :, None]).sum(axis=2), M - 1)
            out[idx] = np.median(np.sin(np.pi * j / M) ** 2, axis=1)
    return out


def _ripe_block(norm_sq_sum, ip, abs_tol, gamma, q, rng, max_cells):
    """Vectorized RIPE over arrays of equal shape; returns (s, total draws)"""
    a = np.clip((norm_sq_sum - 2.0 * ip) / (2.0 * norm_sq_sum), 0.0, 1.0)
    eps_a = abs_tol / norm_sq_sum
    M = np.maximum(2, np.ceil(np.pi / (2.0 * eps_a) * (1.0 + np.sqrt(1.0 + 4.0 * eps_a)))).astype(np.int64)
    Q = q if q else ripe_median_count(gamma)
    if M.size and int(M.max()) * Q > max_cells:
        raise EstimatorError("Amplitude estimation grid of %d points exceeds the sample budget" % M.max())
    a_bar = sample_amplitudes(np.arcsin(np.sqrt(a)), M, Q, rng).reshape(a.shape)
    return norm_sq_sum * (1.0 - 2.0 * a_bar) / 2.0, a.size * Q


def ripe_sample(x, y, tol, rng, noisy_norms=False, q=None):
    """One RIPE estimate of <x,y>.

    With noisy_norms the norms are only known to relative error xi; the
    estimate then comes from the unit vectors at absolute tolerance
    (eps/4) max{1,|ip|} / (|x|~ |y|~) and is rescaled by |x|~ |y|~. The
    combined error stays within the contract for eps <= 3/4.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    nx = float(np.linalg.norm(x))
    ny = float(np.linalg.norm(y))
    if nx == 0 or ny == 0:
        raise DomainError("RIPE needs non-zero vectors")
    ip = float(np.dot(x, y))
    if tol.epsilon == 0:
        return ip

    if not noisy_norms:
        s, _ = _ripe_block(np.array(nx * nx + ny * ny), np.array(ip), tol.bound(ip), tol.gamma, q, rng, np.inf)
        return float(s)

    u = rng.uniform(-tol.xi, tol.xi, size=2)
    nxb = nx * (1.0 + u[0])
    nyb = ny * (1.0 + u[1])
    abs_tol = 0.25 * tol.bound(ip) / (nxb * nyb)
    s, _ = _ripe_block(np.array(2.0), np.array(ip / (nx * ny)), abs_tol, tol.gamma, q, rng, np.inf)
    return float(nxb * nyb * s)


def ripe_samples(x, y, tol, rng, count, q=None):
    """count independent exact-norm RIPE estimates of <x,y>, drawn as one block"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    norm_sq_sum = float(np.dot(x, x) + np.dot(y, y))
    if norm_sq_sum == 0 or not np.any(x) or not np.any(y):
        raise DomainError("RIPE needs non-zero vectors")
    if tol.epsilon == 0:
        raise EstimatorError("RIPE sampling needs epsilon > 0")
    ip = float(np.dot(x, y))
    s, _ = _ripe_block(np.full(count, norm_sq_sum), np.full(count, ip), np.full(count, tol.bound(ip)),
                       tol.gamma, q, rng, np.inf)
    return s


class RipeEstimator(InnerProductEstimator):
    """Amplitude-estimation error law with exactly known norms"""
    kind = 'ripe_exact_norms'
    noisy_norms = False

    def estimate_block(self, operand, Y, rng):
        Y = np.atleast_2d(Y)
        S = exact_block(operand, Y)
        if self.tol.epsilon == 0:
            self._count(S.size)
            return S

        nx = operand.true_norms()[None, :]
        ny = np.sqrt(np.einsum('ij,ij->i', Y, Y))[:, None]
        live = (nx > 0) & (ny > 0)
        live = np.broadcast_to(live, S.shape)
        out = np.zeros_like(S)
        if not live.any():
            return out

        ip = S[live]
        budget = self.spec.max_samples
        if not self.noisy_norms:
            norm_sq_sum = np.broadcast_to(nx * nx + ny * ny, S.shape)[live]
            s, draws = _ripe_block(norm_sq_sum, ip, self.tol.bound(ip), self.tol.gamma, self.spec.q, rng, budget)
        else:
            # activation/delta norms are classical; only weight norms are estimated
            if operand.norms is not None:
                nxb = np.asarray(operand.norms, dtype=float)[None, :]
            else:
                nxb = nx * (1.0 + rng.uniform(-self.tol.xi, self.tol.xi, size=nx.shape))
            scale = np.broadcast_to(nxb * ny, S.shape)[live]
            unit_ip = ip / np.broadcast_to(nx * ny, S.shape)[live]
            abs_tol = 0.25 * self.tol.bound(ip) / scale
            s, draws = _ripe_block(np.full(ip.shape, 2.0), unit_ip, abs_tol, self.tol.gamma, self.spec.q, rng, budget)
            s = scale * s

        out[live] = s
        self._count(S.size, draws)
        return out


class NoisyNormRipeEstimator(RipeEstimator):
    """Amplitude-estimation error law with weight norms known to relative error xi"""
    kind = 'ripe_noisy_norms'
    noisy_norms = True


def register(factory):
    factory.register(RipeEstimator.kind, RipeEstimator)
    factory.register(NoisyNormRipeEstimator.kind, NoisyNormRipeEstimator)
