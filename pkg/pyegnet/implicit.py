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
"""Implicit weight storage.

A weight matrix is never kept element-wise here; it is the sum of its update
terms

    W^{t,l} = base^l + sum_{tau<t} sum_mu (-eta^{tau,l}/M) delta^{tau,mu,l} (a^{tau,mu,l-1})^T

Row tau = 0 holds the initialization: either r random low-rank pairs with
eta = -1, or (standard init) an all-zero row with the drawn matrix kept as
base. Iteration t >= 1 is recorded as row tau = t.

For each output neuron j the matrix X^[l,j] has entries
(-eta^tau/M) delta_j^{tau,mu} |a^{tau,mu}|, and for each input neuron j the
matrix X~^[l,j] has entries (-eta^tau/M) a_j^{tau,mu} |delta^{tau,mu}|.
Their squared Frobenius norms are always tracked; the vectors themselves and
the l2 trees over them only in 'full' mode.
"""
import logging
import math

import numpy as np

from pyegnet.exception import HistoryError, ShapeError
from pyegnet.l2bst import L2Bst, L2BstMatrix

MODE_FULL = 'full'
MODE_NORMS = 'norms'
AUTO_FULL_LIMIT = 5000000


def choose_history_mode(mode, T, M, N):
    if mode in (MODE_FULL, MODE_NORMS):
        return mode
    if mode != 'auto':
        raise HistoryError("Unknown history mode '%s'" % mode)
    return MODE_FULL if T * M * N <= AUTO_FULL_LIMIT else MODE_NORMS


def low_rank_scale(M, r, n_in):
    """std of the init delta entries giving Var(W_jk) = 1/n_in with N(0,1) a entries"""
    return M / math.sqrt(r * n_in)


def default_rank(n_l):
    return max(1, int(math.ceil(math.log2(n_l)))) if n_l > 1 else 1


class NormEstimate(object):
    """A weight row/column norm known to relative error xi"""
    def __init__(self, value, xi, stale_at, true_value=None):
        self.value = value
        self.xi = xi
        self.stale_at = stale_at
        self.true_value = true_value

    @property
    def zero(self):
        return self.value == 0

    def __repr__(self):
        return "NormEstimate(%g, xi=%g, stale_at=%s)" % (self.value, self.xi, self.stale_at)


class LayerHistory(object):
    def __init__(self, l, n_out, n_in, M, mode, base=None):
        self.l = l
        self.n_out = n_out
        self.n_in = n_in
        self.M = M
        self.mode = mode
        self.base = base

        self.etas = []
        self.a_rows = []
        self.d_rows = []
        self.a_norms = []
        self.d_norms = []
        self.x_fro2 = np.zeros(n_out)
        self.xt_fro2 = np.zeros(n_in)

        self._stacked = None
        self._x_mats = {}
        self._xt_mats = {}
        self._a_trees = {}
        self._d_trees = {}

    @property
    def num_rows(self):
        return len(self.etas)

    def append(self, eta, A, D):
        A = np.asarray(A, dtype=float)
        D = np.asarray(D, dtype=float)
        if A.shape != (self.M, self.n_in) or D.shape != (self.M, self.n_out):
            raise ShapeError("Layer %d record has shapes %s/%s, expected (%d, %d)/(%d, %d)"
                             % (self.l, A.shape, D.shape, self.M, self.n_in, self.M, self.n_out))

        coef = -float(eta) / self.M
        a_norms = np.sqrt(np.einsum('ij,ij->i', A, A))
        d_norms = np.sqrt(np.einsum('ij,ij->i', D, D))

        self.etas.append(float(eta))
        self.a_norms.append(a_norms)
        self.d_norms.append(d_norms)
        self.x_fro2 += coef * coef * ((D * D).T @ (a_norms * a_norms))
        self.xt_fro2 += coef * coef * ((A * A).T @ (d_norms * d_norms))

        if self.mode == MODE_FULL:
            self.a_rows.append(A.copy())
            self.d_rows.append(D.copy())
            self._stacked = None
            for j, mat in self._x_mats.items():
                mat.append_row(coef * D[:, j] * a_norms)
            for j, mat in self._xt_mats.items():
                mat.append_row(coef * A[:, j] * d_norms)

    def _require_full(self):
        if self.mode != MODE_FULL:
            raise HistoryError("Layer %d history keeps norms only; vectors are unavailable" % self.l)

    def _stack(self, t):
        self._require_full()
        if not 0 <= t <= len(self.etas):
            raise HistoryError("Iteration %d outside recorded history of %d rows" % (t, len(self.etas)))
        if self._stacked is None:
            coef = np.repeat(-np.asarray(self.etas) / self.M, self.M)
            self._stacked = (coef, np.vstack(self.a_rows), np.vstack(self.d_rows))
        coef, A, D = self._stacked
        n = t * self.M
        return coef[:n], A[:n], D[:n]

    def weight_matrix(self, t):
        coef, A, D = self._stack(t)
        W = (D * coef[:, None]).T @ A
        if self.base is not None:
            W = W + self.base
        return W

    def weight_row(self, t, j):
        if not 0 <= j < self.n_out:
            raise HistoryError("Row %d out of range for layer %d" % (j, self.l))
        coef, A, D = self._stack(t)
        row = (coef * D[:, j]) @ A
        if self.base is not None:
            row = row + self.base[j]
        return row

    def weight_col(self, t, j):
        if not 0 <= j < self.n_in:
            raise HistoryError("Column %d out of range for layer %d" % (j, self.l))
        coef, A, D = self._stack(t)
        col = (coef * A[:, j]) @ D
        if self.base is not None:
            col = col + self.base[:, j]
        return col

    def x_matrix(self, j):
        """X^[l,j] over every recorded row, as an l2 matrix"""
        self._require_full()
        mat = self._x_mats.get(j)
        if mat is None:
            mat = L2BstMatrix(self.M)
            for eta, A, D, an in zip(self.etas, self.a_rows, self.d_rows, self.a_norms):
                mat.append_row(-eta / self.M * D[:, j] * an)
            self._x_mats[j] = mat
        return mat

    def xt_matrix(self, j):
        self._require_full()
        mat = self._xt_mats.get(j)
        if mat is None:
            mat = L2BstMatrix(self.M)
            for eta, A, D, dn in zip(self.etas, self.a_rows, self.d_rows, self.d_norms):
                mat.append_row(-eta / self.M * A[:, j] * dn)
            self._xt_mats[j] = mat
        return mat

    def a_tree(self, tau, mu):
        self._require_full()
        tree = self._a_trees.get((tau, mu))
        if tree is None:
            tree = self._a_trees[(tau, mu)] = L2Bst(self.a_rows[tau][mu])
        return tree

    def d_tree(self, tau, mu):
        self._require_full()
        tree = self._d_trees.get((tau, mu))
        if tree is None:
            tree = self._d_trees[(tau, mu)] = L2Bst(self.d_rows[tau][mu])
        return tree


class WeightHistory(object):
    """Update histories of every layer l = 2..L"""
    def __init__(self, arch, M, mode=MODE_FULL):
        self.log = logging.getLogger(type(self).__name__)
        if mode not in (MODE_FULL, MODE_NORMS):
            raise HistoryError("Unknown history mode '%s'" % mode)
        self.arch = arch
        self.M = int(M)
        self.mode = mode
        self.layers = {}
        self.rank = None

    def layer(self, l):
        h = self.layers.get(l)
        if h is None:
            raise HistoryError("No history for layer %d" % l)
        return h

    @property
    def num_rows(self):
        return min(h.num_rows for h in self.layers.values()) if self.layers else 0

    @classmethod
    def low_rank_init(cls, arch, r, M, rng, mode=MODE_FULL):
        """Row tau = 0 from r random (a, delta) pairs per layer, eta = -1"""
        if not 1 <= r <= M:
            raise HistoryError("Rank %d must lie in [1, M=%d]" % (r, M))

        history = cls(arch, M, mode)
        history.rank = r
        for l in range(2, arch.L + 1):
            n_out, n_in = arch.n(l), arch.n(l - 1)
            A = np.zeros((M, n_in))
            D = np.zeros((M, n_out))
            A[:r] = rng.standard_normal((r, n_in))
            D[:r] = rng.standard_normal((r, n_out)) * low_rank_scale(M, r, n_in)
            history.layers[l] = LayerHistory(l, n_out, n_in, M, mode)
            history.layers[l].append(-1.0, A, D)
        history.log.debug("Low rank initialization with r=%d, M=%d", r, M)
        return history

    @classmethod
    def from_parameters(cls, params, M, mode=MODE_FULL):
        """Explicit initial weights become the base; row tau = 0 stays zero"""
        arch = params.arch
        history = cls(arch, M, mode)
        for l in range(2, arch.L + 1):
            n_out, n_in = arch.n(l), arch.n(l - 1)
            history.layers[l] = LayerHistory(l, n_out, n_in, M, mode, base=params.W(l).copy())
            history.layers[l].append(-1.0, np.zeros((M, n_in)), np.zeros((M, n_out)))
        return history

    def record_iteration(self, t, l, eta, A, D):
        """Append iteration t of layer l: A holds a^{t,mu,l-1}, D holds delta^{t,mu,l} as rows"""
        h = self.layer(l)
        if t != h.num_rows:
            if t < h.num_rows:
                raise HistoryError("Iteration %d of layer %d already recorded" % (t, l))
            raise HistoryError("Iteration %d of layer %d recorded before iteration %d" % (t, l, h.num_rows))
        h.append(eta, A, D)

    def weight_row(self, t, l, j):
        return self.layer(l).weight_row(t, j)

    def weight_col(self, t, l, j):
        return self.layer(l).weight_col(t, j)

    def weight_matrix(self, t, l):
        return self.layer(l).weight_matrix(t)

    def initial_weights(self):
        return [self.weight_matrix(1, l) for l in range(2, self.arch.L + 1)]

    def x_frobenius(self, l):
        return np.sqrt(self.layer(l).x_fro2)

    def xt_frobenius(self, l):
        return np.sqrt(self.layer(l).xt_fro2)

    def implicit_row(self, l):
        """Accessor j -> (X^[l,j], a-tree lookup) for the implicit estimator"""
        h = self.layer(l)
        return lambda j: (h.x_matrix(j), h.a_tree)

    def implicit_col(self, l):
        h = self.layer(l)
        return lambda j: (h.xt_matrix(j), h.d_tree)

    def estimate_row_norm(self, t, l, j, xi, rng, stats=None, true_norm=None, stale_at=None):
        """|W^{t,l}_j| to relative error xi, accounting (|X|_F/|W_j|) sqrt(tM) / xi cost units"""
        if true_norm is None:
            true_norm = float(np.linalg.norm(self.weight_row(t, l, j)))
        return self._norm_estimate(true_norm, float(self.x_frobenius(l)[j]), t, xi, rng, stats, stale_at)

    def estimate_col_norm(self, t, l, j, xi, rng, stats=None, true_norm=None, stale_at=None):
        if true_norm is None:
            true_norm = float(np.linalg.norm(self.weight_col(t, l, j)))
        return self._norm_estimate(true_norm, float(self.xt_frobenius(l)[j]), t, xi, rng, stats, stale_at)

    def _norm_estimate(self, true_norm, fro, t, xi, rng, stats, stale_at):
        u = rng.uniform(-xi, xi) if xi > 0 else 0.0
        if true_norm == 0:
            if stats is not None:
                stats.increment('norms.zero_rows')
            return NormEstimate(0.0, xi, stale_at, 0.0)

        if stats is not None and xi > 0:
            stats.increment('cost.norm_estimation', norm_estimation_cost(fro, true_norm, t, self.M, xi))
        return NormEstimate(true_norm * (1.0 + u), xi, stale_at, true_norm)

    def estimate_norms(self, t, l, weights, xi, rng, stats=None, stale_at=None):
        """Row and column norm estimates of the whole layer, arrays (rows, cols)

        weights is the current explicit W^{t,l}, equal to the reconstruction.
        """
        rows = np.sqrt(np.einsum('ij,ij->i', weights, weights))
        cols = np.sqrt(np.einsum('ij,ij->j', weights, weights))
        if xi > 0:
            u_rows = rng.uniform(-xi, xi, size=rows.shape)
            u_cols = rng.uniform(-xi, xi, size=cols.shape)
        else:
            u_rows = np.zeros_like(rows)
            u_cols = np.zeros_like(cols)

        if stats is not None:
            zero = int(np.count_nonzero(rows == 0) + np.count_nonzero(cols == 0))
            if zero:
                stats.increment('norms.zero_rows', zero)
            if xi > 0:
                cost = (norm_estimation_cost(self.x_frobenius(l), rows, t, self.M, xi).sum()
                        + norm_estimation_cost(self.xt_frobenius(l), cols, t, self.M, xi).sum())
                stats.increment('cost.norm_estimation', float(cost))
        return rows * (1.0 + u_rows), cols * (1.0 + u_cols)


def norm_estimation_cost(fro, norm, t, M, xi):
    """(|X|_F / |W_j|) sqrt(tM) / xi, zero where the norm vanishes"""
    fro = np.asarray(fro, dtype=float)
    norm = np.asarray(norm, dtype=float)
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.where(norm > 0, fro / np.where(norm > 0, norm, 1.0), 0.0)
    cost = ratio * math.sqrt(t * M) / xi
    return cost if cost.ndim else float(cost)
