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
"""R-factors: norm ratios that multiply the quantum running time bounds.

Activations and deltas are passed as the per-layer lists produced by the
feedforward/backprop code (index l-1), either for one sample or row-stacked
for several; results then come back per row. The history must hold exactly
the rows tau < t when the factors of iteration t are taken.

Every classical factor is built from the squares of the terms of its
quantum counterpart, scaled as (n/K)^2 times their mean over the n terms,
so R_cl >= R^2 always holds. K counts the weight rows (N - n_1) for the
factors summing over W rows, and the weight columns (N - n_L) for the ones
summing over W columns, so each factor is a mean over its terms.
"""
import logging

import numpy as np

log = logging.getLogger(__name__)


def _row_norms(v):
    v = np.atleast_2d(v)
    return np.sqrt(np.einsum('ij,ij->i', v, v))


def _ratio_terms(numer, ip):
    return numer / np.maximum(1.0, np.abs(ip))


def _reduce(terms, normalizer):
    """(R, R_cl) per row from a (rows, n) block of non-negative terms"""
    n = terms.shape[1]
    r = terms.sum(axis=1) / normalizer
    r_cl = (terms * terms).mean(axis=1) * (n / normalizer) ** 2 if n else np.zeros(terms.shape[0])
    return r, r_cl


def _row_normalizer(arch):
    return float(arch.N - arch.n(1))


def _col_normalizer(arch):
    return float(arch.N - arch.n(arch.L))


def r_a(history, weights, a, arch):
    """(R_a, R_a_cl) per sample; weights[i] is W^{t,l} for l = i+2"""
    blocks = []
    for l in range(2, arch.L + 1):
        A = np.atleast_2d(a[l - 2])
        W = weights[l - 2]
        fro = history.x_frobenius(l)
        blocks.append(_ratio_terms(fro[None, :] * _row_norms(A)[:, None], A @ W.T))
    return _reduce(np.hstack(blocks), _row_normalizer(arch))


def r_delta(history, weights, delta, arch):
    """(R_delta, R_delta_cl) per sample, summed over l = 1..L-1 and every column j <= n_l of W^{l+1}"""
    blocks = []
    for l in range(1, arch.L):
        D = np.atleast_2d(delta[l])
        W = weights[l - 1]
        fro = history.xt_frobenius(l + 1)
        blocks.append(_ratio_terms(fro[None, :] * _row_norms(D)[:, None], D @ W))
    return _reduce(np.hstack(blocks), _col_normalizer(arch))


def r_w(history, weights, arch, stats=None):
    """(R_W_r, R_W_c); rows or columns of zero norm are left out of the sums"""
    M = history.M
    total_r = 0.0
    total_c = 0.0
    skipped = 0
    for l in range(2, arch.L + 1):
        W = weights[l - 2]
        rows = np.sqrt(np.einsum('ij,ij->i', W, W))
        cols = np.sqrt(np.einsum('ij,ij->j', W, W))
        live_r = rows > 0
        live_c = cols > 0
        skipped += int((~live_r).sum() + (~live_c).sum())
        total_r += (history.x_frobenius(l)[live_r] / rows[live_r]).sum()
        total_c += (history.xt_frobenius(l)[live_c] / cols[live_c]).sum()

    if skipped:
        log.warning("Skipped %d zero-norm weight rows/columns in R_W", skipped)
        if stats is not None:
            stats.increment('rfactor.skipped_zero_norm', skipped)

    return total_r / (M * _row_normalizer(arch)), total_c / (M * _col_normalizer(arch))


def r_e(params, a, arch=None):
    """(R_e, R_e_cl) per sample for explicit weights"""
    arch = arch or params.arch
    blocks = []
    for l in range(2, arch.L + 1):
        A = np.atleast_2d(a[l - 2])
        W = params.W(l)
        w_norms = np.sqrt(np.einsum('ij,ij->i', W, W))
        blocks.append(_ratio_terms(w_norms[None, :] * _row_norms(A)[:, None], A @ W.T))
    return _reduce(np.hstack(blocks), _row_normalizer(arch))


def classical_r_factors(history, weights, a, delta, params, arch):
    """(R_a_cl, R_delta_cl, R_e_cl) per sample"""
    return (r_a(history, weights, a, arch)[1],
            r_delta(history, weights, delta, arch)[1],
            r_e(params, a, arch)[1])


class RFactorSeries(object):
    """Per-iteration training R-factors and per-point evaluation R_e"""
    COLUMNS = ('t', 'R_a', 'R_delta', 'R_W_r', 'R_W_c', 'R_a_cl', 'R_delta_cl', 'full_batch')

    def __init__(self):
        self.rows = []
        self.evaluations = []

    def append(self, t, ra, rd, rwr, rwc, ra_cl, rd_cl, full_batch=False):
        values = (ra, rd, rwr, rwc, ra_cl, rd_cl)
        if not all(np.isfinite(v) and v >= 0 for v in values):
            log.warning("Non-finite or negative R-factor at t=%d: %r", t, values)
        self.rows.append((int(t),) + tuple(float(v) for v in values) + (bool(full_batch),))

    def append_evaluation(self, re, re_cl):
        self.evaluations.append((float(re), float(re_cl)))

    def column(self, name):
        i = self.COLUMNS.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)

    def __len__(self):
        return len(self.rows)

    def averages(self):
        """Time averages; R_W is the mean of R_W_r + R_W_c"""
        out = {}
        if self.rows:
            for name in ('R_a', 'R_delta', 'R_W_r', 'R_W_c', 'R_a_cl', 'R_delta_cl'):
                out[name] = float(self.column(name).mean())
            out['R_W'] = float((self.column('R_W_r') + self.column('R_W_c')).mean())
        if self.evaluations:
            ev = np.array(self.evaluations)
            out['R_e'] = float(ev[:, 0].mean())
            out['R_e_cl'] = float(ev[:, 1].mean())
        return out

    def stabilization(self, name='R_W_r', tail=0.2):
        """std/mean of a series over its final tail fraction"""
        col = self.column(name)
        n = max(1, int(round(len(col) * tail)))
        last = col[-n:]
        mean = last.mean()
        return float(last.std() / mean) if mean > 0 else 0.0
