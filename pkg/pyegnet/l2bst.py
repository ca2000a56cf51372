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
"""l2 binary search trees.

An L2Bst keeps the squared components of a vector in the leaves of a complete
binary tree, each internal node holding the sum of its children. The root is
thus |x|^2, single components can be changed in O(log n) and an index i can be
drawn with probability x_i^2/|x|^2 by walking down from the root.

Nodes are stored heap-style in a flat array: node 1 is the root, node k has
children 2k and 2k+1, leaf i lives at capacity+i.
"""
import logging

import numpy as np

from pyegnet.exception import DomainError, ShapeError

REBUILD_INTERVAL = 2 ** 20


def _capacity_for(n):
    cap = 1
    while cap < n:
        cap <<= 1
    return cap


class L2Bst(object):
    def __init__(self, values, capacity=None, rebuild_interval=REBUILD_INTERVAL):
        values = np.asarray(values, dtype=float).ravel()
        if values.size == 0:
            raise DomainError("Cannot build an l2 tree from an empty vector")
        if not np.all(np.isfinite(values)):
            raise DomainError("Cannot build an l2 tree from non-finite values")

        self.size = values.size
        self.capacity = _capacity_for(capacity if capacity else self.size)
        if self.capacity < self.size:
            raise ShapeError("Capacity %d too small for %d values" % (self.capacity, self.size))

        self.rebuild_interval = rebuild_interval
        self.leaves = np.zeros(self.capacity)
        self.leaves[:self.size] = values
        self.touched = 0
        self.updates_since_rebuild = 0
        self._build(self.leaves * self.leaves)

    @classmethod
    def from_squares(cls, squares, capacity=None):
        """Tree whose leaf sums are the given squares exactly; leaves hold their roots"""
        squares = np.asarray(squares, dtype=float).ravel()
        if np.any(squares < 0):
            raise DomainError("Squared entries must be non-negative")
        tree = cls(np.sqrt(squares), capacity)
        padded = np.zeros(tree.capacity)
        padded[:tree.size] = squares
        tree._build(padded)
        return tree

    def rebuild(self):
        """Recompute all internal sums from the leaf sums"""
        self._build(self.sums[self.capacity:].copy())

    def _build(self, squares):
        cap = self.capacity
        sums = np.zeros(2 * cap)
        sums[cap:] = squares
        start = cap
        while start > 1:
            half = start // 2
            sums[half:start] = sums[start:2 * start:2] + sums[start + 1:2 * start:2]
            start = half
        self.sums = sums
        self.updates_since_rebuild = 0

    def _check_index(self, i):
        if not 0 <= i < self.size:
            raise ShapeError("Index %d out of range for l2 tree of size %d" % (i, self.size))

    def query(self, i):
        self._check_index(i)
        return float(self.leaves[i])

    @property
    def values(self):
        return self.leaves[:self.size].copy()

    def norm_squared(self):
        return float(self.sums[1])

    def norm(self):
        return float(np.sqrt(self.sums[1]))

    def update(self, i, v):
        self._check_index(i)
        if not np.isfinite(v):
            raise DomainError("Cannot store non-finite value %r" % (v,))
        self._set(i, v, v * v)

    def update_squared(self, i, s):
        """Set leaf i to sqrt(s), keeping s itself as its exact squared weight"""
        self._check_index(i)
        if not (np.isfinite(s) and s >= 0):
            raise DomainError("Squared entry must be finite and non-negative, got %r" % (s,))
        self._set(i, np.sqrt(s), s)

    def _set(self, i, v, s):
        self.leaves[i] = v
        idx = i + self.capacity
        self.sums[idx] = s
        self.touched += 1

        idx >>= 1
        while idx >= 1:
            left = 2 * idx
            self.sums[idx] = self.sums[left] + self.sums[left + 1]
            self.touched += 1
            idx >>= 1

        self.updates_since_rebuild += 1
        if self.updates_since_rebuild >= self.rebuild_interval:
            self.rebuild()

    def _grow(self):
        if self.size < self.capacity:
            return
        cap = self.capacity
        leaves = np.zeros(2 * cap)
        leaves[:self.size] = self.leaves
        squares = np.zeros(2 * cap)
        squares[:self.size] = self.sums[cap:cap + self.size]
        self.capacity = 2 * cap
        self.leaves = leaves
        self._build(squares)

    def append(self, v):
        """Grow the logical vector by one entry, doubling capacity when full"""
        self._grow()
        self.size += 1
        self.update(self.size - 1, v)

    def append_squared(self, s):
        self._grow()
        self.size += 1
        self.update_squared(self.size - 1, s)

    def sample(self, rng):
        return int(self.sample_many(rng, 1)[0])

    def sample_many(self, rng, count):
        """Draw count indices i.i.d. with P(i) = x_i^2 / |x|^2"""
        total = self.sums[1]
        if not total > 0:
            raise DomainError("Cannot sample from a zero-norm l2 tree")
        if count == 0:
            return np.zeros(0, dtype=np.int64)

        u = rng.random(count) * total
        idx = np.ones(count, dtype=np.int64)
        sums = self.sums
        while idx[0] < self.capacity:
            left = 2 * idx
            lsum = sums[left]
            # an empty right subtree must never be entered, whatever rounding did to u
            go_left = (u < lsum) | (sums[left + 1] <= 0)
            u = np.where(go_left, u, u - lsum)
            idx = np.where(go_left, left, left + 1)
        return idx - self.capacity

    def __len__(self):
        return self.size

    def __repr__(self):
        return "L2Bst(size=%d, capacity=%d, norm=%g)" % (self.size, self.capacity, self.norm())


class L2BstMatrix(object):
    """Row-appendable matrix with one l2 tree per row and a tree over the row norms"""
    def __init__(self, width):
        if width < 1:
            raise ShapeError("Matrix width must be positive, got %d" % width)
        self.log = logging.getLogger(type(self).__name__)
        self.width = int(width)
        self.rows = []
        self.row_norm_tree = None

    @classmethod
    def from_rows(cls, rows):
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        mat = cls(rows.shape[1])
        for row in rows:
            mat.append_row(row)
        return mat

    @property
    def num_rows(self):
        return len(self.rows)

    @property
    def shape(self):
        return (len(self.rows), self.width)

    def append_row(self, row):
        row = np.asarray(row, dtype=float).ravel()
        if row.size != self.width:
            raise ShapeError("Row of width %d appended to matrix of width %d" % (row.size, self.width))

        tree = L2Bst(row)
        self.rows.append(tree)
        if self.row_norm_tree is None:
            self.row_norm_tree = L2Bst.from_squares([tree.norm_squared()])
        else:
            self.row_norm_tree.append_squared(tree.norm_squared())

    def update(self, tau, mu, v):
        if not 0 <= tau < len(self.rows):
            raise ShapeError("Row %d out of range for %d rows" % (tau, len(self.rows)))
        tree = self.rows[tau]
        tree.update(mu, v)
        self.row_norm_tree.update_squared(tau, tree.norm_squared())

    def entry(self, tau, mu):
        if not 0 <= tau < len(self.rows):
            raise ShapeError("Row %d out of range for %d rows" % (tau, len(self.rows)))
        return self.rows[tau].query(mu)

    def to_array(self):
        if not self.rows:
            return np.zeros((0, self.width))
        return np.vstack([t.values for t in self.rows])

    def frobenius_norm_squared(self):
        return 0.0 if self.row_norm_tree is None else self.row_norm_tree.norm_squared()

    def frobenius_norm(self):
        return float(np.sqrt(self.frobenius_norm_squared()))

    def sample_entry(self, rng):
        taus, mus = self.sample_entries(rng, 1)
        return int(taus[0]), int(mus[0])

    def sample_entries(self, rng, count):
        """Draw count pairs (tau, mu) with P = X_{tau,mu}^2 / |X|_F^2"""
        if self.row_norm_tree is None or not self.frobenius_norm_squared() > 0:
            raise DomainError("Cannot sample from a zero matrix")

        taus = self.row_norm_tree.sample_many(rng, count)
        mus = np.empty(count, dtype=np.int64)
        order = np.argsort(taus, kind='stable')
        uniq, starts, counts = np.unique(taus[order], return_index=True, return_counts=True)
        for tau, start, n in zip(uniq, starts, counts):
            mus[order[start:start + n]] = self.rows[tau].sample_many(rng, n)
        return taus, mus

    def __repr__(self):
        return "L2BstMatrix(rows=%d, width=%d)" % (len(self.rows), self.width)
