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
"""Exact feedforward network machinery.

Layers are numbered 1..L as in the update rule; python lists holding per-layer
weights/biases are indexed 0..L-2 where entry i belongs to layer l = i+2.
Activations a and pre-activations z are lists of length L indexed by l-1
(z[0] is unused and set to None).

Vectors may be given either as 1-D arrays (a single sample) or as 2-D arrays
whose rows are the samples of a mini-batch.
"""
import logging
from collections import namedtuple

import numpy as np

from pyegnet.exception import DomainError, EmptyBatchError, ScheduleError, ShapeError

log = logging.getLogger(__name__)

ACTIVATIONS = ('tanh', 'sigmoid', 'relu', 'identity')

MiniBatchSchedule = namedtuple('MiniBatchSchedule', 'batches seed num_samples batch_size')


class Architecture(object):
    def __init__(self, layer_sizes):
        sizes = [int(n) for n in layer_sizes]
        if len(sizes) < 2:
            raise ShapeError("A network needs at least two layers, got %r" % (layer_sizes,))
        if any(n < 1 for n in sizes):
            raise ShapeError("Layer sizes must be positive, got %r" % (layer_sizes,))
        self.layer_sizes = sizes

    @property
    def L(self):
        return len(self.layer_sizes)

    @property
    def N(self):
        return sum(self.layer_sizes)

    @property
    def E(self):
        s = self.layer_sizes
        return sum(s[i] * s[i - 1] for i in range(1, len(s)))

    def n(self, l):
        """Neuron count of layer l (1-based)"""
        return self.layer_sizes[l - 1]

    def __eq__(self, other):
        return isinstance(other, Architecture) and other.layer_sizes == self.layer_sizes

    def __repr__(self):
        return "Architecture(%s)" % self.layer_sizes


class NetworkParameters(object):
    """Weights W^l (n_l x n_{l-1}) and biases b^l for l = 2..L"""
    def __init__(self, arch, weights, biases):
        self.arch = arch
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        self.check()

    def check(self):
        if len(self.weights) != self.arch.L - 1 or len(self.biases) != self.arch.L - 1:
            raise ShapeError("Expected %d weight matrices and bias vectors" % (self.arch.L - 1))

        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            l = i + 2
            shape = (self.arch.n(l), self.arch.n(l - 1))
            if w.shape != shape:
                raise ShapeError("W^%d has shape %s, expected %s" % (l, w.shape, shape))
            if b.shape != (self.arch.n(l),):
                raise ShapeError("b^%d has shape %s, expected (%d,)" % (l, b.shape, self.arch.n(l)))
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise DomainError("Layer %d parameters are not finite" % l)

    def W(self, l):
        return self.weights[l - 2]

    def b(self, l):
        return self.biases[l - 2]

    def copy(self):
        return NetworkParameters(self.arch,
                                 [w.copy() for w in self.weights],
                                 [b.copy() for b in self.biases])

    @classmethod
    def zeros(cls, arch):
        return cls(arch,
                   [np.zeros((arch.n(l), arch.n(l - 1))) for l in range(2, arch.L + 1)],
                   [np.zeros(arch.n(l)) for l in range(2, arch.L + 1)])

    @classmethod
    def standard(cls, arch, rng):
        """W^l_jk ~ N(0, std 1/sqrt(n_{l-1})), biases 0"""
        weights = [rng.normal(0.0, 1.0 / np.sqrt(arch.n(l - 1)), size=(arch.n(l), arch.n(l - 1)))
                   for l in range(2, arch.L + 1)]
        biases = [np.zeros(arch.n(l)) for l in range(2, arch.L + 1)]
        return cls(arch, weights, biases)


def _finite(z):
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise DomainError("Non-finite activation input")
    return z


def activation_apply(kind, z):
    z = _finite(z)
    if kind == 'tanh':
        out = np.tanh(z)
    elif kind == 'sigmoid':
        # split to stay finite for large |z|
        out = np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))
    elif kind == 'relu':
        out = np.maximum(z, 0.0)
    elif kind == 'identity':
        out = z.copy()
    else:
        raise DomainError("Unknown activation '%s'" % kind)
    return out if out.ndim else float(out)


def activation_derivative(kind, z):
    z = _finite(z)
    if kind == 'tanh':
        t = np.tanh(z)
        out = 1.0 - t * t
    elif kind == 'sigmoid':
        s = np.asarray(activation_apply('sigmoid', z))
        out = s * (1.0 - s)
    elif kind == 'relu':
        # relu'(0) is taken as 0
        out = (z > 0).astype(float)
    elif kind == 'identity':
        out = np.ones_like(z)
    else:
        raise DomainError("Unknown activation '%s'" % kind)
    return out if out.ndim else float(out)


def _same_shape(y, a):
    y = np.asarray(y, dtype=float)
    a = np.asarray(a, dtype=float)
    if y.shape != a.shape:
        raise ShapeError("Target shape %s does not match output shape %s" % (y.shape, a.shape))
    return y, a


def cost_mse(y, a):
    """Per-sample cost 1/2 |y - a|^2 (rows summed separately for a batch)"""
    y, a = _same_shape(y, a)
    r = y - a
    out = 0.5 * np.sum(r * r, axis=-1)
    return out if np.ndim(out) else float(out)


def cost_gradient(y, a):
    """dC/da for the per-sample MSE cost"""
    y, a = _same_shape(y, a)
    return a - y


def classical_feedforward(params, x, activation='tanh'):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != params.arch.n(1):
        raise ShapeError("Input has %d features, network expects %d" % (x.shape[-1], params.arch.n(1)))

    z = [None]
    a = [x]
    for l in range(2, params.arch.L + 1):
        zl = a[-1] @ params.W(l).T + params.b(l)
        z.append(zl)
        a.append(activation_apply(activation, zl))
    return z, a


def output_delta(y, z_out, a_out, activation='tanh'):
    return activation_derivative(activation, z_out) * cost_gradient(y, a_out)


def classical_backprop(params, z, a, y, activation='tanh'):
    """Returns delta as a list indexed by l-1; entries for l = 1 stay None"""
    L = params.arch.L
    if len(z) != L or len(a) != L:
        raise ShapeError("Expected %d layers of z and a, got %d and %d" % (L, len(z), len(a)))

    delta = [None] * L
    delta[L - 1] = output_delta(y, z[L - 1], a[L - 1], activation)
    for l in range(L - 1, 1, -1):
        back = delta[l] @ params.W(l + 1)
        delta[l - 1] = activation_derivative(activation, z[l - 1]) * back
    return delta


def weight_gradients(a, delta, arch):
    """Batch-averaged dC/dW^l = 1/M sum_m delta^l (a^{l-1})^T and dC/db^l"""
    grads_w = []
    grads_b = []
    for l in range(2, arch.L + 1):
        d = np.atleast_2d(delta[l - 1])
        ap = np.atleast_2d(a[l - 2])
        M = d.shape[0]
        grads_w.append(d.T @ ap / M)
        grads_b.append(d.sum(axis=0) / M)
    return grads_w, grads_b


def sgd_update(params, batch, eta):
    """Apply the mini-batch update to a copy of params.

    batch is a list of (a, delta) per-sample histories as produced by
    classical_feedforward / classical_backprop, or a single (A, Delta) pair
    whose entries are row-stacked over the batch.
    """
    if not batch:
        raise EmptyBatchError("sgd_update called with an empty batch")

    if len(batch) == 1:
        a, delta = batch[0]
    else:
        L = params.arch.L
        a = [np.vstack([np.atleast_2d(h[0][i]) for h in batch]) for i in range(L)]
        delta = [None] + [np.vstack([np.atleast_2d(h[1][i]) for h in batch]) for i in range(1, L)]

    grads_w, grads_b = weight_gradients(a, delta, params.arch)
    updated = params.copy()
    for i in range(len(updated.weights)):
        updated.weights[i] = updated.weights[i] - eta * grads_w[i]
        updated.biases[i] = updated.biases[i] - eta * grads_b[i]
    return updated


def epoch_schedule(num_samples, M, T, rng_or_seed):
    """T mini-batches of M indices, one permutation per epoch.

    A trailing short batch of an epoch is dropped so every batch holds exactly M.
    """
    if M < 1 or T < 0:
        raise ScheduleError("Invalid schedule parameters M=%d T=%d" % (M, T))
    if M > num_samples:
        raise ScheduleError("Batch size %d exceeds number of samples %d" % (M, num_samples))

    if isinstance(rng_or_seed, np.random.Generator):
        rng = rng_or_seed
        seed = None
    else:
        seed = rng_or_seed
        rng = np.random.default_rng(seed)

    per_epoch = num_samples // M
    if num_samples % M:
        log.debug("Dropping %d samples at the end of each epoch", num_samples % M)

    batches = []
    while len(batches) < T:
        perm = rng.permutation(num_samples)
        for k in range(per_epoch):
            if len(batches) == T:
                break
            batches.append(perm[k * M:(k + 1) * M])

    return MiniBatchSchedule(batches, seed, num_samples, M)


def predict_label(a_out):
    return np.argmax(a_out, axis=-1)
