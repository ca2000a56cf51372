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
"""(epsilon, gamma) feedforward, backpropagation, training and evaluation.

Every inner product a layer needs goes through an InnerProductEstimator,
one block per layer: the rows of W^l against the batch of activations in the
feedforward pass, the columns of W^{l+1} against the batch of deltas in the
backward pass. Explicit shadow weights are updated alongside the implicit
history and serve as the exact oracle.
"""
import logging
import time

import numpy as np

from pyegnet import rng as rngs
from pyegnet.estimators.base import WeightOperand
from pyegnet.exception import ConfigurationError, EmptyBatchError, ShapeError
from pyegnet.implicit import MODE_FULL, WeightHistory, choose_history_mode, default_rank
from pyegnet.l2bst import L2Bst
from pyegnet.network import (Architecture, NetworkParameters, activation_apply, activation_derivative,
                             cost_mse, epoch_schedule, output_delta, predict_label, sgd_update)
from pyegnet.stats import RunStatistics
from pyegnet.telemetry import rfactors
from pyegnet.telemetry.events import EvaluationEvent, IterationEvent

# contract violations above gamma plus this margin are warned about
CONTRACT_MARGIN = 0.02


class TrainingConfig(object):
    def __init__(self, arch, T, M, eta, estimator_spec, init='standard', rank=None, activation='tanh',
                 cost='mse', seed=1, history_mode='auto', slow=False, full_batch_interval=50,
                 log_interval=100, check_contract=True):
        self.arch = arch
        self.T = int(T)
        self.M = int(M)
        self.eta = float(eta)
        self.estimator_spec = estimator_spec
        self.init = init
        self.rank = rank
        self.activation = activation
        self.cost = cost
        self.seed = int(seed)
        self.history_mode = history_mode
        self.slow = slow
        self.full_batch_interval = int(full_batch_interval)
        self.log_interval = int(log_interval)
        self.check_contract = check_contract

        if self.T < 0 or self.M < 1:
            raise ConfigurationError("Need T >= 0 and M >= 1, got T=%d M=%d" % (self.T, self.M))
        if not self.eta > 0:
            raise ConfigurationError("Learning rate must be > 0, got %g" % self.eta)
        if cost != 'mse':
            raise ConfigurationError("Unsupported cost '%s'" % cost)
        if init == 'low_rank' and self.rank is None:
            self.rank = min(self.M, default_rank(max(arch.layer_sizes[1:])))

    @classmethod
    def from_config(cls, cfg, estimator_spec):
        return cls(Architecture(cfg.layers),
                   cfg.get('training:iterations'),
                   cfg.get('training:batch_size'),
                   cfg.get('training:learning_rate'),
                   estimator_spec,
                   init=cfg.get('network:init', 'standard'),
                   rank=cfg.get('network:rank'),
                   activation=cfg.get('network:activation', 'tanh'),
                   cost=cfg.get('network:cost', 'mse'),
                   seed=cfg.get('seed', 1),
                   history_mode=cfg.get('training:history_mode', 'auto'),
                   slow=cfg.get('training:slow', False),
                   full_batch_interval=cfg.get('telemetry:full_batch_interval', 50),
                   log_interval=cfg.get('telemetry:log_interval', 100),
                   check_contract=cfg.get('telemetry:check_contract', True))

    def resolved_history_mode(self):
        mode = choose_history_mode(self.history_mode, max(1, self.T), self.M, self.arch.N)
        if self.estimator_spec.kind == 'dequantized_implicit' and mode != 'full':
            raise ConfigurationError("dequantized_implicit needs the full history, not '%s'" % mode)
        return mode


class TrainedModel(object):
    """Shadow parameters, update history and telemetry of a (partially) trained network"""
    def __init__(self, config, params, history, telemetry=None, iteration=0):
        self.config = config
        self.params = params
        self.history = history
        self.telemetry = telemetry or rfactors.RFactorSeries()
        self.iteration = iteration
        self.row_norms = {}
        self.col_norms = {}
        self._weight_trees = {}

    @property
    def arch(self):
        return self.params.arch

    @property
    def shadow_weights(self):
        return self.params.weights

    @property
    def biases(self):
        return self.params.biases

    @property
    def activation(self):
        return self.config.activation

    @classmethod
    def initialize(cls, config):
        arch = config.arch
        mode = config.resolved_history_mode()
        if config.init == 'low_rank':
            history = WeightHistory.low_rank_init(arch, config.rank, config.M,
                                                  rngs.stream(config.seed, 'init'), mode)
            if mode == MODE_FULL:
                weights = history.initial_weights()
            else:
                # norms-only histories drop the pairs; replay the same stream into a full one
                weights = WeightHistory.low_rank_init(arch, config.rank, config.M,
                                                      rngs.stream(config.seed, 'init')).initial_weights()
            biases = [np.zeros(arch.n(l)) for l in range(2, arch.L + 1)]
            params = NetworkParameters(arch, weights, biases)
        elif config.init == 'standard':
            params = NetworkParameters.standard(arch, rngs.stream(config.seed, 'init'))
            history = WeightHistory.from_parameters(params, config.M, mode)
        else:
            raise ConfigurationError("Unknown initialization '%s'" % config.init)
        return cls(config, params, history)

    def weight_trees(self, l):
        """l2 trees over the rows of W^l, rebuilt whenever the weights moved"""
        cached = self._weight_trees.get(l)
        if cached is None or cached[0] != self.iteration:
            trees = [L2Bst(row) if np.any(row) else None for row in self.params.W(l)]
            cached = self._weight_trees[l] = (self.iteration, trees)
        return cached[1]

    def restore_weight_trees(self, l, trees):
        if len(trees) != self.arch.n(l):
            raise ShapeError("Layer %d has %d rows, got %d trees" % (l, self.arch.n(l), len(trees)))
        self._weight_trees[l] = (self.iteration, trees)

    def row_operand(self, l, kind, evaluation=False):
        """Rows of W^l; at evaluation the weights are frozen so norm estimates are left to the estimator"""
        W = self.params.W(l)
        if kind == 'dequantized_implicit':
            return WeightOperand(W, implicit=self.history.implicit_row(l))
        if evaluation:
            return WeightOperand(W, trees=self.weight_trees(l) if kind == 'dequantized_explicit' else None)
        return WeightOperand(W, norms=self.row_norms.get(l))

    def col_operand(self, l, kind):
        """Columns of W^l, i.e. rows of its transpose"""
        Wt = self.params.W(l).T
        if kind == 'dequantized_implicit':
            return WeightOperand(Wt, implicit=self.history.implicit_col(l))
        return WeightOperand(Wt, norms=self.col_norms.get(l))

    def refresh_norms(self, t, xi, rng, stats=None):
        """Row/column norm estimates of every layer for the batch starting at iteration t"""
        for l in range(2, self.arch.L + 1):
            self.row_norms[l], self.col_norms[l] = self.history.estimate_norms(
                t, l, self.params.W(l), xi, rng, stats, stale_at=t + 1)

    def record_iteration(self, t, a, delta):
        for l in range(2, self.arch.L + 1):
            self.history.record_iteration(t, l, self.config.eta, np.atleast_2d(a[l - 2]),
                                          np.atleast_2d(delta[l - 1]))


def _layer_rng(rng, l):
    return rng(l) if callable(rng) else rng


def _as_batch(x):
    x = np.asarray(x, dtype=float)
    return (x[None, :], True) if x.ndim == 1 else (x, False)


def _feedforward(model, A1, estimator, rng, evaluation=False):
    if A1.shape[1] != model.arch.n(1):
        raise ShapeError("Input has %d features, network expects %d" % (A1.shape[1], model.arch.n(1)))
    s = [None]
    z = [None]
    a = [A1]
    for l in range(2, model.arch.L + 1):
        operand = model.row_operand(l, estimator.kind, evaluation)
        sl = estimator.estimate_block(operand, a[-1], _layer_rng(rng, l))
        zl = sl + model.params.b(l)
        s.append(sl)
        z.append(zl)
        a.append(activation_apply(model.activation, zl))
    return s, z, a


def eg_feedforward(model, x, estimator, rng):
    """(s, z, a) per layer with every <W_j, a> estimated; x may be one sample or a batch"""
    A1, single = _as_batch(x)
    s, z, a = _feedforward(model, A1, estimator, rng)
    if single:
        return [v if v is None else v[0] for v in s], [v if v is None else v[0] for v in z], [v[0] for v in a]
    return s, z, a


def _backprop(model, y, z, a, estimator, rng):
    L = model.arch.L
    if len(z) != L or len(a) != L:
        raise ShapeError("Expected %d layers of z and a, got %d and %d" % (L, len(z), len(a)))
    delta = [None] * L
    s = [None] * L
    delta[L - 1] = output_delta(y, z[L - 1], a[L - 1], model.activation)
    for l in range(L - 1, 1, -1):
        operand = model.col_operand(l + 1, estimator.kind)
        s[l - 1] = estimator.estimate_block(operand, np.atleast_2d(delta[l]), _layer_rng(rng, l))
        delta[l - 1] = activation_derivative(model.activation, z[l - 1]) * s[l - 1].reshape(np.shape(z[l - 1]))
    return delta, s


def eg_backprop(model, t, y, z, a, estimator, rng, record=True):
    """delta per layer with every <(W^{l+1})^T_j, delta^{l+1}> estimated; records iteration t"""
    delta, _ = _backprop(model, y, z, a, estimator, rng)
    if record:
        model.record_iteration(t, a, delta)
    return delta


def eg_evaluate(model, x, estimator, rng):
    """(output activations, argmax labels) at frozen parameters; R_e goes into the model telemetry"""
    A1, single = _as_batch(x)
    _, _, a = _feedforward(model, A1, estimator, rng, evaluation=True)
    re, re_cl = rfactors.r_e(model.params, a)
    for v, v_cl in zip(re, re_cl):
        model.telemetry.append_evaluation(v, v_cl)
    out = a[-1]
    labels = predict_label(out)
    if single:
        return out[0], int(labels[0])
    return out, labels


def accuracy(model, X, Y, estimator, seed=None, dispatcher=None, chunk=1000):
    """Fraction of points whose argmax label matches the argmax of the one-hot target"""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] == 0:
        raise EmptyBatchError("Cannot measure accuracy on an empty set")
    seed = model.config.seed if seed is None else seed

    correct = 0
    for c, start in enumerate(range(0, X.shape[0], chunk)):
        stop = min(start + chunk, X.shape[0])
        first = len(model.telemetry.evaluations)
        _, labels = eg_evaluate(model, X[start:stop], estimator,
                                lambda l, c=c: rngs.stream(seed, 'eval-estimate', c, l))
        hits = labels == np.argmax(Y[start:stop], axis=1)
        correct += int(hits.sum())

        if dispatcher is not None:
            now = time.time()
            for k in range(stop - start):
                re, re_cl = model.telemetry.evaluations[first + k]
                dispatcher.handle_event(EvaluationEvent(now, start + k, re, re_cl, int(labels[k]), bool(hits[k])))

    return correct / float(X.shape[0])


class Trainer(object):
    """Mini-batch training loop. Each iteration runs one batch through the
    estimated feedforward and backprop, takes telemetry, records the batch
    into the history and only then applies the update."""
    def __init__(self, config, estimator, stats=None, dispatcher=None):
        self.log = logging.getLogger(type(self).__name__)
        self.config = config
        self.estimator = estimator
        self.stats = stats if stats is not None else RunStatistics()
        self.dispatcher = dispatcher
        self.model = None
        self.t = 0
        self._window = [0, 0]

        if estimator.kind in ('dequantized_explicit', 'dequantized_implicit') and not config.slow:
            raise ConfigurationError("Training with %s needs training:slow" % estimator.kind)
        if estimator.kind == 'dequantized_implicit' and config.init != 'low_rank':
            raise ConfigurationError("dequantized_implicit training needs the low_rank initialization")

    def _stream(self, purpose, *keys):
        return rngs.stream(self.config.seed, purpose, *keys)

    def progress(self):
        return {'iteration': self.t, 'iterations': self.config.T, 'statistics': self.stats.snapshot()}

    def train(self, X, Y, model=None):
        """Train on rows of X with one-hot/target rows Y; continue model if given"""
        cfg = self.config
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if X.shape[0] != Y.shape[0]:
            raise ShapeError("%d inputs but %d targets" % (X.shape[0], Y.shape[0]))
        if X.shape[1] != cfg.arch.n(1) or Y.shape[1] != cfg.arch.n(cfg.arch.L):
            raise ShapeError("Dataset shapes %s/%s do not fit %r" % (X.shape, Y.shape, cfg.arch))

        self.model = model if model is not None else TrainedModel.initialize(cfg)
        start = self.model.iteration + 1
        if cfg.T == 0 or start > cfg.T:
            return self.model

        schedule = epoch_schedule(X.shape[0], cfg.M, cfg.T, self._stream('schedule'))
        self.log.info("Training %r for iterations %d..%d with %r, M=%d, eta=%g",
                      cfg.arch, start, cfg.T, self.estimator, cfg.M, cfg.eta)

        for t in range(start, cfg.T + 1):
            idx = schedule.batches[t - 1]
            self.step(t, X[idx], Y[idx])

        return self.model

    def step(self, t, A1, Yb):
        cfg = self.config
        model = self.model
        est = self.estimator
        self.t = t

        if est.kind != 'exact':
            model.refresh_norms(t, est.tol.xi, self._stream('norm-estimate', t), self.stats)

        s, z, a = _feedforward(model, A1, est, lambda l: self._stream('train-estimate', t, l, 0))
        delta, s_back = _backprop(model, Yb, z, a, est, lambda l: self._stream('train-estimate', t, l, 1))

        if cfg.check_contract and est.kind != 'exact':
            self._check_contract(t, a, delta, s, s_back)

        self._telemetry(t, a, delta, float(np.mean(cost_mse(Yb, a[-1]))))

        model.record_iteration(t, a, delta)
        model.params = sgd_update(model.params, [(a, delta)], cfg.eta)
        model.iteration = t
        self.stats.gauge('progress.iteration', t)

    def _check_contract(self, t, a, delta, s, s_back):
        tol = self.estimator.tol
        checked = 0
        violations = 0
        for l in range(2, self.config.arch.L + 1):
            exact = a[l - 2] @ self.model.params.W(l).T
            err = np.abs(s[l - 1] - exact)
            violations += int((err > tol.bound(exact) * (1 + 1e-12)).sum())
            checked += exact.size
        for l in range(2, self.config.arch.L):
            exact = delta[l] @ self.model.params.W(l + 1)
            err = np.abs(s_back[l - 1] - exact)
            violations += int((err > tol.bound(exact) * (1 + 1e-12)).sum())
            checked += exact.size

        self.stats.increment('contract.checked', checked)
        self.stats.increment('contract.violations', violations)
        self._window[0] += checked
        self._window[1] += violations
        if self._window[0] >= 10000:
            rate = self._window[1] / float(self._window[0])
            if rate > tol.gamma + CONTRACT_MARGIN:
                self.log.warning("Contract violation rate %.4f exceeds gamma %.3f at t=%d", rate, tol.gamma, t)
            self._window = [0, 0]

    def _telemetry(self, t, a, delta, batch_cost):
        cfg = self.config
        model = self.model
        arch = cfg.arch
        weights = model.params.weights

        full = cfg.full_batch_interval > 0 and t % cfg.full_batch_interval == 0
        if full:
            a_sel, d_sel = a, delta
        else:
            a_sel = [v[:1] for v in a]
            d_sel = [None if v is None else v[:1] for v in delta]

        ra, ra_cl = rfactors.r_a(model.history, weights, a_sel, arch)
        rd, rd_cl = rfactors.r_delta(model.history, weights, d_sel, arch)
        rwr, rwc = rfactors.r_w(model.history, weights, arch, self.stats)
        values = (float(ra.mean()), float(rd.mean()), rwr, rwc, float(ra_cl.mean()), float(rd_cl.mean()))
        model.telemetry.append(t, *values, full_batch=full)

        if self.dispatcher is not None:
            self.dispatcher.handle_event(IterationEvent(time.time(), t, values[0], values[1], rwr, rwc,
                                                        values[4], values[5], full_batch=full, cost=batch_cost))

        if cfg.log_interval and t % cfg.log_interval == 0:
            self.log.info("Iteration %d/%d: batch cost %.5f, R_a %.3f, R_delta %.3f, R_W %.4f",
                          t, cfg.T, batch_cost, values[0], values[1], rwr + rwc)
