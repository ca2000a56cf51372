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
"""On-disk formats.

l2 tree snapshot (little endian):

    "L2BST1"  magic, 6 bytes
    u64       capacity
    u64       size
    f64 * capacity  leaves (signed values, not squares)

Weight history:

    "WHIST1"  magic, 6 bytes
    u32 L, u32 M, u32 mode (0 full, 1 norms), u32 rank (0 when not low rank)
    per layer l = 2..L:
        u32 l, u32 n_out, u32 n_in, u32 rows, u32 has_base
        array base (if has_base), array x_fro2, array xt_fro2
        per row tau: u64 record length, then
            i64 tau, f64 eta, array a_norms, array d_norms
            [array A, array D]  (full mode only, row-major M x n)

where array is a u64 element count followed by that many f64.

A model directory holds config.yaml (the run configuration), params.npz
(shadow weights, biases, completed iteration, R-factor telemetry),
history.whist and weight_trees.l2bst (one tree snapshot per weight row).
"""
import io
import logging
import os
import struct

import numpy as np

from pyegnet.config import RunConfig
from pyegnet.estimators.base import EstimatorSpec
from pyegnet.exception import DataFormatError
from pyegnet.implicit import MODE_FULL, MODE_NORMS, LayerHistory, WeightHistory
from pyegnet.l2bst import L2Bst
from pyegnet.network import NetworkParameters
from pyegnet.telemetry.rfactors import RFactorSeries
from pyegnet.training import TrainedModel, TrainingConfig

log = logging.getLogger(__name__)

TREE_MAGIC = b'L2BST1'
HISTORY_MAGIC = b'WHIST1'
MODES = (MODE_FULL, MODE_NORMS)

CONFIG_FILE = 'config.yaml'
PARAMS_FILE = 'params.npz'
HISTORY_FILE = 'history.whist'
TREES_FILE = 'weight_trees.l2bst'


def _read_exact(f, n):
    data = f.read(n)
    if len(data) != n:
        raise DataFormatError("Truncated checkpoint: wanted %d bytes, got %d" % (n, len(data)))
    return data


def _unpack(f, fmt):
    return struct.unpack(fmt, _read_exact(f, struct.calcsize(fmt)))


def _write_array(f, arr):
    arr = np.ascontiguousarray(arr, dtype='<f8').ravel()
    f.write(struct.pack('<Q', arr.size))
    f.write(arr.tobytes())


def _read_array(f, shape=None):
    count, = _unpack(f, '<Q')
    arr = np.frombuffer(_read_exact(f, 8 * count), dtype='<f8').astype(float)
    if shape is not None:
        if int(np.prod(shape)) != count:
            raise DataFormatError("Array of %d values does not fit shape %s" % (count, shape))
        arr = arr.reshape(shape)
    return arr


def write_tree(f, tree):
    f.write(TREE_MAGIC)
    f.write(struct.pack('<QQ', tree.capacity, tree.size))
    f.write(np.ascontiguousarray(tree.leaves, dtype='<f8').tobytes())


def read_tree(f):
    magic = f.read(len(TREE_MAGIC))
    if magic != TREE_MAGIC:
        raise DataFormatError("Bad l2 tree magic %r" % (magic,))
    capacity, size = _unpack(f, '<QQ')
    if size < 1 or size > capacity:
        raise DataFormatError("l2 tree snapshot with size %d and capacity %d" % (size, capacity))
    leaves = np.frombuffer(_read_exact(f, 8 * capacity), dtype='<f8')
    return L2Bst(leaves[:size], capacity=capacity)


def _write_layer(f, h):
    f.write(struct.pack('<IIIII', h.l, h.n_out, h.n_in, h.num_rows, 0 if h.base is None else 1))
    if h.base is not None:
        _write_array(f, h.base)
    _write_array(f, h.x_fro2)
    _write_array(f, h.xt_fro2)

    for tau in range(h.num_rows):
        rec = io.BytesIO()
        rec.write(struct.pack('<qd', tau, h.etas[tau]))
        _write_array(rec, h.a_norms[tau])
        _write_array(rec, h.d_norms[tau])
        if h.mode == MODE_FULL:
            _write_array(rec, h.a_rows[tau])
            _write_array(rec, h.d_rows[tau])
        payload = rec.getvalue()
        f.write(struct.pack('<Q', len(payload)))
        f.write(payload)


def _read_layer(f, M, mode):
    l, n_out, n_in, rows, has_base = _unpack(f, '<IIIII')
    base = _read_array(f, (n_out, n_in)) if has_base else None
    h = LayerHistory(l, n_out, n_in, M, mode, base=base)
    h.x_fro2 = _read_array(f, (n_out,))
    h.xt_fro2 = _read_array(f, (n_in,))

    for expected in range(rows):
        length, = _unpack(f, '<Q')
        rec = io.BytesIO(_read_exact(f, length))
        tau, eta = _unpack(rec, '<qd')
        if tau != expected:
            raise DataFormatError("Layer %d history row %d found where %d was expected" % (l, tau, expected))
        h.etas.append(eta)
        h.a_norms.append(_read_array(rec, (M,)))
        h.d_norms.append(_read_array(rec, (M,)))
        if mode == MODE_FULL:
            h.a_rows.append(_read_array(rec, (M, n_in)))
            h.d_rows.append(_read_array(rec, (M, n_out)))
    return h


def write_history(f, history):
    f.write(HISTORY_MAGIC)
    f.write(struct.pack('<IIII', history.arch.L, history.M, MODES.index(history.mode), history.rank or 0))
    for l in range(2, history.arch.L + 1):
        _write_layer(f, history.layer(l))


def read_history(f, arch):
    magic = f.read(len(HISTORY_MAGIC))
    if magic != HISTORY_MAGIC:
        raise DataFormatError("Bad history magic %r" % (magic,))
    L, M, mode, rank = _unpack(f, '<IIII')
    if L != arch.L or mode >= len(MODES):
        raise DataFormatError("History for %d layers (mode %d) does not match %r" % (L, mode, arch))

    history = WeightHistory(arch, M, MODES[mode])
    history.rank = rank or None
    for l in range(2, L + 1):
        h = _read_layer(f, M, history.mode)
        if h.l != l or (h.n_out, h.n_in) != (arch.n(l), arch.n(l - 1)):
            raise DataFormatError("History layer %d of shape %dx%d does not match %r" % (h.l, h.n_out, h.n_in, arch))
        history.layers[l] = h
    return history


def save_model(path, model, run_config):
    """Write a model directory; existing files are replaced"""
    os.makedirs(path, exist_ok=True)
    with open(os.path.join(path, CONFIG_FILE), 'w') as f:
        f.write(run_config.dump())

    arrays = {'iteration': np.array(model.iteration)}
    for l in range(2, model.arch.L + 1):
        arrays['W%d' % l] = model.params.W(l)
        arrays['b%d' % l] = model.params.b(l)
    telemetry = model.telemetry
    arrays['telemetry'] = np.array(telemetry.rows, dtype=float).reshape(-1, len(RFactorSeries.COLUMNS))
    arrays['evaluations'] = np.array(telemetry.evaluations, dtype=float).reshape(-1, 2)
    np.savez(os.path.join(path, PARAMS_FILE), **arrays)

    with open(os.path.join(path, HISTORY_FILE), 'wb') as f:
        write_history(f, model.history)

    with open(os.path.join(path, TREES_FILE), 'wb') as f:
        for l in range(2, model.arch.L + 1):
            for row in model.params.W(l):
                write_tree(f, L2Bst(row))

    log.info("Saved model at iteration %d to %s", model.iteration, path)


def load_model(path):
    """(TrainedModel, RunConfig) from a model directory"""
    if not os.path.isdir(path):
        raise DataFormatError("No model directory at %s" % path)
    try:
        run_config = RunConfig.load(os.path.join(path, CONFIG_FILE))
        params_data = np.load(os.path.join(path, PARAMS_FILE))
    except (OSError, ValueError) as e:
        raise DataFormatError("Cannot read model in %s: %s" % (path, e))

    config = TrainingConfig.from_config(run_config, EstimatorSpec.from_config(run_config))
    arch = config.arch
    try:
        weights = [params_data['W%d' % l] for l in range(2, arch.L + 1)]
        biases = [params_data['b%d' % l] for l in range(2, arch.L + 1)]
        iteration = int(params_data['iteration'])
        rows = params_data['telemetry']
        evaluations = params_data['evaluations']
    except KeyError as e:
        raise DataFormatError("Model in %s lacks %s" % (path, e))

    params = NetworkParameters(arch, weights, biases)
    with open(os.path.join(path, HISTORY_FILE), 'rb') as f:
        history = read_history(f, arch)
    if history.num_rows != iteration + 1:
        raise DataFormatError("History holds %d rows but the model completed %d iterations" % (history.num_rows, iteration))

    telemetry = RFactorSeries()
    telemetry.rows = [(int(r[0]),) + tuple(float(v) for v in r[1:-1]) + (bool(r[-1]),) for r in rows]
    telemetry.evaluations = [(float(re), float(re_cl)) for re, re_cl in evaluations]

    model = TrainedModel(config, params, history, telemetry, iteration)
    trees_path = os.path.join(path, TREES_FILE)
    if os.path.exists(trees_path):
        with open(trees_path, 'rb') as f:
            for l in range(2, arch.L + 1):
                trees = [read_tree(f) for _ in range(arch.n(l))]
                model.restore_weight_trees(l, [t if t.norm_squared() > 0 else None for t in trees])

    log.info("Loaded model at iteration %d from %s", iteration, path)
    return model, run_config
