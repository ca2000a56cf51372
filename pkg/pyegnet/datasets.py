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
"""Dataset ingestion: MNIST IDX files, the Iris CSV and synthetic blobs.

Every loader returns (train, test) Dataset pairs whose rows are samples;
targets are one-hot rows.
"""
import csv
import gzip
import logging
import os
import struct
from collections import namedtuple

import numpy as np

from pyegnet import rng as rngs
from pyegnet.exception import ConfigurationError, DataFormatError

log = logging.getLogger(__name__)

MNIST_IMAGE_MAGIC = 2051
MNIST_LABEL_MAGIC = 2049
MNIST_COUNTS = (60000, 10000)
MNIST_FILES = {
    'train': ('train-images-idx3-ubyte', 'train-labels-idx1-ubyte'),
    'test': ('t10k-images-idx3-ubyte', 't10k-labels-idx1-ubyte'),
}

IRIS_ROWS = 150
IRIS_FEATURES = 4
IRIS_TEST_FRACTION = 0.2


class Dataset(namedtuple('Dataset', 'X Y')):
    __slots__ = ()

    def __len__(self):
        return self.X.shape[0]

    @property
    def labels(self):
        return np.argmax(self.Y, axis=1)

    @property
    def num_features(self):
        return self.X.shape[1]

    @property
    def num_classes(self):
        return self.Y.shape[1]


def one_hot(labels, num_classes):
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise DataFormatError("Labels outside [0, %d)" % num_classes)
    return np.eye(num_classes)[labels]


def _open(path):
    """Open plain or gzipped files alike; 'name' also finds 'name.gz'"""
    if not os.path.exists(path) and os.path.exists(path + '.gz'):
        path = path + '.gz'
    try:
        with open(path, 'rb') as f:
            gzipped = f.read(2) == b'\x1f\x8b'
        return gzip.open(path, 'rb') if gzipped else open(path, 'rb')
    except OSError as e:
        raise DataFormatError("Cannot open %s: %s" % (path, e))


def _read_be32(f, count, path):
    data = f.read(4 * count)
    if len(data) != 4 * count:
        raise DataFormatError("Truncated IDX header in %s" % path)
    return struct.unpack('>%dl' % count, data)


def read_idx_images(path):
    """uint8 images of an IDX3 file as an (count, rows*cols) array"""
    with _open(path) as f:
        magic, count, rows, cols = _read_be32(f, 4, path)
        if magic != MNIST_IMAGE_MAGIC:
            raise DataFormatError("Bad image magic %d in %s, expected %d" % (magic, path, MNIST_IMAGE_MAGIC))
        data = f.read()

    if len(data) != count * rows * cols:
        raise DataFormatError("Image file %s holds %d bytes, header announces %d"
                              % (path, len(data), count * rows * cols))
    return np.frombuffer(data, dtype=np.uint8).reshape(count, rows * cols)


def read_idx_labels(path):
    with _open(path) as f:
        magic, count = _read_be32(f, 2, path)
        if magic != MNIST_LABEL_MAGIC:
            raise DataFormatError("Bad label magic %d in %s, expected %d" % (magic, path, MNIST_LABEL_MAGIC))
        data = f.read()

    if len(data) != count:
        raise DataFormatError("Label file %s holds %d labels, header announces %d" % (path, len(data), count))
    return np.frombuffer(data, dtype=np.uint8)


def _mnist_part(path, part):
    image_name, label_name = MNIST_FILES[part]
    images = read_idx_images(os.path.join(path, image_name))
    labels = read_idx_labels(os.path.join(path, label_name))
    if images.shape[0] != labels.shape[0]:
        raise DataFormatError("MNIST %s set has %d images but %d labels" % (part, images.shape[0], labels.shape[0]))
    return Dataset(images.astype(float) / 255.0, one_hot(labels, 10))


def load_mnist(path):
    """(train, test) from the four IDX files in directory path, pixels scaled to [0,1]"""
    train = _mnist_part(path, 'train')
    test = _mnist_part(path, 'test')
    if (len(train), len(test)) != MNIST_COUNTS:
        log.warning("MNIST at %s has %d/%d samples, the full set has %d/%d",
                    path, len(train), len(test), MNIST_COUNTS[0], MNIST_COUNTS[1])
    log.info("Loaded MNIST from %s: %d train, %d test", path, len(train), len(test))
    return train, test


def _parse_iris(path):
    features = []
    names = []
    try:
        with open(path, newline='') as f:
            for lineno, row in enumerate(csv.reader(f), 1):
                row = [c.strip() for c in row]
                if not row or not any(row):
                    continue
                if len(row) != IRIS_FEATURES + 1:
                    raise DataFormatError("%s:%d: expected %d columns, got %d"
                                          % (path, lineno, IRIS_FEATURES + 1, len(row)))
                try:
                    values = [float(c) for c in row[:IRIS_FEATURES]]
                except ValueError:
                    if lineno == 1 and not features:
                        # header
                        continue
                    raise DataFormatError("%s:%d: non-numeric feature in %r" % (path, lineno, row))
                features.append(values)
                names.append(row[IRIS_FEATURES])
    except OSError as e:
        raise DataFormatError("Cannot read %s: %s" % (path, e))

    classes = sorted(set(names))
    index = dict((name, i) for i, name in enumerate(classes))
    return np.array(features, dtype=float), np.array([index[n] for n in names], dtype=np.int64), classes


def stratified_split(labels, test_fraction, rng):
    """(train indices, test indices) taking round(test_fraction * n_c) of every class c into the test set"""
    train = []
    test = []
    for c in np.unique(labels):
        members = rng.permutation(np.flatnonzero(labels == c))
        n_test = int(round(len(members) * test_fraction))
        test.append(members[:n_test])
        train.append(members[n_test:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def standardize(train_X, test_X):
    """Scale both sets with the training mean and standard deviation"""
    mean = train_X.mean(axis=0)
    std = train_X.std(axis=0)
    std[std == 0] = 1.0
    return (train_X - mean) / std, (test_X - mean) / std


def load_iris(path, seed=0):
    """(train, test) of 120/30 with a stratified split deterministic in seed"""
    X, labels, classes = _parse_iris(path)
    if X.shape[0] != IRIS_ROWS or len(classes) != 3:
        raise DataFormatError("Iris file %s has %d rows and %d classes, expected %d and 3"
                              % (path, X.shape[0], len(classes), IRIS_ROWS))

    train_idx, test_idx = stratified_split(labels, IRIS_TEST_FRACTION, rngs.stream(seed, 'split'))
    train_X, test_X = standardize(X[train_idx], X[test_idx])
    log.info("Loaded Iris from %s: %d train, %d test (split seed %d)", path, len(train_idx), len(test_idx), seed)
    return (Dataset(train_X, one_hot(labels[train_idx], 3)),
            Dataset(test_X, one_hot(labels[test_idx], 3)))


def synthetic_blobs(features, classes, train_size, test_size, seed=0, spread=0.5):
    """Gaussian clusters around random unit centers, one class per cluster"""
    if features < 1 or classes < 2 or train_size < 1 or test_size < 1:
        raise ConfigurationError("Invalid synthetic dataset %dx%d with %d/%d samples"
                                 % (features, classes, train_size, test_size))
    rng = rngs.stream(seed, 'split')
    centers = rng.standard_normal((classes, features))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)

    def draw(n):
        labels = rng.integers(0, classes, size=n)
        X = centers[labels] + spread * rng.standard_normal((n, features)) / np.sqrt(features)
        return Dataset(X, one_hot(labels, classes))

    return draw(train_size), draw(test_size)


def load_dataset(cfg):
    """(train, test) as described by the dataset section of a RunConfig"""
    kind = cfg.get('dataset:kind')
    seed = int(cfg.get('dataset:split_seed', 0))
    if kind == 'mnist':
        train, test = load_mnist(cfg.get('dataset:path'))
    elif kind == 'iris':
        train, test = load_iris(cfg.get('dataset:path'), seed)
    elif kind == 'synthetic':
        layers = cfg.layers
        train, test = synthetic_blobs(cfg.get('dataset:features', layers[0]),
                                      cfg.get('dataset:classes', layers[-1]),
                                      cfg.get('dataset:train_size', 200),
                                      cfg.get('dataset:test_size', 50),
                                      seed, cfg.get('dataset:spread', 0.5))
    else:
        raise ConfigurationError("Unknown dataset kind '%s'" % kind)

    layers = cfg.layers
    if train.num_features != layers[0] or train.num_classes != layers[-1]:
        raise ConfigurationError("Dataset %s has %d features and %d classes, network:layers is %r"
                                 % (kind, train.num_features, train.num_classes, layers))
    return train, test
