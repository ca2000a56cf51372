# vim: set expandtab sw=4 softtabstop=4 fileencoding=utf8 :

import gzip
import os
import shutil
import struct
import tempfile
import unittest

import numpy as np
import numpy.testing as npt

from pyegnet.config import RunConfig
from pyegnet.datasets import *
from pyegnet.exception import ConfigurationError, DataFormatError

IRIS_CLASSES = ('Iris-setosa', 'Iris-versicolor', 'Iris-virginica')


def write_idx_images(path, images, magic=MNIST_IMAGE_MAGIC, opener=open):
    count, rows, cols = images.shape
    with opener(path, 'wb') as f:
        f.write(struct.pack('>4l', magic, count, rows, cols))
        f.write(images.astype(np.uint8).tobytes())


def write_idx_labels(path, labels, magic=MNIST_LABEL_MAGIC, opener=open):
    with opener(path, 'wb') as f:
        f.write(struct.pack('>2l', magic, len(labels)))
        f.write(np.asarray(labels, dtype=np.uint8).tobytes())


def write_iris(path, rows_per_class=50, header=True, seed=0):
    rng = np.random.default_rng(seed)
    with open(path, 'w') as f:
        if header:
            f.write('sepal_length,sepal_width,petal_length,petal_width,species\n')
        for c, name in enumerate(IRIS_CLASSES):
            for _ in range(rows_per_class):
                values = rng.normal(loc=2.0 * c + 1.0, scale=0.3, size=4)
                f.write(','.join('%.2f' % v for v in values) + ',%s\n' % name)
        f.write('\n')


class DatasetTest(unittest.TestCase):
    def testOneHot(self):
        npt.assert_array_equal(one_hot([2, 0], 3), [[0, 0, 1], [1, 0, 0]])
        self.assertRaises(DataFormatError, one_hot, [3], 3)
        self.assertRaises(DataFormatError, one_hot, [-1], 3)

    def testAccessors(self):
        ds = Dataset(np.arange(6.0).reshape(3, 2), one_hot([1, 0, 1], 2))
        self.assertEqual(len(ds), 3)
        self.assertEqual(ds.num_features, 2)
        self.assertEqual(ds.num_classes, 2)
        npt.assert_array_equal(ds.labels, [1, 0, 1])

    def testStratifiedSplit(self):
        labels = np.repeat([0, 1, 2], 50)
        train, test = stratified_split(labels, 0.2, np.random.default_rng(0))
        self.assertEqual(len(train), 120)
        self.assertEqual(len(test), 30)
        self.assertEqual(len(set(train) & set(test)), 0)
        npt.assert_array_equal(np.bincount(labels[test]), [10, 10, 10])

    def testStandardize(self):
        train, test = standardize(np.array([[1.0, 5.0], [3.0, 5.0]]), np.array([[2.0, 6.0]]))
        npt.assert_allclose(train, [[-1.0, 0.0], [1.0, 0.0]])
        npt.assert_allclose(test, [[0.0, 1.0]])


class MnistTest(unittest.TestCase):
    def setUp(self):
        self.path = tempfile.mkdtemp()
        rng = np.random.default_rng(0)
        self.images = {'train': rng.integers(0, 256, size=(5, 28, 28)), 'test': rng.integers(0, 256, size=(3, 28, 28))}
        self.labels = {'train': [0, 1, 2, 9, 4], 'test': [7, 7, 1]}

    def tearDown(self):
        shutil.rmtree(self.path)

    def write(self, opener=open, suffix=''):
        for part, (image_name, label_name) in MNIST_FILES.items():
            write_idx_images(os.path.join(self.path, image_name + suffix), self.images[part], opener=opener)
            write_idx_labels(os.path.join(self.path, label_name + suffix), self.labels[part], opener=opener)

    def testLoad(self):
        self.write()
        with self.assertLogs('pyegnet.datasets', level='WARNING'):
            train, test = load_mnist(self.path)
        self.assertEqual(train.X.shape, (5, 784))
        self.assertEqual(test.Y.shape, (3, 10))
        npt.assert_array_equal(train.labels, [0, 1, 2, 9, 4])
        npt.assert_allclose(train.X[1], self.images['train'][1].ravel() / 255.0)
        self.assertTrue(0.0 <= train.X.min() and train.X.max() <= 1.0)

    def testGzip(self):
        self.write(opener=gzip.open, suffix='.gz')
        train, test = load_mnist(self.path)
        npt.assert_array_equal(test.labels, [7, 7, 1])

    def testGzipUnderPlainName(self):
        self.write(opener=gzip.open)
        _, test = load_mnist(self.path)
        self.assertEqual(len(test), 3)

    def testBadMagic(self):
        fn = os.path.join(self.path, 'images')
        write_idx_images(fn, self.images['test'], magic=2049)
        self.assertRaises(DataFormatError, read_idx_images, fn)
        fn = os.path.join(self.path, 'labels')
        write_idx_labels(fn, self.labels['test'], magic=2051)
        self.assertRaises(DataFormatError, read_idx_labels, fn)

    def testTruncated(self):
        fn = os.path.join(self.path, 'images')
        write_idx_images(fn, self.images['test'])
        with open(fn, 'rb+') as f:
            f.truncate(16 + 784 * 2)
        self.assertRaises(DataFormatError, read_idx_images, fn)
        with open(fn, 'rb+') as f:
            f.truncate(10)
        self.assertRaises(DataFormatError, read_idx_images, fn)

    def testCountMismatch(self):
        self.write()
        image_name, label_name = MNIST_FILES['test']
        write_idx_labels(os.path.join(self.path, label_name), [1, 2])
        self.assertRaises(DataFormatError, load_mnist, self.path)

    def testMissing(self):
        self.assertRaises(DataFormatError, read_idx_labels, os.path.join(self.path, 'nothing'))


class IrisTest(unittest.TestCase):
    def setUp(self):
        self.path = tempfile.mkdtemp()
        self.fn = os.path.join(self.path, 'iris.csv')

    def tearDown(self):
        shutil.rmtree(self.path)

    def testSplit(self):
        write_iris(self.fn)
        train, test = load_iris(self.fn, seed=0)
        self.assertEqual(len(train), 120)
        self.assertEqual(len(test), 30)
        npt.assert_array_equal(np.bincount(train.labels), [40, 40, 40])
        npt.assert_array_equal(np.bincount(test.labels), [10, 10, 10])
        npt.assert_allclose(train.X.mean(axis=0), 0.0, atol=1e-12)
        npt.assert_allclose(train.X.std(axis=0), 1.0)

    def testSeedDeterminesSplit(self):
        write_iris(self.fn, header=False)
        a, _ = load_iris(self.fn, seed=0)
        b, _ = load_iris(self.fn, seed=0)
        c, _ = load_iris(self.fn, seed=1)
        npt.assert_array_equal(a.X, b.X)
        self.assertFalse(np.array_equal(a.X, c.X))

    def testWrongRowCount(self):
        write_iris(self.fn, rows_per_class=40)
        self.assertRaises(DataFormatError, load_iris, self.fn)

    def testBadRows(self):
        with open(self.fn, 'w') as f:
            f.write('5.1,3.5,1.4,Iris-setosa\n')
        self.assertRaises(DataFormatError, load_iris, self.fn)
        with open(self.fn, 'w') as f:
            f.write('5.1,3.5,1.4,0.2,Iris-setosa\n5.1,x,1.4,0.2,Iris-setosa\n')
        self.assertRaises(DataFormatError, load_iris, self.fn)
        self.assertRaises(DataFormatError, load_iris, os.path.join(self.path, 'missing.csv'))


class SyntheticTest(unittest.TestCase):
    def testShapes(self):
        train, test = synthetic_blobs(5, 4, 100, 20, seed=1)
        self.assertEqual(train.X.shape, (100, 5))
        self.assertEqual(test.Y.shape, (20, 4))
        npt.assert_array_equal(train.Y.sum(axis=1), 1.0)

    def testDeterministic(self):
        a, _ = synthetic_blobs(3, 2, 10, 5, seed=2)
        b, _ = synthetic_blobs(3, 2, 10, 5, seed=2)
        npt.assert_array_equal(a.X, b.X)

    def testInvalid(self):
        self.assertRaises(ConfigurationError, synthetic_blobs, 3, 1, 10, 5)
        self.assertRaises(ConfigurationError, synthetic_blobs, 3, 2, 0, 5)


class LoadDatasetTest(unittest.TestCase):
    def testSynthetic(self):
        cfg = RunConfig.parse("dataset: {kind: synthetic, train_size: 30, test_size: 10}\n"
                              "network: {layers: [4, 6, 3]}\n")
        train, test = load_dataset(cfg)
        self.assertEqual(train.X.shape, (30, 4))
        self.assertEqual(test.Y.shape, (10, 3))

    def testLayerMismatch(self):
        cfg = RunConfig.parse("dataset: {kind: synthetic, features: 5}\nnetwork: {layers: [4, 6, 3]}\n")
        self.assertRaises(ConfigurationError, load_dataset, cfg)

    def testUnknownKind(self):
        cfg = RunConfig.parse("dataset: {kind: cifar}\n")
        self.assertRaises(ConfigurationError, load_dataset, cfg)


if __name__ == '__main__':
    unittest.main()
