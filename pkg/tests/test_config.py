# vim: set expandtab sw=4 softtabstop=4 fileencoding=utf8 :

import unittest

from pyegnet.config import *
from pyegnet.exception import ConfigurationError


class ResolveKeysTest(unittest.TestCase):
    def testSingleKey(self):
        self.assertEqual(resolve_keys('a:b'), ['a:b'])
        self.assertEqual(resolve_keys('a'), ['a'])
        self.assertEqual(resolve_keys(('a:b',)), ['a:b'])
        self.assertEqual(resolve_keys(1), ['1'])

    def testTupleKeys(self):
        self.assertEqual(resolve_keys(('a', 'b')), ['a:b'])
        self.assertEqual(resolve_keys(['a', 'b:c', 'd']), ['a:b:c:d'])
        self.assertEqual(resolve_keys((1, 2)), ['1:2'])

    def testMultiKeys(self):
        self.assertEqual(resolve_keys(((1, 2), 3)), ['1:3', '2:3'])
        self.assertEqual(resolve_keys((('run', 'training'), 'seed')), ['run:seed', 'training:seed'])

    def testNoneIgnored(self):
        self.assertEqual(resolve_keys((('a', None, '1'), 'b')), ['a:b', '1:b'])

    def testEmpty(self):
        self.assertRaises(ConfigurationError, resolve_keys, ())


class EnhancedMappingTest(unittest.TestCase):
    def testEmpty(self):
        d = EnhancedMapping({})
        self.assertEqual(len(d), 0)
        self.assertEqual(d.get('any'), None)

    def testNested(self):
        d = EnhancedMapping({'a': {'r': 4}, 'b': [9, 8, 7]})
        self.assertIsInstance(d.get('a'), EnhancedMapping)
        self.assertEqual(d.get('a'), {'r': 4})
        self.assertEqual(d.get('b'), [9, 8, 7])
        self.assertEqual(d.get('b:0'), 9)
        self.assertEqual(d.get('b:5'), None)

    def testFallbacks(self):
        d = EnhancedMapping({'a': {'r': 4}, 'b': {'x': 5, 'r': 0}})
        self.assertEqual(d.get('a:x', 99), 99)
        self.assertEqual(d.get('b:r'), 0)
        self.assertEqual(d.get((('a', 'b'), 'x')), 5)
        self.assertEqual(d.get((('c', 'a', 'b'), 'r')), 4)

    def testSet(self):
        d = EnhancedMapping({'a': 1})
        d.set('x:y:z', 3)
        self.assertEqual(d.get('x:y:z'), 3)
        d.set('a:b', 2)
        self.assertEqual(d.get('a'), {'b': 2})


class RunConfigTest(unittest.TestCase):
    def testDefaults(self):
        cfg = RunConfig.parse('')
        self.assertEqual(cfg.layers, [4, 10, 3])
        self.assertEqual(cfg.get('training:batch_size'), 10)
        self.assertEqual(cfg.gamma, 0.05)
        self.assertEqual(cfg.epsilon, 0.0)

    def testMerge(self):
        cfg = RunConfig.parse('training:\n  learning_rate: 0.05\n')
        self.assertEqual(cfg.get('training:learning_rate'), 0.05)
        self.assertEqual(cfg.get('training:iterations'), 1200)

    def testRoundTrip(self):
        cfg = RunConfig.parse('network:\n  layers: [784, 100, 30, 10]\nestimator:\n  kind: gaussian\n  epsilon: 0.3\n')
        again = RunConfig.parse(cfg.dump())
        self.assertEqual(again, cfg)
        self.assertEqual(RunConfig.parse(again.dump()).dump(), cfg.dump())

    def testBadYaml(self):
        self.assertRaises(ConfigurationError, RunConfig.parse, 'a: [1, 2')
        self.assertRaises(ConfigurationError, RunConfig.parse, '- 1\n- 2\n')

    def testOverrides(self):
        cfg = RunConfig.parse('')
        cfg.apply_overrides({'estimator:epsilon': 0.3, 'seed': None})
        self.assertEqual(cfg.epsilon, 0.3)
        self.assertEqual(cfg.get('seed'), 1)

        key, value = parse_override('training:learning_rate=0.5')
        self.assertEqual(key, 'training:learning_rate')
        self.assertEqual(value, 0.5)
        self.assertEqual(parse_override('network:layers=[2, 3]')[1], [2, 3])
        self.assertRaises(ConfigurationError, parse_override, 'no-equals-sign')
        self.assertRaises(ConfigurationError, parse_override, '=3')

    def _valid(self, extra=''):
        return RunConfig.parse('dataset:\n  kind: synthetic\n' + extra)

    def testValidate(self):
        self._valid().validate()
        self._valid('estimator:\n  kind: gaussian\n  epsilon: 0.1\n').validate()

    def testValidateErrors(self):
        bad = [
            'estimator:\n  kind: nope\n',
            'estimator:\n  kind: gaussian\n  epsilon: 0\n',
            'estimator:\n  gamma: 1.5\n',
            'training:\n  batch_size: 0\n',
            'repeats: 0\n',
            'network:\n  layers: [4]\n',
            'network:\n  init: orthogonal\n',
            'network:\n  rank: 20\n',
            'training:\n  history_mode: some\n',
            'estimator:\n  kind: dequantized_explicit\n  epsilon: 0.3\n',
            'estimator:\n  kind: dequantized_implicit\n  epsilon: 0.3\ntraining:\n  slow: true\n',
        ]
        for text in bad:
            self.assertRaises(ConfigurationError, self._valid(text).validate)

        cfg = RunConfig.parse('dataset:\n  kind: iris\n  path: /nonexistent/iris.csv\n')
        self.assertRaises(ConfigurationError, cfg.validate)
        cfg.validate(check_paths=False)

    def testImplicitNeedsLowRank(self):
        text = ('estimator:\n  kind: dequantized_implicit\n  epsilon: 0.3\n'
                'training:\n  slow: true\nnetwork:\n  init: low_rank\n')
        self._valid(text).validate()
        self.assertRaises(ConfigurationError, self._valid(text.replace("slow: true", "slow: true\n  history_mode: norms")).validate)
        self.assertRaises(ConfigurationError, self._valid(text.replace("low_rank", "standard")).validate)
