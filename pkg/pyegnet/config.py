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
"""Experiment configuration.

The configuration is a nested YAML document. Values are addressed with
colon-delimited keys, e.g. 'training:epsilon', and lookups may list
alternatives which are tried in order:

    cfg.get('training:epsilon')
    cfg.get((('eval', 'training'), 'epsilon'))   # eval:epsilon, then training:epsilon
"""
import collections.abc
import copy
import os

import yaml

from pyegnet.exception import ConfigurationError

KEY_DELIM = ':'

ESTIMATOR_KINDS = ('exact', 'gaussian', 'ripe_exact_norms', 'ripe_noisy_norms',
                   'dequantized_explicit', 'dequantized_implicit')

DEFAULTS = {
    'dataset': {
        'kind': 'iris',
        'path': None,
        'split_seed': 0,
    },
    'network': {
        'layers': [4, 10, 3],
        'activation': 'tanh',
        'cost': 'mse',
        'init': 'standard',
        'rank': None,
    },
    'training': {
        'iterations': 1200,
        'batch_size': 10,
        'learning_rate': 0.07,
        'history_mode': 'auto',
        'slow': False,
    },
    'estimator': {
        'kind': 'exact',
        'epsilon': 0.0,
        'gamma': 0.05,
        'xi': None,
        'q': None,
        'max_samples': 20000000,
    },
    'telemetry': {
        'full_batch_interval': 50,
        'log_interval': 100,
        'check_contract': True,
    },
    'output': {
        'dir': 'egnet-out',
    },
    'repeats': 1,
    'seed': 1,
}


def resolve_keys(keys):
    """Expand a key specification into the list of concrete colon-delimited keys to look up.

    A plain string (or int) is a single key. A tuple/list is joined with ':'
    where any nested tuple/list part multiplies the candidates:

        ('a', ('b', 'c'), 'd') -> ['a:b:d', 'a:c:d']

    None parts are skipped.
    """
    if isinstance(keys, (str, int)):
        return [str(keys)]

    if not isinstance(keys, (tuple, list)):
        raise ConfigurationError("Unsupported key type %s" % type(keys))

    if len(keys) == 0:
        raise ConfigurationError("Empty key")

    candidates = ['']
    for part in keys:
        if part is None:
            continue

        if isinstance(part, (str, int)):
            alternatives = [str(part)]
        elif isinstance(part, (tuple, list)):
            alternatives = [str(p) for p in part if p is not None]
        else:
            raise ConfigurationError("Unsupported key part %r (%s)" % (part, type(part)))

        candidates = [(c + KEY_DELIM + a) if c else a
                      for c in candidates for a in alternatives]

    return candidates


def lookup(data, key, default=None):
    """Walk nested dicts/lists following a colon-delimited key"""
    for part in key.split(KEY_DELIM):
        if isinstance(data, list):
            try:
                data = data[int(part)]
            except (ValueError, IndexError):
                return default
        elif isinstance(data, collections.abc.Mapping):
            if part not in data:
                return default
            data = data[part]
        else:
            return default
    return data


def merge(base, override):
    """Deep-merge override onto a copy of base"""
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, collections.abc.Mapping) and isinstance(out.get(k), collections.abc.Mapping):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


class EnhancedMapping(collections.abc.MutableMapping):
    """dict wrapper with colon-delimited, fallback-aware get()"""
    def __init__(self, d=None):
        self.d = d if d is not None else {}

    def get(self, keys, default=None):
        data = None
        for key in resolve_keys(keys):
            data = lookup(self.d, key, None)
            if data is not None:
                break

        if data is None:
            return default

        if isinstance(data, collections.abc.Mapping) and not isinstance(data, EnhancedMapping):
            return EnhancedMapping(data)

        return data

    def set(self, key, value):
        """Set a value at a colon-delimited key, creating intermediate sections"""
        parts = resolve_keys(key)[0].split(KEY_DELIM)
        node = self.d
        for part in parts[:-1]:
            nxt = node.get(part)
            if not isinstance(nxt, collections.abc.MutableMapping):
                nxt = node[part] = {}
            node = nxt
        node[parts[-1]] = value

    def __getitem__(self, k):
        return self.d[k]

    def __setitem__(self, k, v):
        self.d[k] = v

    def __delitem__(self, k):
        del self.d[k]

    def __iter__(self):
        return iter(self.d)

    def __len__(self):
        return len(self.d)

    def __repr__(self):
        return repr(self.d)

    def __eq__(self, other):
        if isinstance(other, EnhancedMapping):
            other = other.d
        return self.d == other


def parse_override(text):
    """Parse a 'section:key=value' override; value follows YAML scalar rules"""
    if '=' not in text:
        raise ConfigurationError("Override '%s' is not in key=value form" % text)

    key, raw = text.split('=', 1)
    key = key.strip()
    if not key:
        raise ConfigurationError("Override '%s' has an empty key" % text)

    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as e:
        raise ConfigurationError("Cannot parse override value '%s': %s" % (raw, e))

    return key, value


class RunConfig(EnhancedMapping):
    """Full run configuration: defaults, file contents and overrides merged"""
    SCHEMA_VERSION = 1

    @classmethod
    def parse(cls, text):
        try:
            loaded = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ConfigurationError("Failed to parse configuration: %s" % e)

        if loaded is None:
            loaded = {}
        if not isinstance(loaded, collections.abc.Mapping):
            raise ConfigurationError("Configuration root must be a mapping")

        return cls(merge(DEFAULTS, loaded))

    @classmethod
    def load(cls, path):
        try:
            with open(path) as f:
                return cls.parse(f.read())
        except OSError as e:
            raise ConfigurationError("Cannot read configuration file %s: %s" % (path, e))

    def dump(self):
        return yaml.safe_dump(self.d, default_flow_style=False, sort_keys=True)

    def apply_overrides(self, overrides):
        """Apply a mapping of colon-key -> value; later entries win"""
        for key, value in overrides.items():
            if value is not None:
                self.set(key, value)

    @property
    def epsilon(self):
        return float(self.get('estimator:epsilon', 0.0))

    @property
    def gamma(self):
        return float(self.get('estimator:gamma', 0.05))

    @property
    def layers(self):
        return [int(n) for n in self.get('network:layers')]

    def validate(self, check_paths=True, training=True):
        kind = self.get('estimator:kind')
        if kind not in ESTIMATOR_KINDS:
            raise ConfigurationError("Unknown estimator kind '%s' (known: %s)" % (kind, ', '.join(ESTIMATOR_KINDS)))

        if kind != 'exact' and self.epsilon <= 0:
            raise ConfigurationError("estimator:epsilon must be > 0 for estimator %s" % kind)

        if not 0 < self.gamma < 1:
            raise ConfigurationError("estimator:gamma must lie in (0,1), got %s" % self.gamma)

        for key in ('training:iterations', 'training:batch_size', 'repeats'):
            value = self.get(key)
            if not isinstance(value, int) or value < 1:
                raise ConfigurationError("%s must be a positive integer, got %r" % (key, value))

        if self.get('training:learning_rate') is None or float(self.get('training:learning_rate')) <= 0:
            raise ConfigurationError("training:learning_rate must be > 0")

        layers = self.get('network:layers')
        if not layers or len(layers) < 2 or any(int(n) < 1 for n in layers):
            raise ConfigurationError("network:layers must list at least two positive sizes, got %r" % (layers,))

        if self.get('network:init') not in ('standard', 'low_rank'):
            raise ConfigurationError("network:init must be 'standard' or 'low_rank'")

        rank = self.get('network:rank')
        if rank is not None and int(rank) > int(self.get('training:batch_size')):
            raise ConfigurationError("network:rank %s exceeds batch size %s" % (rank, self.get('training:batch_size')))

        if self.get('training:history_mode') not in ('auto', 'full', 'norms'):
            raise ConfigurationError("training:history_mode must be auto, full or norms")

        if training and kind in ('dequantized_implicit', 'dequantized_explicit') and not self.get('training:slow', False):
            raise ConfigurationError("Estimator %s trains only with training:slow enabled" % kind)

        if kind == 'dequantized_implicit':
            if self.get('network:init') != 'low_rank':
                raise ConfigurationError("Estimator dequantized_implicit needs network:init low_rank")
            if self.get('training:history_mode') == 'norms':
                raise ConfigurationError("Estimator dequantized_implicit needs the full update history")

        dataset_kind = self.get('dataset:kind')
        if dataset_kind not in ('mnist', 'iris', 'synthetic'):
            raise ConfigurationError("Unknown dataset kind '%s'" % dataset_kind)

        if check_paths and dataset_kind != 'synthetic':
            path = self.get('dataset:path')
            if not path or not os.path.exists(path):
                raise ConfigurationError("dataset:path %r does not exist" % (path,))
