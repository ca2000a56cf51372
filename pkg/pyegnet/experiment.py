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
"""Experiment harness: the train, eval, ripe-demo and costmodel commands.

Every command writes its results below the output directory; JSON outputs
carry a schema_version and are reproducible from (configuration, seed)
apart from the timestamp and wall_time fields.
"""
import copy
import csv
import json
import logging
import os
import time

import numpy as np

from pyegnet import rng as rngs
from pyegnet.checkpoint import load_model, save_model
from pyegnet.config import RunConfig
from pyegnet.costmodel import CostModelInput, cost_compare, format_report
from pyegnet.datasets import load_dataset
from pyegnet.estimators import EstimatorFactory
from pyegnet.estimators.base import EpsGamma, EstimatorSpec
from pyegnet.estimators.ripe import ripe_median_count, ripe_samples
from pyegnet.exception import ConfigurationError
from pyegnet.stats import RunStatistics
from pyegnet.telemetry.csvhandler import CsvEventHandler
from pyegnet.telemetry.events import RunEvent
from pyegnet.telemetry.handler import EventDispatcher, load_handlers
from pyegnet.training import Trainer, TrainingConfig, accuracy

SCHEMA_VERSION = 1
CSV_MODULE = 'pyegnet.telemetry.csvhandler'
HISTOGRAM_COLUMNS = ('bin_left', 'bin_right', 'count')

# inner products quoted alongside the demo pair; only one matches its actual value
DEMO_PAIR = (
    (5.88414114, 2.0327562, 1.68155901, 7.91848042, 1.61922687),
    (5.15610287, 7.2034771, 9.88496245, 3.46281654, 4.20607662),
)
DEMO_QUOTED_PRODUCTS = (95.38, 95.83)


def _json_default(o):
    if isinstance(o, (np.generic, np.ndarray)):
        return o.tolist()
    raise TypeError("%r is not JSON serializable" % (o,))


def write_json(path, data):
    with open(path, 'w') as f:
        json.dump(data, f, indent=2, sort_keys=True, default=_json_default)
        f.write('\n')


class Experiment(object):
    """Owns the run configuration, event dispatcher, statistics and output directory"""
    def __init__(self, config):
        self.log = logging.getLogger(type(self).__name__)
        self.config = config
        self.out_dir = os.path.abspath(config.get('output:dir', 'egnet-out'))
        self.stats = RunStatistics()
        self.trainer = None
        self.event_dispatcher = None

    def setup(self):
        os.makedirs(self.out_dir, exist_ok=True)

        # Queue events until all modules have been inited
        self.event_dispatcher = EventDispatcher()
        self.event_dispatcher.pause()
        self.stats.event_dispatcher = self.event_dispatcher

        self.load_handlers()
        self.init_prometheus()

        self.event_dispatcher.resume()

    def load_handlers(self):
        load_handlers(self.event_dispatcher, self.config, self)
        if CSV_MODULE not in self.config.get('modules', {}):
            h = CsvEventHandler(self.out_dir)
            h.configure(self.config, CSV_MODULE)
            self.event_dispatcher.add_handler(h)

    def init_prometheus(self):
        cfg = self.config.get('prometheus')
        if not cfg:
            return

        # Late import, in case not installed.
        import prometheus_client
        from pyegnet.telemetry.prometheus import EgNetPrometheusCollector

        if not cfg.get('port'):
            self.log.error("Prometheus 'port' must be configured")
            return

        default_labels = cfg.get('labels', {})

        prometheus_client.start_http_server(cfg.get('port'))
        prometheus_client.REGISTRY.register(EgNetPrometheusCollector(self, default_labels))

    def shutdown(self):
        """Flush statistics and stop all handlers"""
        if self.event_dispatcher is None:
            return
        try:
            self.stats.report()
            self.event_dispatcher.shutdown()
        except Exception:
            self.log.error("Unhandled exception while shutting down event handlers", exc_info=True)
        self.event_dispatcher = None

    def progress(self):
        if self.trainer is None:
            return {'phase': 'idle', 'statistics': self.stats.snapshot()}
        return self.trainer.progress()

    def _emit(self, phase, finished, summary=None):
        self.event_dispatcher.handle_event(RunEvent(time.time(), phase, finished, summary))

    def _run_seeds(self):
        seed = int(self.config.get('seed', 1))
        repeats = int(self.config.get('repeats', 1))
        if repeats == 1:
            return [(None, seed)]
        return [('run%d' % r, rngs.derived_seed(seed, 'repeat', r)) for r in range(repeats)]

    def _run_config(self, seed):
        cfg = RunConfig(copy.deepcopy(self.config.d))
        cfg.set('seed', seed)
        return cfg

    def _new_stats(self):
        self.stats = RunStatistics(self.event_dispatcher)
        return self.stats

    def _estimator(self, cfg):
        return EstimatorFactory(self.stats).create(EstimatorSpec.from_config(cfg))

    def cmd_train(self, resume=None):
        """Train (config repeats) networks, evaluate each on the test set and write summary.json"""
        self.config.validate(check_paths=True, training=True)
        train, test = load_dataset(self.config)

        runs = self._run_seeds()
        if resume and len(runs) > 1:
            raise ConfigurationError("Cannot resume a run with repeats > 1")

        results = []
        for run_id, seed in runs:
            self.event_dispatcher.run_id = run_id
            cfg = self._run_config(seed)
            stats = self._new_stats()
            estimator = self._estimator(cfg)
            tconfig = TrainingConfig.from_config(cfg, estimator.spec)
            self.trainer = Trainer(tconfig, estimator, stats, self.event_dispatcher)

            model = None
            if resume:
                model, _ = load_model(resume)
                if model.arch != tconfig.arch or model.history.M != tconfig.M:
                    raise ConfigurationError("Checkpoint %s (%r, M=%d) does not match the configuration"
                                             % (resume, model.arch, model.history.M))
                model.config = tconfig
                self.log.info("Resuming %s after iteration %d", resume, model.iteration)

            self.log.info("Starting %s with seed %d", run_id or 'run', seed)
            self._emit(RunEvent.PHASE_TRAIN, False)
            started = time.time()
            model = self.trainer.train(train.X, train.Y, model)
            train_time = time.time() - started

            started = time.time()
            acc = accuracy(model, test.X, test.Y, estimator, seed, self.event_dispatcher)
            eval_time = time.time() - started

            model_dir = os.path.join(self.out_dir, 'model' if run_id is None else 'model-%s' % run_id)
            save_model(model_dir, model, cfg)

            result = {
                'run_id': run_id,
                'seed': seed,
                'accuracy': acc,
                'iterations': model.iteration,
                'rfactors': model.telemetry.averages(),
                'statistics': stats.snapshot(),
                'model': model_dir,
                'wall_time': {'train': train_time, 'eval': eval_time},
            }
            self._emit(RunEvent.PHASE_TRAIN, True, result)
            self.log.info("Finished %s: accuracy %.4f, R averages %s", run_id or 'run', acc,
                          ', '.join('%s=%.4g' % kv for kv in sorted(result['rfactors'].items())))
            stats.report()
            results.append(result)

        summary = {
            'schema_version': SCHEMA_VERSION,
            'command': 'train',
            'timestamp': time.time(),
            'seed': int(self.config.get('seed', 1)),
            'split_seed': int(self.config.get('dataset:split_seed', 0)),
            'estimator': self.config.get('estimator:kind'),
            'epsilon': self.config.epsilon,
            'gamma': self.config.gamma,
            'runs': results,
            'mean_accuracy': float(np.mean([r['accuracy'] for r in results])),
            'mean_rfactors': self._mean_rfactors(results),
        }
        write_json(os.path.join(self.out_dir, 'summary.json'), summary)
        return summary

    @staticmethod
    def _mean_rfactors(results):
        keys = sorted(set(k for r in results for k in r['rfactors']))
        return dict((k, float(np.mean([r['rfactors'][k] for r in results if k in r['rfactors']]))) for k in keys)

    def cmd_eval(self, checkpoint):
        """Accuracy and R_e of a saved model on the test set, under this configuration's estimator"""
        self.config.validate(check_paths=True, training=False)
        model, saved = load_model(checkpoint)
        if model.arch.layer_sizes != self.config.layers:
            raise ConfigurationError("Model %s has layers %r, configuration has %r"
                                     % (checkpoint, model.arch.layer_sizes, self.config.layers))
        _, test = load_dataset(self.config)

        seed = int(self.config.get('seed', 1))
        self._new_stats()
        estimator = self._estimator(self.config)
        # a fresh evaluation series; training telemetry stays with the checkpoint
        model.telemetry.evaluations = []

        self._emit(RunEvent.PHASE_EVAL, False)
        started = time.time()
        acc = accuracy(model, test.X, test.Y, estimator, seed, self.event_dispatcher)
        averages = model.telemetry.averages()
        summary = {
            'schema_version': SCHEMA_VERSION,
            'command': 'eval',
            'timestamp': time.time(),
            'model': os.path.abspath(checkpoint),
            'seed': seed,
            'estimator': estimator.kind,
            'epsilon': estimator.tol.epsilon,
            'gamma': estimator.tol.gamma,
            'accuracy': acc,
            'R_e': averages.get('R_e'),
            'R_e_cl': averages.get('R_e_cl'),
            'statistics': self.stats.snapshot(),
            'wall_time': time.time() - started,
        }
        self._emit(RunEvent.PHASE_EVAL, True, summary)
        self.log.info("Evaluated %s: accuracy %.4f, R_e %.4g", checkpoint, acc, summary['R_e'] or 0.0)
        write_json(os.path.join(self.out_dir, 'eval.json'), summary)
        return summary

    def cmd_ripe_demo(self, x=None, y=None, q=None, num_samples=10000, bins=50):
        """Histogram of RIPE estimates for one pair, and the fraction f inside the contract band"""
        x = np.asarray(DEMO_PAIR[0] if x is None else x, dtype=float)
        y = np.asarray(DEMO_PAIR[1] if y is None else y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise ConfigurationError("Demo vectors must be of equal length, got %s and %s" % (x.shape, y.shape))

        tol = EpsGamma(self.config.epsilon, self.config.gamma)
        Q = q if q else ripe_median_count(tol.gamma)
        seed = int(self.config.get('seed', 1))
        samples = ripe_samples(x, y, tol, rngs.stream(seed, 'demo'), num_samples, Q)

        ip = float(np.dot(x, y))
        band = float(tol.bound(ip))
        inside = float(np.mean(np.abs(samples - ip) <= band))

        counts, edges = np.histogram(samples, bins=bins)
        with open(os.path.join(self.out_dir, 'ripe-histogram.csv'), 'w', newline='') as f:
            w = csv.writer(f)
            w.writerow(HISTOGRAM_COLUMNS)
            for left, right, c in zip(edges[:-1], edges[1:], counts):
                w.writerow((float(left), float(right), int(c)))

        summary = {
            'schema_version': SCHEMA_VERSION,
            'command': 'ripe-demo',
            'timestamp': time.time(),
            'seed': seed,
            'epsilon': tol.epsilon,
            'gamma': tol.gamma,
            'Q': Q,
            'num_samples': num_samples,
            'inner_product': ip,
            'norm_x': float(np.linalg.norm(x)),
            'norm_y': float(np.linalg.norm(y)),
            'band': [ip - band, ip + band],
            'inside_fraction': inside,
            'sample_mean': float(samples.mean()),
            'sample_median': float(np.median(samples)),
        }
        if np.array_equal(x, DEMO_PAIR[0]) and np.array_equal(y, DEMO_PAIR[1]):
            summary['quoted_inner_products'] = dict(
                ('%.2f' % v, abs(v - ip) < 0.01) for v in DEMO_QUOTED_PRODUCTS)

        self.log.info("RIPE demo: <x,y> = %.4f, Q = %d, f = %.1f%% of %d samples inside +-%.3f",
                      ip, Q, 100.0 * inside, num_samples, band)
        write_json(os.path.join(self.out_dir, 'ripe-demo.json'), summary)
        return summary

    def cmd_costmodel(self, values):
        """Cost report for a mapping of CostModelInput fields"""
        inp = CostModelInput.from_mapping(values)
        report = cost_compare(inp)
        self.log.info("Cost model for %s:\n%s", inp.as_dict(), format_report(report))
        summary = {
            'schema_version': SCHEMA_VERSION,
            'command': 'costmodel',
            'input': inp.as_dict(),
            'report': report,
        }
        write_json(os.path.join(self.out_dir, 'costmodel.json'), summary)
        return summary
