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
import argparse
import json
import logging
import logging.config
import os
import signal
import sys

from pyegnet import __version__
from pyegnet.checkpoint import CONFIG_FILE
from pyegnet.config import RunConfig, parse_override
from pyegnet.exception import ConfigurationError, EgNetException
from pyegnet.experiment import Experiment

DEFAULT_LOGGING = {
    'version': 1,
    'formatters': {
        'simple': {'format': '%(asctime)s %(levelname)-7s %(name)s: %(message)s'},
    },
    'handlers': {
        'console': {'class': 'logging.StreamHandler', 'formatter': 'simple', 'level': 'DEBUG'},
    },
    'root': {'level': 'INFO', 'handlers': ['console']},
}

DEMO_EPSILON = 0.3

# flag -> configuration key
FLAG_KEYS = (
    ('seed', 'seed'),
    ('epsilon', 'estimator:epsilon'),
    ('gamma', 'estimator:gamma'),
    ('estimator', 'estimator:kind'),
    ('rank', 'network:rank'),
    ('repeats', 'repeats'),
    ('out', 'output:dir'),
)

COST_FLAGS = ('T', 'M', 'N', 'E', 'R_a', 'R_delta', 'R_W', 'R_e', 'R_a_cl', 'R_delta_cl', 'R_e_cl')


def _vector(text):
    try:
        return [float(v) for v in text.split(',')]
    except ValueError:
        raise argparse.ArgumentTypeError("'%s' is not a comma separated list of numbers" % text)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help="YAML run configuration")
    common.add_argument('--seed', type=int)
    common.add_argument('--epsilon', type=float)
    common.add_argument('--gamma', type=float)
    common.add_argument('--estimator', help="estimator kind")
    common.add_argument('--rank', type=int, help="low rank initialization with this rank")
    common.add_argument('--repeats', type=int)
    common.add_argument('--out', help="output directory")
    common.add_argument('--set', action='append', default=[], metavar='KEY=VALUE',
                        help="override any configuration key, e.g. training:learning_rate=0.05")

    parser = argparse.ArgumentParser(prog='pyegnet', description="(epsilon, gamma)-feedforward network simulator")
    parser.add_argument('--version', action='version', version='%(prog)s ' + __version__)
    sub = parser.add_subparsers(dest='command')
    sub.required = True

    p = sub.add_parser('train', parents=[common], help="train, evaluate and checkpoint")
    p.add_argument('--resume', metavar='MODEL_DIR', help="continue training a saved model")

    p = sub.add_parser('eval', parents=[common], help="evaluate a saved model")
    p.add_argument('--model', required=True, metavar='MODEL_DIR')

    p = sub.add_parser('ripe-demo', parents=[common], help="sample the RIPE estimator on one vector pair")
    p.add_argument('--x', type=_vector)
    p.add_argument('--y', type=_vector)
    p.add_argument('--q', type=int, help="median count; derived from gamma when absent")
    p.add_argument('--samples', type=int, default=10000)
    p.add_argument('--bins', type=int, default=50)

    p = sub.add_parser('costmodel', parents=[common], help="running time figures of merit")
    p.add_argument('--input', metavar='JSON', help="file with the cost model inputs")
    for name in COST_FLAGS:
        p.add_argument('--' + name, dest='cost_' + name, type=float)

    return parser


class Main(object):
    def __init__(self):
        self.experiment = None
        self.cfg = None
        self.log = logging.getLogger(__name__)

    def load_config(self, args):
        if args.config:
            cfg = RunConfig.load(args.config)
        elif args.command == 'eval':
            cfg = RunConfig.load(os.path.join(args.model, CONFIG_FILE))
        else:
            cfg = RunConfig.parse('')

        overrides = {}
        for flag, key in FLAG_KEYS:
            overrides[key] = getattr(args, flag)
        if args.rank is not None:
            overrides['network:init'] = 'low_rank'
        if args.command == 'ripe-demo' and args.epsilon is None and cfg.epsilon == 0:
            overrides['estimator:epsilon'] = DEMO_EPSILON
        cfg.apply_overrides(overrides)

        for text in args.set:
            key, value = parse_override(text)
            cfg.set(key, value)

        self.cfg = cfg
        return cfg

    def setup_logging(self):
        """Setup logging based on the logging section of the configuration"""
        logcfg = self.cfg.get('logging', None)
        logging.config.dictConfig(dict(logcfg) if logcfg else DEFAULT_LOGGING)

    def run(self, argv=None):
        args = build_parser().parse_args(argv)
        try:
            self.load_config(args)
        except EgNetException as e:
            print("Failed to load configuration: %s" % e, file=sys.stderr)
            return 2

        self.setup_logging()
        log = self.log = logging.getLogger(__name__)

        try:
            self.experiment = Experiment(self.cfg)
            self.experiment.setup()
            if args.command == 'train':
                self.experiment.cmd_train(args.resume)
            elif args.command == 'eval':
                self.experiment.cmd_eval(args.model)
            elif args.command == 'ripe-demo':
                self.experiment.cmd_ripe_demo(args.x, args.y, args.q, args.samples, args.bins)
            elif args.command == 'costmodel':
                self.experiment.cmd_costmodel(self.cost_inputs(args))
        except EgNetException as e:
            log.error("%s failed: %s", args.command, e)
            return 1
        except KeyboardInterrupt:
            log.info("Interrupted")
            return 130
        finally:
            if self.experiment:
                self.experiment.shutdown()

        return 0

    def cost_inputs(self, args):
        values = {}
        if args.input:
            try:
                with open(args.input) as f:
                    values = json.load(f)
            except (OSError, ValueError) as e:
                raise ConfigurationError("Cannot read cost model input %s: %s" % (args.input, e))
        if args.epsilon is not None or 'epsilon' not in values:
            values['epsilon'] = self.cfg.epsilon
        if args.gamma is not None or 'gamma' not in values:
            values['gamma'] = self.cfg.gamma
        for name in COST_FLAGS:
            v = getattr(args, 'cost_' + name)
            if v is not None:
                values[name] = int(v) if name in ('T', 'M', 'N', 'E') else v
        return values

    def log_progress(self):
        if self.experiment is None:
            return
        self.log.info("Progress: %s", self.experiment.progress())


def sig_listen(main):
    if hasattr(signal, 'SIGUSR1'):
        signal.signal(signal.SIGUSR1, lambda sig, frame: main.log_progress())


def main(argv=None):
    m = Main()
    sig_listen(m)
    return m.run(argv)


if __name__ == "__main__":
    sys.exit(main())
