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
import csv
import os

from pyegnet.exception import ConfigurationError
from pyegnet.telemetry.events import EvaluationEvent, IterationEvent
from pyegnet.telemetry.handler import ThreadedEventHandler

RFACTOR_COLUMNS = ('t', 'R_a', 'R_delta', 'R_W_r', 'R_W_c', 'R_a_cl', 'R_delta_cl', 'full_batch', 'cost')
EVALUATION_COLUMNS = ('index', 'R_e', 'R_e_cl', 'label', 'correct')


def create(experiment):
    return CsvEventHandler(experiment.out_dir)


def _fmt(v):
    if v is None:
        return ''
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


class CsvEventHandler(ThreadedEventHandler):
    """Writes iteration R-factors and per-point evaluation results as CSV

    One file pair per run id: rfactors[-<run>].csv and evaluation[-<run>].csv.
    """
    def __init__(self, default_path, max_queue_size=0):
        super(CsvEventHandler, self).__init__(max_queue_size)
        self.default_path = default_path
        self.path = None
        self.files = {}

    def config(self, module_config, root_config):
        path = os.path.abspath(module_config.get('path', self.default_path or os.getcwd()))
        if os.path.exists(path):
            if not os.path.isdir(path):
                raise ConfigurationError("CSV path %s exists but is not a directory" % path)
        else:
            os.makedirs(path)

        self.path = path
        self.log.debug("CSV handler configured with path %s", path)

        self.start()

    def _writer(self, kind, columns, run_id):
        key = (kind, run_id)
        entry = self.files.get(key)
        if entry is None:
            name = kind if run_id is None else '%s-%s' % (kind, run_id)
            fn = os.path.join(self.path, name + '.csv')
            f = open(fn, 'w', newline='')
            w = csv.writer(f)
            w.writerow(columns)
            entry = self.files[key] = (f, w)
            self.log.info("Writing %s", fn)
        return entry[1]

    def handle_event_blocking(self, event):
        if isinstance(event, IterationEvent):
            w = self._writer('rfactors', RFACTOR_COLUMNS, event.run_id)
            w.writerow([_fmt(v) for v in (event.t, event.r_a, event.r_delta, event.r_w_r, event.r_w_c,
                                          event.r_a_cl, event.r_delta_cl, event.full_batch, event.cost)])
        elif isinstance(event, EvaluationEvent):
            w = self._writer('evaluation', EVALUATION_COLUMNS, event.run_id)
            w.writerow([_fmt(v) for v in (event.index, event.r_e, event.r_e_cl, event.label, event.correct)])

    def cleanup(self):
        for f, _ in self.files.values():
            f.close()
        self.files = {}
