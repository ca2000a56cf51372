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
import logging
import threading
import time

from pyegnet.exception import EgNetException
from pyegnet.telemetry.events import StatisticsEvent


class RunStatistics(object):
    """Counters and gauges keyed "<category>.<name>"

    Estimators, the training driver and the norm estimation code all feed the
    same instance; report() pushes every value out as a StatisticsEvent.
    """
    def __init__(self, event_dispatcher=None):
        self.log = logging.getLogger(type(self).__name__)
        self.values = {}
        self.event_dispatcher = event_dispatcher
        self.lock = threading.Lock()

    @staticmethod
    def _check_key(key):
        if '.' not in key:
            raise EgNetException("Statistics key should have the format <category>.<name>")

    def init(self, key):
        """Initialize a counter key to be reported even if no increment is ever made."""
        self.increment(key, 0)

    def increment(self, key, value=1):
        with self.lock:
            if key not in self.values:
                self._check_key(key)
                self.values[key] = ['counter', 0]

            self.values[key][1] += value

    def gauge(self, key, value):
        with self.lock:
            if key not in self.values:
                self._check_key(key)
                self.values[key] = ['gauge', value]
            else:
                self.values[key][1] = value

    def get(self, key, default=0):
        v = self.values.get(key)
        return default if v is None else v[1]

    def snapshot(self):
        with self.lock:
            return dict((k, v[1]) for k, v in sorted(self.values.items()))

    def report(self):
        """Emit all tracked values to the event dispatcher"""
        if not self.event_dispatcher:
            return

        self.log.debug("Reporting statistics")
        timestamp = time.time()
        for key, value in self.snapshot().items():
            category, name = key.split('.', 1)
            self.event_dispatcher.handle_event(StatisticsEvent(timestamp, category, name, value))
