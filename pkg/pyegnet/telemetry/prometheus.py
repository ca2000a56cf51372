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
from prometheus_client.core import CounterMetricFamily, GaugeMetricFamily

from pyegnet.exception import EgNetException
from pyegnet.telemetry.rfactors import RFactorSeries

RFACTOR_GAUGES = ('R_a', 'R_delta', 'R_W_r', 'R_W_c', 'R_a_cl', 'R_delta_cl')


class EgNetPrometheusCollector(object):
    """Exports run statistics and the latest training R-factors of an experiment"""
    def __init__(self, experiment, default_labels):
        self.experiment = experiment

        self.default_label_names = []
        self.default_label_values = []

        for k, v in default_labels.items():
            self.default_label_names.append(k)
            self.default_label_values.append(str(v))

    def collect(self):
        for k, v in self.experiment.stats.values.items():
            k = k.replace('.', '_')
            metric_name = 'egnet_%s' % k

            type, value = v

            if type == 'gauge':
                m = GaugeMetricFamily(metric_name, '', labels=self.default_label_names)
            elif type == 'counter':
                m = CounterMetricFamily(metric_name, '', labels=self.default_label_names)
            else:
                raise EgNetException('Invalid metric type in %s: %s' % (k, type))

            m.add_metric(self.default_label_values, value)
            yield m

        trainer = self.experiment.trainer
        if trainer is None or trainer.model is None or not trainer.model.telemetry.rows:
            return

        row = trainer.model.telemetry.rows[-1]
        rfactors = GaugeMetricFamily('egnet_rfactor', 'R-factors of the latest training iteration',
                                     labels=self.default_label_names + ['name'])
        for name in RFACTOR_GAUGES:
            rfactors.add_metric(self.default_label_values + [name], row[RFactorSeries.COLUMNS.index(name)])
        yield rfactors

        iteration = GaugeMetricFamily('egnet_iteration', 'Latest completed training iteration',
                                      labels=self.default_label_names)
        iteration.add_metric(self.default_label_values, row[0])
        yield iteration
