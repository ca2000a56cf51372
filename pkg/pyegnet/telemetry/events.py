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


class TelemetryEvent(object):
    """Base object for anything emitted while a run progresses"""
    def __init__(self, timestamp):
        self.timestamp = timestamp
        self.run_id = None

    def __str__(self):
        return "TelemetryEvent[%d: %s]" % (self.timestamp, self.run_id)


class IterationEvent(TelemetryEvent):
    """R-factors of one training iteration.

    full_batch is True when R_a/R_delta were averaged over every batch element,
    False when only the designated element m = 0 was measured.
    """
    def __init__(self, timestamp, t, r_a, r_delta, r_w_r, r_w_c, r_a_cl=None, r_delta_cl=None,
                 full_batch=False, cost=None):
        super(IterationEvent, self).__init__(timestamp)
        self.t = t
        self.r_a = r_a
        self.r_delta = r_delta
        self.r_w_r = r_w_r
        self.r_w_c = r_w_c
        self.r_a_cl = r_a_cl
        self.r_delta_cl = r_delta_cl
        self.full_batch = full_batch
        self.cost = cost

    def __str__(self):
        return "IterationEvent[%d: t=%d, R_a %.3f, R_delta %.3f, R_W %.3f+%.3f%s]" % (
            self.timestamp, self.t, self.r_a, self.r_delta, self.r_w_r, self.r_w_c,
            ", full" if self.full_batch else "")


class EvaluationEvent(TelemetryEvent):
    """Outcome of evaluating one test point"""
    def __init__(self, timestamp, index, r_e, r_e_cl, label, correct):
        super(EvaluationEvent, self).__init__(timestamp)
        self.index = index
        self.r_e = r_e
        self.r_e_cl = r_e_cl
        self.label = label
        self.correct = correct

    def __str__(self):
        return "EvaluationEvent[%d: #%d, label %d, %s, R_e %.3f]" % (
            self.timestamp, self.index, self.label, "ok" if self.correct else "miss", self.r_e)


class RunEvent(TelemetryEvent):
    """Start/finish of a run phase; summary is filled in on finish"""
    PHASE_TRAIN = 'train'
    PHASE_EVAL = 'eval'

    def __init__(self, timestamp, phase, finished, summary=None):
        super(RunEvent, self).__init__(timestamp)
        self.phase = phase
        self.finished = finished
        self.summary = summary or {}

    def __str__(self):
        return "RunEvent[%d: %s %s]" % (self.timestamp, self.phase, "finished" if self.finished else "started")


class StatisticsEvent(TelemetryEvent):
    """A run statistics counter or gauge value"""
    def __init__(self, timestamp, category, name, value):
        super(StatisticsEvent, self).__init__(timestamp)
        self.category = category
        self.name = name
        self.value = value

    def __str__(self):
        return "StatisticsEvent[%d: %s.%s = %s]" % (self.timestamp, self.category, self.name, self.value)
