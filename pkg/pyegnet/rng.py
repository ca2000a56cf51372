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
"""Derived random streams.

Every random draw of a run comes from a Generator keyed on the run seed, a
purpose and integer indices (iteration, layer, phase...), so a run can be
resumed at any iteration and reproduce the uninterrupted one.
"""
import numpy as np

PURPOSES = {
    'schedule': 1,
    'init': 2,
    'train-estimate': 3,
    'norm-estimate': 4,
    'eval-estimate': 5,
    'split': 6,
    'repeat': 7,
    'demo': 8,
}


def stream(seed, purpose, *keys):
    if purpose not in PURPOSES:
        raise KeyError("Unknown random stream purpose '%s'" % purpose)
    spawn_key = (PURPOSES[purpose],) + tuple(int(k) for k in keys)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=spawn_key))


def derived_seed(seed, purpose, *keys):
    """A plain integer seed for a sub-run"""
    spawn_key = (PURPOSES[purpose],) + tuple(int(k) for k in keys)
    return int(np.random.SeedSequence(int(seed), spawn_key=spawn_key).generate_state(1)[0])
