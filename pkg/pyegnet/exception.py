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


class EgNetException(Exception):
    pass


class ConfigurationError(EgNetException):
    pass


class ShapeError(EgNetException):
    pass


class DomainError(EgNetException):
    """Non-finite input, or a zero norm where sampling needs a positive one"""
    pass


class EstimatorError(EgNetException):
    pass


class EmptyBatchError(EgNetException):
    pass


class ScheduleError(EgNetException):
    pass


class HistoryError(EgNetException):
    pass


class DataFormatError(EgNetException):
    pass
