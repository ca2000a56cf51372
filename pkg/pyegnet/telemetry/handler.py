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
"""Telemetry fan-out: training emits events, handlers loaded from modules: consume them"""
import importlib
import logging
import queue
import threading


class EventHandler(object):
    """Abstract telemetry event handler interface"""
    def __init__(self):
        self.log = logging.getLogger(type(self).__name__)

    def configure(self, root_config, module_name):
        """Hand the handler its modules: section, keyed by module name"""
        self.cfg_module_name = module_name
        self.config(root_config.get(('modules', module_name), {}), root_config)

    def config(self, module_config, root_config):
        """Override if the handler reads settings from its modules: section"""
        pass

    def handle_event(self, event):
        """Handle the event in some way. Must not raise, and must not block the training loop."""
        pass

    def shutdown(self):
        pass


class EventDispatcher(EventHandler):
    """Forwards every event to a set of handlers, stamping the current run id"""
    def __init__(self):
        super(EventDispatcher, self).__init__()
        self.handlers = []
        # stamped on events that carry none
        self.run_id = None

        self.paused = False
        self.held = []

    def add_handler(self, handler):
        self.handlers.append(handler)

    def pause(self):
        """Hold events while handlers are being loaded, until resume()"""
        self.paused = True

    def resume(self):
        self.paused = False
        held, self.held = self.held, []
        for event in held:
            self._emit_event(event)

    def handle_event(self, event):
        if event.run_id is None:
            event.run_id = self.run_id

        if self.paused:
            self.held.append(event)
        else:
            self._emit_event(event)

    def _emit_event(self, event):
        if self.log.isEnabledFor(logging.DEBUG):
            self.log.debug("Dispatching %s to %d handlers", event, len(self.handlers))
        for h in self.handlers:
            try:
                h.handle_event(event)
            except Exception:
                self.log.error("Unhandled exception in event handler %s", h, exc_info=True)

    def shutdown(self):
        for h in self.handlers:
            try:
                self.log.debug("Shutting down %s", h)
                h.shutdown()
            except Exception:
                self.log.error("Unhandled exception while shutting down %s", h, exc_info=True)


class ThreadedEventHandler(EventHandler):
    """Handler writing on a worker thread; handle_event only enqueues"""
    def __init__(self, max_queue_size=0):
        super(ThreadedEventHandler, self).__init__()
        self.thread = threading.Thread(target=self._run, daemon=True)
        self.queue = queue.Queue(maxsize=max_queue_size)

    def start(self):
        if not self.thread.is_alive():
            self.thread.start()

    def handle_event_blocking(self, event):
        raise NotImplementedError("handle_event_blocking must be implemented")

    def handle_event(self, event):
        self.queue.put(event)

    def _run(self):
        # None is the stop marker put by shutdown()
        while True:
            event = self.queue.get(True)
            try:
                if event is not None:
                    self.handle_event_blocking(event)
            except Exception:
                self.log.error("Unhandled exception handling event %s", event, exc_info=True)
            finally:
                self.queue.task_done()

            if event is None:
                break

    def cleanup(self):
        """Executed after shutdown, once all queued events have been processed"""
        pass

    def shutdown(self):
        if self.thread.is_alive():
            self.queue.join()
            self.queue.put(None)
            self.thread.join()

        self.cleanup()


def load_handlers(dispatcher, config, experiment):
    """Instantiate every handler module listed in the modules: section

    Each module must expose create(experiment) returning an EventHandler.
    """
    log = logging.getLogger(__name__)
    loaded = []
    for module_name in config.get('modules', {}).keys():
        log.debug("Loading telemetry module %s", module_name)
        h = importlib.import_module(module_name).create(experiment)
        try:
            h.configure(config, module_name)
        except Exception:
            h.shutdown()
            raise
        dispatcher.add_handler(h)
        loaded.append(h)

    return loaded
