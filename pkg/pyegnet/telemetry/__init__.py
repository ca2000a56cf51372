# vim: set expandtab sw=4 softtabstop=4 fileencoding=utf8 :
"""Run telemetry: events, handlers and the R-factor computations feeding them"""
