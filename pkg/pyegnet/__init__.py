# vim: set expandtab sw=4 softtabstop=4 fileencoding=utf8 :
"""pyegnet simulates (epsilon, gamma)-feedforward neural networks: every inner product of training and evaluation is replaced by an estimate meeting an (epsilon, gamma) error contract"""

__version__ = '0.1.0'
