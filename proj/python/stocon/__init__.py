"""Stochastic contraction analysis of random dynamical systems.

The compiled core lives in ``stocon._stocon``; everything it exports is
re-exported here.
"""

from ._stocon import *  # noqa: F401,F403
