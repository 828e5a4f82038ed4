"""Bayesian full-waveform inversion for 2D shear elastography.

The heavy lifting lives in the compiled extension; this package re-exports
its public surface.
"""

from shearbayes._core import *  # noqa: F401,F403
from shearbayes import _core

__all__ = [name for name in dir(_core) if not name.startswith("_")]
__version__ = "0.1.0"
