"""photonq: doubled-up linear quantum circuit algebra, Gaussian analysis,
coherent LQG control, and truncated-Wigner stochastic simulation."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__ as _core_doc

__doc__ = _core_doc
__version__ = "0.1.0"
