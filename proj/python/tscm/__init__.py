"""Two-stage causal debiasing for relationship classification.

Thin wrapper over the C++ core; see the extension module for the full API.
"""

from ._tscm import *  # noqa: F401,F403
from ._tscm import __version__  # noqa: F401
