"""Mobility-driven case forecasting with a fairness audit."""

from ._core import *  # noqa: F401,F403
from ._core import Error, __version__  # noqa: F401
