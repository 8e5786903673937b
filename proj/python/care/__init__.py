"""Covariate-assisted ranking from pairwise comparisons."""

from ._care import *  # noqa: F401,F403
from ._care import __version__  # noqa: F401
