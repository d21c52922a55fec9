"""Ear point-cloud geometry processing."""

from ._earscan import *  # noqa: F401,F403
from ._earscan import __version__, EarscanError  # noqa: F401
