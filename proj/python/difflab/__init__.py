"""Toy diffusion models: schedules, training, DDPM/DDIM sampling and guidance."""

from ._difflab import *  # noqa: F401,F403
from ._difflab import __version__, Error, ValidationError, DimensionError, ParseError  # noqa: F401
