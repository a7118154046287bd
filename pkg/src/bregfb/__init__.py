"""Bregman forward-backward splitting with iteration-varying Legendre kernels."""

from .core import *  # noqa: F401,F403
from .kernels import *  # noqa: F401,F403
from .operators import *  # noqa: F401,F403
from .resolvents import *  # noqa: F401,F403
from .conditions import *  # noqa: F401,F403
from .diagnostics import *  # noqa: F401,F403
from .solver import *  # noqa: F401,F403
from .presets import *  # noqa: F401,F403
from .config import load_config, parse_config, parse_problem, parse_preset  # noqa: F401

__version__ = "0.1.0"
