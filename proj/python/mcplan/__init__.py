"""Monte-Carlo planning in tabular MDPs: MDP-GapE, baselines, benchmarks."""

from ._mcplan import *  # noqa: F401,F403
from ._mcplan import __version__  # noqa: F401
