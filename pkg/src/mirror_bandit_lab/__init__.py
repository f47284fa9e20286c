"""Mirror-descent bandit simulation lab.

Core pieces: the Tsallis-style mirror-map geometry on the truncated simplex,
stochastic loss environments with a budgeted corruption adversary, the
regularized-EXP3 / EXP3 / UCB learners, Wald-interval and stability
diagnostics, and a deterministic Monte-Carlo harness. A FastAPI service and
a thin CLI client sit on top.
"""

from .errors import ConfigError, NumericError

__all__ = ["ConfigError", "NumericError"]
__version__ = "0.1.0"
