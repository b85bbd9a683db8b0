"""Personalised semantic downlink: fading statistics, link reliability,
attention-driven triplet priority and bargaining-based power allocation."""

__version__ = "0.1.0"

from . import errors, specfun, fading, linkperf, semantics  # noqa: E402,F401  (semantics before dataset)
from . import dataset  # noqa: E402,F401
