"""Motion retargeting toolkit."""

from ._core import *  # noqa: F401,F403
from ._core import NumericError, ParseError, Skeleton, ValidationError  # noqa: F401

__version__ = "0.1.0"
