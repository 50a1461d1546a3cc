"""Fisher-information trade-offs for noisy quantum clocks."""

from . import bounds, channels, clock, codes, fisher, lindblad, linalg, manybody
from .errors import QfiLabError

__version__ = "0.1.0"

__all__ = ["bounds", "channels", "clock", "codes", "fisher", "lindblad", "linalg", "manybody", "QfiLabError", "__version__"]
