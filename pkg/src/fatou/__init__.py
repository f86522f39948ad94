"""Computational dynamics of rational maps on the Riemann sphere."""

from .core import (
    INF, Mobius, Polynomial, RationalMap, chordal_distance, compose, conjugate, iterate, parse_map, parse_point,
)
from .errors import FatouError

__version__ = "0.1.0"

__all__ = [
    "INF", "Mobius", "Polynomial", "RationalMap", "chordal_distance", "compose", "conjugate", "iterate",
    "parse_map", "parse_point", "FatouError", "__version__",
]
