"""Polynomial and rational-map algebra on the extended complex plane."""

from .mobius import Mobius, mobius_apply, mobius_inverse, mobius_through
from .parse import format_map, format_poly, parse_map, parse_point
from .polynomial import Polynomial, poly_gcd, poly_roots
from .rational import DEGREE_CAP, RationalMap, compose, conjugate, iterate, rational_reduce
from .sphere import INF, Infinity, SpherePoint, chordal_distance, is_inf, sphere_point

derivative = RationalMap.derivative


def eval_map(R, z):
    return R(z)


__all__ = [
    "INF", "Infinity", "SpherePoint", "chordal_distance", "is_inf", "sphere_point",
    "Polynomial", "poly_roots", "poly_gcd",
    "RationalMap", "rational_reduce", "compose", "iterate", "conjugate", "DEGREE_CAP",
    "derivative", "eval_map",
    "Mobius", "mobius_apply", "mobius_inverse", "mobius_through",
    "parse_map", "parse_point", "format_map", "format_poly",
]
