"""Points of the extended complex plane and the chordal metric."""

from __future__ import annotations

import cmath
import math
from typing import Union

import numpy as np


class Infinity:
    """The point at infinity. Use the module-level singleton :data:`INF`."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __str__(self):
        return "inf"

    def __reduce__(self):
        return (Infinity, ())

    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self


INF = Infinity()

SpherePoint = Union[complex, Infinity]


def is_inf(z) -> bool:
    return z is INF


def sphere_point(z) -> SpherePoint:
    """Validate and coerce ``z`` to a sphere point.

    Accepts numbers, :data:`INF`, and the strings ``"inf"``/``"∞"``.
    Finite values must have finite, non-NaN components.
    """
    if z is INF:
        return INF
    if isinstance(z, str) and z.strip().lower() in ("inf", "infinity", "∞"):
        return INF
    w = complex(z)
    if not (math.isfinite(w.real) and math.isfinite(w.imag)):
        raise ValueError(f"finite sphere point required, got {z!r}")
    return w


def chordal_distance(z: SpherePoint, w: SpherePoint) -> float:
    """Chordal distance on the Riemann sphere, in [0, 2]."""
    if z is INF and w is INF:
        return 0.0
    if z is INF:
        z, w = w, z
    if w is INF:
        return 2.0 / math.hypot(1.0, abs(z))
    # hypot keeps large moduli from overflowing
    num = 2.0 * abs(z - w)
    return min(2.0, num / (math.hypot(1.0, abs(z)) * math.hypot(1.0, abs(w))))


def spherical_distance(z: SpherePoint, w: SpherePoint) -> float:
    """Great-circle distance, computed from stereographic coordinates on S^2."""
    a = _to_unit_sphere(z)
    b = _to_unit_sphere(w)
    return math.atan2(np.linalg.norm(np.cross(a, b)), float(np.dot(a, b)))


def _to_unit_sphere(z):
    if z is INF:
        return np.array([0.0, 0.0, 1.0])
    s = math.hypot(1.0, abs(z))
    u = z / s
    return np.array([2 * u.real / s, 2 * u.imag / s, 1.0 - 2.0 / (s * s)])


def points_close(z: SpherePoint, w: SpherePoint, tol: float = 1e-9) -> bool:
    return chordal_distance(z, w) <= tol


def to_homogeneous(z: SpherePoint):
    """Return a normalized homogeneous pair ``(p, q)`` with ``z = p/q``."""
    if z is INF:
        return 1.0 + 0j, 0j
    if abs(z) <= 1.0:
        return complex(z), 1.0 + 0j
    return 1.0 + 0j, 1.0 / complex(z)


def from_homogeneous(p: complex, q: complex) -> SpherePoint:
    if q == 0:
        return INF
    w = p / q
    if not cmath.isfinite(w):
        return INF
    return w


def chordal_distance_h(p1, q1, p2, q2):
    """Vectorized chordal distance between homogeneous coordinate arrays."""
    num = 2.0 * np.abs(p1 * q2 - p2 * q1)
    den = np.sqrt(np.abs(p1) ** 2 + np.abs(q1) ** 2) * np.sqrt(np.abs(p2) ** 2 + np.abs(q2) ** 2)
    return num / den


def format_point(z: SpherePoint, digits: int = 12) -> str:
    if z is INF:
        return "inf"
    re, im = round(z.real, digits) + 0.0, round(z.imag, digits) + 0.0
    if im == 0:
        return f"{re:.{digits}g}"
    sign = "+" if im >= 0 else "-"
    return f"{re:.{digits}g}{sign}{abs(im):.{digits}g}i"


def point_to_json(z: SpherePoint):
    if z is INF:
        return "inf"
    return [z.real, z.imag]


def point_from_json(obj) -> SpherePoint:
    if obj == "inf":
        return INF
    re, im = obj
    return complex(re, im)
