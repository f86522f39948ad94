"""Möbius transformations z -> (az + b)/(cz + d), stored with ad - bc = 1."""

from __future__ import annotations

import cmath
from dataclasses import dataclass

from ..errors import DegenerateMobiusError
from .sphere import INF, SpherePoint, chordal_distance, sphere_point

DET_TOL = 1e-14


@dataclass(frozen=True)
class Mobius:
    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        a, b, c, d = (complex(x) for x in (self.a, self.b, self.c, self.d))
        s = max(abs(a), abs(b), abs(c), abs(d))
        if s == 0:
            raise DegenerateMobiusError("all Möbius coefficients are zero")
        a, b, c, d = a / s, b / s, c / s, d / s
        det = a * d - b * c
        if abs(det) < DET_TOL:
            raise DegenerateMobiusError(f"degenerate Möbius map, |ad - bc| = {abs(det):.3g}")
        r = cmath.sqrt(det)
        for name, v in zip("abcd", (a / r, b / r, c / r, d / r)):
            object.__setattr__(self, name, v)

    @classmethod
    def identity(cls):
        return cls(1, 0, 0, 1)

    @classmethod
    def affine(cls, a, b):
        """z -> a z + b."""
        return cls(a, b, 0, 1)

    @classmethod
    def reciprocal(cls):
        """z -> 1/z."""
        return cls(0, 1, 1, 0)

    @classmethod
    def sending_to_zero_one_inf(cls, p1, p2, p3):
        """The map taking p1, p2, p3 to 0, 1, INF."""
        p1, p2, p3 = (sphere_point(p) for p in (p1, p2, p3))
        for u, v in ((p1, p2), (p1, p3), (p2, p3)):
            if chordal_distance(u, v) < 1e-12:
                raise DegenerateMobiusError("points of a triple must be pairwise distinct")
        if p1 is INF:
            return cls(0, p2 - p3, 1, -p3)
        if p2 is INF:
            return cls(1, -p1, 1, -p3)
        if p3 is INF:
            return cls(1, -p1, 0, p2 - p1)
        return cls(p2 - p3, -p1 * (p2 - p3), p2 - p1, -p3 * (p2 - p1))

    def __call__(self, z: SpherePoint) -> SpherePoint:
        a, b, c, d = self.a, self.b, self.c, self.d
        if z is INF:
            return INF if c == 0 else a / c
        den = c * z + d
        num = a * z + b
        if den == 0:
            return INF
        w = num / den
        return w if cmath.isfinite(w) else INF

    def inverse(self) -> "Mobius":
        return Mobius(self.d, -self.b, -self.c, self.a)

    def __matmul__(self, other: "Mobius") -> "Mobius":
        """Composition ``self ∘ other``."""
        a, b, c, d = self.a, self.b, self.c, self.d
        e, f, g, h = other.a, other.b, other.c, other.d
        return Mobius(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def is_identity(self, tol=1e-12) -> bool:
        # ±I both represent the identity
        return (abs(self.b) < tol and abs(self.c) < tol and abs(self.a - self.d) < tol)

    def as_rational(self):
        from .rational import RationalMap
        from .polynomial import Polynomial

        return RationalMap(Polynomial([self.b, self.a]), Polynomial([self.d, self.c]), reduce=False)


def mobius_apply(m: Mobius, z: SpherePoint) -> SpherePoint:
    return m(z)


def mobius_inverse(m: Mobius) -> Mobius:
    return m.inverse()


def mobius_through(ps, qs) -> Mobius:
    """Unique Möbius map sending ``ps[i]`` to ``qs[i]`` for i = 0, 1, 2."""
    a = Mobius.sending_to_zero_one_inf(*ps)
    b = Mobius.sending_to_zero_one_inf(*qs)
    return b.inverse() @ a
