"""Rational maps of the Riemann sphere."""

from __future__ import annotations

import cmath

import numpy as np

from ..errors import ConstantMapError, DegreeCapError
from .mobius import Mobius
from .polynomial import GCD_EPS, Polynomial, poly_gcd
from .sphere import INF, SpherePoint

DEGREE_CAP = 4096
# relative size below which leading coefficients produced by composition are noise
TRIM_TOL = 1e-13


def _canonical(num: Polynomial, den: Polynomial):
    """Scale jointly so the largest coefficient (first by magnitude) is exactly 1."""
    allc = np.concatenate([num.coeffs, den.coeffs])
    mags = np.abs(allc)
    k = int(np.flatnonzero(mags >= mags.max() * (1 - 1e-12))[0])
    s = 1.0 / allc[k]
    return num.scale(s), den.scale(s)


class RationalMap:
    """A quotient ``num/den`` of coprime polynomials, canonically scaled.

    With ``reduce=True`` (the default) a numerical GCD is divided out first.
    Use :func:`rational_reduce` for the documented entry point.
    """

    __slots__ = ("num", "den", "degree", "_deriv")

    def __init__(self, num, den=None, reduce: bool = True, gcd_eps: float = GCD_EPS):
        num = num if isinstance(num, Polynomial) else Polynomial(num)
        den = Polynomial([1.0]) if den is None else (den if isinstance(den, Polynomial) else Polynomial(den))
        if den.is_zero():
            raise ZeroDivisionError("denominator is the zero polynomial")
        if num.is_zero():
            raise ConstantMapError("the zero map is constant")
        if reduce and num.degree >= 1 and den.degree >= 1:
            g = poly_gcd(num, den, gcd_eps)
            if g.degree >= 1:
                num = num.divmod(g)[0]
                den = den.divmod(g)[0]
        num, den = _canonical(num, den)
        degree = max(num.degree, den.degree)
        if degree < 1:
            raise ConstantMapError("map reduces to a constant")
        self.num = num
        self.den = den
        self.degree = degree
        self._deriv = None

    @classmethod
    def polynomial(cls, coeffs):
        return cls(Polynomial(coeffs), Polynomial([1.0]), reduce=False)

    def __repr__(self):
        from .parse import format_map

        return f"RationalMap({format_map(self)!r})"

    def __str__(self):
        from .parse import format_map

        return format_map(self)

    def is_polynomial(self) -> bool:
        return self.den.degree == 0

    # evaluation ---------------------------------------------------------

    def eval_h(self, p, q):
        """Apply the map to homogeneous coordinates; returns a normalized pair."""
        d = self.degree
        P = self.num.homogenize(p, q, d)
        Q = self.den.homogenize(p, q, d)
        s = np.maximum(np.abs(P), np.abs(Q))
        s = np.where(s == 0, 1.0, s)
        return P / s, Q / s

    def __call__(self, z: SpherePoint) -> SpherePoint:
        if z is INF:
            n, m = self.num.degree, self.den.degree
            if n > m:
                return INF
            if n < m:
                return 0j
            return self.num.leading / self.den.leading
        z = complex(z)
        if abs(z) <= 1.0:
            p, q = z, 1.0
        else:
            p, q = 1.0, 1.0 / z
        P = complex(self.num.homogenize(p, q, self.degree))
        Q = complex(self.den.homogenize(p, q, self.degree))
        if Q == 0:
            return INF
        w = P / Q
        return w if cmath.isfinite(w) else INF

    def eval_array(self, z):
        """Vectorized evaluation at finite points; poles give ``inf`` entries."""
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.num(z) / self.den(z)

    def deriv_at(self, z):
        """R'(z) at finite, non-pole points, by the quotient rule."""
        P, Q = self.num, self.den
        q = Q(z)
        return (q * P.deriv()(z) - P(z) * Q.deriv()(z)) / (q * q)

    def derivative(self) -> "RationalMap":
        if self._deriv is None:
            P, Q = self.num, self.den
            w = Q * P.deriv() - P * Q.deriv()
            self._deriv = _reduce_or_zero(w, Q * Q)
        return self._deriv

    def coefficient_vector(self) -> np.ndarray:
        d = self.degree
        out = np.zeros(2 * (d + 1), dtype=complex)
        out[: len(self.num.coeffs)] = self.num.coeffs
        out[d + 1 : d + 1 + len(self.den.coeffs)] = self.den.coeffs
        return out

    def allclose(self, other: "RationalMap", tol: float = 1e-9) -> bool:
        """Coefficientwise equality up to a common scale factor."""
        if self.degree != other.degree:
            return False
        u, v = self.coefficient_vector(), other.coefficient_vector()
        k = int(np.argmax(np.abs(u)))
        if v[k] == 0:
            return False
        return bool(np.max(np.abs(u - v * (u[k] / v[k]))) <= tol * np.max(np.abs(u)))


def _reduce_or_zero(num: Polynomial, den: Polynomial):
    num = num.trim(TRIM_TOL)
    if num.is_zero():
        raise ConstantMapError("derivative vanishes identically")
    try:
        return RationalMap(num, den)
    except ConstantMapError:
        # affine maps have a constant derivative
        return _ConstantDerivative(num, den)


class _ConstantDerivative:
    def __init__(self, num, den):
        self.value = num.coeffs[0] / den.coeffs[0] if num.degree == 0 and den.degree == 0 else None
        self.num = num
        self.den = den
        self.degree = 0

    def __call__(self, z):
        return self.value if self.value is not None else self.num(z) / self.den(z)


def rational_reduce(P: Polynomial, Q: Polynomial, gcd_eps: float = GCD_EPS) -> RationalMap:
    """Divide out the numerical GCD and scale canonically."""
    return RationalMap(P, Q, reduce=True, gcd_eps=gcd_eps)


def _trimmed_pair(num: Polynomial, den: Polynomial):
    """Drop cancellation noise in leading coefficients, each relative to its own size."""
    def cut(p):
        c = p.coeffs
        scale = p.norm()
        k = len(c)
        while k > 1 and abs(c[k - 1]) <= TRIM_TOL * scale:
            k -= 1
        return Polynomial(c[:k])
    return cut(num), cut(den)


def compose(R: RationalMap, S: RationalMap, degree_cap: int = DEGREE_CAP) -> RationalMap:
    """``R ∘ S``. Composition of coprime quotients is coprime, so no GCD is taken."""
    if R.degree * S.degree > degree_cap:
        raise DegreeCapError(
            f"composition degree {R.degree * S.degree} exceeds cap {degree_cap}; "
            "use pointwise orbits instead")
    d = R.degree
    sn, sd = S.num, S.den
    # powers of the inner numerator and denominator
    pn = [Polynomial([1.0])]
    pd = [Polynomial([1.0])]
    for _ in range(d):
        pn.append(pn[-1] * sn)
        pd.append(pd[-1] * sd)
    num = Polynomial()
    den = Polynomial()
    for k in range(d + 1):
        term = pn[k] * pd[d - k]
        a = R.num.coeffs[k] if k < len(R.num.coeffs) else 0
        b = R.den.coeffs[k] if k < len(R.den.coeffs) else 0
        if a:
            num = num + term.scale(a)
        if b:
            den = den + term.scale(b)
    num, den = _trimmed_pair(num, den)
    return RationalMap(num, den, reduce=False)


def iterate(R: RationalMap, n: int, degree_cap: int = DEGREE_CAP) -> RationalMap:
    """The n-fold composition ``R^n``."""
    if n < 1:
        raise ValueError("iterate needs n >= 1")
    if R.degree ** n > degree_cap:
        raise DegreeCapError(
            f"degree {R.degree}**{n} exceeds cap {degree_cap}; use pointwise orbits instead")
    out = R
    for _ in range(n - 1):
        out = compose(R, out, degree_cap)
    return out


def conjugate(R: RationalMap, M: Mobius) -> RationalMap:
    """``M ∘ R ∘ M^-1``."""
    return compose(M.as_rational(), compose(R, M.inverse().as_rational()))
