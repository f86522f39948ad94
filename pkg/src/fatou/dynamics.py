"""Fixed and periodic points, multipliers, critical and exceptional points,
Koenigs linearization and orbit tracing for rational maps."""

from __future__ import annotations

import cmath
import enum
import logging
from dataclasses import dataclass

import numpy as np

from .core.mobius import Mobius
from .core.polynomial import Polynomial, poly_roots
from .core.rational import DEGREE_CAP, RationalMap, compose, conjugate, iterate
from .core.sphere import INF, SpherePoint, chordal_distance, sphere_point
from .errors import NotFixedError, PreconditionError

# leading coefficients below this fraction of the norm are treated as cancelled
CANCEL_TOL = 1e-12

log = logging.getLogger(__name__)


class Kind(enum.Enum):
    SUPERATTRACTING = "superattracting"
    ATTRACTING = "attracting"
    REPELLING = "repelling"
    RATIONALLY_INDIFFERENT = "rationally_indifferent"
    IRRATIONALLY_INDIFFERENT = "irrationally_indifferent"


@dataclass(frozen=True)
class Classification:
    kind: Kind
    q: int | None = None

    def __str__(self):
        if self.kind is Kind.RATIONALLY_INDIFFERENT:
            return f"{self.kind.value}(q={self.q})"
        return self.kind.value

    @property
    def is_attracting(self) -> bool:
        return self.kind in (Kind.SUPERATTRACTING, Kind.ATTRACTING)


@dataclass(frozen=True)
class ClassifyConfig:
    tol_super: float = 1e-9
    tol_unit: float = 1e-9
    tol_root: float = 1e-8
    q_max: int = 64


def classify(lam: complex, cfg: ClassifyConfig = ClassifyConfig()) -> Classification:
    """Classify a multiplier into the attracting/repelling/indifferent bands."""
    r = abs(lam)
    if r < cfg.tol_super:
        return Classification(Kind.SUPERATTRACTING)
    if r < 1 - cfg.tol_unit:
        return Classification(Kind.ATTRACTING)
    if r > 1 + cfg.tol_unit:
        return Classification(Kind.REPELLING)
    # compare angles on the unit circle so |lam| drift inside the band is ignored
    u = lam / r
    p = 1 + 0j
    for q in range(1, cfg.q_max + 1):
        p *= u
        if abs(p - 1) <= cfg.tol_root:
            return Classification(Kind.RATIONALLY_INDIFFERENT, q)
    return Classification(Kind.IRRATIONALLY_INDIFFERENT)


@dataclass(frozen=True)
class FixedPointRecord:
    location: SpherePoint
    multiplier: complex
    multiplicity: int
    classification: Classification


@dataclass(frozen=True)
class PeriodicOrbit:
    period: int
    points: tuple
    multiplier: complex
    classification: Classification
    multiplicity: int = 1

    def contains(self, z: SpherePoint, tol: float = 1e-8) -> bool:
        return any(chordal_distance(z, p) <= tol for p in self.points)


# multipliers -----------------------------------------------------------------

def _inf_chart(R: RationalMap) -> RationalMap:
    """The map in the chart w = 1/z at both ends: w -> 1/R(1/w)."""
    return conjugate(R, Mobius.reciprocal())


def multiplier(R: RationalMap, z0: SpherePoint, tol: float = 1e-8) -> complex:
    """Multiplier of R at a fixed point; at infinity it is computed in the 1/z chart."""
    z0 = sphere_point(z0)
    if chordal_distance(R(z0), z0) > tol:
        raise NotFixedError(f"{z0} is not fixed by the map (tol {tol})")
    if z0 is INF:
        return complex(_inf_chart(R).deriv_at(0.0))
    return complex(R.deriv_at(z0))


def multiplier_at_infinity_formula(R: RationalMap) -> complex:
    """Closed form for polynomial-like growth at infinity: ratio of leading
    coefficients when the degrees differ by one, zero when by more."""
    n, m = R.num.degree, R.den.degree
    if n == m + 1:
        return R.den.leading / R.num.leading
    if n > m + 1:
        return 0j
    raise NotFixedError("infinity is not a fixed point of this map")


def _mobius_avoiding(points) -> Mobius:
    """A Möbius map 1/(z - a) whose pole a stays away from the given points."""
    cands = [0, 1, -1, 1j, -1j, 2, -2, 0.5 + 0.5j, -0.5 - 0.5j, 3j]
    best = max(cands, key=lambda a: min(chordal_distance(a, p) for p in points))
    return Mobius(0, 1, 1, -best)


def cycle_multiplier(R: RationalMap, points) -> complex:
    """Product of derivatives along a cycle, moving the cycle off infinity if needed."""
    if not any(p is INF for p in points):
        return complex(np.prod([R.deriv_at(p) for p in points]))
    M = _mobius_avoiding(points)
    S = conjugate(R, M)
    return complex(np.prod([S.deriv_at(M(p)) for p in points]))


# fixed and periodic points -----------------------------------------------------

def _fixed_equation(R: RationalMap):
    """Finite fixed-point polynomial P - zQ (cancelled leading terms removed)
    and the fixed-point multiplicity at infinity. ``None`` for the identity."""
    F = R.num - Polynomial([0, 1]) * R.den
    F = F.trim(CANCEL_TOL)
    if F.is_zero():
        return None, 0
    return F, R.degree + 1 - F.degree


def _roots_or_empty(F: Polynomial, tol):
    if F.degree < 1:
        return []
    return poly_roots(F, tol=tol)


def fixed_points(R: RationalMap, tol: float = 1e-12, cfg: ClassifyConfig = ClassifyConfig()):
    """All d+1 fixed points counted with multiplicity, each with its multiplier.

    The identity map fixes everything; it is reported as the pair {0, INF}.
    """
    F, inf_mult = _fixed_equation(R)
    if F is None:
        log.warning("identity map: every point is fixed; reporting 0 and inf")
        one = Classification(Kind.RATIONALLY_INDIFFERENT, 1)
        return [FixedPointRecord(0j, 1 + 0j, 1, one), FixedPointRecord(INF, 1 + 0j, 1, one)]
    out = []
    for z, m in _roots_or_empty(F, tol):
        lam = complex(R.deriv_at(z))
        out.append(FixedPointRecord(z, lam, m, classify(lam, cfg)))
    if inf_mult > 0:
        lam = multiplier(R, INF)
        out.append(FixedPointRecord(INF, lam, inf_mult, classify(lam, cfg)))
    return out


def _newton_cycle(R: RationalMap, z: complex, n: int, steps: int = 4) -> complex:
    """Polish a period-n point with Newton on R^n(z) - z evaluated along the orbit."""
    best = z
    best_res = None
    for _ in range(steps):
        w, d = z, 1 + 0j
        for _ in range(n):
            if w is INF:
                return best
            d *= R.deriv_at(w)
            w = R(w)
        if w is INF or not cmath.isfinite(d):
            return best
        res = abs(w - z)
        if best_res is None or res < best_res:
            best, best_res = z, res
        if d == 1 or res == 0:
            return best
        z = z - (w - z) / (d - 1)
    return best


def _minimal_period(R, z, n, tol):
    w = z
    for m in range(1, n + 1):
        w = R(w)
        if n % m == 0 and chordal_distance(w, z) <= tol:
            return m
    return None


def periodic_points(R: RationalMap, n: int, tol: float = 1e-8, cfg: ClassifyConfig = ClassifyConfig(),
                    degree_cap: int = DEGREE_CAP):
    """Cycles of exact period n, from the roots of R^n(z) = z.

    Points of lower period are removed and the rest grouped into orbits in
    forward order.
    """
    if n < 1:
        raise ValueError("period must be >= 1")
    Rn = iterate(R, n, degree_cap)
    F, inf_mult = _fixed_equation(Rn)
    if F is None:
        raise PreconditionError(f"R^{n} is the identity; every point is periodic")
    cands = []
    for z, m in _roots_or_empty(F, 1e-12):
        if m == 1:
            z = _newton_cycle(R, z, n)
        cands.append((z, m))
    if inf_mult > 0:
        cands.append((INF, inf_mult))
    exact = [(z, m) for z, m in cands if _minimal_period(R, z, n, tol) == n]
    orbits = []
    used = [False] * len(exact)
    for i, (z, m) in enumerate(exact):
        if used[i]:
            continue
        used[i] = True
        pts = [z]
        w = z
        for _ in range(n - 1):
            w = R(w)
            j = _nearest_unused(exact, used, w, tol * 100)
            if j is not None:
                used[j] = True
                w = exact[j][0]
            pts.append(w)
        lam = cycle_multiplier(R, pts)
        orbits.append(PeriodicOrbit(n, tuple(pts), lam, classify(lam, cfg), m))
    return orbits


def _nearest_unused(cands, used, w, tol):
    best, bd = None, tol
    for j, (z, _) in enumerate(cands):
        if used[j]:
            continue
        d = chordal_distance(z, w)
        if d <= bd:
            best, bd = j, d
    return best


# critical points, preimages, exceptional points ---------------------------------

def local_degree(R: RationalMap, z0: SpherePoint, tol: float = 1e-9) -> int:
    """Local degree of R at z0, from the vanishing order at 0 of A∘R∘B where
    B(0) = z0 and A(R(z0)) = 0 are chart maps."""
    z0 = sphere_point(z0)
    B = Mobius.reciprocal() if z0 is INF else Mobius.affine(1, z0)
    w0 = R(z0)
    A = Mobius.reciprocal() if w0 is INF else Mobius.affine(1, -w0)
    H = compose(A.as_rational(), compose(R, B.as_rational()))
    c = np.abs(H.num.coeffs)
    cut = tol * c.max()
    k = 0
    while k < len(c) and c[k] <= cut:
        k += 1
    return k


def critical_points(R: RationalMap, tol: float = 1e-12):
    """Critical points with multiplicity (local degree minus one).

    Finite ones are roots of Q P' - P Q' (which also picks up multiple poles);
    infinity is tested in the 1/z chart.
    """
    if R.degree < 2:
        raise PreconditionError("critical points need degree >= 2")
    P, Q = R.num, R.den
    W = (Q * P.deriv() - P * Q.deriv()).trim(CANCEL_TOL)
    out = list(_roots_or_empty(W, tol))
    m_inf = local_degree(R, INF) - 1
    if m_inf > 0:
        out.append((INF, m_inf))
    return out


def preimages(R: RationalMap, w: SpherePoint, tol: float = 1e-12):
    """All d preimages of w with multiplicity."""
    w = sphere_point(w)
    if w is INF:
        F = R.den
    else:
        F = (R.num - R.den.scale(w)).trim(CANCEL_TOL)
    out = list(_roots_or_empty(F, tol)) if not F.is_zero() else []
    m_inf = R.degree - max(F.degree, 0)
    if m_inf > 0:
        out.append((INF, m_inf))
    return out


def deficiency(R: RationalMap, z: SpherePoint) -> int:
    """d minus the number of distinct preimages; nonzero exactly at critical values."""
    if R.degree < 2:
        raise PreconditionError("deficiency needs degree >= 2")
    return R.degree - len(preimages(R, z))


def exceptional_points(R: RationalMap, tol: float = 1e-8):
    """Points with finite backward orbit (at most two).

    A candidate is a totally ramified critical value w = R(c); it is exceptional
    when its unique preimage is itself (a fixed point) or is another candidate
    whose unique preimage is w (a two-cycle).
    """
    d = R.degree
    if d < 2:
        raise PreconditionError("exceptional points need degree >= 2")
    cands = [(R(c), c) for c, m in critical_points(R) if m == d - 1]
    out = []
    for w, c in cands:
        ok = chordal_distance(c, w) <= tol or any(
            chordal_distance(w2, c) <= tol and chordal_distance(c2, w) <= tol for w2, c2 in cands)
        if ok and not any(chordal_distance(w, e) <= tol for e in out):
            out.append(w)
    return out


# Koenigs linearization ------------------------------------------------------------

@dataclass(frozen=True)
class KoenigsConfig:
    tol: float = 1e-15
    max_iter: int = 10_000
    escape_radius: float = 1e6
    residual_tol: float = 1e-8


def _centered(R: RationalMap, a: complex):
    """Numerator/denominator of u -> R(u + a) - a with the numerator divided by u."""
    D = R.den.taylor_shift(a)
    N = R.num.taylor_shift(a) - D.scale(a)
    return Polynomial(N.coeffs[1:]), D


def koenigs_coordinate(R: RationalMap, fp: FixedPointRecord | SpherePoint, zs, cfg: KoenigsConfig = KoenigsConfig()):
    """Koenigs linearizing coordinate g at an attracting fixed point.

    ``g(z) = u * prod_k (1 + phi(u_k))`` in coordinates ``u = z - fp``, with
    ``1 + phi(u) = R~(u) / (lam u)``. Points that leave the basin (or do not
    converge within ``cfg.max_iter`` steps) get ``nan``. Evaluated for all
    points at once; output order follows ``zs``.
    """
    loc = fp.location if isinstance(fp, FixedPointRecord) else sphere_point(fp)
    if loc is INF:
        raise PreconditionError("conjugate the fixed point off infinity first")
    N1, D = _centered(R, loc)
    lam = N1(0) / D(0)
    if abs(lam) == 0 or abs(lam) < 1e-12:
        raise PreconditionError("Koenigs requires 0<|λ|<1 (fixed point is superattracting)")
    if abs(lam) >= 1:
        raise PreconditionError(f"Koenigs requires 0<|λ|<1, got |λ| = {abs(lam):.6g}")
    u = np.array([complex(z) for z in zs], dtype=complex) - loc
    g = u.copy()
    active = np.ones(u.shape, dtype=bool)
    failed = np.zeros(u.shape, dtype=bool)
    for _ in range(cfg.max_iter):
        if not active.any():
            break
        ua = u[active]
        ratio = N1(ua) / D(ua)
        fac = ratio / lam
        g[active] *= fac
        u[active] = ua * ratio
        done = np.abs(fac - 1) < cfg.tol
        bad = ~np.isfinite(u[active]) | (np.abs(u[active]) > cfg.escape_radius)
        idx = np.flatnonzero(active)
        failed[idx[bad]] = True
        active[idx[done | bad]] = False
    failed |= active
    g[failed] = complex("nan")
    return [complex(x) for x in g]


def koenigs_limit(R: RationalMap, loc: complex, lam: complex, z: complex, n: int) -> complex:
    """Independent check: (R^n(z) - loc) / lam^n for a fixed n."""
    w = z
    for _ in range(n):
        w = R(w)
    return (w - loc) / lam ** n


# orbits ---------------------------------------------------------------------------

class OrbitStatus(enum.Enum):
    CONVERGED_TO_CYCLE = "converged_to_cycle"
    EVENTUALLY_PERIODIC = "eventually_periodic"
    MAX_ITERATIONS = "max_iterations"


@dataclass
class OrbitTrace:
    samples: list
    status: OrbitStatus
    iterations: int
    preperiod: int | None = None
    period: int | None = None
    cycle: PeriodicOrbit | None = None

    @property
    def after(self):
        return self.preperiod


def orbit(R: RationalMap, z0: SpherePoint, max_iter: int = 10_000, tol: float = 1e-9,
          cfg: ClassifyConfig = ClassifyConfig()) -> OrbitTrace:
    """Forward orbit with Floyd cycle detection at chordal tolerance ``tol``.

    A cycle hit to within rounding is reported as eventually periodic; an orbit
    that only approaches a cycle is reported as converged to it.
    """
    xs = [sphere_point(z0)]

    def upto(k):
        while len(xs) <= k:
            xs.append(R(xs[-1]))

    hit = None
    for i in range(1, max_iter // 2 + 1):
        upto(2 * i)
        if chordal_distance(xs[i], xs[2 * i]) <= tol:
            hit = i
            break
    if hit is None:
        return OrbitTrace(xs, OrbitStatus.MAX_ITERATIONS, len(xs) - 1)
    i = hit
    period = next(p for p in range(1, i + 1) if chordal_distance(xs[i], xs[i + p]) <= tol)
    pre = next(j for j in range(i + 1) if chordal_distance(xs[j], xs[j + period]) <= tol)
    samples = xs[: pre + period + 1]
    pts = tuple(samples[pre : pre + period])
    lam = cycle_multiplier(R, pts)
    cyc = PeriodicOrbit(period, pts, lam, classify(lam, cfg))
    exact = chordal_distance(xs[pre], xs[pre + period]) <= min(1e-13, tol * 1e-2)
    status = OrbitStatus.EVENTUALLY_PERIODIC if exact else OrbitStatus.CONVERGED_TO_CYCLE
    return OrbitTrace(samples, status, len(xs) - 1, pre, period, cyc)
