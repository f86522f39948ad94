"""Dense complex polynomials, simultaneous-iteration root finding and numerical GCD.

Coefficients are stored in ascending power order: ``coeffs[k]`` multiplies ``z**k``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import cKDTree

from ..errors import RootFindingError

EPS = np.finfo(float).eps

ROOT_TOL = 1e-12
CLUSTER_RADIUS = 1e-7
MAX_SWEEPS = 500
GCD_EPS = 1e-10


class Polynomial:
    """Immutable dense polynomial with complex coefficients.

    The zero polynomial has an empty coefficient vector and degree -1.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs=()):
        c = np.array(coeffs, dtype=complex).ravel()
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else c[:0]
        if not np.all(np.isfinite(c)):
            raise ValueError("polynomial coefficients must be finite")
        c.flags.writeable = False
        self._c = c

    @classmethod
    def monomial(cls, k, coeff=1.0):
        c = np.zeros(k + 1, dtype=complex)
        c[k] = coeff
        return cls(c)

    @classmethod
    def from_roots(cls, roots):
        c = np.array([1.0 + 0j])
        for r in roots:
            c = np.convolve(c, [-r, 1.0])
        return cls(c)

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def degree(self) -> int:
        return len(self._c) - 1

    def is_zero(self) -> bool:
        return len(self._c) == 0

    @property
    def leading(self) -> complex:
        return complex(self._c[-1]) if len(self._c) else 0j

    def norm(self) -> float:
        """Max coefficient magnitude."""
        return float(np.max(np.abs(self._c))) if len(self._c) else 0.0

    def __call__(self, z):
        if not len(self._c):
            return np.zeros_like(np.asarray(z, dtype=complex)) if np.ndim(z) else 0j
        out = np.polyval(self._c[::-1], z)
        return complex(out) if np.ndim(out) == 0 else out

    def abs_eval(self, r):
        """Evaluate the polynomial with coefficients ``|c_k|`` at ``r >= 0``."""
        return np.polyval(np.abs(self._c[::-1]), r)

    def __repr__(self):
        return f"Polynomial({[complex(x) for x in self._c]!r})"

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return len(self._c) == len(other._c) and bool(np.all(self._c == other._c))

    def __hash__(self):
        return hash(tuple(self._c.tolist()))

    def __neg__(self):
        return Polynomial(-self._c)

    def __add__(self, other):
        other = _as_poly(other)
        n = max(len(self._c), len(other._c))
        out = np.zeros(n, dtype=complex)
        out[: len(self._c)] += self._c
        out[: len(other._c)] += other._c
        return Polynomial(out)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        other = _as_poly(other)
        if self.is_zero() or other.is_zero():
            return Polynomial()
        return Polynomial(np.convolve(self._c, other._c))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power of a polynomial")
        out = Polynomial([1.0])
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def scale(self, s) -> "Polynomial":
        return Polynomial(self._c * s)

    def deriv(self) -> "Polynomial":
        if len(self._c) <= 1:
            return Polynomial()
        return Polynomial(self._c[1:] * np.arange(1, len(self._c)))

    def divmod(self, other: "Polynomial"):
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        if self.degree < other.degree:
            return Polynomial(), self
        q, r = np.polydiv(self._c[::-1], other._c[::-1])
        return Polynomial(q[::-1]), Polynomial(np.atleast_1d(r)[::-1])

    def monic(self) -> "Polynomial":
        if self.is_zero():
            return self
        return Polynomial(self._c / self._c[-1])

    def trim(self, tol: float) -> "Polynomial":
        """Drop leading coefficients with magnitude <= ``tol * norm``."""
        c = self._c
        if not len(c):
            return self
        cut = tol * float(np.max(np.abs(c)))
        k = len(c)
        while k and abs(c[k - 1]) <= cut:
            k -= 1
        return Polynomial(c[:k])

    def homogenize(self, p, q, d: int):
        """Evaluate ``sum c_k p**k q**(d-k)`` elementwise (degree-``d`` form)."""
        p = np.asarray(p, dtype=complex)
        q = np.asarray(q, dtype=complex)
        c = self._c
        out = np.zeros(np.broadcast(p, q).shape, dtype=complex)
        qpow = np.ones_like(out)
        # Horner in p, carrying the running power of q
        for k in range(d, -1, -1):
            if k < len(c):
                out = out * p + c[k] * qpow
            else:
                out = out * p
            qpow = qpow * q
        return out

    def taylor_shift(self, a) -> "Polynomial":
        """Coefficients of ``p(u + a)`` as a polynomial in ``u``."""
        out = Polynomial()
        lin = Polynomial([a, 1.0])
        for ck in self._c[::-1]:
            out = out * lin + Polynomial([ck])
        return out


def _as_poly(x) -> Polynomial:
    if isinstance(x, Polynomial):
        return x
    return Polynomial([x])


def _upper_hull(points):
    hull = []
    for p in points:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def _initial_guesses(c: np.ndarray) -> np.ndarray:
    """Starting points on circles whose radii come from the Newton polygon."""
    a = np.abs(c)
    pts = [(i, math.log(a[i])) for i in range(len(c)) if a[i] > 0]
    hull = _upper_hull(pts)
    guesses = []
    for seg, ((i, li), (j, lj)) in enumerate(zip(hull, hull[1:])):
        count = j - i
        r = math.exp((li - lj) / count)
        ang = 2 * np.pi * np.arange(count) / count + 0.7 + 0.3 * seg
        guesses.append(r * np.exp(1j * ang))
    return np.concatenate(guesses)


def _newton_ratio(c, z):
    """Return ``p(z)/p'(z)`` and a backward-error flag, switching to the reversed
    polynomial for |z| > 1 so large iterates do not overflow."""
    n = len(c) - 1
    desc = c[::-1]
    ratio = np.empty_like(z)
    small = np.empty(z.shape, dtype=bool)
    inner = np.abs(z) <= 1.0
    if inner.any():
        zi = z[inner]
        p = np.polyval(desc, zi)
        dp = np.polyval(np.polyder(desc), zi) if n > 0 else np.zeros_like(zi)
        ratio[inner] = p / dp
        small[inner] = np.abs(p) <= 8 * n * EPS * np.polyval(np.abs(desc), np.abs(zi))
    outer = ~inner
    if outer.any():
        zo = z[outer]
        w = 1.0 / zo
        # reversed polynomial: c read in ascending order is p_rev in descending order
        pr = np.polyval(c, w)
        dpr = np.polyval(np.polyder(c), w)
        ratio[outer] = zo * pr / (n * pr - w * dpr)
        small[outer] = np.abs(pr) <= 8 * n * EPS * np.polyval(np.abs(c), np.abs(w))
    return ratio, small


def _aberth(c: np.ndarray, tol: float, max_sweeps: int):
    n = len(c) - 1
    z = _initial_guesses(c)
    active = np.ones(n, dtype=bool)
    block = max(1, 2 ** 20 // max(n, 1))
    for sweep in range(max_sweeps):
        idx = np.flatnonzero(active)
        if not idx.size:
            return z, True, sweep
        ratio, small = _newton_ratio(c, z[idx])
        s = np.empty(idx.size, dtype=complex)
        for lo in range(0, idx.size, block):
            rows = idx[lo : lo + block]
            diff = z[rows, None] - z[None, :]
            diff[np.arange(rows.size), rows] = np.inf
            s[lo : lo + block] = np.sum(1.0 / diff, axis=1)
        bad = ~np.isfinite(ratio)
        ratio[bad] = 0
        corr = ratio / (1.0 - ratio * s)
        corr[~np.isfinite(corr)] = ratio[~np.isfinite(corr)]
        z[idx] -= corr
        done = small | (np.abs(corr) <= tol * EPS * 16 * np.maximum(1.0, np.abs(z[idx])))
        active[idx[done]] = False
    return z, not active.any(), max_sweeps


def _polish(c, z, steps=3):
    desc = c[::-1]
    dd = np.polyder(desc)
    for _ in range(steps):
        p = np.polyval(desc, z)
        dp = np.polyval(dd, z)
        step = np.where(dp != 0, p / np.where(dp != 0, dp, 1), 0)
        cand = z - step
        better = np.abs(np.polyval(desc, cand)) < np.abs(p)
        z = np.where(better, cand, z)
    return z


def _clusters(z: np.ndarray, radius: float):
    n = len(z)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    scale = np.maximum(1.0, np.abs(z))
    tree = cKDTree(np.column_stack([z.real, z.imag]))
    for i, j in tree.query_pairs(radius * float(scale.max())):
        if abs(z[i] - z[j]) <= radius * max(scale[i], scale[j]):
            parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _merge_perturbed_multiples(p: Polynomial, groups, reach: float = 1e-3):
    """Merge nearby clusters whose spread is what rounding does to one m-fold root.

    An exact m-fold root perturbed at the backward-error level splits into a
    ring of radius about ``(eps * |p|~(|c|) / |t_m|) ** (1/m)``, where ``t_m``
    is the m-th Taylor coefficient at the centre.
    """
    if len(groups) < 2:
        return groups
    centres = np.array([g[0] for g in groups])
    mults = np.array([g[1] for g in groups])
    merged = []
    for g in _clusters(centres, reach):
        if len(g) == 1:
            merged.append(groups[g[0]])
            continue
        m = int(mults[g].sum())
        c = complex(np.sum(centres[g] * mults[g]) / m)
        spread = float(np.max(np.abs(centres[g] - c)))
        q = p.taylor_shift(c)
        tm = abs(q.coeffs[m]) if m < len(q.coeffs) else 0.0
        if tm > 0:
            bound = 4.0 * (8 * p.degree * EPS * float(p.abs_eval(abs(c))) / tm) ** (1.0 / m)
            if spread <= bound:
                merged.append([c, m])
                continue
        merged.extend(groups[i] for i in g)
    return merged


def _refine_multiple(p: Polynomial, centre: complex, m: int, radius: float) -> complex:
    """Newton on the (m-1)-th derivative, where an m-fold root is simple."""
    q = p
    for _ in range(m - 1):
        q = q.deriv()
    dq = q.deriv()
    z = centre
    for _ in range(5):
        d = dq(z)
        if d == 0:
            break
        cand = z - q(z) / d
        if abs(q(cand)) >= abs(q(z)):
            break
        z = cand
    if abs(z - centre) > radius * max(1.0, abs(centre)):
        return centre
    return z


def poly_roots(p: Polynomial, tol: float = ROOT_TOL, cluster_radius: float = CLUSTER_RADIUS,
               max_sweeps: int = MAX_SWEEPS):
    """Roots of ``p`` with multiplicities.

    Uses Aberth-Ehrlich simultaneous iteration from Newton-polygon starting
    circles, falling back to companion-matrix eigenvalues when the sweep
    budget runs out. Roots closer than ``cluster_radius`` (relative to
    ``max(1, |z|)``) are merged and their multiplicities summed.

    Returns a list of ``(root, multiplicity)`` sorted by real then imaginary part.
    """
    if p.is_zero() or p.degree < 1:
        raise ValueError("poly_roots needs a polynomial of degree >= 1")
    c = p.coeffs
    nz0 = int(np.flatnonzero(c)[0])
    c = np.array(c[nz0:])
    found = [0j] * nz0
    n = len(c) - 1
    if n == 1:
        found.append(complex(-c[0] / c[1]))
    elif n > 1:
        z, ok, _ = _aberth(c.copy(), tol, max_sweeps)
        if not ok or not np.all(np.isfinite(z)):
            z = np.roots(c[::-1]).astype(complex)
            z = _polish(c, z)
            resid = np.abs(np.polyval(c[::-1], z))
            bound = tol * np.max(np.abs(c)) * np.maximum(1.0, np.abs(z)) ** n
            if not np.all(np.isfinite(z)) or np.any(resid > bound * 1e4):
                raise RootFindingError(
                    f"root finder did not converge in {max_sweeps} sweeps (degree {n})", best=z)
        found.extend(complex(x) for x in z)
    z = np.array(found, dtype=complex)
    groups = [[complex(np.mean(z[g])), len(g)] for g in _clusters(z, cluster_radius)]
    groups = _merge_perturbed_multiples(p, groups)
    out = []
    for centre, m in groups:
        if m > 1 and not (m == nz0 and centre == 0):
            centre = _refine_multiple(p, centre, m, cluster_radius * 1e3)
        out.append((centre, m))
    out.sort(key=lambda t: (round(t[0].real, 10), round(t[0].imag, 10)))
    return out


def root_residual_ok(p: Polynomial, roots, tol: float = ROOT_TOL) -> bool:
    """Check ``|p(r)| <= tol * |p| * max(1,|r|)**deg`` for each root."""
    norm = p.norm()
    for r, _ in roots:
        if abs(p(r)) > tol * norm * max(1.0, abs(r)) ** p.degree:
            return False
    return True


def poly_gcd(p: Polynomial, q: Polynomial, eps: float = GCD_EPS) -> Polynomial:
    """Monic numerical GCD by a Euclidean remainder sequence.

    Remainders are normalized to unit max-coefficient and truncated at ``eps``;
    a remainder that vanishes below ``eps`` ends the sequence.
    """
    if p.is_zero() and q.is_zero():
        raise ValueError("gcd of two zero polynomials")
    a, b = p.trim(eps), q.trim(eps)
    if a.is_zero():
        return b.monic()
    if b.is_zero():
        return a.monic()
    if a.degree < b.degree:
        a, b = b, a
    a = a.scale(1.0 / a.norm())
    b = b.scale(1.0 / b.norm())
    while True:
        if b.degree == 0:
            return Polynomial([1.0])
        _, r = a.divmod(b)
        if r.is_zero() or r.norm() <= eps:
            return b.monic()
        r = r.trim(eps / r.norm())
        a, b = b, r.scale(1.0 / r.norm())
