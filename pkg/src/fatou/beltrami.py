"""Dilatation algebra and a grid solver for the Beltrami equation f_zbar = mu f_z.

Fields live on a uniform N x N lattice ``z[i, j] = c + ((j - N//2) + i (i - N//2)) h``,
so axis 0 is y (increasing) and axis 1 is x. With ``c = 0`` the origin is a node.

The solution is built from the operators

    P h(w) = -(1/pi) \\iint h(z) (1/(z - w) - 1/z) dx dy
    T h(w) = -(1/pi) PV \\iint h(z) / (z - w)^2 dx dy

by the Neumann iteration h <- T(mu h) + T mu, then f = P(mu (h + 1)) + z.
Both sums are discrete convolutions and are evaluated with zero-padded FFTs.
"""

from __future__ import annotations

import csv
import logging
import math
import struct
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import fft, ndimage

from .errors import ConvergenceError, FatouError, FormatError, PreconditionError, SupportError

log = logging.getLogger(__name__)

QCF_MAGIC = b"QCF1"
_QCF_HEADER = struct.Struct("<4sQddd")


# pointwise algebra ---------------------------------------------------------------

@dataclass(frozen=True)
class WirtingerPair:
    f_z: complex
    f_zbar: complex

    @classmethod
    def from_partials(cls, f_x, f_y):
        return cls(0.5 * (f_x - 1j * f_y), 0.5 * (f_x + 1j * f_y))

    def jacobian(self):
        return np.abs(self.f_z) ** 2 - np.abs(self.f_zbar) ** 2


def dilatation(fp: WirtingerPair):
    """(mu, D) with mu = f_zbar / f_z and D = (1 + |mu|) / (1 - |mu|)."""
    fz = np.asarray(fp.f_z, dtype=complex)
    if np.any(fz == 0):
        raise PreconditionError("degenerate derivative: f_z = 0")
    mu = np.asarray(fp.f_zbar, dtype=complex) / fz
    a = np.abs(mu)
    with np.errstate(divide="ignore"):
        D = np.where(a < 1, (1 + a) / (1 - a), np.inf)
    if mu.ndim == 0:
        return complex(mu), float(D)
    return mu, D


def dilatation_ratio(mu):
    a = np.abs(mu)
    return (1 + a) / (1 - a)


def compose_dilatation(mu_f, k_f, mu_g_at_fz):
    """Complex dilatation of g o f, with ``k_f = conj(f_z) / f_z``."""
    t = k_f * mu_g_at_fz
    return (mu_f + t) / (1 + np.conj(mu_f) * t)


def recover_mu_g(mu_gf, mu_f, k_f):
    """Inverse of :func:`compose_dilatation` in its last argument."""
    return (mu_gf - mu_f) / (k_f * (1 - np.conj(mu_f) * mu_gf))


def inverse_dilatation(mu_f, f_z):
    """mu of f^{-1}, evaluated at f(z): -(f_z / |f_z|)^2 mu_f."""
    f_z = np.asarray(f_z, dtype=complex)
    if np.any(f_z == 0):
        raise PreconditionError("degenerate derivative: f_z = 0")
    u = f_z / np.abs(f_z)
    out = -(u * u) * mu_f
    return complex(out) if np.ndim(out) == 0 else out


# grids and fields ---------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    n: int
    center: complex = 0j
    spacing: float = 1.0

    def __post_init__(self):
        if self.n < 5:
            raise PreconditionError("grid needs at least 5 samples per side")
        if not self.spacing > 0:
            raise PreconditionError("grid spacing must be positive")

    @classmethod
    def covering(cls, n: int, half_width: float, center: complex = 0j):
        """Grid of n nodes per side spanning [-half_width, half_width) about center."""
        return cls(n, complex(center), 2.0 * half_width / n)

    @property
    def offsets(self):
        return (np.arange(self.n) - self.n // 2) * self.spacing

    def points(self) -> np.ndarray:
        o = self.offsets
        return self.center + o[None, :] + 1j * o[:, None]

    def node_of(self, z: complex, tol: float = 1e-9):
        """(row, col) if z is a grid node, else None."""
        u = (complex(z) - self.center) / self.spacing
        j, i = round(u.real) + self.n // 2, round(u.imag) + self.n // 2
        if abs(u - complex(round(u.real), round(u.imag))) <= tol and 0 <= i < self.n and 0 <= j < self.n:
            return i, j
        return None

    def interpolate(self, field_, z: complex) -> complex:
        """Bilinear interpolation of a grid field at z."""
        u = (complex(z) - self.center) / self.spacing
        x, y = u.real + self.n // 2, u.imag + self.n // 2
        j0, i0 = int(math.floor(x)), int(math.floor(y))
        if not (0 <= j0 < self.n - 1 and 0 <= i0 < self.n - 1):
            raise PreconditionError(f"point {z} outside the grid")
        tx, ty = x - j0, y - i0
        f = field_
        return complex((1 - tx) * (1 - ty) * f[i0, j0] + tx * (1 - ty) * f[i0, j0 + 1]
                       + (1 - tx) * ty * f[i0 + 1, j0] + tx * ty * f[i0 + 1, j0 + 1])

    def l2(self, f) -> float:
        return float(self.spacing * np.sqrt(np.sum(np.abs(f) ** 2)))


@dataclass
class BeltramiField:
    grid: Grid
    mu: np.ndarray
    support_radius: float
    k_bound: float

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=complex)
        if self.mu.shape != (self.grid.n, self.grid.n):
            raise PreconditionError(f"mu has shape {self.mu.shape}, grid is {self.grid.n}x{self.grid.n}")
        if not np.all(np.isfinite(self.mu)):
            raise PreconditionError("mu has non-finite samples")
        sup = float(np.max(np.abs(self.mu))) if self.mu.size else 0.0
        if not self.k_bound < 1:
            raise PreconditionError(f"k_bound = {self.k_bound} must be < 1")
        if sup > self.k_bound + 1e-15:
            raise PreconditionError(f"|mu| reaches {sup:.6g} > k_bound = {self.k_bound}")
        z = self.grid.points()
        if np.any(self.mu[np.abs(z - 0) > self.support_radius + 1e-12] != 0):
            raise PreconditionError("mu is nonzero outside its support radius")

    @classmethod
    def from_samples(cls, grid: Grid, mu, k_bound: float | None = None):
        mu = np.asarray(mu, dtype=complex)
        nz = mu != 0
        r = float(np.max(np.abs(grid.points()[nz]))) if nz.any() else 0.0
        k = float(np.max(np.abs(mu))) if k_bound is None else k_bound
        return cls(grid, mu, r, k)

    @classmethod
    def from_function(cls, grid: Grid, fn, k_bound: float | None = None):
        return cls.from_samples(grid, np.asarray(fn(grid.points()), dtype=complex), k_bound)

    @classmethod
    def constant_disk(cls, grid: Grid, k: complex, radius: float = 1.0):
        """mu = k on |z| < radius, 0 elsewhere."""
        z = grid.points()
        mu = np.where(np.abs(z) < radius, complex(k), 0j)
        return cls(grid, mu, radius, abs(k))


@dataclass
class QCSolution:
    grid: Grid
    f: np.ndarray
    h_field: np.ndarray
    residual: float
    iterations: int
    mu: np.ndarray
    increments: list = field(default_factory=list)
    c_obs: float = 0.0

    def f_at(self, z: complex) -> complex:
        node = self.grid.node_of(z)
        if node is not None:
            return complex(self.f[node])
        return self.grid.interpolate(self.f, z)


# operators ----------------------------------------------------------------------

def _check_compact(h: np.ndarray):
    ring = np.concatenate([h[0, :], h[-1, :], h[:, 0], h[:, -1]])
    if np.any(ring != 0):
        raise SupportError("field is not compactly supported on the grid (nonzero boundary ring)")


@lru_cache(maxsize=8)
def _kernels(n: int, spacing: float):
    """FFTs of the 1/(z - w) and 1/(z - w)^2 kernels on a 2n padded grid.

    Offsets m = k - j of source k relative to target j run over -(n-1)..(n-1)
    and are stored wrapped; the zero offset (self cell) is dropped.
    """
    m = np.arange(2 * n)
    m = np.where(m < n, m, m - 2 * n)
    d = (m[None, :] + 1j * m[:, None]) * spacing
    d[0, 0] = 1.0
    k1 = 1.0 / d
    k2 = 1.0 / (d * d)
    k1[0, 0] = 0
    k2[0, 0] = 0
    k1[:, n] = 0
    k1[n, :] = 0
    k2[:, n] = 0
    k2[n, :] = 0
    return fft.fft2(k1), fft.fft2(k2)


def _correlate(h: np.ndarray, kernel_hat: np.ndarray):
    """out[j] = sum_k h[k] K(z_k - z_j)."""
    n = h.shape[0]
    pad = np.zeros((2 * n, 2 * n), dtype=complex)
    # correlation = convolution with the flipped source
    pad[:n, :n] = h[::-1, ::-1]
    full = fft.ifft2(fft.fft2(pad) * kernel_hat)
    return full[:n, :n][::-1, ::-1]


def operator_T(h: np.ndarray, grid: Grid) -> np.ndarray:
    """Principal-value Beurling transform; the self cell is omitted."""
    h = np.asarray(h, dtype=complex)
    _check_compact(h)
    if not h.any():
        return np.zeros_like(h)
    _, k2 = _kernels(grid.n, grid.spacing)
    return -(grid.spacing ** 2 / math.pi) * _correlate(h, k2)


def operator_P(h: np.ndarray, grid: Grid, target=None) -> np.ndarray:
    """Cauchy transform normalized to vanish at 0.

    ``target=None`` evaluates on the grid nodes; otherwise at the given
    points by direct summation. Singular cells are omitted: over a square
    centred on the singularity both kernel terms integrate to zero.
    """
    h = np.asarray(h, dtype=complex)
    _check_compact(h)
    s = grid.spacing
    z = grid.points()
    zk = np.where(z == 0, 1.0, z)
    const = np.sum(np.where(z == 0, 0, h / zk))
    if target is not None:
        w = np.asarray(target, dtype=complex)
        src = h != 0
        hz, zz = h[src], z[src]
        flat = w.ravel()
        out = np.empty(flat.size, dtype=complex)
        for a in range(0, flat.size, 256):
            diff = zz[None, :] - flat[a : a + 256, None]
            with np.errstate(divide="ignore", invalid="ignore"):
                inv = np.where(diff == 0, 0, 1.0 / np.where(diff == 0, 1.0, diff))
            out[a : a + 256] = inv @ hz
        return (-(s * s / math.pi) * (out - const)).reshape(w.shape)
    if not h.any():
        return np.zeros_like(h)
    k1, _ = _kernels(grid.n, s)
    out = -(s * s / math.pi) * (_correlate(h, k1) - const)
    origin = grid.node_of(0j)
    if origin is not None:
        out[origin] = 0  # kernel vanishes identically there; drop FFT roundoff
    return out


# derivatives --------------------------------------------------------------------

def _d5(f: np.ndarray, axis: int, s: float):
    """Fourth-order central difference; NaN within 2 samples of the edge."""
    out = np.full(f.shape, np.nan + 0j)
    sl = lambda a, b: tuple(slice(a, f.shape[axis] + b if b <= 0 else None) if ax == axis else slice(None)
                            for ax in range(f.ndim))
    inner = sl(2, -2)
    out[inner] = (-f[sl(4, 0)] + 8 * f[sl(3, -1)] - 8 * f[sl(1, -3)] + f[sl(0, -4)]) / (12 * s)
    return out


def wirtinger(f: np.ndarray, grid: Grid) -> WirtingerPair:
    """Finite-difference (f_z, f_zbar) with 5-point stencils."""
    fx = _d5(f, 1, grid.spacing)
    fy = _d5(f, 0, grid.spacing)
    return WirtingerPair.from_partials(fx, fy)


def well_conditioned(mu: np.ndarray, fp: WirtingerPair | None = None, band: int = 2,
                     min_fz: float = 0.1) -> np.ndarray:
    """Samples away from the grid edge and from jumps in supp(mu), with |f_z| >= min_fz."""
    n = mu.shape[0]
    ok = np.zeros(mu.shape, dtype=bool)
    ok[band:n - band, band:n - band] = True
    supp = (mu != 0).astype(np.int8)
    size = 2 * band + 1
    near = ndimage.maximum_filter(supp, size=size) != ndimage.minimum_filter(supp, size=size)
    ok &= ~near
    if fp is not None:
        with np.errstate(invalid="ignore"):
            ok &= np.abs(fp.f_z) >= min_fz
    return ok


def beltrami_residual(f, mu, grid: Grid) -> float:
    fp = wirtinger(f, grid)
    ok = well_conditioned(mu, fp)
    if not ok.any():
        return 0.0
    return float(np.max(np.abs(fp.f_zbar - mu * fp.f_z)[ok]))


# solver -------------------------------------------------------------------------

@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    max_iter: int = 200


def solve_normal(mu: BeltramiField, cfg: SolverConfig = SolverConfig()) -> QCSolution:
    """Normal solution (f(0) = 0, f_z - 1 compactly supported) by Neumann iteration."""
    grid = mu.grid
    m = mu.mu
    z = grid.points()
    if not m.any():
        h = np.zeros_like(m)
        return QCSolution(grid, z.copy(), h, 0.0, 0, m.copy())
    _check_compact(m)
    t_mu = operator_T(m, grid)
    h = t_mu.copy()
    increments = [grid.l2(h)]
    c_obs = increments[0] / grid.l2(m)
    delta = h
    it = 1
    while increments[-1] >= cfg.tol:
        if it >= cfg.max_iter:
            raise ConvergenceError(
                f"Neumann iteration did not reach {cfg.tol:g} in {cfg.max_iter} sweeps "
                f"(last increment {increments[-1]:.3g}); k may be too close to 1", increments)
        md = m * delta
        delta = operator_T(md, grid)
        h = h + delta
        nd = grid.l2(delta)
        nmd = grid.l2(md)
        if nmd > 0:
            c_obs = max(c_obs, nd / nmd)
        increments.append(nd)
        it += 1
        if not math.isfinite(nd):
            raise ConvergenceError("Neumann iteration diverged", increments)
    ratios = [b / a for a, b in zip(increments, increments[1:]) if a > 0]
    log.info("neumann: %d sweeps, C_obs = %.4f, k*C_obs = %.4f, max ratio = %.4f",
             it, c_obs, mu.k_bound * c_obs, max(ratios, default=0.0))
    f = operator_P(m * (h + 1), grid) + z
    res = beltrami_residual(f, m, grid)
    return QCSolution(grid, f, h, res, it, m.copy(), increments, c_obs)


def normalize_solution(sol: QCSolution) -> QCSolution:
    """Rescale so that f(1) = 1 (0 and infinity are already fixed)."""
    f1 = sol.f_at(1.0)
    if abs(f1) < 1e-12:
        raise PreconditionError(f"degenerate normalization: |f(1)| = {abs(f1):.3g}")
    f = sol.f / f1
    node = sol.grid.node_of(1.0)
    if node is not None:
        f[node] = 1.0
    return replace(sol, f=f, residual=beltrami_residual(f, sol.mu, sol.grid) if sol.mu.any() else 0.0)


def invert_mu_at_infinity(mu, grid: Grid, k_bound: float | None = None) -> BeltramiField:
    """mu~(z) = mu(1/z) z^2 / conj(z)^2 on ``grid``.

    ``mu`` is a callable or a :class:`BeltramiField` (sampled at the nearest
    node, zero off its grid). mu must vanish near 0, which is what makes mu~
    compactly supported; a nonzero boundary ring on the new grid is an error.
    """
    z = grid.points()
    nz = z != 0
    w = np.where(nz, 1.0 / np.where(nz, z, 1.0), 0)
    if isinstance(mu, BeltramiField):
        vals = _sample_nearest(mu, w)
        k = mu.k_bound if k_bound is None else k_bound
    else:
        vals = np.asarray(mu(w), dtype=complex) * np.ones(w.shape)
        k = k_bound
    phase = np.where(nz, (z / np.where(nz, np.conj(z), 1.0)) ** 2, 1.0)
    out = np.where(nz, vals * phase, 0j)
    try:
        _check_compact(out)
    except SupportError:
        raise SupportError("mu does not vanish near 0; inverted field is not compactly supported") from None
    return BeltramiField.from_samples(grid, out, k)


def _sample_nearest(mu: BeltramiField, w: np.ndarray):
    g = mu.grid
    u = (w - g.center) / g.spacing
    j = np.rint(u.real).astype(int) + g.n // 2
    i = np.rint(u.imag).astype(int) + g.n // 2
    ok = (i >= 0) & (i < g.n) & (j >= 0) & (j < g.n)
    out = np.zeros(w.shape, dtype=complex)
    out[ok] = mu.mu[i[ok], j[ok]]
    return out


def exact_disk_solution(z, k: complex, radius: float = 1.0):
    """Normal solution for mu = k on |z| < radius: z + k zbar inside, z + k r^2/z outside."""
    z = np.asarray(z, dtype=complex)
    inside = np.abs(z) < radius
    zz = np.where(inside, 1.0, z)
    return np.where(inside, z + k * np.conj(z), z + k * radius * radius / zz)


# io -----------------------------------------------------------------------------

def qcf_bytes(grid: Grid, values: np.ndarray) -> bytes:
    values = np.asarray(values, dtype=complex)
    if values.shape != (grid.n, grid.n):
        raise ValueError("field shape does not match grid")
    head = _QCF_HEADER.pack(QCF_MAGIC, grid.n, grid.center.real, grid.center.imag, grid.spacing)
    return head + values.astype("<c16").tobytes()


def parse_qcf(data: bytes):
    """(Grid, values) from QCF bytes; raises FormatError on any inconsistency."""
    if len(data) < _QCF_HEADER.size:
        raise FormatError("QCF file too short for header")
    magic, n, cre, cim, sp = _QCF_HEADER.unpack_from(data)
    if magic != QCF_MAGIC:
        raise FormatError(f"bad QCF magic {magic!r}")
    if n < 5 or n > 1 << 15:
        raise FormatError(f"implausible QCF size N = {n}")
    if not (math.isfinite(cre) and math.isfinite(cim) and math.isfinite(sp) and sp > 0):
        raise FormatError("QCF header has non-finite center or bad spacing")
    need = _QCF_HEADER.size + 16 * n * n
    if len(data) != need:
        raise FormatError(f"QCF payload size {len(data)} != expected {need}")
    vals = np.frombuffer(data, dtype="<c16", offset=_QCF_HEADER.size).reshape(n, n).astype(complex)
    try:
        grid = Grid(int(n), complex(cre, cim), sp)
    except FatouError as exc:
        raise FormatError(str(exc)) from exc
    return grid, vals


def read_qcf(path):
    with open(path, "rb") as fh:
        return parse_qcf(fh.read())


def write_qcf(path, grid: Grid, values):
    from .julia import _atomic_write

    _atomic_write(path, qcf_bytes(grid, values))


def csv_dump(path, grid: Grid, **fields_):
    """Debug dump: one row per node with x, y and re/im of each named field."""
    import io

    z = grid.points().ravel()
    cols = {k: np.asarray(v).ravel() for k, v in fields_.items()}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["x", "y"]
    for k in cols:
        header += [f"{k}_re", f"{k}_im"]
    w.writerow(header)
    for idx in range(z.size):
        row = [repr(float(z[idx].real)), repr(float(z[idx].imag))]
        for v in cols.values():
            row += [repr(float(v[idx].real)), repr(float(v[idx].imag))]
        w.writerow(row)
    from .julia import _atomic_write

    _atomic_write(path, buf.getvalue().encode())
