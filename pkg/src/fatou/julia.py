"""Julia-set and Fatou-component approximation on pixel grids."""

from __future__ import annotations

import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial.distance import directed_hausdorff

from .core.rational import RationalMap
from .core.sphere import INF, SpherePoint, chordal_distance, chordal_distance_h, format_point, sphere_point
from .dynamics import ClassifyConfig, PeriodicOrbit, exceptional_points, periodic_points
from .errors import ExceptionalSeedError, PreconditionError

BURN_IN = 50
KAPPA_CONFIRM = 3
BASIN_TOL = 1e-6
MIN_PIXELS = 4
VOTE_FRAC = 0.8


def worker_count() -> int:
    """Worker cap from FATOU_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("FATOU_THREADS", "1")))
    except ValueError:
        return 1


# windows ---------------------------------------------------------------------

@dataclass(frozen=True)
class Window:
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_max > self.re_min and self.im_max > self.im_min):
            raise PreconditionError(f"degenerate window {self}")

    @classmethod
    def parse(cls, text: str) -> "Window":
        """``RE_MIN:RE_MAX:IM_MIN:IM_MAX``."""
        parts = text.split(":")
        if len(parts) != 4:
            raise ValueError(f"window must be RE_MIN:RE_MAX:IM_MIN:IM_MAX, got {text!r}")
        return cls(*(float(p) for p in parts))

    def __str__(self):
        return f"{self.re_min:g}:{self.re_max:g}:{self.im_min:g}:{self.im_max:g}"

    def pixel_size(self, width, height):
        return (self.re_max - self.re_min) / width, (self.im_max - self.im_min) / height

    def centers(self, width, height) -> np.ndarray:
        """Pixel centres, row 0 at the top (largest imaginary part)."""
        dx, dy = self.pixel_size(width, height)
        x = self.re_min + (np.arange(width) + 0.5) * dx
        y = self.im_max - (np.arange(height) + 0.5) * dy
        return x[None, :] + 1j * y[:, None]

    def corners(self, width, height) -> np.ndarray:
        x = np.linspace(self.re_min, self.re_max, width + 1)
        y = np.linspace(self.im_max, self.im_min, height + 1)
        return x[None, :] + 1j * y[:, None]

    def locate(self, z, width, height):
        """Pixel (row, col) of finite points; -1 where outside the window."""
        z = np.asarray(z, dtype=complex)
        dx, dy = self.pixel_size(width, height)
        with np.errstate(invalid="ignore"):
            col = np.floor((z.real - self.re_min) / dx)
            row = np.floor((self.im_max - z.imag) / dy)
        ok = np.isfinite(col) & np.isfinite(row) & (col >= 0) & (col < width) & (row >= 0) & (row < height)
        return np.where(ok, row, -1).astype(int), np.where(ok, col, -1).astype(int)


# inverse iteration --------------------------------------------------------------

@dataclass
class PointCloud:
    points: np.ndarray
    map_text: str
    seed: SpherePoint
    rng_seed: int
    burn_in: int


def _preimage_values(R: RationalMap, w):
    """The d preimages of w, repeated by multiplicity (INF entries included)."""
    d = R.degree
    if w is INF:
        c = np.array(R.den.coeffs)
    else:
        n = np.zeros(d + 1, dtype=complex)
        n[: len(R.num.coeffs)] += R.num.coeffs
        n[: len(R.den.coeffs)] -= w * R.den.coeffs
        c = n
    scale = np.max(np.abs(c)) if len(c) else 0.0
    k = len(c)
    while k and abs(c[k - 1]) <= 1e-12 * scale:
        k -= 1
    c = c[:k]
    deg = k - 1
    if deg == 2:
        a, b, cc = c[2], c[1], c[0]
        s = np.sqrt(b * b - 4 * a * cc + 0j)
        if (np.conj(b) * s).real < 0:
            s = -s
        q = -(b + s) / 2
        roots = [q / a, cc / q] if q != 0 else [0j, 0j]
    elif deg == 1:
        roots = [-c[0] / c[1]]
    elif deg > 2:
        roots = list(np.roots(c[::-1]))
    else:
        roots = []
    return [complex(r) for r in roots] + [INF] * (d - max(deg, 0))


def julia_inverse_iteration(R: RationalMap, seed: SpherePoint, n_points: int, burn_in: int = BURN_IN,
                            rng_seed: int = 0, map_text: str = "") -> PointCloud:
    """Random backward orbit of ``seed``; each step picks one of the d preimages
    uniformly (so multiple preimages are weighted by multiplicity)."""
    if R.degree < 2:
        raise PreconditionError("inverse iteration needs degree >= 2")
    seed = sphere_point(seed)
    exc = exceptional_points(R)
    if any(chordal_distance(seed, e) <= 1e-9 for e in exc):
        raise ExceptionalSeedError(f"seed {format_point(seed)} is an exceptional point of the map", exc)
    rng = np.random.default_rng(rng_seed)
    d = R.degree
    out = np.empty(n_points, dtype=complex)
    k = 0
    w = seed
    step = 0
    while k < n_points:
        pre = _preimage_values(R, w)
        if len(pre) != d or any(p is not INF and not np.isfinite(p) for p in pre):
            raise PreconditionError(f"preimage solve failed at {w}")
        w = pre[int(rng.integers(d))]
        step += 1
        if step > burn_in and w is not INF:
            out[k] = w
            k += 1
    return PointCloud(out, map_text or str(R), seed, rng_seed, burn_in)


# basins ------------------------------------------------------------------------

def _attractor_points(att):
    pts = att.points if isinstance(att, PeriodicOrbit) else tuple(att)
    return [sphere_point(p) for p in pts]


def find_attractors(R: RationalMap, n_max: int, cfg: ClassifyConfig = ClassifyConfig()):
    """All attracting or superattracting cycles of period <= n_max."""
    if R.degree < 2:
        raise PreconditionError("find_attractors needs degree >= 2")
    out = []
    for n in range(1, n_max + 1):
        out.extend(o for o in periodic_points(R, n, cfg=cfg) if o.classification.is_attracting)
    return out


@dataclass
class BasinRaster:
    width: int
    height: int
    window: Window
    labels: np.ndarray
    iters: np.ndarray
    corner_labels: np.ndarray
    attractors: list
    max_iter: int
    tol: float

    @property
    def decided(self):
        return self.labels > 0


def _classify_points(R: RationalMap, attractors, z: np.ndarray, max_iter: int, tol: float, kappa: int):
    """Label each finite point by the first attractor its orbit stays within
    ``tol`` (chordal) of for ``kappa`` consecutive steps."""
    n = z.size
    labels = np.zeros(n, dtype=np.int32)
    iters = np.zeros(n, dtype=np.int32)
    if not attractors or n == 0:
        return labels, iters
    targets = []
    for pts in attractors:
        hp = np.array([1.0 if p is INF else p for p in pts], dtype=complex)
        hq = np.array([0.0 if p is INF else 1.0 for p in pts], dtype=complex)
        targets.append((hp, hq))
    big = np.abs(z) > 1
    p = np.where(big, 1.0, z).astype(complex)
    q = np.where(big, 1.0 / np.where(big, z, 1.0), 1.0).astype(complex)
    idx = np.arange(n)
    runs = np.zeros((len(attractors), n), dtype=np.int32)
    for step in range(1, max_iter + 1):
        p, q = R.eval_h(p, q)
        done = np.zeros(idx.size, dtype=bool)
        for k, (hp, hq) in enumerate(targets):
            dist = np.min(chordal_distance_h(p[:, None], q[:, None], hp[None, :], hq[None, :]), axis=1)
            runs[k] = np.where(dist <= tol, runs[k] + 1, 0)
            newly = (runs[k] >= kappa) & ~done
            labels[idx[newly]] = k + 1
            iters[idx[newly]] = step - kappa + 1
            done |= newly
        if done.any():
            keep = ~done
            idx, p, q, runs = idx[keep], p[keep], q[keep], runs[:, keep]
            if not idx.size:
                break
    iters[labels == 0] = max_iter
    return labels, iters


def _classify_grid(R, attractors, z2d, max_iter, tol, kappa, workers):
    flat = z2d.ravel()
    chunks = np.array_split(np.arange(flat.size), max(1, workers * 4)) if workers > 1 else [np.arange(flat.size)]
    run = lambda ix: _classify_points(R, attractors, flat[ix], max_iter, tol, kappa)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(run, chunks))
    else:
        parts = [run(ix) for ix in chunks]
    labels = np.concatenate([a for a, _ in parts]).reshape(z2d.shape)
    iters = np.concatenate([b for _, b in parts]).reshape(z2d.shape)
    return labels, iters


def basin_raster(R: RationalMap, attractors, window: Window, width: int, height: int,
                 max_iter: int = 500, tol: float = BASIN_TOL, kappa: int = KAPPA_CONFIRM,
                 workers: int | None = None) -> BasinRaster:
    """Classify pixel centres (and pixel corners, for boundary detection) by basin.

    Label k >= 1 refers to ``attractors[k-1]``; 0 means undecided after
    ``max_iter`` steps. Output does not depend on the worker count.
    """
    if not isinstance(window, Window):
        window = Window(*window)
    if width < 1 or height < 1:
        raise PreconditionError("raster needs positive width and height")
    atts = [_attractor_points(a) for a in attractors]
    workers = worker_count() if workers is None else workers
    labels, iters = _classify_grid(R, atts, window.centers(width, height), max_iter, tol, kappa, workers)
    corner, _ = _classify_grid(R, atts, window.corners(width, height), max_iter, tol, kappa, workers)
    return BasinRaster(width, height, window, labels, iters, corner, list(attractors), max_iter, tol)


def classify_points(R: RationalMap, attractors, z, max_iter: int = 500, tol: float = BASIN_TOL,
                    kappa: int = KAPPA_CONFIRM) -> np.ndarray:
    """Basin labels for arbitrary finite points (same rule as the raster)."""
    z = np.asarray(z, dtype=complex).ravel()
    return _classify_points(R, [_attractor_points(a) for a in attractors], z, max_iter, tol, kappa)[0]


def boundary_mask(raster: BasinRaster) -> np.ndarray:
    """Pixels whose closed cell meets more than one basin class (undecided is a class)."""
    c = raster.corner_labels
    stack = np.stack([raster.labels, c[:-1, :-1], c[:-1, 1:], c[1:, :-1], c[1:, 1:]])
    return np.any(stack != stack[0], axis=0)


def boundary_points(raster: BasinRaster) -> np.ndarray:
    return raster.window.centers(raster.width, raster.height)[boundary_mask(raster)]


def hausdorff_distance(a, b) -> float:
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if not a.size or not b.size:
        return math.inf
    u = np.column_stack([a.real, a.imag])
    v = np.column_stack([b.real, b.imag])
    return max(directed_hausdorff(u, v)[0], directed_hausdorff(v, u)[0])


# components --------------------------------------------------------------------

@dataclass
class ComponentMap:
    comp_labels: np.ndarray
    basin_of: dict
    sizes: dict
    touches_border: dict
    forward_map: dict = field(default_factory=dict)
    votes: dict = field(default_factory=dict)
    periodicity: dict = field(default_factory=dict)

    @property
    def ids(self):
        return sorted(self.basin_of)

    def __len__(self):
        return len(self.basin_of)


def fatou_components(raster: BasinRaster, min_pixels: int = MIN_PIXELS) -> ComponentMap:
    """4-connected components of equally labelled decided pixels."""
    comp = np.zeros(raster.labels.shape, dtype=np.int32)
    basin_of, sizes, border = {}, {}, {}
    next_id = 1
    four = ndimage.generate_binary_structure(2, 1)
    for lab in sorted(int(v) for v in np.unique(raster.labels) if v > 0):
        lab_img, count = ndimage.label(raster.labels == lab, structure=four)
        for k in range(1, count + 1):
            mask = lab_img == k
            n = int(mask.sum())
            if n < min_pixels:
                continue
            comp[mask] = next_id
            basin_of[next_id] = lab
            sizes[next_id] = n
            border[next_id] = bool(mask[0, :].any() or mask[-1, :].any() or mask[:, 0].any() or mask[:, -1].any())
            next_id += 1
    return ComponentMap(comp, basin_of, sizes, border)


def _probe_pixels(mask: np.ndarray, n_probe: int):
    depth = ndimage.distance_transform_edt(mask)
    level = min(3.0, float(depth.max()))
    rows, cols = np.nonzero(depth >= level)
    pick = np.unique(np.linspace(0, rows.size - 1, min(n_probe, rows.size)).round().astype(int))
    return rows[pick], cols[pick]


def component_orbit(R: RationalMap, cm: ComponentMap, raster: BasinRaster, n_probe: int = 32,
                    vote_frac: float = VOTE_FRAC) -> ComponentMap:
    """Fill in the forward map on components and each component's (preperiod, period).

    Interior probes are pushed forward once and located in the raster; images
    outside the window count for the unique border-touching component of the
    same basin, when there is exactly one. Components whose majority vote
    falls below ``vote_frac`` are left unresolved (``None``).
    """
    w, h, win = raster.width, raster.height, raster.window
    centers = win.centers(w, h)
    border_by_basin = {}
    for c, lab in cm.basin_of.items():
        if cm.touches_border[c]:
            border_by_basin.setdefault(lab, []).append(c)
    forward, votes = {}, {}
    for c in cm.ids:
        rows, cols = _probe_pixels(cm.comp_labels == c, n_probe)
        images = R.eval_array(centers[rows, cols])
        lab = cm.basin_of[c]
        r_img, c_img = win.locate(images, w, h)
        tally = {}
        for z, ri, ci in zip(images, r_img, c_img):
            tgt = None
            if ri >= 0:
                tgt = _component_near(cm, ri, ci, lab)
            else:
                cands = border_by_basin.get(lab, [])
                if len(cands) == 1:
                    tgt = cands[0]
            tally[tgt] = tally.get(tgt, 0) + 1
        total = max(1, len(images))
        best = max((k for k in tally if k is not None), key=lambda k: (tally[k], -k), default=None)
        frac = tally.get(best, 0) / total if best is not None else 0.0
        votes[c] = (best, frac)
        forward[c] = best if frac >= vote_frac else None
    cm.forward_map = forward
    cm.votes = votes
    cm.periodicity = {c: _follow(forward, c) for c in cm.ids}
    return cm


def _component_near(cm: ComponentMap, r: int, c: int, basin: int):
    """Component at pixel (r, c), or the commonest same-basin component in its 3x3 block."""
    k = int(cm.comp_labels[r, c])
    if k and cm.basin_of[k] == basin:
        return k
    block = cm.comp_labels[max(0, r - 1) : r + 2, max(0, c - 1) : c + 2].ravel()
    block = [int(b) for b in block if b and cm.basin_of[int(b)] == basin]
    if not block:
        return None
    return max(set(block), key=lambda b: (block.count(b), -b))


def _follow(forward: dict, start: int):
    seen = {}
    c = start
    i = 0
    while c is not None and c not in seen:
        seen[c] = i
        c = forward.get(c)
        i += 1
    if c is None:
        return None
    pre = seen[c]
    return (pre, i - pre)


def sullivan_summary(cm: ComponentMap) -> dict:
    resolved = {c: p for c, p in cm.periodicity.items() if p is not None}
    return {
        "components": len(cm),
        "resolved": len(resolved),
        "unresolved": len(cm) - len(resolved),
        "wandering": 0,
        "all_resolved_eventually_periodic": all(p[1] >= 1 for p in resolved.values()),
    }


# images ------------------------------------------------------------------------

DEFAULT_PALETTE = {
    0: (0, 0, 0),
    1: (255, 230, 150),
    2: (120, 170, 255),
    3: (150, 220, 140),
    4: (240, 140, 140),
    5: (200, 150, 230),
    6: (250, 190, 100),
}


def _atomic_write(path, data: bytes):
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise OSError(f"cannot write {path}: {exc}") from exc


def ppm_bytes(rgb: np.ndarray) -> bytes:
    h, w, _ = rgb.shape
    return b"P6\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(rgb, dtype=np.uint8).tobytes()


def raster_rgb(raster: BasinRaster, palette=None, boundary=False) -> np.ndarray:
    pal = dict(DEFAULT_PALETTE if palette is None else palette)
    rgb = np.zeros((raster.height, raster.width, 3), dtype=np.uint8)
    for lab in np.unique(raster.labels):
        color = pal.get(int(lab), DEFAULT_PALETTE[1 + (int(lab) - 1) % 6] if lab else (0, 0, 0))
        rgb[raster.labels == lab] = color
    if boundary:
        rgb[boundary_mask(raster)] = (0, 0, 0)
    return rgb


def cloud_rgb(cloud: PointCloud, window: Window, width: int, height: int) -> np.ndarray:
    rgb = np.full((height, width, 3), 255, dtype=np.uint8)
    r, c = window.locate(cloud.points, width, height)
    ok = r >= 0
    rgb[r[ok], c[ok]] = 0
    return rgb


def render_ppm(obj, path, palette=None, window: Window | None = None, size=(512, 512)):
    """Write a binary PPM (P6). Rasters use ``palette`` (label -> RGB);
    point clouds are black pixels on white over ``window`` at ``size``."""
    if isinstance(obj, BasinRaster):
        rgb = raster_rgb(obj, palette)
    elif isinstance(obj, PointCloud):
        if window is None:
            raise ValueError("rendering a point cloud needs a window")
        rgb = cloud_rgb(obj, window, *size)
    else:
        rgb = np.asarray(obj, dtype=np.uint8)
    _atomic_write(path, ppm_bytes(rgb))
    return path
