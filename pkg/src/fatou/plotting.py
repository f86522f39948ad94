"""Matplotlib figures for CLI reports (Agg backend, written straight to files)."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from scipy import ndimage  # noqa: E402

from .julia import boundary_mask, raster_rgb  # noqa: E402

_META = {"Software": None}


def _extent(window):
    return (window.re_min, window.re_max, window.im_min, window.im_max)


def _save(fig, path):
    path = os.fspath(path)
    tmp = path + ".part"
    fmt = os.path.splitext(path)[1].lstrip(".") or "png"
    try:
        fig.savefig(tmp, dpi=120, format=fmt, metadata=_META if fmt == "png" else None)
        os.replace(tmp, path)
    finally:
        plt.close(fig)
        if os.path.exists(tmp):
            os.unlink(tmp)
    return path


def plot_basins(raster, path, title=""):
    fig, ax = plt.subplots(figsize=(6, 6 * raster.height / raster.width))
    rgb = raster_rgb(raster)
    rgb[boundary_mask(raster)] = (40, 40, 40)
    ax.imshow(rgb, extent=_extent(raster.window), origin="upper", interpolation="nearest")
    for a in raster.attractors:
        pts = [p for p in a.points if isinstance(p, complex)]
        if pts:
            ax.plot([p.real for p in pts], [p.imag for p in pts], "k+", ms=9)
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.set_title(title)
    return _save(fig, path)


def plot_cloud(cloud, window, path, title=""):
    fig, ax = plt.subplots(figsize=(6, 6 * (window.im_max - window.im_min) / (window.re_max - window.re_min)))
    p = cloud.points
    ax.plot(p.real, p.imag, ",", color="k")
    ax.set_xlim(window.re_min, window.re_max)
    ax.set_ylim(window.im_min, window.im_max)
    ax.set_aspect("equal")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.set_title(title)
    return _save(fig, path)


def plot_components(raster, cm, path, title=""):
    fig, ax = plt.subplots(figsize=(6, 6 * raster.height / raster.width))
    lab = np.ma.masked_equal(cm.comp_labels, 0)
    ax.imshow(lab, extent=_extent(raster.window), origin="upper", cmap="tab20", interpolation="nearest")
    centers = raster.window.centers(raster.width, raster.height)
    for c in cm.ids:
        # deepest pixel, so the tag sits inside even non-convex components
        depth = ndimage.distance_transform_edt(cm.comp_labels == c)
        r, k = np.unravel_index(int(np.argmax(depth)), depth.shape)
        z = centers[r, k]
        per = cm.periodicity.get(c)
        tag = f"{c}" if per is None else f"{c}:{per[0]},{per[1]}"
        ax.text(z.real, z.imag, tag, fontsize=7, ha="center", va="center")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.set_title(title)
    return _save(fig, path)


def plot_qc_grid(sol, path, lines: int = 24, title=""):
    """Image of the coordinate grid under f, with |mu| in the background."""
    g = sol.grid
    z = g.points()
    fig, ax = plt.subplots(figsize=(6, 6))
    ext = (z.real.min(), z.real.max(), z.imag.min(), z.imag.max())
    ax.imshow(np.abs(sol.mu), extent=ext, origin="lower", cmap="Greys", alpha=0.35, vmin=0, vmax=1)
    step = max(1, g.n // lines)
    f = sol.f
    for i in range(0, g.n, step):
        ax.plot(f[i, :].real, f[i, :].imag, lw=0.5, color="C0")
        ax.plot(f[:, i].real, f[:, i].imag, lw=0.5, color="C3")
    ax.set_xlim(ext[0], ext[1])
    ax.set_ylim(ext[2], ext[3])
    ax.set_aspect("equal")
    ax.set_title(title)
    return _save(fig, path)
