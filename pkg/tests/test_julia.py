import cmath
import math

import numpy as np
import pytest

from fatou.core import INF, chordal_distance, iterate, parse_map
from fatou.dynamics import Kind, fixed_points
from fatou.errors import ExceptionalSeedError, PreconditionError
from fatou.julia import (
    BasinRaster, PointCloud, Window, basin_raster, boundary_mask, boundary_points, classify_points, cloud_rgb,
    component_orbit, fatou_components, find_attractors, hausdorff_distance, julia_inverse_iteration, ppm_bytes,
    render_ppm, sullivan_summary,
)

W2 = Window(-2, 2, -2, 2)
GOLDEN = cmath.exp(2j * math.pi * (math.sqrt(5) - 1) / 2)


def test_window_parse_and_degenerate():
    w = Window.parse("-3:3:-2:2")
    assert (w.re_min, w.re_max, w.im_min, w.im_max) == (-3, 3, -2, 2)
    with pytest.raises(PreconditionError):
        Window(1, 1, 0, 1)
    with pytest.raises(ValueError):
        Window.parse("1:2:3")


def test_pixel_centres_top_row_is_max_imaginary():
    c = W2.centers(4, 4)
    assert c[0, 0] == complex(-1.5, 1.5)
    assert c[-1, -1] == complex(1.5, -1.5)
    r, k = W2.locate(np.array([complex(-1.5, 1.5), 5.0]), 4, 4)
    assert (r[0], k[0]) == (0, 0) and r[1] == -1


# inverse iteration ----------------------------------------------------------------------

def test_cloud_on_unit_circle():
    cloud = julia_inverse_iteration(parse_map("z^2"), 1, 5000, rng_seed=3)
    assert cloud.points.size == 5000
    assert np.max(np.abs(np.abs(cloud.points) - 1)) < 1e-6


def test_cloud_on_segment():
    cloud = julia_inverse_iteration(parse_map("z^2-2"), 2, 5000, rng_seed=3)
    p = cloud.points
    dist = np.where(np.abs(p.real) <= 2, np.abs(p.imag), np.abs(p - np.clip(p.real, -2, 2)))
    assert np.max(dist) < 1e-6


def test_cloud_is_deterministic():
    R = parse_map("z^2 + (-0.12,0.74)")
    a = julia_inverse_iteration(R, 0.3, 2000, rng_seed=11)
    b = julia_inverse_iteration(R, 0.3, 2000, rng_seed=11)
    c = julia_inverse_iteration(R, 0.3, 2000, rng_seed=12)
    assert a.points.tobytes() == b.points.tobytes()
    assert a.points.tobytes() != c.points.tobytes()


def test_cloud_rational_map_invariance():
    # backward images stay on J: forward images of the cloud are in the cloud's neighbourhood
    R = parse_map("(1+z^2)/(2z)")  # J is the imaginary axis
    cloud = julia_inverse_iteration(R, 1j, 500, rng_seed=0)
    assert np.max(np.abs(cloud.points.real)) < 1e-9


def test_exceptional_seed_refused():
    with pytest.raises(ExceptionalSeedError) as info:
        julia_inverse_iteration(parse_map("z^2"), 0, 10)
    assert len(info.value.exceptional) == 2


# attractors and basins --------------------------------------------------------------------

def test_find_attractors_basilica():
    atts = find_attractors(parse_map("z^2-1"), 2)
    kinds = sorted((a.period, len(a.points)) for a in atts)
    assert kinds == [(1, 1), (2, 2)]
    assert any(a.points[0] is INF for a in atts)


def test_find_attractors_lattes_empty():
    assert find_attractors(parse_map("(z^2+1)^2 / (4z(z^2-1))"), 2) == []


def test_find_attractors_attracting_quadratic():
    atts = find_attractors(parse_map("z^2 - z/2 + 1/2"), 1)
    locs = sorted("inf" if a.points[0] is INF else str(round(a.points[0].real, 9)) for a in atts)
    assert locs == ["0.5", "inf"]


def test_basin_raster_unit_disk():
    R = parse_map("z^2")
    atts = find_attractors(R, 1)
    r = basin_raster(R, atts, W2, 64, 64)
    z = W2.centers(64, 64)
    zero = [k + 1 for k, a in enumerate(atts) if a.points[0] == 0][0]
    inf = 3 - zero
    dx = 4 / 64
    inside = np.abs(z) < 1 - dx
    outside = np.abs(z) > 1 + dx
    assert np.all(r.labels[inside] == zero)
    assert np.all(r.labels[outside] == inf)
    bz = boundary_points(r)
    assert np.max(np.abs(np.abs(bz) - 1)) < math.hypot(dx, dx)
    assert np.all(r.iters <= r.max_iter)


def test_basin_raster_segment_boundary():
    R = parse_map("z^2-2")
    r = basin_raster(R, find_attractors(R, 1), Window(-3, 3, -2, 2), 96, 64)
    bz = boundary_points(r)
    assert bz.size > 0
    dx = 6 / 96
    assert np.max(np.abs(bz.imag)) <= dx
    assert np.all(np.abs(bz.real) <= 2 + dx)


def test_empty_attractor_list():
    r = basin_raster(parse_map("z^2"), [], W2, 8, 8)
    assert not r.labels.any()
    assert len(fatou_components(r)) == 0


def test_worker_count_does_not_change_output():
    R = parse_map("z^2-1")
    atts = find_attractors(R, 2)
    a = basin_raster(R, atts, W2, 40, 30, workers=1)
    b = basin_raster(R, atts, W2, 40, 30, workers=4)
    assert np.array_equal(a.labels, b.labels) and np.array_equal(a.iters, b.iters)
    assert np.array_equal(a.corner_labels, b.corner_labels)


@pytest.mark.parametrize("text", ["z^2", "z^2-1"])
def test_iterate_invariance(text):
    R = parse_map(text)
    atts = find_attractors(R, 2)
    r1 = basin_raster(R, atts, W2, 256, 256)
    r2 = basin_raster(iterate(R, 2), atts, W2, 256, 256)
    both = (r1.labels > 0) & (r2.labels > 0)
    assert np.mean(r1.labels[both] == r2.labels[both]) >= 0.99


@pytest.mark.parametrize("text", ["z^2", "z^2-1", "z^2 - z/2 + 1/2"])
def test_complete_invariance(text):
    R = parse_map(text)
    atts = find_attractors(R, 2)
    r = basin_raster(R, atts, W2, 128, 128)
    z = W2.centers(128, 128)
    dec = r.labels > 0
    labs = classify_points(R, atts, R.eval_array(z[dec]))
    assert np.mean(labs == r.labels[dec]) >= 0.99


def test_parabolic_points_lie_on_boundary_raster():
    for text in ("z+z^2", "(2z^2+z)/(2+z^2)"):
        R = parse_map(text)
        r = basin_raster(R, find_attractors(R, 2), W2, 256, 256)
        bz = boundary_points(r)
        dx, dy = W2.pixel_size(256, 256)
        for fp in fixed_points(R):
            if fp.classification.kind is Kind.RATIONALLY_INDIFFERENT and fp.location is not INF:
                assert np.min(np.abs(bz - fp.location)) <= math.hypot(dx, dy)


def test_hausdorff():
    assert hausdorff_distance([0, 1], [0, 1]) == 0
    assert hausdorff_distance([0], [3 + 4j]) == 5
    assert hausdorff_distance([], [1]) == math.inf


# components ---------------------------------------------------------------------------------

def components(text, size=256, window=W2, n_max=4):
    R = parse_map(text)
    r = basin_raster(R, find_attractors(R, n_max), window, size, size)
    cm = fatou_components(r)
    component_orbit(R, cm, r)
    return r, cm


def test_components_z2():
    _, cm = components("z^2", 128)
    assert len(cm) == 2
    assert all(cm.periodicity[c] == (0, 1) for c in cm.ids)


def test_components_segment():
    _, cm = components("z^2-2", 128, Window(-3, 3, -2, 2))
    assert len(cm) == 1 and cm.periodicity[1] == (0, 1)


def test_components_basilica_two_cycle():
    r, cm = components("z^2-1", 256)
    centers = W2.centers(256, 256)
    c0 = cm.comp_labels[128, 128]
    cm1 = cm.comp_labels[np.unravel_index(np.argmin(np.abs(centers + 1)), centers.shape)]
    assert c0 and cm1 and c0 != cm1
    assert cm.forward_map[c0] == cm1 and cm.forward_map[cm1] == c0
    assert cm.periodicity[c0] == (0, 2)


def test_siegel_components_eventually_periodic():
    _, cm = components(f"({GOLDEN.real!r},{GOLDEN.imag!r}) z + z^2", 128)
    s = sullivan_summary(cm)
    assert s["wandering"] == 0
    assert all(p is None or p[1] >= 1 for p in cm.periodicity.values())


def test_small_components_dropped():
    labels = np.zeros((6, 6), dtype=np.int32)
    labels[0:2, 0:2] = 1  # 4 pixels, kept
    labels[4, 4] = 1      # 1 pixel, dropped
    r = BasinRaster(6, 6, W2, labels, np.zeros_like(labels), np.zeros((7, 7), dtype=np.int32), [], 1, 1e-6)
    cm = fatou_components(r)
    assert len(cm) == 1 and cm.sizes[1] == 4 and cm.touches_border[1]


def test_unresolved_component_not_guessed():
    # with an unreachable vote threshold every component stays unresolved
    r, cm = components("z^2", 64)
    R = parse_map("z^2")
    component_orbit(R, cm, r, vote_frac=1.01)
    assert all(v is None for v in cm.forward_map.values())
    assert sullivan_summary(cm)["unresolved"] == len(cm)


# images ---------------------------------------------------------------------------------------

def test_ppm_two_pixels(tmp_path):
    labels = np.array([[1, 2]], dtype=np.int32)
    r = BasinRaster(2, 1, W2, labels, np.zeros_like(labels), np.zeros((2, 3), dtype=np.int32), [], 1, 1e-6)
    path = tmp_path / "two.ppm"
    render_ppm(r, path, palette={1: (255, 0, 0), 2: (0, 0, 255)})
    data = path.read_bytes()
    assert data == b"P6\n2 1\n255\n" + bytes.fromhex("FF00000000FF")


def test_empty_cloud_is_white():
    cloud = PointCloud(np.zeros(0, dtype=complex), "z^2", 1, 0, 50)
    img = cloud_rgb(cloud, W2, 5, 4)
    assert img.shape == (4, 5, 3) and np.all(img == 255)
    assert ppm_bytes(img).startswith(b"P6\n5 4\n255\n")


def test_cloud_render_band():
    cloud = julia_inverse_iteration(parse_map("z^2"), 1, 5000, rng_seed=1)
    img = cloud_rgb(cloud, W2, 512, 512)
    black = np.all(img == 0, axis=2)
    z = W2.centers(512, 512)[black]
    dx = 4 / 512
    assert np.mean(np.abs(np.abs(z) - 1) <= dx) >= 0.99


def test_render_ppm_needs_window_for_cloud(tmp_path):
    cloud = PointCloud(np.zeros(1, dtype=complex), "z^2", 1, 0, 50)
    with pytest.raises(ValueError):
        render_ppm(cloud, tmp_path / "x.ppm")
    render_ppm(cloud, tmp_path / "x.ppm", window=W2, size=(3, 3))
    assert (tmp_path / "x.ppm").read_bytes()[:11] == b"P6\n3 3\n255\n"
