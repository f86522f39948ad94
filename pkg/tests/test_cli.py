import json
import math

import jsonschema
import numpy as np
import pytest

from fatou.beltrami import Grid, read_qcf, write_qcf
from fatou.cli import _glue_negative_values, main
from fatou.report import schema


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, name, *argv):
    code, out, err = run(capsys, name, *argv, "--json")
    assert code == 0, err
    doc = json.loads(out)
    jsonschema.validate(doc, schema(name))
    return doc


def c(v):
    return complex(*v)


# fixed / periodic -------------------------------------------------------------------

def test_fixed_quadratic_table(capsys):
    code, out, _ = run(capsys, "fixed", "z^2 - 2")
    assert code == 0
    rows = [r.split("\t") for r in out.strip().splitlines()]
    assert rows[0] == ["location", "multiplier", "abs_multiplier", "multiplicity", "class"]
    classes = sorted(r[-1] for r in rows[1:])
    assert classes == ["repelling", "repelling", "superattracting"]


def test_fixed_json(capsys):
    doc = run_json(capsys, "fixed", "z^2 - 2")
    locs = {("inf" if fp["location"] == "inf" else round(c(fp["location"]).real, 9)): fp for fp in doc["fixed_points"]}
    assert set(locs) == {-1.0, 2.0, "inf"}
    assert abs(c(locs[-1.0]["multiplier"]) + 2) < 1e-9
    assert locs["inf"]["class"] == "superattracting"


def test_fixed_half_multiplier(capsys):
    doc = run_json(capsys, "fixed", "(2z^2+z)/(2+z^2)")
    zero = [fp for fp in doc["fixed_points"] if fp["location"] != "inf" and abs(c(fp["location"])) < 1e-9]
    assert len(zero) == 1 and abs(c(zero[0]["multiplier"]) - 0.5) < 1e-9


def test_fixed_identity_warns(capsys, caplog):
    doc = run_json(capsys, "fixed", "z")
    assert {json.dumps(fp["location"]) for fp in doc["fixed_points"]} == {"[0.0, 0.0]", '"inf"'}
    assert any("degree-1" in r.message for r in caplog.records)


def test_parse_error(capsys, tmp_path):
    code, out, err = run(capsys, "fixed", "z^2 + * 3")
    assert code == 2 and out == ""
    assert "^" in err


def test_periodic_examples(capsys):
    doc = run_json(capsys, "periodic", "(1+z^2)/(2z)", "--period", "2")
    pts = sorted((c(p).imag for o in doc["orbits"] for p in o["points"]))
    assert np.allclose(pts, [-1 / math.sqrt(3), 1 / math.sqrt(3)], atol=1e-9)
    doc = run_json(capsys, "periodic", "z^2-1", "--period", "2")
    (o,) = doc["orbits"]
    assert o["class"] == "superattracting"
    assert sorted(c(p).real for p in o["points"]) == pytest.approx([-1, 0], abs=1e-9)


def test_degree_cap(capsys):
    code, out, err = run(capsys, "periodic", "z^2", "--period", "13")
    assert code == 4 and out == ""


def test_argparse_errors_exit_2(capsys):
    assert run(capsys, "periodic", "z^2")[0] == 2
    assert run(capsys, "julia", "z^2", "--size", "12by4", "--out", "x.ppm")[0] == 2
    assert run(capsys, "bogus")[0] == 2


def test_glue_negative_values():
    assert _glue_negative_values(["julia", "--window", "-3:3:-2:2"]) == ["julia", "--window=-3:3:-2:2"]
    assert _glue_negative_values(["--size", "-1"]) == ["--size", "-1"]


# julia -----------------------------------------------------------------------------------

def ppm_header(data):
    parts = data.split(b"\n", 3)
    return parts[0], tuple(int(v) for v in parts[1].split()), int(parts[2]), parts[3]


def test_julia_inverse(capsys, tmp_path):
    out = tmp_path / "c.ppm"
    doc = run_json(capsys, "julia", "z^2", "--method", "inverse", "--out", str(out))
    magic, size, maxval, pix = ppm_header(out.read_bytes())
    assert magic == b"P6" and size == (512, 512) and maxval == 255 and len(pix) == 512 * 512 * 3
    assert doc["points"] == 5000
    stats = json.loads((tmp_path / "c.ppm.json").read_text())
    jsonschema.validate(stats, schema("julia"))
    assert stats["points_in_window"] == 5000


def test_julia_basin_band(capsys, tmp_path):
    out = tmp_path / "b.ppm"
    doc = run_json(capsys, "julia", "z^2-2", "--method", "basin", "--window", "-3:3:-2:2", "--size", "512x384",
                   "--out", str(out), "--stats", str(tmp_path / "s.json"))
    _, size, _, pix = ppm_header(out.read_bytes())
    assert size == (512, 384)
    img = np.frombuffer(pix, np.uint8).reshape(384, 512, 3)
    dark = np.all(img == 0, axis=2)  # boundary pixels are black
    rows, cols = np.nonzero(dark)
    assert doc["boundary_pixels"] == dark.sum() > 0
    assert set(rows) <= {191, 192}
    x = -3 + (cols + 0.5) * 6 / 512
    assert x.min() > -2.05 and x.max() < 2.05


def test_julia_exceptional_seed(capsys, tmp_path):
    out = tmp_path / "c.ppm"
    code, _, err = run(capsys, "julia", "z^2", "--method", "inverse", "--seed-point", "0", "--out", str(out))
    assert code == 5
    assert "exceptional set" in err
    assert list(tmp_path.iterdir()) == []


def test_failure_leaves_existing_file(capsys, tmp_path):
    out = tmp_path / "c.ppm"
    out.write_bytes(b"keep")
    run(capsys, "julia", "z^2", "--seed-point", "0", "--out", str(out))
    assert out.read_bytes() == b"keep"


def test_julia_reproducible_and_thread_invariant(capsys, tmp_path, monkeypatch):
    blobs = []
    for k, threads in enumerate(["1", "4", "4"]):
        monkeypatch.setenv("FATOU_THREADS", threads)
        out = tmp_path / f"{k}.ppm"
        assert run(capsys, "julia", "z^2-1", "--method", "basin", "--size", "160x120", "--out", str(out))[0] == 0
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[1] == blobs[2]


def test_inverse_seed_changes_cloud(capsys, tmp_path):
    a, b = tmp_path / "a.ppm", tmp_path / "b.ppm"
    run(capsys, "julia", "z^2-1", "--size", "64x64", "--seed", "1", "--out", str(a))
    run(capsys, "julia", "z^2-1", "--size", "64x64", "--seed", "2", "--out", str(b))
    assert a.read_bytes() != b.read_bytes()


def test_julia_no_attractor_note(capsys, tmp_path):
    # Lattes map: no attracting cycle
    doc = run_json(capsys, "julia", "(z^2+1)^2/(4z(z^2-1))", "--method", "basin", "--size", "32x32",
                   "--n-max", "2", "--out", str(tmp_path / "l.ppm"))
    assert doc["attractors"] == [] and doc["decided_fraction"] == 0.0 and "note" in doc


def test_plot_option(capsys, tmp_path):
    pngs = []
    for k in range(2):
        png = tmp_path / f"p{k}.png"
        assert run(capsys, "julia", "z^2-1", "--method", "basin", "--size", "64x64",
                   "--out", str(tmp_path / "x.ppm"), "--plot", str(png))[0] == 0
        pngs.append(png.read_bytes())
    assert pngs[0][:8] == b"\x89PNG\r\n\x1a\n"
    assert pngs[0] == pngs[1]


# components ---------------------------------------------------------------------------------

def test_components_square(capsys):
    doc = run_json(capsys, "components", "z^2")
    comps = doc["components"]
    assert len(comps) == 2
    assert all(x["status"] == "resolved" and x["period"] == 1 and x["preperiod"] == 0 for x in comps)
    assert doc["summary"]["wandering"] == 0


def test_components_two_cycle(capsys, tmp_path):
    png = tmp_path / "c.png"
    doc = run_json(capsys, "components", "z^2-1", "--plot", str(png))
    assert any(x["period"] == 2 and x["preperiod"] == 0 for x in doc["components"])
    assert png.stat().st_size > 0


def test_components_table(capsys):
    code, out, _ = run(capsys, "components", "z^2", "--size", "64x64")
    assert code == 0
    assert out.splitlines()[0].split("\t")[:3] == ["id", "basin", "pixels"]


# koenigs ------------------------------------------------------------------------------------

def test_koenigs(capsys):
    doc = run_json(capsys, "koenigs", "z^2-z/2+1/2", "--fixed-point", "0.5", "--at", "0.4", "0.6+0.1i")
    assert c(doc["multiplier"]) == pytest.approx(0.5, abs=1e-12)
    assert all(v["residual"] < 1e-8 for v in doc["values"])
    assert abs(c(doc["values"][0]["g"]) - (-0.06843676913213798)) < 1e-10


def test_koenigs_linear(capsys):
    doc = run_json(capsys, "koenigs", "z/3", "--fixed-point", "0", "--at", "0.25-1i")
    assert c(doc["values"][0]["g"]) == pytest.approx(0.25 - 1j, abs=1e-15)


def test_koenigs_superattracting_refused(capsys):
    code, out, _ = run(capsys, "koenigs", "z^2", "--fixed-point", "0", "--at", "0.1")
    assert code == 5 and out == ""


def test_koenigs_escaping_point_marked(capsys):
    doc = run_json(capsys, "koenigs", "z^2-z/2+1/2", "--fixed-point", "0.5", "--at", "0.4", "5")
    assert doc["values"][1]["g"] is None and doc["values"][1]["residual"] is None


# beltrami -----------------------------------------------------------------------------------

def test_beltrami_zero(capsys, tmp_path):
    out = tmp_path / "f.qcf"
    doc = run_json(capsys, "beltrami", "--mu-const", "0", "--grid", "64", "--out", str(out))
    assert doc["residual"] == 0 and doc["iterations"] == 0
    g, f = read_qcf(out)
    assert np.array_equal(f, g.points())


def test_beltrami_disk(capsys, tmp_path):
    out, csv, png = tmp_path / "f.qcf", tmp_path / "f.csv", tmp_path / "f.png"
    doc = run_json(capsys, "beltrami", "--mu-const", "0.3", "--support", "1", "--grid", "256",
                   "--out", str(out), "--csv", str(csv), "--plot", str(png))
    assert doc["exact_error"] < 0.05
    assert doc["max_increment_ratio"] < 1
    g, f = read_qcf(out)
    assert g.n == 256 and f[128, 128] == 0
    assert csv.read_text().splitlines()[0] == "x,y,mu_re,mu_im,f_re,f_im"
    assert png.stat().st_size > 0


def test_beltrami_normalize(capsys, tmp_path):
    out = tmp_path / "f.qcf"
    doc = run_json(capsys, "beltrami", "--mu-const", "0.3", "--grid", "128", "--normalize", "--out", str(out))
    g, f = read_qcf(out)
    assert doc["normalized"] is True
    assert abs(g.interpolate(f, 1.0) - 1) < 1e-12


def test_beltrami_mu_file(capsys, tmp_path):
    g = Grid.covering(64, 2.0)
    z = g.points()
    mu_path = tmp_path / "mu.qcf"
    write_qcf(mu_path, g, np.where(np.abs(z) < 1, 0.2j, 0))
    doc = run_json(capsys, "beltrami", "--mu-file", str(mu_path), "--out", str(tmp_path / "f.qcf"))
    assert doc["mu"]["kind"] == "file" and doc["exact_error"] is None
    assert doc["residual"] < 0.05


def test_beltrami_malformed_file(capsys, tmp_path):
    bad = tmp_path / "bad.qcf"
    bad.write_bytes(b"QCF2" + bytes(40))
    out = tmp_path / "f.qcf"
    code, _, err = run(capsys, "beltrami", "--mu-file", str(bad), "--out", str(out))
    assert code == 2 and not out.exists()
    code, _, _ = run(capsys, "beltrami", "--mu-file", str(tmp_path / "missing.qcf"), "--out", str(out))
    assert code == 2 and not out.exists()


def test_beltrami_nonconvergence_exit_3(capsys, tmp_path):
    out = tmp_path / "f.qcf"
    code, _, _ = run(capsys, "beltrami", "--mu-const", "0.9", "--grid", "64", "--max-iter", "2", "--out", str(out))
    assert code == 3 and not out.exists()


def test_beltrami_rejects_k_one(capsys, tmp_path):
    code, _, _ = run(capsys, "beltrami", "--mu-const", "1", "--grid", "32", "--out", str(tmp_path / "f.qcf"))
    assert code == 5
