"""JSON documents and tab-delimited tables for CLI output."""

from __future__ import annotations

import json
import math

import numpy as np

from .core.sphere import format_point, point_to_json

FORMAT_VERSION = 1


def cnum(z):
    """[re, im] for a finite complex number, None for nan."""
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        return None
    return [z.real, z.imag]


def to_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"


def table(header, rows) -> str:
    lines = ["\t".join(header)]
    lines += ["\t".join(str(c) for c in r) for r in rows]
    return "\n".join(lines) + "\n"


def _fmt(z, digits=12):
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        return "nan"
    return format_point(z, digits)


# documents ------------------------------------------------------------------------

def fixed_doc(R, records):
    return {
        "command": "fixed",
        "version": FORMAT_VERSION,
        "map": str(R),
        "degree": R.degree,
        "fixed_points": [
            {
                "location": point_to_json(r.location),
                "multiplier": cnum(r.multiplier),
                "abs_multiplier": abs(r.multiplier),
                "multiplicity": r.multiplicity,
                "class": str(r.classification),
            }
            for r in records
        ],
    }


def fixed_table(records) -> str:
    rows = [(format_point(r.location), _fmt(r.multiplier), f"{abs(r.multiplier):.12g}", r.multiplicity,
             r.classification) for r in records]
    return table(["location", "multiplier", "abs_multiplier", "multiplicity", "class"], rows)


def periodic_doc(R, n, orbits):
    return {
        "command": "periodic",
        "version": FORMAT_VERSION,
        "map": str(R),
        "period": n,
        "orbits": [
            {
                "points": [point_to_json(p) for p in o.points],
                "multiplier": cnum(o.multiplier),
                "abs_multiplier": abs(o.multiplier),
                "multiplicity": o.multiplicity,
                "class": str(o.classification),
            }
            for o in orbits
        ],
    }


def periodic_table(orbits) -> str:
    rows = [(" ".join(format_point(p) for p in o.points), _fmt(o.multiplier), f"{abs(o.multiplier):.12g}",
             o.multiplicity, o.classification) for o in orbits]
    return table(["orbit", "multiplier", "abs_multiplier", "multiplicity", "class"], rows)


def orbit_json(o):
    return {"period": o.period, "points": [point_to_json(p) for p in o.points],
            "multiplier": cnum(o.multiplier), "class": str(o.classification)}


def components_doc(R, raster, cm, summary):
    comps = []
    for c in cm.ids:
        per = cm.periodicity.get(c)
        best, frac = cm.votes.get(c, (None, 0.0))
        comps.append({
            "id": c,
            "basin": cm.basin_of[c],
            "pixels": cm.sizes[c],
            "touches_border": cm.touches_border[c],
            "maps_to": cm.forward_map.get(c),
            "vote": {"target": best, "fraction": frac},
            "status": "resolved" if per is not None else "unresolved",
            "preperiod": per[0] if per else None,
            "period": per[1] if per else None,
        })
    return {
        "command": "components",
        "version": FORMAT_VERSION,
        "map": str(R),
        "window": str(raster.window),
        "size": [raster.width, raster.height],
        "max_iter": raster.max_iter,
        "attractors": [orbit_json(a) for a in raster.attractors],
        "undecided_pixels": int(np.sum(raster.labels == 0)),
        "components": comps,
        "summary": summary,
    }


def components_table(doc) -> str:
    rows = [(c["id"], c["basin"], c["pixels"], c["maps_to"] if c["maps_to"] is not None else "-", c["status"],
             c["preperiod"] if c["preperiod"] is not None else "-", c["period"] if c["period"] is not None else "-")
            for c in doc["components"]]
    return table(["id", "basin", "pixels", "maps_to", "status", "preperiod", "period"], rows)


def koenigs_doc(R, loc, lam, zs, gs, residuals):
    return {
        "command": "koenigs",
        "version": FORMAT_VERSION,
        "map": str(R),
        "fixed_point": point_to_json(loc),
        "multiplier": cnum(lam),
        "values": [
            {"z": point_to_json(z), "g": cnum(g), "residual": None if r is None or not math.isfinite(r) else r}
            for z, g, r in zip(zs, gs, residuals)
        ],
    }


def koenigs_table(doc) -> str:
    rows = []
    for v in doc["values"]:
        z = "inf" if v["z"] == "inf" else _fmt(complex(*v["z"]))
        g = "nan" if v["g"] is None else _fmt(complex(*v["g"]))
        r = "nan" if v["residual"] is None else f"{v['residual']:.3e}"
        rows.append((z, g, r))
    return table(["z", "g", "residual"], rows)


def kv_table(doc: dict, skip=()) -> str:
    rows = []
    for k, v in doc.items():
        if k in skip or isinstance(v, (list, dict)):
            continue
        rows.append((k, v))
    return table(["key", "value"], rows)


__all__ = [
    "cnum", "to_json", "table", "fixed_doc", "fixed_table", "periodic_doc", "periodic_table",
    "components_doc", "components_table", "koenigs_doc", "koenigs_table", "kv_table", "orbit_json",
]


def schema(name: str) -> dict:
    """Shipped JSON schema for a subcommand's ``--json`` document."""
    from importlib.resources import files

    return json.loads(files("fatou").joinpath("schemas", f"{name}.schema.json").read_text())
