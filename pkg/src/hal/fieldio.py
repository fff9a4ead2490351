"""Field files: a raw little-endian float64 payload plus a JSON sidecar.

``name.f64`` holds the components one after another, each row-major over the
grid; ``name.json`` holds ``{dim, shape, spacing, origin, components, degree, kind}``.
``degree`` is null for scalar and vector fields.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .field import FormField, Grid, ScalarField, VectorField

DTYPE = np.dtype("<f8")


def _paths(path: str | Path) -> tuple[Path, Path]:
    p = Path(path)
    if p.suffix in (".f64", ".json"):
        p = p.with_suffix("")
    return p.with_suffix(".f64"), p.with_suffix(".json")


def save_field(fld, path: str | Path) -> Path:
    payload, sidecar = _paths(path)
    if isinstance(fld, ScalarField):
        comps, degree, kind = fld.values[None], None, "scalar"
    elif isinstance(fld, VectorField):
        comps, degree, kind = fld.components, None, "vector"
    elif isinstance(fld, FormField):
        comps, degree, kind = fld.components, fld.degree, "form"
    else:
        raise TypeError(f"cannot save {type(fld).__name__}")
    payload.parent.mkdir(parents=True, exist_ok=True)
    np.ascontiguousarray(comps, dtype=DTYPE).tofile(payload)
    meta = fld.grid.to_json() | {"components": int(comps.shape[0]), "degree": degree, "kind": kind}
    sidecar.write_text(json.dumps(meta, indent=2))
    return payload


def load_field(path: str | Path):
    payload, sidecar = _paths(path)
    meta = json.loads(sidecar.read_text())
    grid = Grid(tuple(meta["shape"]), tuple(meta["spacing"]), tuple(meta["origin"]))
    if grid.dim != meta["dim"]:
        raise ValueError("sidecar dim disagrees with shape")
    data = np.fromfile(payload, dtype=DTYPE)
    count = int(meta["components"])
    expected = count * int(np.prod(grid.shape))
    if data.size != expected:
        raise ValueError(f"payload holds {data.size} values, sidecar implies {expected}")
    comps = data.reshape((count,) + grid.shape)
    kind = meta.get("kind") or ("form" if meta.get("degree") is not None else
                                "scalar" if count == 1 else "vector")
    if kind == "scalar":
        return ScalarField(grid, comps[0])
    if kind == "vector":
        return VectorField(grid, comps)
    return FormField(grid, int(meta["degree"]), comps)
