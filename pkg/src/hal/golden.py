"""Golden regression sets: empirical constants stored with the grids and scan
sets that produced them, recomputed and compared within a relative tolerance.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .campaign import CampaignConfig, run_campaign

TOLERANCE = 0.05

CAMPAIGNS = {
    "adams": """
[campaign]
name = adams
resolutions = 128
[p1]
inequality = adams-pointwise
fixtures = gaussian, poly-bump, dipole
alpha = 1
p = 1
[p43]
inequality = adams-pointwise
fixtures = gaussian, poly-bump, dipole
alpha = 1
p = 4/3
[half]
inequality = adams-pointwise
fixtures = gaussian, poly-bump, dipole
alpha = 1/2
p = 2
""",
    "morrey": """
[campaign]
name = morrey
resolutions = 128
[m]
inequality = adams-morrey
fixtures = gaussian, poly-bump, dipole
alpha = 1
p = 4/3
""",
    "hminus1": """
[campaign]
name = hminus1
resolutions = 128
half_width = 1.5
[c]
inequality = hminus1-interpolation
fixtures = dipole, dipole-diag, dipole-wide, dipole-tight, dbump-x, dbump-xy, dbump-small,
    lapbump, lapbump-off, lapbump-small
""",
    "jacobian": """
[campaign]
name = jacobian
resolutions = 128
half_width = 2.5
[j]
inequality = jacobian-hardy
fixtures = jac-centred, jac-shifted, jac-small, jac-mixed
""",
    "multiplication": """
[campaign]
name = multiplication
resolutions = 128
[h]
inequality = h1-multiplication
fixtures = dipole, dbump-x, lapbump
gamma = 1/2
""",
}


def pde_constants() -> dict:
    """Discretization constants of the system module at fixed grids."""
    from . import pde_system as ps
    from .field import Grid

    out = {}
    g = Grid.cube(2, 256, 0.5)
    ce = ps.counterexample(g, 2.0 ** -4)
    out["counterexample_residual_256"] = float(ps.residual(ce.u, ce.omega).values[ce.mask].max())
    out["counterexample_kappa_256"] = ps.decay_profile(
        ce.u, radii=list(np.geomspace(2.0 ** -3, 0.35, 5)), exclude=2.0 ** -4).kappa
    out["hessian_energy_2^-6"] = ps.hessian_energy(2.0 ** -6)
    g = Grid.cube(2, 64)
    X, Y = g.mesh()
    u = ps.VectorField(g, np.stack([np.sin(X) * np.exp(Y), X * Y ** 2]))
    om = ps.ConnectionForm(g, 2, np.stack([np.stack([np.cos(Y), X * Y])]))
    P = ps.GaugeField.planar_rotation(g, 0.7 * np.sin(X + 2 * Y))
    out["gauge_discrepancy_64"] = ps.gauge_discrepancy(u, om, P)
    return out


PDE_SETUP = {"counterexample": "cells 256, half_width 0.5, eps 2^-4, radii geomspace(2^-3, 0.35, 5)",
             "gauge": "cells 64, half_width 1.25, u = (sin x e^y, x y^2), Omega^1_2 = (cos y, x y), "
                      "P = rotation by 0.7 sin(x + 2y)"}


def compute(name: str) -> dict:
    if name == "pde":
        return {"kind": "constants", "setup": PDE_SETUP, "values": pde_constants()}
    text = CAMPAIGNS[name]
    rep = run_campaign(CampaignConfig.parse(text))
    cases = rep.config.cases
    return {"kind": "campaign", "config": text.strip() + "\n",
            "resolutions": sorted({r for c in cases for r in c.resolutions}),
            "half_width": sorted({c.half_width for c in cases}),
            "values": {f"{r.inequality_id}|{r.fixture}|{_key(r.params)}|{r.resolution}": r.ratio
                       for r in rep.records}}


def _key(params: dict) -> str:
    return ",".join(f"{k}={params[k]:g}" for k in sorted(params))


def names() -> list[str]:
    return sorted(CAMPAIGNS) + ["pde"]


def freeze(directory: str | Path) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in names():
        p = directory / f"{name}.json"
        p.write_text(json.dumps(compute(name), indent=2, sort_keys=True) + "\n")
        paths.append(p)
    return paths


def compare(path: str | Path, tolerance: float = TOLERANCE) -> list[tuple[str, float, float]]:
    """Recompute a golden set; return (key, frozen, new) for entries off by more than ``tolerance``."""
    path = Path(path)
    frozen = json.loads(path.read_text())
    if frozen["kind"] == "campaign":
        rep = run_campaign(CampaignConfig.parse(frozen["config"]))
        new = {f"{r.inequality_id}|{r.fixture}|{_key(r.params)}|{r.resolution}": r.ratio
               for r in rep.records}
    else:
        new = pde_constants()
    bad = []
    for key, old in frozen["values"].items():
        val = new.get(key, math.nan)
        if not abs(val - old) <= tolerance * abs(old):
            bad.append((key, old, val))
    return bad
