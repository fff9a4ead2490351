"""Command line entry point ``hal``."""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .field import Ball, FormField, Grid, ScalarField


def _num(text: str) -> float:
    return float(Fraction(text))


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get("HAL_OUT") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, default=float)
    sys.stdout.write("\n")


def _scalar_input(args) -> ScalarField:
    from .fieldio import load_field
    from .fixtures import get_fixture

    if args.field:
        f = load_field(args.field)
        if not isinstance(f, ScalarField):
            raise SystemExit("expected a scalar field file")
        return f
    fx = get_fixture(args.fixture)
    return fx.sample(Grid.cube(fx.n, args.cells, args.half_width))


def _add_input(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--field", help="field file (.f64 with JSON sidecar)")
    g.add_argument("--fixture", default="gaussian", help="catalog fixture to sample")
    p.add_argument("--cells", type=int, default=128)
    p.add_argument("--half-width", type=float, default=1.25)


def _radii(text: str | None):
    from .norms import MorreyParams

    if text is None:
        return None
    if text.startswith("dyadic:"):
        return MorreyParams.dyadic(int(text.split(":")[1]))
    return tuple(float(r) for r in text.split(","))


# -- subcommands ---------------------------------------------------------------------

def cmd_norms(args) -> int:
    from . import norms

    g = _scalar_input(args)
    region = Ball.parse(args.region) if args.region else None
    radii = _radii(args.radii)
    k = args.kind
    if k == "lp":
        val = norms.lp_norm(g, args.p, region)
        rep = norms.NormReport("Lp", val, {"p": args.p})
    elif k == "morrey":
        rep = norms.morrey_norm(g, norms.MorreyParams(args.p, args.beta, radii), region)
    elif k == "weak":
        rep = norms.NormReport("WeakLp", norms.weak_lp_norm(g, args.p, region), {"p": args.p})
    elif k == "weakmorrey":
        rep = norms.weak_morrey_norm(g, args.p, args.beta, norms.MorreyParams(args.p, args.beta, radii),
                                     region)
    elif k == "campanato":
        rep = norms.campanato_seminorm(g, args.p, args.beta, norms.MorreyParams(args.p, args.beta, radii),
                                       region)
    elif k == "holder":
        rep = norms.NormReport("Holder", norms.holder_seminorm(g, args.gamma, region, args.seed),
                               {"gamma": args.gamma})
    else:
        rep = norms.h_minus1_norm(g, region)
    _emit(rep.to_json())
    return 0


def cmd_maximal(args) -> int:
    from .fieldio import save_field
    from .maximal import Mollifier, fractional_maximal, hl_maximal, smooth_maximal

    g = _scalar_input(args)
    if args.op == "mbeta":
        mf = fractional_maximal(g, args.beta, args.p)
    elif args.op == "hl":
        mf = hl_maximal(g)
    else:
        mf = smooth_maximal(g, Mollifier.default(g.grid.dim), local=args.op == "localstar")
    path = save_field(mf.as_scalar(), _out_dir(args) / f"maximal_{args.op}")
    _emit({"op": args.op, "field": str(path), "max": float(mf.values.max()),
           "integral": float(np.sum(mf.values) * g.grid.cell_volume), "info": mf.info})
    return 0


def cmd_potentials(args) -> int:
    from .fieldio import save_field
    from .potentials import (RieszKernel, grad_newtonian, newtonian, riesz_apply,
                             verify_adams_pointwise, verify_morrey_boundedness)
    from .records import ParameterError

    g = _scalar_input(args)
    out = _out_dir(args)
    n = g.grid.dim
    if args.op in ("riesz", "newton", "gradnewton"):
        if args.op == "riesz":
            res = riesz_apply(RieszKernel(n, args.alpha), g, mode=args.mode)
        elif args.op == "newton":
            res = newtonian(g)
        else:
            res = grad_newtonian(g)
        path = save_field(res, out / f"potential_{args.op}")
        _emit({"op": args.op, "field": str(path)})
        return 0
    name = args.fixture if not args.field else Path(args.field).stem
    try:
        if args.op == "verify-adams":
            res = verify_adams_pointwise(g, args.p, args.beta, args.alpha, fixture=name)
            records = res.records
            summary = {"max_ratio": res.max_ratio, "fitted_c": res.fitted_c, **res.params}
        else:
            rec = verify_morrey_boundedness(g, args.p, args.beta, args.alpha, fixture=name)
            records = [rec]
            summary = {"ratio": rec.ratio, "rejected": rec.rejected}
    except ParameterError as exc:
        _emit({"op": args.op, "rejected": str(exc)})
        return 2
    from .campaign import records_csv

    (out / f"{args.op}.csv").write_text(records_csv(records))
    _emit({"op": args.op, **summary})
    return 0


def cmd_hodge(args) -> int:
    from .fieldio import load_field, save_field
    from .hodge import hodge_decompose

    if args.field:
        omega = load_field(args.field)
    else:
        grid = Grid.cube(2, args.cells, args.half_width)
        X, Y = grid.mesh()
        omega = FormField(grid, 1, np.stack([np.sin(2 * X + Y), np.cos(X - 3 * Y) * X]))
    if not isinstance(omega, FormField) or omega.degree != 1:
        raise SystemExit("hodge needs a 1-form field")
    dec = hodge_decompose(omega, tolerance=args.tol)
    out = _out_dir(args)
    paths = {k: str(save_field(getattr(dec, k), out / f"hodge_{k}")) for k in ("a", "b", "h")}
    _emit({"fields": paths, **dec.to_json()})
    return 0


def cmd_pde(args) -> int:
    from . import pde_system as ps

    out = _out_dir(args)
    grid = Grid.cube(2, args.cells, args.half_width)
    if args.op == "counterexample":
        eps = [2.0 ** -k for k in range(4, 10)]
        E = [ps.hessian_energy(e) for e in eps]
        logs = [abs(math.log(e)) for e in eps]
        _emit({"eps": eps, "hessian_energy": E, "log_exponent": ps.fit_power(logs, E)})
        return 0
    if args.op == "residual":
        ce = ps.counterexample(grid, args.eps)
        r = ps.residual(ce.u, ce.omega).values
        _emit({"h": grid.h, "eps": args.eps, "max_residual_annulus": float(r[ce.mask].max())})
        return 0
    if args.op == "gauge":
        X, Y = grid.mesh()
        u = ps.VectorField(grid, np.stack([np.sin(X) * np.exp(Y), X * Y ** 2]))
        om = ps.ConnectionForm(grid, 2, np.stack([np.stack([np.cos(Y), X * Y])]))
        P = ps.GaugeField.planar_rotation(grid, 0.7 * np.sin(X + 2 * Y))
        _emit({"h": grid.h, "discrepancy": ps.gauge_discrepancy(u, om, P)})
        return 0
    ce = ps.counterexample(grid, args.eps)
    radii = list(np.geomspace(2 * args.eps, 0.35, 5))
    prof = ps.decay_profile(ce.u, radii=radii, exclude=args.eps)
    with open(out / "decay.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["radius", "energy"])
        w.writerows(prof.rows())
    _emit({"kappa": prof.kappa, "table": str(out / "decay.csv")})
    return 0


def cmd_bootstrap(args) -> int:
    from . import bootstrap as bs

    out = _out_dir(args)
    if args.op == "exponent":
        params = bs.BootstrapParams(args.n, args.p)
        st = bs.exponent_iterate(args.s1, params, args.kmax)
        rows = [(k, str(s), float(s)) for k, s in enumerate(st.sequence, 1)]
        summary = {"limit": str(params.s_limit), "monotone": st.monotone,
                   "steps_to_1e-12": bs.steps_to_gap(args.s1, params, 1e-12, args.kmax)}
    elif args.op == "decay":
        lam, Lam = _num(args.lam), _num(args.Lam)
        st = bs.decay_iterate(_num(args.a1), lam, Lam, _num(args.K), args.kmax)
        rows = [(k, a, b) for k, (a, b) in enumerate(zip(st.sequence, st.bounds), 1)]
        summary = {"bound_holds": st.monotone,
                   "C": bs.decay_constant(_num(args.a1), lam, Lam, _num(args.K))}
    else:
        radii = [2.0 ** -j for j in range(0, 6)]
        table = bs.power_table([(0.0, 0.0)], radii, args.power)
        gamma = bs.minimal_gamma(table, args.k, args.eps0)
        v = bs.absorption_check(table, args.k, gamma, args.eps0)
        rows = [(r, table[((0.0, 0.0), r)], "") for r in radii]
        summary = {"Gamma": gamma, "hypothesis_holds": v.hypothesis_holds,
                   "conclusion_ratio": v.conclusion_ratio}
    with open(out / f"bootstrap_{args.op}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "value", "aux"])
        w.writerows(rows)
    _emit({"op": args.op, "rows": len(rows), **summary})
    return 0


def cmd_campaign(args) -> int:
    from .campaign import run_campaign

    rep = run_campaign(args.config, args.out or os.environ.get("HAL_OUT") or ".", args.threads)
    _emit({"passed": rep.passed, **rep.paths, "rows": len(rep.records)})
    return 0 if rep.passed else 1


def cmd_catalog(args) -> int:
    from .fixtures import fixture_catalog

    _emit(fixture_catalog())
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hal", description="Harmonic-analysis verification toolkit")
    ap.add_argument("--version", action="version", version=f"hal {__version__}")
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--out", default=None, help="output directory (default: $HAL_OUT or .)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norms")
    _add_input(p)
    p.add_argument("--kind", required=True,
                   choices=["lp", "morrey", "weak", "weakmorrey", "campanato", "holder", "hminus1"])
    p.add_argument("--p", type=_num, default=2.0)
    p.add_argument("--beta", type=_num, default=0.0)
    p.add_argument("--gamma", type=_num, default=0.5)
    p.add_argument("--region", default=None, help="ball:x,y:r")
    p.add_argument("--radii", default=None, help="dyadic:K or a comma list")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_norms)

    p = sub.add_parser("maximal")
    _add_input(p)
    p.add_argument("--op", required=True, choices=["mbeta", "star", "localstar", "hl"])
    p.add_argument("--beta", type=_num, default=0.0)
    p.add_argument("--p", type=_num, default=1.0)
    p.set_defaults(func=cmd_maximal)

    p = sub.add_parser("potentials")
    _add_input(p)
    p.add_argument("--op", required=True,
                   choices=["riesz", "newton", "gradnewton", "verify-adams", "verify-morrey"])
    p.add_argument("--alpha", type=_num, default=1.0)
    p.add_argument("--p", type=_num, default=1.0)
    p.add_argument("--beta", type=_num, default=0.0)
    p.add_argument("--mode", choices=["direct", "dyadic"], default="direct")
    p.set_defaults(func=cmd_potentials)

    p = sub.add_parser("hodge")
    p.add_argument("--decompose", action="store_true", required=True)
    p.add_argument("--field", default=None, help="1-form field file (default: a smooth sample)")
    p.add_argument("--cells", type=int, default=128)
    p.add_argument("--half-width", type=float, default=1.25)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_hodge)

    p = sub.add_parser("pde")
    p.add_argument("--op", required=True, choices=["residual", "gauge", "counterexample", "decay"])
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--eps", type=_num, default=2.0 ** -4)
    p.add_argument("--cells", type=int, default=256)
    p.add_argument("--half-width", type=float, default=0.5)
    p.set_defaults(func=cmd_pde)

    p = sub.add_parser("bootstrap")
    p.add_argument("--op", required=True, choices=["exponent", "decay", "absorption"])
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--p", default="2", help="exact when written as an integer, fraction or decimal")
    p.add_argument("--s1", default="1.1")
    p.add_argument("--kmax", type=int, default=200)
    p.add_argument("--a1", default="1")
    p.add_argument("--lam", default="1/8")
    p.add_argument("--Lam", default="1/2")
    p.add_argument("--K", default="1")
    p.add_argument("--k", type=_num, default=1.0)
    p.add_argument("--power", type=_num, default=0.5)
    p.add_argument("--eps0", type=_num, default=0.5)
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("campaign")
    p.add_argument("config", help="INI campaign file")
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("catalog")
    p.set_defaults(func=cmd_catalog)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "pde" and args.m != 2:
        raise SystemExit("only m = 2 (the counterexample system) is available from the CLI")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
