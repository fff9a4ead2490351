"""Batch runner: INI-configured campaigns over fixtures, resolutions and parameters.

Config schema (INI). The ``[campaign]`` section holds defaults; every other
section is a case::

    [campaign]
    name = adams            ; output stem (default: config file stem)
    seed = 0                ; random pairs for Holder seminorms
    threads = 1
    resolutions = 128, 256  ; cells per axis
    half_width = 1.25

    [adams-a]
    inequality = adams-pointwise
    fixtures = gaussian, poly-bump, dipole
    alpha = 1
    beta = 0
    p = 1
    stability = 0.2         ; allowed relative change of the max ratio per refinement

Case keys override the defaults. Numbers accept fractions ("4/3"). The only
environment override is HAL_OUT for the output directory.
"""
from __future__ import annotations

import configparser
import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .field import Grid, ScalarField
from .fixtures import Fixture, JacobianPair, get_fixture, jacobian_pairs
from .records import InequalityRecord, ParameterError

BASE_COLUMNS = ("inequality_id", "fixture")
TAIL_COLUMNS = ("lhs", "rhs", "ratio", "resolution", "stable", "note")
RESERVED = {"inequality", "fixtures", "resolutions", "half_width", "stability", "threads",
            "seed", "name"}


class CampaignError(ValueError):
    """Unknown inequality id, unknown fixture, or a fixture lacking a needed oracle."""


def _number(text: str) -> float:
    return float(Fraction(text.strip()))


def _list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


@dataclass
class Case:
    name: str
    inequality: str
    fixtures: list[str]
    params: dict
    resolutions: list[int]
    half_width: float
    stability: float


@dataclass
class CampaignConfig:
    name: str = "campaign"
    seed: int = 0
    threads: int = 1
    cases: list[Case] = field(default_factory=list)

    @classmethod
    def parse(cls, text: str, name: str = "campaign") -> "CampaignConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        cp.read_string(text)
        d = dict(cp["campaign"]) if cp.has_section("campaign") else {}
        cfg = cls(d.get("name", name), int(d.get("seed", 0)), int(d.get("threads", 1)))
        for sec in cp.sections():
            if sec == "campaign":
                continue
            s = {**d, **dict(cp[sec])}
            if "inequality" not in s:
                raise CampaignError(f"case [{sec}] has no inequality id")
            ineq = s["inequality"].strip()
            if ineq not in RUNNERS:
                raise CampaignError(f"unknown inequality id {ineq!r} in case [{sec}]")
            params = {k: _number(v) for k, v in s.items() if k not in RESERVED}
            cfg.cases.append(Case(
                sec, ineq, _list(s.get("fixtures", "")), params,
                [int(r) for r in _list(s.get("resolutions", "128, 256"))],
                _number(s.get("half_width", "1.25")),
                _number(s.get("stability", str(DEFAULT_STABILITY.get(ineq, 0.2))))))
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "CampaignConfig":
        path = Path(path)
        return cls.parse(path.read_text(), path.stem)


# -- runners: (case, fixture name, cells, seed) -> InequalityRecord ------------------

def _grid(case: Case, fx, cells: int) -> Grid:
    return Grid.cube(fx.n, cells, case.half_width)


def _scalar_fixture(name: str) -> Fixture:
    try:
        fx = get_fixture(name)
    except KeyError as exc:
        raise CampaignError(str(exc)) from None
    if not isinstance(fx, Fixture):
        raise CampaignError(f"fixture {name!r} is not scalar-valued")
    return fx


def _adams_params(case: Case, n: int) -> dict:
    p = case.params
    return {"n": n, "alpha": p.get("alpha", 1.0), "beta": p.get("beta", 0.0), "p": p.get("p", 1.0)}


def _gate(ineq: str, fixture: str, params: dict, cells: int):
    from .potentials import check_adams_params

    try:
        check_adams_params(params["n"], params["alpha"], params["beta"], params["p"])
    except ParameterError as exc:
        return InequalityRecord.rejection(ineq, fixture, params, str(exc), cells)
    return None


def run_adams_pointwise(case: Case, name: str, cells: int, seed: int) -> InequalityRecord:
    from .potentials import verify_adams_pointwise

    fx = _scalar_fixture(name)
    params = _adams_params(case, fx.n)
    rej = _gate(case.inequality, name, params, cells)
    if rej:
        return rej
    res = verify_adams_pointwise(fx.sample(_grid(case, fx, cells)), params["p"], params["beta"],
                                 params["alpha"], region_radius=case.params.get("region", 1.0),
                                 fixture=name)
    rec = res.records[0]
    rec.params = params
    rec.extra = {"max_ratio": res.max_ratio, "fitted_c": res.fitted_c}
    return rec


def run_adams_split(case: Case, name: str, cells: int, seed: int) -> InequalityRecord:
    from .potentials import optimal_delta_check

    fx = _scalar_fixture(name)
    params = _adams_params(case, fx.n)
    params["p"] = 1.0
    rej = _gate(case.inequality, name, params, cells)
    if rej:
        return rej
    chk = optimal_delta_check(fx.sample(_grid(case, fx, cells)), params["alpha"], params["beta"],
                              stride=int(case.params.get("stride", 8)))
    return InequalityRecord(case.inequality, name, params, chk.empirical_c, 1.0, cells)


def run_adams_morrey(case: Case, name: str, cells: int, seed: int) -> InequalityRecord:
    from .potentials import verify_morrey_boundedness

    fx = _scalar_fixture(name)
    params = _adams_params(case, fx.n)
    rej = _gate(case.inequality, name, params, cells)
    if rej:
        return rej
    rec = verify_morrey_boundedness(fx.sample(_grid(case, fx, cells)), params["p"], params["beta"],
                                    params["alpha"], fixture=name)
    rec.inequality_id = case.inequality
    rec.params = params
    return rec


def run_hminus1(case: Case, name: str, cells: int, seed: int) -> InequalityRecord:
    from .maximal import Mollifier, local_hardy_norm
    from .norms import MorreyParams, h_minus1_norm, morrey_norm

    fx = _scalar_fixture(name)
    if "mean-zero" not in fx.flags:
        raise CampaignError(f"fixture {name!r} has no mean-zero flag")
    n = fx.n
    g = fx.sample(_grid(case, fx, cells))
    lhs = h_minus1_norm(g).value
    mo = morrey_norm(g, MorreyParams(1, n - 2, MorreyParams.dyadic(6, 1.0))).value
    h1 = local_hardy_norm(g, Mollifier.default(n))
    return InequalityRecord(case.inequality, name, {"n": n, "beta": n - 2.0}, lhs,
                            math.sqrt(mo * h1), cells, extra={"morrey": mo, "h1": h1})


def project_mean_zero(values: np.ndarray, grid: Grid, radius: float | None = None) -> np.ndarray:
    """Remove the discrete mean with a multiple of a bump, so the sampled field is
    exactly mean-zero on the grid (the continuum field already is).

    The bump is centred at the origin with the support radius of ``values`` by
    default, so the support (and the tail bound of the Hardy norm) does not grow."""
    r = grid.radius()
    if radius is None:
        nz = values != 0
        radius = float(r[nz].max()) if nz.any() else 1.0
    r2 = r ** 2 / radius ** 2
    b = np.where(r2 < 1, (1 - r2) ** 4, 0.0)
    return values - values.sum() / b.sum() * b


def run_jacobian(case: Case, name: str, cells: int, seed: int) -> InequalityRecord:
    from .maximal import Mollifier, hardy_norm, hardy_tail_bound

    pairs = {p.name: p for p in jacobian_pairs()}
    if name not in pairs:
        raise CampaignError(f"unknown Jacobian pair {name!r}")
    pair: JacobianPair = pairs[name]
    grid = Grid.cube(2, cells, case.half_width)
    J = pair.sample_jacobian(grid)
    J = ScalarField(grid, project_mean_zero(J.values, grid))
    moll = Mollifier.default(2)
    lhs = hardy_norm(J, moll) + hardy_tail_bound(J, moll)
    rhs = pair.gradient_l2("u", grid) * pair.gradient_l2("v", grid)
    return InequalityRecord(case.inequality, name, {"n": 2}, lhs, rhs, cells)


MULTIPLIER = "gaussian-wide"


def run_multiplication(case: Case, name: str, cells: int, seed: int) -> InequalityRecord:
    from .maximal import Mollifier, local_hardy_norm
    from .norms import holder_seminorm

    fx = _scalar_fixture(name)
    if "mean-zero" not in fx.flags:
        raise CampaignError(f"fixture {name!r} has no mean-zero flag")
    mult = get_fixture(MULTIPLIER)
    gamma = case.params.get("gamma", 0.5)
    grid = _grid(case, fx, cells)
    h = fx.sample(grid)
    m = mult.sample(grid)
    moll = Mollifier.default(fx.n)
    hol = float(np.abs(m.values).max()) + holder_seminorm(m, gamma, seed=seed)
    lhs = local_hardy_norm(ScalarField(grid, m.values * h.values), moll)
    rhs = hol * local_hardy_norm(h, moll)
    return InequalityRecord(case.inequality, name, {"n": fx.n, "gamma": gamma}, lhs, rhs, cells)


RUNNERS = {
    "adams-pointwise": run_adams_pointwise,
    "adams-split": run_adams_split,
    "adams-morrey": run_adams_morrey,
    "hminus1-interpolation": run_hminus1,
    "jacobian-hardy": run_jacobian,
    "h1-multiplication": run_multiplication,
}
DEFAULT_STABILITY = {"adams-pointwise": 0.2, "hminus1-interpolation": 0.3}


# -- aggregation ---------------------------------------------------------------------

def refinement_change(ratios: list[float]) -> float:
    """Largest relative change of consecutive values (resolution order)."""
    worst = 0.0
    for a, b in zip(ratios, ratios[1:]):
        worst = max(worst, abs(b - a) / abs(a) if a else (0.0 if b == a else math.inf))
    return worst


@dataclass
class CampaignReport:
    config: CampaignConfig
    records: list[InequalityRecord]
    summary: dict
    csv_text: str
    passed: bool
    paths: dict = field(default_factory=dict)


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return repr(x)
    return str(x)


def records_csv(records: list[InequalityRecord]) -> str:
    keys = sorted({k for r in records for k in r.params})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if not records:
        return ""
    w.writerow(list(BASE_COLUMNS) + keys + list(TAIL_COLUMNS))
    for r in records:
        w.writerow([r.inequality_id, r.fixture] + [_fmt(r.params.get(k, "")) for k in keys]
                   + [_fmt(float(r.lhs)), _fmt(float(r.rhs)), _fmt(float(r.ratio)), r.resolution,
                      "" if r.stable is None else int(r.stable), r.rejected])
    return buf.getvalue()


def _summarize(cases_out: list[tuple[Case, str, list[InequalityRecord]]]) -> tuple[list, bool]:
    rows, ok = [], True
    for case, name, recs in cases_out:
        if any(r.rejected for r in recs):
            rows.append({"case": case.name, "inequality_id": case.inequality, "fixture": name,
                         "rejected": recs[0].rejected})
            continue
        ratios = [r.ratio for r in recs]
        change = refinement_change(ratios)
        finite = all(math.isfinite(x) for x in ratios)
        stable = finite and change <= case.stability
        for r in recs:
            r.stable = stable
        ok = ok and stable
        rows.append({"case": case.name, "inequality_id": case.inequality, "fixture": name,
                     "resolutions": case.resolutions, "ratios": ratios, "max_ratio": max(ratios),
                     "change": change, "tolerance": case.stability, "stable": stable})
    return rows, ok


def run_campaign(config: CampaignConfig | str | Path, out_dir: str | Path | None = None,
                 threads: int | None = None) -> CampaignReport:
    """Run every case over fixtures x resolutions; write <name>.csv and <name>.json.

    Rejected parameter sets give one row per fixture and resolution naming the
    violated constraint and do not fail the campaign.
    """
    cfg = config if isinstance(config, CampaignConfig) else CampaignConfig.load(config)
    jobs = [(case, name, cells) for case in cfg.cases for name in case.fixtures
            for cells in case.resolutions]
    nthreads = threads or cfg.threads

    def work(job):
        case, name, cells = job
        return RUNNERS[case.inequality](case, name, cells, cfg.seed)

    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(j) for j in jobs]
    grouped, i = [], 0
    for case in cfg.cases:
        for name in case.fixtures:
            k = len(case.resolutions)
            grouped.append((case, name, results[i:i + k]))
            i += k
    rows, ok = _summarize(grouped)
    text = records_csv(results)
    summary = {"name": cfg.name, "seed": cfg.seed, "passed": ok, "rows": len(results),
               "rejections": sum(1 for r in results if r.rejected), "cases": rows,
               "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S")}
    report = CampaignReport(cfg, results, summary, text, ok)
    out = out_dir or os.environ.get("HAL_OUT")
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        csv_path, json_path = out / f"{cfg.name}.csv", out / f"{cfg.name}.json"
        csv_path.write_text(text)
        json_path.write_text(json.dumps(summary, indent=2, default=float))
        report.paths = {"csv": str(csv_path), "json": str(json_path)}
    return report
