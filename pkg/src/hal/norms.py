"""Norm and seminorm estimators: L^p, weak L^p, Morrey, weak Morrey, Campanato,
Hoelder and a discrete H^-1.

Sups over radii run over a finite (by default dyadic) radius list, so they
bracket the continuous sup only up to a factor 2^(beta/p).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .field import Ball, Grid, ScalarField, ball_weights, region_weights
from .maximal import MIN_CELLS, ball_integrals

KINDS = ("Lp", "WeakLp", "Morrey", "WeakMorrey", "Campanato", "Holder", "Hminus1",
         "Hardy", "LocalHardy")
ALL_PAIRS_LIMIT = 64
RANDOM_PAIRS = 10 ** 6
STEP_SPREAD = 1e-9
VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class MorreyParams:
    p: float = 1.0
    beta: float = 0.0
    radii: tuple[float, ...] | None = None
    centers: tuple[tuple[float, ...], ...] | None = None
    min_cells: float = MIN_CELLS

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be at least 1")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if self.radii is not None:
            r = tuple(sorted((float(x) for x in self.radii), reverse=True))
            if not r or r[-1] <= 0:
                raise ValueError("radii must be positive")
            object.__setattr__(self, "radii", r)
        if self.centers is not None:
            object.__setattr__(self, "centers", tuple(tuple(map(float, c)) for c in self.centers))

    @staticmethod
    def dyadic(levels: int, scale: float = 1.0) -> tuple[float, ...]:
        """scale * 2^-j for j = 0..levels."""
        return tuple(scale * 2.0 ** -j for j in range(levels + 1))

    def radius_list(self, grid: Grid, region: Ball | None) -> tuple[list[float], list[float]]:
        """(resolved, skipped) radii; radii below ``min_cells`` steps are skipped."""
        scale = 1.0 if region is None else region.radius
        radii = self.radii if self.radii is not None else self.dyadic(8, scale)
        used = [r for r in radii if r >= self.min_cells * grid.h]
        return used, [r for r in radii if r not in used]


@dataclass(frozen=True)
class NormReport:
    kind: str
    value: float
    params: dict = field(default_factory=dict)
    argmax_witness: tuple | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if not (math.isfinite(self.value) and self.value >= 0):
            raise ValueError(f"norm value must be finite and non-negative, got {self.value}")

    def to_json(self) -> dict:
        wit = None
        if self.argmax_witness is not None:
            c, r = self.argmax_witness
            wit = {"center": list(c), "radius": r}
        return {"kind": self.kind, "value": self.value, "params": self.params, "argmax_witness": wit}


def _region_mask(grid: Grid, region: Ball | None) -> np.ndarray:
    if region is None:
        return np.ones(grid.shape, bool)
    return grid.radius(region.center) <= region.radius + 1e-12


def _node(grid: Grid, idx) -> tuple[float, ...]:
    return tuple(o + i * h for o, i, h in zip(grid.origin, idx, grid.spacing))


def lp_norm(g: ScalarField, p: float, region: Ball | None = None) -> float:
    w = region_weights(g.grid, region)
    if math.isinf(p):
        return float(np.max(np.abs(g.values)[w > 0], initial=0.0))
    return float(np.sum(w * np.abs(g.values) ** p) * g.grid.cell_volume) ** (1 / p)


# -- Morrey -------------------------------------------------------------------

def _check_beta(beta: float, n: int, limit: float, what: str) -> None:
    if beta > limit:
        raise ValueError(f"beta = {beta} exceeds {what} = {limit}: the space reduces to "
                         f"{'{0}' if what == 'n' else 'constants'}")


def morrey_norm(g: ScalarField, params: MorreyParams, region: Ball | None = None) -> NormReport:
    """(sup over centres in the region and scanned radii of r^-beta int_{B_r ∩ O} |g|^p)^(1/p)."""
    grid = g.grid
    _check_beta(params.beta, grid.dim, grid.dim, "n")
    used, skipped = params.radius_list(grid, region)
    gp = np.abs(g.values) ** params.p
    table = []
    best, witness = 0.0, None
    if params.centers is None:
        mask = _region_mask(grid, region)
        for r in used:
            vals = ball_integrals(gp, grid, r, region) * r ** -params.beta
            vals = np.where(mask, vals, -np.inf)
            idx = np.unravel_index(int(np.argmax(vals)), grid.shape)
            table.append((r, float(vals[idx])))
            if vals[idx] > best or witness is None:
                best, witness = float(vals[idx]), (_node(grid, idx), r)
    else:
        wr = region_weights(grid, region) if region is not None else np.ones(grid.shape)
        for r in used:
            rmax = 0.0
            for c in params.centers:
                val = float(np.sum(gp * np.minimum(wr, ball_weights(grid, Ball(c, r))))
                            * grid.cell_volume) * r ** -params.beta
                if val > rmax:
                    rmax = val
                if val > best or witness is None:
                    best, witness = val, (c, r)
            table.append((r, rmax))
    return NormReport("Morrey", max(best, 0.0) ** (1 / params.p),
                      {"p": params.p, "beta": params.beta, "radii": used, "skipped_radii": skipped,
                       "table": table}, witness)


# -- weak L^p -----------------------------------------------------------------

def _spread(values: np.ndarray, grid: Grid) -> np.ndarray:
    grads = np.gradient(values, *grid.spacing)
    grads = grads if isinstance(grads, (list, tuple)) else [grads]
    return 0.5 * sum(h * np.abs(d) for h, d in zip(grid.spacing, grads))


def _weak_from_samples(g: np.ndarray, a: np.ndarray, w: np.ndarray, p: float,
                       infinite_mass: float = 0.0) -> float:
    """sup over levels s of s * mu(s)^(1/p).

    Each sample spreads its weight uniformly over [g - a, g + a], making mu
    piecewise linear in s. The sup is taken over breakpoints (left limits) only:
    between breakpoints the linear chord overestimates the convex distribution
    function of a singular profile. ``infinite_mass`` counts
    at every level, but levels beyond the largest finite breakpoint are not scanned.
    """
    if g.size == 0:
        return 0.0
    # tiny spreads would put slopes w/(2a) into the running sums that cancel
    # catastrophically; such samples are treated as point masses instead
    step = a <= STEP_SPREAD * max(float(np.max(g)), 1e-300)
    lo, hi = g - a, g + a
    gs = np.sort(g[step])
    ws = w[step][np.argsort(g[step])]
    wstep_tail = np.concatenate([np.cumsum(ws[::-1])[::-1], [0.0]])  # weight with g >= gs[k]

    sl = ~step
    ordl, ordh = np.argsort(lo[sl]), np.argsort(hi[sl])
    lo_s, hi_s = lo[sl][ordl], hi[sl][ordh]
    wl, al, hl = w[sl][ordl], a[sl][ordl], hi[sl][ordl]
    wh, ah, hh = w[sl][ordh], a[sl][ordh], hi[sl][ordh]
    cw = np.concatenate([[0.0], np.cumsum(wl)])
    c1l = np.concatenate([[0.0], np.cumsum(wl * hl / (2 * al))])
    c1h = np.concatenate([[0.0], np.cumsum(wh * hh / (2 * ah))])
    dl = np.concatenate([[0.0], np.cumsum(wl / (2 * al))])
    dh = np.concatenate([[0.0], np.cumsum(wh / (2 * ah))])
    total = cw[-1]

    def linear_piece(s, side):
        """mu(s) = A - B s on the piece containing s (``side`` picks the one-sided limit)."""
        il = np.searchsorted(lo_s, s, side=side)
        ih = np.searchsorted(hi_s, s, side=side)
        full = total - cw[il]
        A = full + c1l[il] - c1h[ih]
        B = dl[il] - dh[ih]
        k = np.searchsorted(gs, s, side=side)
        return A + wstep_tail[k] + infinite_mass, B

    bps = np.unique(np.concatenate([lo_s, hi_s, gs]))
    bps = bps[bps > 0]
    if bps.size == 0:
        return 0.0
    A, B = linear_piece(bps, "left")
    mu = np.clip(A - B * bps, 0, None)
    return float(np.max(bps * mu ** (1 / p)))


def weak_lp_norm(g: ScalarField, p: float, region: Ball | None = None,
                 mask: np.ndarray | None = None) -> float:
    """Weak-L^p quasinorm sup_s s |{|g| > s}|^(1/p) over the region.

    Level-set volumes come from a sub-cell spread model: node i carries the
    measure of its cell spread uniformly over the values
    |g_i| +- (1/2) sum_k h_k |d_k g_i|, which removes the lattice ties of raw
    order statistics. Nodes in ``mask`` (singular points) count as +infinity.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    grid = g.grid
    w = region_weights(grid, region) * grid.cell_volume
    if not np.any(w > 0):
        raise ValueError("empty region")
    absg = np.abs(g.values)
    a = _spread(absg, grid)
    m = np.zeros(grid.shape, bool) if mask is None else np.asarray(mask, bool)
    use = (w > 0) & ~m
    return _weak_from_samples(absg[use], a[use], w[use], p, float(np.sum(w[(w > 0) & m])))


def _default_centers(grid: Grid, region: Ball | None, per_axis: int = 15) -> list[tuple[float, ...]]:
    mask = _region_mask(grid, region)
    stride = max(1, min(grid.shape) // per_axis)
    sl = tuple(slice(None, None, stride) for _ in range(grid.dim))
    sub = np.zeros(grid.shape, bool)
    sub[sl] = True
    if region is not None:
        sub[grid.index_of(region.center)] = True
    return [_node(grid, idx) for idx in zip(*np.nonzero(sub & mask))]


def weak_morrey_norm(g: ScalarField, p: float, beta: float, params: MorreyParams | None = None,
                     region: Ball | None = None, mask: np.ndarray | None = None) -> NormReport:
    """sup over balls of r^(-beta/p) times the weak-L^p quasinorm on B_r(x) ∩ region."""
    grid = g.grid
    _check_beta(beta, grid.dim, grid.dim, "n")
    params = params or MorreyParams(p, beta)
    used, skipped = params.radius_list(grid, region)
    centers = params.centers or _default_centers(grid, region)
    absg = np.abs(g.values)
    a = _spread(absg, grid)
    m = np.zeros(grid.shape, bool) if mask is None else np.asarray(mask, bool)
    wr = region_weights(grid, region) if region is not None else np.ones(grid.shape)
    best, witness = 0.0, None
    for r in used:
        for c in centers:
            w = np.minimum(wr, ball_weights(grid, Ball(c, r))) * grid.cell_volume
            use = (w > 0) & ~m
            val = _weak_from_samples(absg[use], a[use], w[use], p, float(np.sum(w[(w > 0) & m])))
            val *= r ** (-beta / p)
            if val > best or witness is None:
                best, witness = val, (c, r)
    return NormReport("WeakMorrey", best, {"p": p, "beta": beta, "radii": used,
                                           "skipped_radii": skipped, "centers": len(centers)},
                      witness)


# -- Campanato and Hoelder -----------------------------------------------------

def campanato_seminorm(g: ScalarField, p: float, beta: float, params: MorreyParams | None = None,
                       region: Ball | None = None) -> NormReport:
    """(sup r^-beta int_{B_r(x) ∩ O} |g - mean|^p)^(1/p), means over the same weighted ball.

    For p = 2 every node of the region is a centre (variance identity via FFT);
    otherwise the centre list is ``params.centers`` or a subsample.
    """
    grid = g.grid
    n = grid.dim
    if p < 1:
        raise ValueError("p must be at least 1")
    _check_beta(beta, n, n + p, "n + p")
    params = params or MorreyParams(p, beta)
    used, skipped = params.radius_list(grid, region)
    v = g.values
    table, best, witness = [], 0.0, None
    if p == 2 and params.centers is None:
        mask = _region_mask(grid, region)
        ones = np.ones(grid.shape)
        for r in used:
            m0 = ball_integrals(ones, grid, r, region)
            m1 = ball_integrals(v, grid, r, region)
            m2 = ball_integrals(v * v, grid, r, region)
            with np.errstate(divide="ignore", invalid="ignore"):
                osc = np.where(m0 > 0, m2 - m1 * m1 / m0, 0.0)
            # the variance identity cancels; FFT round-off is relative to the largest m2
            osc = np.where(osc > VARIANCE_FLOOR * np.max(np.abs(m2)), osc, 0.0)
            vals = np.where(mask, np.clip(osc, 0, None) * r ** -beta, -np.inf)
            idx = np.unravel_index(int(np.argmax(vals)), grid.shape)
            table.append((r, float(vals[idx])))
            if vals[idx] > best or witness is None:
                best, witness = float(vals[idx]), (_node(grid, idx), r)
    else:
        centers = params.centers or _default_centers(grid, region)
        wr = region_weights(grid, region) if region is not None else np.ones(grid.shape)
        for r in used:
            rmax = 0.0
            for c in centers:
                w = np.minimum(wr, ball_weights(grid, Ball(c, r)))
                tot = w.sum()
                if tot == 0:
                    continue
                mean = float(np.sum(w * v) / tot)
                val = float(np.sum(w * np.abs(v - mean) ** p) * grid.cell_volume) * r ** -beta
                rmax = max(rmax, val)
                if val > best or witness is None:
                    best, witness = val, (c, r)
            table.append((r, rmax))
    return NormReport("Campanato", max(best, 0.0) ** (1 / p),
                      {"p": p, "beta": beta, "radii": used, "skipped_radii": skipped, "table": table},
                      witness)


def holder_seminorm(g: ScalarField, gamma: float, region: Ball | None = None,
                    seed: int = 0, pairs: int = RANDOM_PAIRS) -> float:
    """max |g(x) - g(y)| / |x - y|^gamma over node pairs in the region.

    All pairs when the region holds at most 64^n nodes, otherwise ``pairs``
    random pairs drawn with a seeded generator.
    """
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    grid = g.grid
    mask = _region_mask(grid, region)
    pts = grid.points()[mask]
    vals = g.values[mask]
    count = len(vals)
    if count < 2:
        return 0.0
    best = 0.0
    if count <= ALL_PAIRS_LIMIT ** grid.dim:
        block = max(1, 4_000_000 // count)
        for s in range(0, count, block):
            P, V = pts[s:s + block], vals[s:s + block]
            d = np.sqrt(np.sum((P[:, None, :] - pts[None, :, :]) ** 2, axis=-1))
            dv = np.abs(V[:, None] - vals[None, :])
            with np.errstate(divide="ignore", invalid="ignore"):
                q = np.where(d > 0, dv / d ** gamma, 0.0)
            best = max(best, float(q.max()))
        return best
    rng = np.random.default_rng(seed)
    i = rng.integers(0, count, pairs)
    j = rng.integers(0, count, pairs)
    keep = i != j
    d = np.sqrt(np.sum((pts[i[keep]] - pts[j[keep]]) ** 2, axis=-1))
    return float(np.max(np.abs(vals[i[keep]] - vals[j[keep]]) / d ** gamma))


# -- H^-1 -----------------------------------------------------------------------

def h_minus1_norm(g: ScalarField, region: Ball | None = None, method: str = "direct",
                  tol: float = 1e-10) -> NormReport:
    """Dirichlet energy ||grad w||_2 of the zero-boundary solution of -Lap w = g.

    The energy is the discrete one of the five/seven point stencil, sum of
    squared edge differences, which equals sum(w g) * cell volume.
    """
    from .hodge import PoissonProblem, solve_dirichlet

    region = region or Ball.unit(g.grid.dim)
    w = solve_dirichlet(PoissonProblem(g, region=region, tolerance=tol, method=method))
    energy = float(np.sum(w.values * g.values) * g.grid.cell_volume)
    return NormReport("Hminus1", math.sqrt(max(energy, 0.0)),
                      {"region": [list(region.center), region.radius], "method": method})
