"""Riesz-type potentials A_alpha, the Newtonian potential and its gradient, the
dyadic kernel split behind the pointwise potential estimate, and the engines
that check that estimate and the Morrey boundedness of A_alpha.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .conv import convolve, kernel_table
from .field import FormField, Grid, ScalarField, sphere_area, unit_ball_volume
from .maximal import Mollifier, fractional_maximal, smooth_maximal
from .records import InequalityRecord, ParameterError

SUPPORT_TOL = 1e-12
INNER_EDGE, OUTER_EDGE = 0.6, 1.5


# -- kernels ------------------------------------------------------------------

@dataclass(frozen=True)
class RieszKernel:
    """a(x) = angular(x/|x|) |x|^(alpha - n), homogeneous of degree alpha - n.

    ``angular`` takes the n components of a unit vector. ``angular_mean`` is its
    average over the sphere (used by the analytic near-cell term) and
    ``angular_c1`` a bound on its C^1 norm on the sphere.
    """
    n: int
    alpha: float
    angular: Callable[..., np.ndarray] | None = None
    angular_mean: float = 1.0
    angular_c1: float = 1.0
    name: str = "riesz"
    scale: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha < self.n:
            raise ParameterError(f"alpha must lie in (0, n) = (0, {self.n}), got {self.alpha}")

    @classmethod
    def newton_gradient(cls, n: int, i: int) -> "RieszKernel":
        """Component i of grad Gamma: -x_i / (|S^{n-1}| |x|^n), an A_1 kernel."""
        return cls(n, 1.0, lambda *w: w[i], 0.0, 1.0, f"dnewton{i}", -1.0 / sphere_area(n))

    def __call__(self, *X):
        r = np.sqrt(sum(x * x for x in X))
        with np.errstate(divide="ignore", invalid="ignore"):
            ang = 1.0 if self.angular is None else self.angular(*(x / r for x in X))
            return self.scale * ang * r ** (self.alpha - self.n)

    def near_cell(self, grid: Grid) -> float:
        """Integral of the kernel over the disk/ball of the cell's volume around 0."""
        rho0 = (grid.cell_volume / unit_ball_volume(self.n)) ** (1 / self.n)
        return self.scale * sphere_area(self.n) * self.angular_mean * rho0 ** self.alpha / self.alpha

    def table(self, grid: Grid) -> np.ndarray:
        return kernel_table(grid, self, None, self.near_cell(grid))


def newton_kernel(n: int) -> Callable[..., np.ndarray]:
    if n == 2:
        return lambda *X: -np.log(np.sqrt(sum(x * x for x in X))) / (2 * math.pi)
    return lambda *X: np.sqrt(sum(x * x for x in X)) ** (2 - n) / ((n - 2) * sphere_area(n))


def newton_near_cell(grid: Grid) -> float:
    n = grid.dim
    rho0 = (grid.cell_volume / unit_ball_volume(n)) ** (1 / n)
    if n == 2:
        return rho0 ** 2 / 4 - rho0 ** 2 / 2 * math.log(rho0)
    return sphere_area(n) * rho0 ** 2 / (2 * (n - 2) * sphere_area(n))


def check_support(g: ScalarField, tol: float = SUPPORT_TOL) -> None:
    a = np.abs(g.values)
    top = a.max()
    if top == 0:
        return
    edge = a.copy()
    edge[tuple(slice(1, -1) for _ in range(g.grid.dim))] = 0
    if edge.max() > tol * top:
        raise ValueError("g must vanish on the boundary layer of the grid box (support violation)")


# -- dyadic partition of unity -------------------------------------------------

def smooth_step(t: np.ndarray) -> np.ndarray:
    """C^infinity, 1 for t <= 0.6, 0 for t >= 1.5, decreasing in between."""
    s = np.clip((np.asarray(t, float) - INNER_EDGE) / (OUTER_EDGE - INNER_EDGE), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f = lambda u: np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)  # noqa: E731
        a, b = f(1 - s), f(s)
    return a / (a + b)


def theta(t: np.ndarray) -> np.ndarray:
    """Annular bump on 0.6 <= t <= 3, positive on [1, 2]; sum_j theta(2^-j t) = 1."""
    t = np.asarray(t, float)
    return smooth_step(t / 2) - smooth_step(t)


def partition_residual(t: np.ndarray, delta: float = 1.0, j_range=(-60, 60)) -> float:
    """max |sum_j theta(t / (delta 2^j)) - 1| over samples t > 0."""
    t = np.asarray(t, float)
    total = sum(theta(t / (delta * 2.0 ** j)) for j in range(j_range[0], j_range[1] + 1))
    return float(np.max(np.abs(total - 1)))


@dataclass(frozen=True)
class DyadicKernelSplit:
    """Pieces eta^j(x) = (delta 2^j)^-1 theta(x / (delta 2^j)) a(x) for j in a window."""
    kernel: RieszKernel
    delta: float
    j_range: tuple[int, int]

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.j_range[0] > self.j_range[1]:
            raise ValueError("empty j window")

    @classmethod
    def covering(cls, kernel: RieszKernel, grid: Grid, delta: float = 1.0) -> "DyadicKernelSplit":
        """Window whose pieces reach every nonzero offset of the grid and no further."""
        diam = math.sqrt(sum(((s - 1) * h) ** 2 for s, h in zip(grid.shape, grid.spacing)))
        hmin = min(grid.spacing)
        j_lo = math.floor(math.log2(hmin / (3 * delta))) + 1
        j_hi = math.ceil(math.log2(diam / (INNER_EDGE * delta)))
        return cls(kernel, delta, (j_lo, j_hi))

    def support(self, j: int) -> tuple[float, float]:
        s = self.delta * 2.0 ** j
        return INNER_EDGE * s, 3 * s

    def piece(self, j: int, *X) -> np.ndarray:
        s = self.delta * 2.0 ** j
        r = np.sqrt(sum(x * x for x in X))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = theta(r / s) * self.kernel(*X) / s
        return np.where(r > 0, out, 0.0)

    def piece_table(self, grid: Grid, j: int) -> np.ndarray:
        return kernel_table(grid, lambda *X: self.piece(j, *X), radius=self.support(j)[1], origin_value=0.0)

    def inner_tail_bound(self, g: ScalarField) -> float:
        """Bound on the discarded pieces below the window (they only see the self cell)."""
        reach = 3 * self.delta * 2.0 ** (self.j_range[0] - 1)
        return (float(np.max(np.abs(g.values))) * abs(self.kernel.scale) * sphere_area(self.kernel.n)
                * self.kernel.angular_c1 * reach ** self.kernel.alpha / self.kernel.alpha)


def riesz_apply(kernel: RieszKernel, g: ScalarField, mode: str = "direct", delta: float = 1.0,
                j_range: tuple[int, int] | None = None, method: str = "fft", return_info: bool = False):
    """A_alpha[g] = a * g.

    ``direct``: one kernel table, midpoint rule off the origin and the analytic
    equal-volume polar integral on the evaluation cell. ``dyadic``: the sum over
    the window of (delta 2^j) (eta^j * g), the same self-cell term standing in
    for the pieces below the window.
    """
    if g.grid.dim != kernel.n:
        raise ValueError("kernel and field dimensions differ")
    check_support(g)
    info: dict = {"mode": mode}
    if mode == "direct":
        out = convolve(g.values, kernel.table(g.grid), method)
    elif mode == "dyadic":
        split = DyadicKernelSplit(kernel, delta, j_range) if j_range else DyadicKernelSplit.covering(kernel, g.grid, delta)
        out = kernel.near_cell(g.grid) * g.values
        for j in range(split.j_range[0], split.j_range[1] + 1):
            out = out + delta * 2.0 ** j * convolve(g.values, split.piece_table(g.grid, j), method)
        full = DyadicKernelSplit.covering(kernel, g.grid, delta)
        info.update(j_range=split.j_range, inner_tail_bound=split.inner_tail_bound(g),
                    window_complete=split.j_range[0] <= full.j_range[0] and split.j_range[1] >= full.j_range[1])
    else:
        raise ValueError(f"unknown mode {mode!r}")
    res = ScalarField(g.grid, out)
    return (res, info) if return_info else res


def newtonian(g: ScalarField, method: str = "fft") -> ScalarField:
    """N[g] = Gamma * g; Gamma = -(1/2pi) log|x| in 2D, |x|^(2-n)/((n-2)|S^{n-1}|) otherwise."""
    check_support(g)
    table = kernel_table(g.grid, newton_kernel(g.grid.dim), None, newton_near_cell(g.grid))
    return ScalarField(g.grid, convolve(g.values, table, method))


def grad_newtonian(g: ScalarField, method: str = "fft") -> FormField:
    check_support(g)
    n = g.grid.dim
    comps = [convolve(g.values, RieszKernel.newton_gradient(n, i).table(g.grid), method) for i in range(n)]
    return FormField(g.grid, 1, np.stack(comps))


# -- the mollifier of the inner estimate ------------------------------------------

def psi_mollifier(kernel: RieszKernel, scales) -> tuple[Mollifier, float]:
    """psi(x) = C theta(4x) a(x), with C chosen so that |grad psi| <= 1. Returns (psi, C)."""
    n = kernel.n

    def raw(*X):
        t = theta(4 * np.sqrt(sum(x * x for x in X)))
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(t > 0, t * kernel(*X), 0.0)  # theta vanishes at the kernel pole
    probe = Mollifier(raw, (1.0,), n, "psi")
    C = 1.0 / probe.lipschitz
    return Mollifier(lambda *X: C * raw(*X), tuple(scales), n, "psi"), C


# -- verification engines --------------------------------------------------------

def adams_constant(n: int, alpha: float, beta: float, p: float) -> float:
    """max{1/(1 - 2^-alpha), 1/(1 - 2^-((n-beta)/p - alpha))}: the two geometric series of the split."""
    return max(1 / (1 - 2.0 ** -alpha), 1 / (1 - 2.0 ** -((n - beta) / p - alpha)))


def check_adams_params(n: int, alpha: float, beta: float, p: float) -> None:
    if not 0 <= beta < n:
        raise ParameterError(f"0 <= beta < n violated (beta = {beta}, n = {n})")
    if not alpha * p > 0:
        raise ParameterError(f"0 < alpha p violated (alpha p = {alpha * p})")
    if not alpha * p < n - beta:
        raise ParameterError(f"alpha p < n - beta violated ({alpha * p} >= {n - beta})")
    if p < 1:
        raise ParameterError("p >= 1 violated")


@dataclass
class AdamsResult:
    lhs: np.ndarray
    m_beta: np.ndarray
    g_star: np.ndarray
    rhs: np.ndarray
    ratio: np.ndarray
    mask: np.ndarray
    params: dict
    records: list = field(default_factory=list)

    @property
    def max_ratio(self) -> float:
        r = self.ratio[self.mask]
        return float(r.max()) if r.size else 0.0

    @property
    def fitted_c(self) -> float:
        p = self.params
        return self.max_ratio / adams_constant(p["n"], p["alpha"], p["beta"], p["p"])


def verify_adams_pointwise(g: ScalarField, p: float, beta: float, alpha: float,
                           kernel: RieszKernel | None = None, moll: Mollifier | None = None,
                           region_radius: float = 1.0, fixture: str = "field") -> AdamsResult:
    """Per-node |A_alpha g| against M_beta[|g|^p]^(alpha/(n-beta)) g_*^((n-beta-alpha p)/(n-beta))."""
    n = g.grid.dim
    check_adams_params(n, alpha, beta, p)
    kernel = kernel or RieszKernel(n, alpha)
    if abs(kernel.alpha - alpha) > 1e-15:
        raise ValueError("kernel order differs from alpha")
    moll = moll or Mollifier.default(n)
    lhs = np.abs(riesz_apply(kernel, g).values)
    mb = fractional_maximal(g, beta, p).values
    gs = smooth_maximal(g, moll).values
    e1, e2 = alpha / (n - beta), (n - beta - alpha * p) / (n - beta)
    rhs = mb ** e1 * gs ** e2
    mask = (g.grid.radius() <= region_radius) & (lhs > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mask, lhs / np.where(rhs > 0, rhs, np.nan), 0.0)
    if np.any(mask & ~np.isfinite(ratio)):
        raise FloatingPointError("non-finite ratio: right-hand side vanishes where A_alpha g does not")
    params = {"n": n, "alpha": alpha, "beta": beta, "p": p, "mollifier": moll.name,
              "constant_formula": adams_constant(n, alpha, beta, p)}
    res = AdamsResult(lhs, mb, gs, rhs, ratio, mask, params)
    if mask.any():
        idx = np.unravel_index(int(np.argmax(np.where(mask, ratio, -1))), ratio.shape)
        res.records.append(InequalityRecord("adams-pointwise", fixture, dict(params),
                                            float(lhs[idx]), float(rhs[idx]), g.grid.shape[0] - 1))
    return res


@dataclass
class SplitCheck:
    delta: np.ndarray
    inner: np.ndarray
    outer: np.ndarray
    bound_terms: np.ndarray
    empirical_c: float
    nodes: list


def optimal_delta_check(g: ScalarField, alpha: float, beta: float = 0.0,
                        kernel: RieszKernel | None = None, moll: Mollifier | None = None,
                        nodes=None, stride: int = 8, region_radius: float = 1.0) -> SplitCheck:
    """At each sampled node, split A_alpha g at delta = (M_beta g / g_*)^(1/(n-beta)) into
    the inner (j <= 0) and outer (j > 0) sums and compare |I_in| + |I_out| with
    delta^alpha g_* + delta^(alpha-(n-beta)) M_beta g.

    The inner sum has the closed form chi(x / (2 delta)) a(x) (telescoping), so
    each node costs one weighted sum over the grid.
    """
    grid = g.grid
    n = grid.dim
    check_adams_params(n, alpha, beta, 1.0)
    kernel = kernel or RieszKernel(n, alpha)
    moll = moll or Mollifier.default(n)
    check_support(g)
    mb = fractional_maximal(g, beta, 1.0).values
    gs = smooth_maximal(g, moll).values
    if nodes is None:
        sub = np.zeros(grid.shape, bool)
        sub[tuple(slice(0, None, stride) for _ in range(n))] = True
        nodes = list(zip(*np.nonzero(sub & (grid.radius() <= region_radius) & (gs > 0))))
    X = grid.mesh()
    near = kernel.near_cell(grid)
    deltas, inner, outer, terms = [], [], [], []
    for idx in nodes:
        x = [Xi[idx] for Xi in X]
        d = (mb[idx] / gs[idx]) ** (1 / (n - beta))
        Y = [xi - yi for xi, yi in zip(x, X)]
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.where(sum(y * y for y in Y) > 0, kernel(*Y), 0.0)
        r = np.sqrt(sum(y * y for y in Y))
        chi = smooth_step(r / (2 * d))
        w = g.values * grid.cell_volume
        i_in = float(np.sum(chi * a * w)) + near * g.values[idx]
        i_out = float(np.sum((1 - chi) * a * w))
        deltas.append(d)
        inner.append(i_in)
        outer.append(i_out)
        terms.append(d ** alpha * gs[idx] + d ** (alpha - (n - beta)) * mb[idx])
    inner, outer, terms = map(np.array, (inner, outer, terms))
    c = float(np.max((np.abs(inner) + np.abs(outer)) / terms)) if len(terms) else 0.0
    return SplitCheck(np.array(deltas), inner, outer, terms, c, list(nodes))


def maximal_q_reduction(g: ScalarField, beta: float, q: float) -> tuple[np.ndarray, np.ndarray, float]:
    """(M_betahat[g], M_beta[|g|^q]^(1/q), C) with n - betahat = (n - beta)/q.

    C = max_r (V_r / r^n)^(1 - 1/q) from the discrete ball volumes V_r, so
    lhs <= C rhs holds by the discrete Hoelder inequality (C -> omega_n^(1-1/q)).
    """
    from .maximal import ball_integrals, default_radii

    n = g.grid.dim
    bhat = n - (n - beta) / q
    radii = default_radii(g.grid)
    lhs = fractional_maximal(g, bhat, 1.0, radii).values
    rhs = fractional_maximal(g, beta, q, radii).values ** (1 / q)
    ones = np.ones(g.grid.shape)
    c = 0.0
    for r in radii:
        vol = float(np.max(ball_integrals(ones, g.grid, r)))
        c = max(c, (vol / r ** n) ** (1 - 1 / q))
    return lhs, rhs, max(c, unit_ball_volume(n) ** (1 - 1 / q))


def target_exponent(n: int, alpha: float, beta: float, p: float) -> float:
    """p~ with 1/p~ = 1/p - alpha/(n - beta)."""
    return 1 / (1 / p - alpha / (n - beta))


def verify_morrey_boundedness(g: ScalarField, p: float, beta: float, alpha: float,
                              weak: bool | None = None, kernel: RieszKernel | None = None,
                              fixture: str = "field", radii=None) -> InequalityRecord:
    """Ratio of ||A_alpha g|| in M^{p~,beta} (weak M^{(p~,inf),beta} when p = 1) to ||g||_{M^{p,beta}}."""
    from .norms import MorreyParams, morrey_norm, weak_morrey_norm

    n = g.grid.dim
    params = {"n": n, "alpha": alpha, "beta": beta, "p": p}
    try:
        check_adams_params(n, alpha, beta, p)
    except ParameterError as exc:
        return InequalityRecord.rejection("adams-morrey", fixture, params, str(exc), g.grid.shape[0] - 1)
    weak = (p == 1) if weak is None else weak
    pt = target_exponent(n, alpha, beta, p)
    params.update(p_target=pt, weak=weak)
    kernel = kernel or RieszKernel(n, alpha)
    ag = riesz_apply(kernel, g)
    radii = tuple(radii) if radii is not None else MorreyParams.dyadic(6)
    src = morrey_norm(g, MorreyParams(p, beta, radii)).value
    if weak:
        tgt = weak_morrey_norm(ag, pt, beta, MorreyParams(pt, beta, radii)).value
    else:
        tgt = morrey_norm(ag, MorreyParams(pt, beta, radii)).value
    return InequalityRecord("adams-morrey-weak" if weak else "adams-morrey", fixture, params,
                            tgt, src, g.grid.shape[0] - 1)
