"""Uniform-grid fields, quadrature and finite-difference exterior calculus.

Arrays use ``indexing='ij'``: axis ``i`` of a value array is coordinate ``x_{i+1}``.
Multi-component fields keep the component index first, so a 1-form on a
2D grid has shape ``(2, N0, N1)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MIN_NODES = 8
DEFAULT_HALF_WIDTH = 1.25


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere S^{n-1} in R^n."""
    return n * unit_ball_volume(n)


@dataclass(frozen=True)
class Grid:
    shape: tuple[int, ...]
    spacing: tuple[float, ...]
    origin: tuple[float, ...]

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        spacing = tuple(float(h) for h in self.spacing)
        origin = tuple(float(o) for o in self.origin)
        if not (len(shape) == len(spacing) == len(origin)):
            raise ValueError("shape, spacing and origin must have equal length")
        if len(shape) not in (1, 2, 3):
            raise ValueError(f"unsupported dimension {len(shape)}")
        if min(shape) < MIN_NODES:
            raise ValueError(f"every axis needs at least {MIN_NODES} nodes, got {shape}")
        if min(spacing) <= 0 or not all(map(math.isfinite, spacing)):
            raise ValueError(f"spacing must be positive, got {spacing}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)

    @classmethod
    def cube(cls, n: int, cells: int, half_width: float = DEFAULT_HALF_WIDTH,
             center: Sequence[float] | None = None) -> "Grid":
        """``cells`` intervals per axis on ``center + [-half_width, half_width]^n``.

        With the default box an even ``cells`` puts a node on the origin and
        doubling ``cells`` nests the grids.
        """
        h = 2.0 * half_width / cells
        c = np.zeros(n) if center is None else np.asarray(center, float)
        return cls((cells + 1,) * n, (h,) * n, tuple(c - half_width))

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def h(self) -> float:
        """Representative step (geometric mean of the per-axis spacings)."""
        return float(np.prod(self.spacing) ** (1.0 / self.dim))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def upper(self) -> tuple[float, ...]:
        return tuple(o + (s - 1) * h for o, s, h in zip(self.origin, self.shape, self.spacing))

    @property
    def covers_unit_ball(self) -> bool:
        return all(o <= -1.0 and u >= 1.0 for o, u in zip(self.origin, self.upper))

    def axes(self) -> list[np.ndarray]:
        # origin + i*h rather than linspace so nested grids share coordinates bit-for-bit
        return [o + np.arange(s) * h for o, s, h in zip(self.origin, self.shape, self.spacing)]

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes(), indexing="ij")

    def points(self) -> np.ndarray:
        """Node coordinates, shape ``(*shape, dim)``."""
        return np.stack(self.mesh(), axis=-1)

    def radius(self, center: Sequence[float] | None = None) -> np.ndarray:
        X = self.mesh()
        c = np.zeros(self.dim) if center is None else np.asarray(center, float)
        return np.sqrt(sum((x - ci) ** 2 for x, ci in zip(X, c)))

    def contains_box(self, lo: Sequence[float], hi: Sequence[float], slack: float = 1e-12) -> bool:
        return all(a >= o - slack and b <= u + slack
                   for a, b, o, u in zip(lo, hi, self.origin, self.upper))

    def index_of(self, point: Sequence[float]) -> tuple[int, ...]:
        """Nearest node index (clipped to the grid)."""
        idx = []
        for p, o, h, s in zip(point, self.origin, self.spacing, self.shape):
            idx.append(int(min(max(round((p - o) / h), 0), s - 1)))
        return tuple(idx)

    def coarsen(self) -> "Grid":
        """Every other node; requires odd node counts."""
        if any(s % 2 == 0 for s in self.shape):
            raise ValueError("coarsening needs an odd node count on every axis")
        return Grid(tuple((s + 1) // 2 for s in self.shape),
                    tuple(2 * h for h in self.spacing), self.origin)

    def to_json(self) -> dict:
        return {"dim": self.dim, "shape": list(self.shape),
                "spacing": list(self.spacing), "origin": list(self.origin)}


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    @classmethod
    def unit(cls, n: int) -> "Ball":
        return cls((0.0,) * n, 1.0)

    @classmethod
    def parse(cls, text: str) -> "Ball":
        """Parse ``ball:x,y[,z]:r``."""
        kind, center, radius = text.split(":")
        if kind != "ball":
            raise ValueError(f"unknown region kind {kind!r}")
        return cls(tuple(float(c) for c in center.split(",")), float(radius))

    def contains(self, point: Sequence[float]) -> bool:
        return math.dist(point, self.center) <= self.radius


def _check_values(values: np.ndarray, shape: tuple[int, ...], what: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != shape:
        raise ValueError(f"{what}: expected shape {shape}, got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{what}: non-finite values")
    return values


@dataclass(frozen=True)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.values, self.grid.shape, "ScalarField"))

    @classmethod
    def from_function(cls, grid: Grid, func) -> "ScalarField":
        return cls(grid, np.broadcast_to(func(*grid.mesh()), grid.shape).astype(float))

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    def __add__(self, other: "ScalarField") -> "ScalarField":
        _same_grid(self, other)
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        _same_grid(self, other)
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "ScalarField":
        return ScalarField(self.grid, self.values * c)

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.grid, -self.values)

    def restrict(self) -> "ScalarField":
        """Sample on the coarsened grid (every other node)."""
        sl = tuple(slice(None, None, 2) for _ in range(self.grid.dim))
        return ScalarField(self.grid.coarsen(), self.values[sl])


@dataclass(frozen=True)
class VectorField:
    """An R^m-valued map; ``components`` has shape ``(m, *grid.shape)``."""
    grid: Grid
    components: np.ndarray

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=float)
        if comps.ndim != self.grid.dim + 1:
            raise ValueError("VectorField components must have shape (m, *grid.shape)")
        _check_values(comps, (comps.shape[0],) + self.grid.shape, "VectorField")
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_scalars(cls, fields: Sequence[ScalarField]) -> "VectorField":
        grid = fields[0].grid
        for f in fields[1:]:
            _same_grid(fields[0], f)
        return cls(grid, np.stack([f.values for f in fields]))

    @property
    def m(self) -> int:
        return self.components.shape[0]

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.grid, self.components[i])

    def norm(self) -> ScalarField:
        return ScalarField(self.grid, np.sqrt(np.sum(self.components ** 2, axis=0)))


def multi_indices(n: int, k: int) -> list[tuple[int, ...]]:
    """Increasing multi-indices of length k from range(n), in lexicographic order."""
    return list(itertools.combinations(range(n), k))


def _perm_sign(seq: Sequence[int]) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@dataclass(frozen=True)
class FormField:
    """A differential k-form; ``components[c]`` multiplies dx^I for I = multi_indices(n, k)[c]."""
    grid: Grid
    degree: int
    components: np.ndarray

    def __post_init__(self):
        n = self.grid.dim
        if not 0 <= self.degree <= n:
            raise ValueError(f"degree {self.degree} out of range for n={n}")
        count = math.comb(n, self.degree)
        comps = _check_values(self.components, (count,) + self.grid.shape, "FormField")
        object.__setattr__(self, "components", comps)

    @property
    def indices(self) -> list[tuple[int, ...]]:
        return multi_indices(self.grid.dim, self.degree)

    def component(self, index: Sequence[int] | int) -> ScalarField:
        if isinstance(index, (int, np.integer)):
            return ScalarField(self.grid, self.components[index])
        return ScalarField(self.grid, self.components[self.indices.index(tuple(index))])

    @classmethod
    def zeros(cls, grid: Grid, degree: int) -> "FormField":
        return cls(grid, degree, np.zeros((math.comb(grid.dim, degree),) + grid.shape))

    @classmethod
    def from_scalar(cls, f: ScalarField, degree: int = 0) -> "FormField":
        if degree not in (0, f.grid.dim):
            raise ValueError("a scalar is a 0-form or a top-degree form")
        return cls(f.grid, degree, f.values[None])

    def pointwise_norm2(self) -> np.ndarray:
        return np.sum(self.components ** 2, axis=0)

    def __add__(self, other: "FormField") -> "FormField":
        _same_grid(self, other)
        if self.degree != other.degree:
            raise ValueError("degree mismatch")
        return FormField(self.grid, self.degree, self.components + other.components)

    def __sub__(self, other: "FormField") -> "FormField":
        return self + (-1.0) * other

    def __mul__(self, c: float) -> "FormField":
        return FormField(self.grid, self.degree, self.components * c)

    __rmul__ = __mul__


def _same_grid(a, b) -> None:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


# -- finite differences -------------------------------------------------------

def partial(values: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    """Central differences inside, second-order one-sided on the boundary layer."""
    return np.gradient(values, grid.spacing[axis], axis=axis, edge_order=2)


def gradient(f: ScalarField) -> FormField:
    g = f.grid
    return FormField(g, 1, np.stack([partial(f.values, g, i) for i in range(g.dim)]))


def exterior_derivative(w: FormField) -> FormField:
    g, k = w.grid, w.degree
    n = g.dim
    if k >= n:
        raise ValueError(f"d of a {k}-form on R^{n} is not defined here")
    src = {I: c for I, c in zip(w.indices, w.components)}
    out = []
    for J in multi_indices(n, k + 1):
        acc = np.zeros(g.shape)
        for pos, i in enumerate(J):
            I = J[:pos] + J[pos + 1:]
            acc += (-1) ** pos * partial(src[I], g, i)
        out.append(acc)
    return FormField(g, k + 1, np.stack(out))


def codifferential(w: FormField) -> FormField:
    """Formal L^2 adjoint of d: (d*w)_I = -sum_i sign * d_i w_{I+i}.

    Agrees with ``(-1)**(n*(k+1)+1) * star(d(star(w)))``.
    """
    g, k = w.grid, w.degree
    n = g.dim
    if k < 1:
        raise ValueError("codifferential of a 0-form is not defined")
    src = {I: c for I, c in zip(w.indices, w.components)}
    out = []
    for I in multi_indices(n, k - 1):
        acc = np.zeros(g.shape)
        for i in range(n):
            if i in I:
                continue
            J = tuple(sorted(I + (i,)))
            pos = J.index(i)
            acc -= (-1) ** pos * partial(src[J], g, i)
        out.append(acc)
    return FormField(g, k - 1, np.stack(out))


def hodge_star(w: FormField) -> FormField:
    g, k = w.grid, w.degree
    n = g.dim
    src = {I: c for I, c in zip(w.indices, w.components)}
    out = []
    for Ic in multi_indices(n, n - k):
        I = tuple(i for i in range(n) if i not in Ic)
        out.append(_perm_sign(I + Ic) * src[I])
    return FormField(g, n - k, np.stack(out))


def laplacian(f: ScalarField, stencil: str = "wide") -> ScalarField:
    """Laplacian (sum of second derivatives).

    ``wide`` is div(grad) with the central-difference gradient, so that it is
    exactly ``-codifferential(gradient(f))``; ``compact`` is the 2n+1 point stencil
    (boundary layer left at zero).
    """
    g = f.grid
    if stencil == "wide":
        return ScalarField(g, -codifferential(gradient(f)).components[0])
    if stencil != "compact":
        raise ValueError(f"unknown stencil {stencil!r}")
    v = f.values
    out = np.zeros(g.shape)
    inner = tuple(slice(1, -1) for _ in range(g.dim))
    for ax, h in enumerate(g.spacing):
        fwd = list(inner)
        bwd = list(inner)
        fwd[ax] = slice(2, None)
        bwd[ax] = slice(None, -2)
        out[inner] += (v[tuple(fwd)] - 2 * v[inner] + v[tuple(bwd)]) / h ** 2
    return ScalarField(g, out)


def interior_mask(grid: Grid, layers: int = 1) -> np.ndarray:
    m = np.zeros(grid.shape, bool)
    m[tuple(slice(layers, s - layers) for s in grid.shape)] = True
    return m


# -- quadrature ---------------------------------------------------------------

def ball_weights(grid: Grid, ball: Ball) -> np.ndarray:
    """Per-node fraction in [0, 1] of the node's cell that lies in the ball.

    First-order distance-band rule: a node at distance rho gets
    clip(1/2 + (R - rho)/h, 0, 1). This boundary band is the dominant error term.
    """
    rho = grid.radius(ball.center)
    return np.clip(0.5 + (ball.radius - rho) / grid.h, 0.0, 1.0)


def box_weights(grid: Grid) -> np.ndarray:
    """Trapezoid weights (fraction of a cell) over the whole box."""
    w = np.ones(grid.shape)
    for ax in range(grid.dim):
        sl = [slice(None)] * grid.dim
        sl[ax] = 0
        w[tuple(sl)] *= 0.5
        sl[ax] = -1
        w[tuple(sl)] *= 0.5
    return w


def region_weights(grid: Grid, region: Ball | None) -> np.ndarray:
    return box_weights(grid) if region is None else ball_weights(grid, region)


def integrate(f: ScalarField | np.ndarray, region: Ball | None = None, grid: Grid | None = None) -> float:
    """Integral over a ball (partial-cell weights) or the whole box (trapezoid)."""
    if isinstance(f, ScalarField):
        grid, values = f.grid, f.values
    else:
        values = np.asarray(f, float)
        if grid is None:
            raise ValueError("a raw array needs its grid")
    w = region_weights(grid, region)
    return float(np.sum(w * values) * grid.cell_volume)


# -- rescaling ----------------------------------------------------------------

RESCALE_POWER = {"u": 0, "omega": 1, "f": 2}


def interpolate(values: np.ndarray, grid: Grid, points: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of node values at ``points`` (shape (..., dim))."""
    from scipy.interpolate import RegularGridInterpolator

    interp = RegularGridInterpolator(grid.axes(), values, method="linear", bounds_error=True)
    return interp(points)


def restrict_rescale(u, x0: Sequence[float], R: float, kind: str = "u",
                     target: Grid | None = None):
    """Pull a field on B_R(x0) back to the unit ball: ``R**p * u(x0 + R x)``.

    ``kind`` selects the power p (0 for u, 1 for a connection form, 2 for a
    source term). Without ``target`` the new grid consists of the source nodes
    inside the cube around B_R(x0) plus one node layer, mapped by
    x -> (x - x0)/R, so values are copied exactly.
    """
    if kind not in RESCALE_POWER:
        raise ValueError(f"kind must be one of {sorted(RESCALE_POWER)}")
    if not 0 < R <= 1:
        raise ValueError("R must lie in (0, 1]")
    g = u.grid
    x0 = np.asarray(x0, float)
    if not g.contains_box(x0 - R, x0 + R):
        raise ValueError("ball exits domain: B_R(x0) is not inside the grid box")
    if target is None:
        lo, counts, origin = [], [], []
        for ax in range(g.dim):
            h, o = g.spacing[ax], g.origin[ax]
            # one extra node layer so partial-cell ball weights near the cube face survive
            i0 = max(int(math.ceil((x0[ax] - R - o) / h - 1e-9)) - 1, 0)
            i1 = min(int(math.floor((x0[ax] + R - o) / h + 1e-9)) + 1, g.shape[ax] - 1)
            lo.append(i0)
            counts.append(i1 - i0 + 1)
            origin.append((o + i0 * h - x0[ax]) / R)
        target = Grid(tuple(counts), tuple(h / R for h in g.spacing), tuple(origin))
        sl = tuple(slice(a, a + c) for a, c in zip(lo, counts))
        take = lambda arr: arr[sl]  # noqa: E731
    else:
        pts = x0 + R * target.points()
        take = lambda arr: interpolate(arr, g, pts)  # noqa: E731
    scale = R ** RESCALE_POWER[kind]
    if isinstance(u, ScalarField):
        return ScalarField(target, scale * take(u.values))
    if isinstance(u, VectorField):
        return VectorField(target, np.stack([scale * take(c) for c in u.components]))
    if isinstance(u, FormField):
        return FormField(target, u.degree, np.stack([scale * take(c) for c in u.components]))
    raise TypeError(f"cannot rescale {type(u).__name__}")
