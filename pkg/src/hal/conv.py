"""Convolution of grid data with kernels sampled on grid offsets.

A kernel table has odd extent ``2*r_i + 1`` on axis ``i`` and its centre entry is
the zero offset. ``out[x] = sum_y K[x - y] g[y]`` over grid nodes ``y``: data is
taken to vanish outside the box.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy import fft as sfft

from .field import Grid


def offset_mesh(grid: Grid, radius: float | None = None) -> tuple[list[np.ndarray], tuple[int, ...]]:
    """Offset coordinates for a kernel table reaching ``radius`` (default: whole box)."""
    half = []
    for s, h in zip(grid.shape, grid.spacing):
        full = s - 1
        half.append(full if radius is None else min(full, int(math.ceil(radius / h))))
    axes = [np.arange(-r, r + 1) * h for r, h in zip(half, grid.spacing)]
    return np.meshgrid(*axes, indexing="ij"), tuple(half)


def kernel_table(grid: Grid, func: Callable[..., np.ndarray], radius: float | None = None,
                 origin_value: float | None = None) -> np.ndarray:
    """``func(*offsets) * cell_volume``; the zero offset is replaced by ``origin_value``
    (an already-integrated weight) when given."""
    X, half = offset_mesh(grid, radius)
    with np.errstate(divide="ignore", invalid="ignore"):
        K = np.asarray(func(*X), float) * grid.cell_volume
    if origin_value is not None:
        K[half] = origin_value
    if not np.all(np.isfinite(K)):
        raise ValueError("kernel table has non-finite entries")
    return K


def _check(values: np.ndarray, kernel: np.ndarray) -> None:
    if values.ndim != kernel.ndim or any(k % 2 == 0 for k in kernel.shape):
        raise ValueError("kernel must have odd extent on every axis of the data")


def convolve_fft(values: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Linear (zero-padded) convolution through real FFTs, cropped to the data grid."""
    _check(values, kernel)
    full = [v + k - 1 for v, k in zip(values.shape, kernel.shape)]
    fshape = [sfft.next_fast_len(n, real=True) for n in full]
    axes = tuple(range(values.ndim))
    prod = sfft.rfftn(values, fshape, axes=axes) * sfft.rfftn(kernel, fshape, axes=axes)
    out = sfft.irfftn(prod, fshape, axes=axes)
    sl = tuple(slice(k // 2, k // 2 + v) for v, k in zip(values.shape, kernel.shape))
    return out[sl]


def convolve_direct(values: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Shift-and-add over the kernel entries. O(N * K); the oracle for small grids."""
    _check(values, kernel)
    out = np.zeros(values.shape)
    half = [k // 2 for k in kernel.shape]
    for idx in zip(*np.nonzero(kernel)):
        off = [i - c for i, c in zip(idx, half)]
        dst, src = [], []
        for o, n in zip(off, values.shape):
            if abs(o) >= n:
                break
            dst.append(slice(max(o, 0), n + min(o, 0)))
            src.append(slice(max(-o, 0), n - max(o, 0)))
        else:
            out[tuple(dst)] += kernel[idx] * values[tuple(src)]
    return out


DIRECT_LIMIT = 64 ** 2


def convolve(values: np.ndarray, kernel: np.ndarray, method: str = "fft") -> np.ndarray:
    if method == "fft":
        return convolve_fft(values, kernel)
    if method == "direct":
        if values.size > DIRECT_LIMIT and kernel.size > DIRECT_LIMIT:
            raise ValueError("direct convolution is limited to grids of at most 64^2 nodes")
        return convolve_direct(values, kernel)
    raise ValueError(f"unknown convolution method {method!r}")
