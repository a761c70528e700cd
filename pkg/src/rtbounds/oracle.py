"""
Brute-force ground truth for tiny instances.

When every mode has length 2 each unit sphere is a curve parametrized by
one angle, so the functionals can be maximized over an angle grid. The
last free vector is always resolved in closed form, leaving a grid over the
remaining d - 1 modes. Order-2 tensors go through the exact matrix path.
"""

import math

import numpy as np

from rtbounds.kinds import SpectralFunctional
from rtbounds.linalg import top_eig_symmetric
from rtbounds.solvers import check_compatible, solve
from rtbounds.tensor import Tensor, frobenius_norm

F = SpectralFunctional
MAX_GRID_ORDER = 4
# Grid points held in memory at once for order-4 tensors.
_CHUNK_ELEMENTS = 1 << 21


class UnsupportedOracleError(ValueError):
    pass


def _check_supported(t: Tensor):
    dims = t.shape.dims
    if t.order == 2:
        return
    if t.order > MAX_GRID_ORDER or any(n != 2 for n in dims):
        raise UnsupportedOracleError(
            f"Grid oracle supports matrices and 2x...x2 tensors of order "
            f"<= {MAX_GRID_ORDER}, got {t.shape}"
        )


def circle_grid(
    resolution: int, p: float = 2.0, full: bool = False
) -> np.ndarray:
    """
    ``resolution`` points of the unit l^p circle in R^2, covering either the
    upper half (angles in [0, pi)) or the full circle.
    """
    span = 2.0 * math.pi if full else math.pi
    theta = np.arange(resolution) * (span / resolution)
    points = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    if p != 2.0:
        norms = np.sum(np.abs(points) ** p, axis=1) ** (1.0 / p)
        points = points / norms[:, None]
    return points


def _dual_norm(g: np.ndarray, d: int) -> np.ndarray:
    """Norm of the last axis in the dual of l^d."""
    if d == 2:
        return np.linalg.norm(g, axis=-1)
    q = d / (d - 1.0)
    return np.sum(np.abs(g) ** q, axis=-1) ** (1.0 / q)


def _singular_grid(a: np.ndarray, p: float, resolution: int) -> float:
    d = a.ndim
    grid = circle_grid(resolution, p)
    last_norm_order = d if p != 2.0 else 2
    if d == 3:
        g = np.einsum("ijk,ai,bj->abk", a, grid, grid)
        return float(np.max(_dual_norm(g, last_norm_order)))

    first = np.tensordot(grid, a, axes=([1], [0]))
    chunk = max(1, _CHUNK_ELEMENTS // (2 * resolution**2))
    best = -math.inf
    for lo in range(0, resolution, chunk):
        g = np.einsum("ajkl,bj,ck->abcl", first[lo : lo + chunk], grid, grid)
        best = max(best, float(np.max(_dual_norm(g, last_norm_order))))
    return best


def _symmetric_grid(a: np.ndarray, p: float, resolution: int) -> float:
    grid = circle_grid(resolution, p, full=True)
    values = np.tensordot(grid, a, axes=([1], [0]))
    for _ in range(a.ndim - 1):
        # Contract the leading free mode with the same grid point.
        values = np.einsum("aj...,aj->a...", values, grid)
    return float(np.max(values))


def _m_eig_grid(a: np.ndarray, resolution: int) -> float:
    best = -math.inf
    for u in circle_grid(resolution):
        b = np.einsum("ijkl,i,k->jl", a, u, u)
        value, _ = top_eig_symmetric(0.5 * (b + b.T))
        best = max(best, value)
    return best


def _c_eig_grid(a: np.ndarray, resolution: int) -> float:
    grid = circle_grid(resolution)
    w = np.einsum("ijk,aj,ak->ai", a, grid, grid)
    return float(np.max(np.linalg.norm(w, axis=1)))


def grid_oracle(
    t: Tensor, functional: SpectralFunctional, resolution: int = 720
) -> float:
    """
    Maximize ``functional`` over an angle grid with ``resolution`` points
    per circle.

    The result is within ``grid_tolerance(t, resolution)`` below the true
    maximum.

    Raises
    ------
    UnsupportedOracleError
        The tensor is neither a matrix nor an all-2 tensor of order <= 4.
    """
    _check_supported(t)
    check_compatible(t, functional)
    if t.order == 2:
        return solve(t, functional).value
    if resolution < 1:
        raise UnsupportedOracleError("Resolution must be positive")

    a = t.data
    d = t.order
    if functional is F.l2_singular:
        return _singular_grid(a, 2.0, resolution)
    if functional is F.ld_singular:
        return _singular_grid(a, float(d), resolution)
    if functional is F.z_eig:
        return _symmetric_grid(a, 2.0, resolution)
    if functional is F.h_eig:
        return _symmetric_grid(a, float(d), resolution)
    if functional is F.m_eig:
        return _m_eig_grid(a, resolution)
    return _c_eig_grid(a, resolution)


def grid_tolerance(t: Tensor, resolution: int = 720) -> float:
    """
    Distance the grid maximum may fall below the true maximum,
    d * ||A||_F * pi / K, and zero on the exact matrix path.
    """
    if t.order == 2:
        return 0.0
    return t.order * frobenius_norm(t) * math.pi / resolution
