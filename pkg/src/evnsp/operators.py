"""Second-order finite-difference operators and pointwise tensor algebra.

All operators act on the trailing (nx, ny, nz) axes, so the same routines
serve scalar, vector and tensor fields.  x and y use periodic central
differences; z uses central differences in the interior and one-sided
second-order stencils at the two walls.

Derivative operators annihilate constants exactly and are exact on
polynomials up to degree 2 per direction, wall rows included.
"""

from __future__ import annotations

import numpy as np

from .errors import SingularTensor
from .grid import Grid

# One-sided wall stencils (top wall mirrors with flipped sign for D1).
# Kept as module-level arrays so a broken-stencil test fixture can patch them.
D1_WALL = np.array([-1.5, 2.0, -0.5])
D2_WALL = np.array([2.0, -5.0, 4.0, -1.0])

# default invertibility floor for inv3
DET_FLOOR = 1e-8


def _d_periodic(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Central difference along a periodic axis (slicing, no roll copies)."""
    c = 0.5 / h
    out = np.empty_like(f)
    src, dst = [slice(None)] * f.ndim, [slice(None)] * f.ndim

    def take(sl):
        src[axis] = sl
        return f[tuple(src)]

    dst[axis] = slice(1, -1)
    np.subtract(take(slice(2, None)), take(slice(None, -2)), out=out[tuple(dst)])
    dst[axis] = 0
    np.subtract(take(1), take(-1), out=out[tuple(dst)])
    dst[axis] = -1
    np.subtract(take(0), take(-2), out=out[tuple(dst)])
    out *= c
    return out


def _d2_periodic(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    out = np.empty_like(f)
    src, dst = [slice(None)] * f.ndim, [slice(None)] * f.ndim

    def take(sl):
        src[axis] = sl
        return f[tuple(src)]

    dst[axis] = slice(1, -1)
    out[tuple(dst)] = take(slice(2, None)) + take(slice(None, -2))
    dst[axis] = 0
    out[tuple(dst)] = take(1) + take(-1)
    dst[axis] = -1
    out[tuple(dst)] = take(0) + take(-2)
    out -= 2.0 * f
    out *= 1.0 / h**2
    return out


def d_x(grid: Grid, f: np.ndarray) -> np.ndarray:
    if grid.nx == 1:
        return np.zeros_like(f)
    return _d_periodic(f, f.ndim - 3, grid.hx)


def d_y(grid: Grid, f: np.ndarray) -> np.ndarray:
    if grid.ny == 1:
        return np.zeros_like(f)
    return _d_periodic(f, f.ndim - 2, grid.hy)


def d_z(grid: Grid, f: np.ndarray) -> np.ndarray:
    inv_2h = 0.5 / grid.hz
    out = np.empty_like(f)
    np.subtract(f[..., 2:], f[..., :-2], out=out[..., 1:-1])
    out[..., 1:-1] *= inv_2h
    c = D1_WALL / grid.hz
    out[..., 0] = c[0] * f[..., 0] + c[1] * f[..., 1] + c[2] * f[..., 2]
    out[..., -1] = -(c[0] * f[..., -1] + c[1] * f[..., -2] + c[2] * f[..., -3])
    return out


def d2_x(grid: Grid, f: np.ndarray) -> np.ndarray:
    if grid.nx == 1:
        return np.zeros_like(f)
    return _d2_periodic(f, f.ndim - 3, grid.hx)


def d2_y(grid: Grid, f: np.ndarray) -> np.ndarray:
    if grid.ny == 1:
        return np.zeros_like(f)
    return _d2_periodic(f, f.ndim - 2, grid.hy)


def d2_z(grid: Grid, f: np.ndarray) -> np.ndarray:
    h2 = grid.hz**2
    out = np.empty_like(f)
    out[..., 1:-1] = (f[..., 2:] - 2.0 * f[..., 1:-1] + f[..., :-2]) / h2
    c = D2_WALL
    out[..., 0] = (
        c[0] * f[..., 0] + c[1] * f[..., 1] + c[2] * f[..., 2] + c[3] * f[..., 3]
    ) / h2
    out[..., -1] = (
        c[0] * f[..., -1] + c[1] * f[..., -2] + c[2] * f[..., -3] + c[3] * f[..., -4]
    ) / h2
    return out


def partial(grid: Grid, k: int, f: np.ndarray) -> np.ndarray:
    """d/dx_k along direction k in {0,1,2}."""
    return (d_x, d_y, d_z)[k](grid, f)


def gradient(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Gradient over a new leading axis: out[k] = d_k f."""
    return np.stack([d_x(grid, f), d_y(grid, f), d_z(grid, f)])


def divergence(grid: Grid, v: np.ndarray) -> np.ndarray:
    return d_x(grid, v[0]) + d_y(grid, v[1]) + d_z(grid, v[2])


def vector_gradient(grid: Grid, v: np.ndarray) -> np.ndarray:
    """Jacobian tensor with (i, j) component = d_j v^i."""
    out = np.empty((3, 3) + v.shape[1:], dtype=v.dtype)
    out[:, 0] = d_x(grid, v)
    out[:, 1] = d_y(grid, v)
    out[:, 2] = d_z(grid, v)
    return out


def tensor_divergence(grid: Grid, T: np.ndarray) -> np.ndarray:
    """(div T)^i = d_j T^{ij}, contraction over the second index."""
    return d_x(grid, T[:, 0]) + d_y(grid, T[:, 1]) + d_z(grid, T[:, 2])


def laplacian(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Componentwise Laplacian of a field of any rank."""
    return d2_x(grid, f) + d2_y(grid, f) + d2_z(grid, f)


def advect(grid: Grid, u: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Material transport u . grad f, componentwise in f's leading axes."""
    out = u[2] * d_z(grid, f)
    if grid.nx > 1:
        out += u[0] * d_x(grid, f)
    if grid.ny > 1:
        out += u[1] * d_y(grid, f)
    return out


# ---------------------------------------------------------------------------
# pointwise 3x3 algebra


def det3(T: np.ndarray) -> np.ndarray:
    a, b, c = T[0]
    d, e, f = T[1]
    g, h, i = T[2]
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def inv3(T: np.ndarray, det_floor: float = DET_FLOOR) -> np.ndarray:
    det = det3(T)
    bad = np.abs(det) < det_floor
    if np.any(bad):
        node = np.unravel_index(np.argmin(np.abs(det)), det.shape)
        raise SingularTensor(node, det[node])
    a, b, c = T[0]
    d, e, f = T[1]
    g, h, i = T[2]
    out = np.empty_like(T)
    out[0, 0] = e * i - f * h
    out[0, 1] = c * h - b * i
    out[0, 2] = b * f - c * e
    out[1, 0] = f * g - d * i
    out[1, 1] = a * i - c * g
    out[1, 2] = c * d - a * f
    out[2, 0] = d * h - e * g
    out[2, 1] = b * g - a * h
    out[2, 2] = a * e - b * d
    out /= det
    return out


def transpose3(T: np.ndarray) -> np.ndarray:
    return np.swapaxes(T, 0, 1)


def matmul3(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Pointwise product of two tensor fields."""
    out = np.zeros(np.broadcast_shapes(A.shape, B.shape), dtype=np.float64)
    for i in range(3):
        for j in range(3):
            for k in range(3):
                out[i, j] += A[i, k] * B[k, j]
    return out


# ---------------------------------------------------------------------------
# discrete norms


def norm_l2(grid: Grid, f: np.ndarray) -> float:
    """Volume-weighted root-sum-square over all components and nodes
    (trapezoidal weights in z)."""
    w = grid.cell_weights()  # shape (nz,)
    sq = np.sum(f * f, axis=tuple(range(f.ndim - 3)))  # collapse component axes
    return float(np.sqrt(np.sum(np.sum(sq, axis=(0, 1)) * w)))


def norm_linf(grid: Grid, f: np.ndarray) -> float:
    return float(np.max(np.abs(f))) if f.size else 0.0


def seminorm_grad_k(grid: Grid, f: np.ndarray, k: int) -> float:
    """L2 norm of the k-th discrete gradient, k in {1, 2}."""
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    g = f
    for _ in range(k):
        g = gradient(grid, g)
    return norm_l2(grid, g)
