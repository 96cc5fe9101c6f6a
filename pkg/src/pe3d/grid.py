"""Discretized box domain, boundary classification, and discrete operators.

The domain is the box [0, L1] x [0, L2] x [-h, 0] on a collocated,
node-centered grid with (n1+1) x (n2+1) x (nz+1) nodes.  Array axes are
(x, y, z); z index 0 is the bottom (z = -h), index nz the top (z = 0).

Boundary conditions baked into the stencils:
  * v = 0 on the bottom and side faces (Dirichlet, odd-reflection ghosts),
  * dv/dz = 0 on the top face (Neumann, even-reflection ghosts).
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass

import numpy as np

from .errors import InputError

#: BC residual tolerance after apply_bc (rounding only; BCs are assigned).
BC_TOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Box domain discretization: extents, cell counts, derived spacings."""

    L1: float = 1.0
    L2: float = 1.0
    h: float = 1.0
    n1: int = 24
    n2: int = 24
    nz: int = 24

    def __post_init__(self):
        if not (self.L1 > 0 and self.L2 > 0 and self.h > 0):
            raise InputError("grid extents L1, L2, h must be positive")
        if min(self.n1, self.n2, self.nz) < 4:
            raise InputError("cell counts n1, n2, nz must be >= 4")

    @property
    def d1(self) -> float:
        return self.L1 / self.n1

    @property
    def d2(self) -> float:
        return self.L2 / self.n2

    @property
    def dz(self) -> float:
        return self.h / self.nz

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n1 + 1, self.n2 + 1, self.nz + 1)

    @property
    def shape2(self) -> tuple[int, int]:
        return (self.n1 + 1, self.n2 + 1)

    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.L1, self.n1 + 1)

    def y(self) -> np.ndarray:
        return np.linspace(0.0, self.L2, self.n2 + 1)

    def z(self) -> np.ndarray:
        return np.linspace(-self.h, 0.0, self.nz + 1)

    def meshgrid(self):
        return np.meshgrid(self.x(), self.y(), self.z(), indexing="ij")


class BoundaryClass(enum.IntEnum):
    INTERIOR = 0
    TOP = 1      # Gamma_t: z = 0 face minus edges shared with the sides
    BOTTOM = 2   # Gamma_b: z = -h face minus edges shared with the sides
    SIDE = 3     # Gamma_s: x/y faces
    EDGE = 4     # nodes where Gamma_t or Gamma_b meets Gamma_s


@functools.lru_cache(maxsize=32)
def classify_nodes(grid: GridSpec) -> np.ndarray:
    """Per-node boundary labels.  Labels partition the node set; Dirichlet
    (side) wins at edges via the EDGE label."""
    lab = np.full(grid.shape, int(BoundaryClass.INTERIOR), dtype=np.int8)
    lab[:, :, -1] = BoundaryClass.TOP
    lab[:, :, 0] = BoundaryClass.BOTTOM
    side = np.zeros(grid.shape, dtype=bool)
    side[0, :, :] = side[-1, :, :] = True
    side[:, 0, :] = side[:, -1, :] = True
    horiz = (lab == BoundaryClass.TOP) | (lab == BoundaryClass.BOTTOM)
    lab[side & ~horiz] = BoundaryClass.SIDE
    lab[side & horiz] = BoundaryClass.EDGE
    lab.setflags(write=False)
    return lab


def _trapezoid_weights(n: int, d: float) -> np.ndarray:
    w = np.full(n + 1, d)
    w[0] = w[-1] = d / 2.0
    return w


@functools.lru_cache(maxsize=32)
def weights2(grid: GridSpec) -> np.ndarray:
    """2D trapezoid-product quadrature weights on the horizontal grid."""
    w = np.outer(_trapezoid_weights(grid.n1, grid.d1),
                 _trapezoid_weights(grid.n2, grid.d2))
    w.setflags(write=False)
    return w


@functools.lru_cache(maxsize=32)
def weights3(grid: GridSpec) -> np.ndarray:
    """3D trapezoid-product quadrature weights (cell volume, with half /
    quarter weights on faces and edges)."""
    w = weights2(grid)[:, :, None] * _trapezoid_weights(grid.nz, grid.dz)
    w.setflags(write=False)
    return w


def _wz(grid: GridSpec) -> np.ndarray:
    return _trapezoid_weights(grid.nz, grid.dz)


# ---------------------------------------------------------------------------
# Difference operators
# ---------------------------------------------------------------------------

def diff_sbp(f: np.ndarray, d: float, axis: int) -> np.ndarray:
    """First derivative: centered in the interior, one-sided first order at
    the two end planes.  With the trapezoid weights this pair satisfies the
    summation-by-parts identity exactly, which is what makes the
    skew-symmetrized advection energy-neutral."""
    f = np.moveaxis(f, axis, 0)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * d)
    out[0] = (f[1] - f[0]) / d
    out[-1] = (f[-1] - f[-2]) / d
    return np.moveaxis(out, 0, axis)


def diff_onesided2(f: np.ndarray, d: float, axis: int) -> np.ndarray:
    """First derivative: centered interior, one-sided second order at the
    boundary planes (used by the norm quadratures; no BC assumption)."""
    f = np.moveaxis(f, axis, 0)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * d)
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * d)
    out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * d)
    return np.moveaxis(out, 0, axis)


def _second_diff(f: np.ndarray, d: float, axis: int, top: str) -> np.ndarray:
    """Second derivative with ghost values fixed by the boundary condition:
    odd reflection (Dirichlet zero) at the low end, and either odd
    reflection (``top='dirichlet'``) or even reflection (``top='neumann'``)
    at the high end."""
    f = np.moveaxis(f, axis, 0)
    out = np.empty_like(f)
    d2 = d * d
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / d2
    # odd reflection: ghost = -f[1], so the f[1] contributions cancel
    out[0] = -2.0 * f[0] / d2
    if top == "dirichlet":
        out[-1] = -2.0 * f[-1] / d2
    else:
        # even reflection: ghost = f[-2]
        out[-1] = 2.0 * (f[-2] - f[-1]) / d2
    return np.moveaxis(out, 0, axis)


def laplacian_bc(a: np.ndarray, grid: GridSpec) -> np.ndarray:
    """BC-aware 7-point Laplacian of one scalar component (no input checks)."""
    return (_second_diff(a, grid.d1, 0, "dirichlet")
            + _second_diff(a, grid.d2, 1, "dirichlet")
            + _second_diff(a, grid.dz, 2, "neumann"))


def div2(w1: np.ndarray, w2: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Horizontal divergence, centered second order in the interior.  Accepts
    2D (horizontal) or 3D (level-by-level) arrays."""
    if w1.shape != w2.shape:
        raise InputError(f"div2: component shapes differ: {w1.shape} vs {w2.shape}")
    if w1.shape[:2] != grid.shape2:
        raise InputError(f"div2: horizontal shape {w1.shape[:2]} does not match grid {grid.shape2}")
    return diff_sbp(w1, grid.d1, 0) + diff_sbp(w2, grid.d2, 1)


def vertical_integral(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Trapezoidal integral over z in [-h, 0]; the vertical averaging
    operator is vertical_integral(f) / h."""
    if f.shape != grid.shape:
        raise InputError(f"vertical_integral: shape {f.shape} does not match grid {grid.shape}")
    return np.tensordot(f, _wz(grid), axes=([2], [0]))


def cumulative_z_integral(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Cumulative trapezoid from the bottom: out[..., k] = int_{-h}^{z_k} f."""
    out = np.zeros_like(f)
    inc = 0.5 * grid.dz * (f[:, :, 1:] + f[:, :, :-1])
    np.cumsum(inc, axis=2, out=out[:, :, 1:])
    return out
