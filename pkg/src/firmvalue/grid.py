"""Spatial mesh, differencing selection, and switching-cost geometry.

The mesh is uniform on [0, x_max] with x_l = (l-1)*dx, l = 1..M. Each node
independently picks central, forward or backward differencing so that the
discrete operator keeps non-positive off-diagonal coefficients (the
positive-coefficient condition that makes the scheme monotone).

Investing moves the state from (x, k_i) to (x - 2*gamma*h, k_{i+1}) in
shifted coordinates; `SwitchStencil` holds the integer offset d and the
fractional weight lam with which that target is linearly interpolated:
(d - 1) + lam = 2*gamma*h / dx, weight lam on node l-d, 1-lam on node l-d+1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .model import FirmModel

__all__ = ["Grid", "SwitchStencil", "StencilKind", "build_grid", "switch_stencil", "stencil_kind"]


@dataclass(frozen=True, eq=False)
class Grid:
    m_points: int
    x_max: float
    dx: float

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.x_max, self.m_points)


def build_grid(x_max: float, m_points: int) -> Grid:
    if not x_max > 0:
        raise ValueError(f"x_max must be positive, got {x_max}")
    if m_points < 3:
        raise ValueError(f"need at least 3 grid points, got {m_points}")
    return Grid(m_points=int(m_points), x_max=float(x_max), dx=float(x_max) / (m_points - 1))


@dataclass(frozen=True)
class SwitchStencil:
    d: int
    lam: float

    @property
    def span(self) -> float:
        """(d-1) + lam = 2*gamma*h/dx, the switch displacement in cells."""
        return (self.d - 1) + self.lam


def switch_stencil(model: FirmModel, grid: Grid) -> SwitchStencil:
    cells = 2.0 * model.gamma * model.h / grid.dx
    whole = math.floor(cells)
    return SwitchStencil(d=1 + whole, lam=cells - whole)


class StencilKind(enum.Enum):
    CENTRAL = "central"
    FORWARD = "forward"
    BACKWARD = "backward"


def stencil_kind(c1: float, c2: float, dx: float) -> StencilKind:
    """Differencing choice at one node; ties 2*C2 = |C1|*dx go central."""
    if 2.0 * c2 >= abs(c1) * dx:
        return StencilKind.CENTRAL
    return StencilKind.FORWARD if c1 >= 0 else StencilKind.BACKWARD
