"""Block-tridiagonal assembly of the controlled linear system.

Each grid node (l, i) carries a binary control triple (rho, theta, psi)
selecting which term of the variational inequality its row enforces:

  rho*theta*psi = 1   PDE row        -(L W)_{l,i} = 0
  rho*theta = 1, psi=0 dividend row  (W_{l,i} - W_{l-1,i})/dx - 1 = 0
  rho = 1, theta = 0  disinvest row  W_{l,i} - W_{l,i-1} = 0
  rho = 0             invest row     W_{l,i} - [lam*W_{l-d,i+1} + (1-lam)*W_{l-d+1,i+1}] = 0

Row l = 1 is the Dirichlet liquidation row W_{1,i} = 0 (controls ignored);
row l = M is forced to the dividend control so the right boundary always
encodes W_{M,i} = W_{M-1,i} + dx.

Stacking levels with flat index j = l + (i-1)*M yields A(rho,theta,psi)*U +
B = 0; the solver solves A*U = -B. Off-diagonals of A are non-positive by
construction (monotone scheme), at most 6 nonzeros per row.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .grid import Grid, SwitchStencil
from .model import FirmModel

__all__ = [
    "ResidualKind",
    "ControlField",
    "SparseSystem",
    "assemble",
    "availability",
    "residual_table",
    "row_residual",
    "dump_system",
]


class ResidualKind(enum.IntEnum):
    """Residual kinds in argmin priority order (lowest wins fresh ties)."""

    PDE = 0
    DIVIDEND = 1
    DISINVEST = 2
    INVEST = 3
    DIRICHLET = 4


@dataclass(eq=False)
class ControlField:
    """Per-node binary controls, shape (n_levels, m_points) each."""

    rho: np.ndarray
    theta: np.ndarray
    psi: np.ndarray

    @classmethod
    def initial(cls, n_levels: int, m_points: int) -> "ControlField":
        """All-continuation start (1,1,1), dividend forced at l = M."""
        rho = np.ones((n_levels, m_points), dtype=np.uint8)
        theta = np.ones_like(rho)
        psi = np.ones_like(rho)
        psi[:, -1] = 0
        return cls(rho, theta, psi)

    @classmethod
    def from_kinds(cls, kinds: np.ndarray) -> "ControlField":
        """Canonical controls for a kind map: PDE (1,1,1), dividend (1,1,0),
        disinvest (1,0,1), invest (0,1,1). Dirichlet entries keep (1,1,1)."""
        rho = np.where(kinds == ResidualKind.INVEST, 0, 1).astype(np.uint8)
        theta = np.where(kinds == ResidualKind.DISINVEST, 0, 1).astype(np.uint8)
        psi = np.where(kinds == ResidualKind.DIVIDEND, 0, 1).astype(np.uint8)
        return cls(rho, theta, psi)

    @property
    def shape(self):
        return self.rho.shape

    def kinds(self) -> np.ndarray:
        """Kind code per node; the Dirichlet column l=1 reports its raw kind."""
        k = np.full(self.rho.shape, int(ResidualKind.PDE), dtype=np.int8)
        k[(self.rho == 1) & (self.theta == 1) & (self.psi == 0)] = ResidualKind.DIVIDEND
        k[(self.rho == 1) & (self.theta == 0)] = ResidualKind.DISINVEST
        k[self.rho == 0] = ResidualKind.INVEST
        return k

    def copy(self) -> "ControlField":
        return ControlField(self.rho.copy(), self.theta.copy(), self.psi.copy())

    def validate(self, stencil: SwitchStencil) -> list[str]:
        bad = []
        n, m = self.shape
        for name, arr in (("rho", self.rho), ("theta", self.theta), ("psi", self.psi)):
            if not np.isin(arr, (0, 1)).all():
                bad.append(f"{name} entries must be 0 or 1")
        if not (
            (self.rho[:, -1] == 1).all()
            and (self.theta[:, -1] == 1).all()
            and (self.psi[:, -1] == 0).all()
        ):
            bad.append("controls at l = M must be the forced dividend (1,1,0)")
        kinds = self.kinds()
        if (kinds[-1, 1:] == ResidualKind.INVEST).any():
            bad.append("invest control set at the top capital level")
        if (kinds[0, 1:] == ResidualKind.DISINVEST).any():
            bad.append("disinvest control set at the bottom capital level")
        inv = kinds[:, 1:] == ResidualKind.INVEST
        cols = np.arange(1, m)
        if (inv & (cols[None, :] < stencil.d)).any():
            bad.append("invest control set where the interpolation leaves the grid")
        return bad


@dataclass(eq=False)
class SparseSystem:
    """A and B of the controlled system A*U + B = 0, order n_levels*m_points."""

    a: sp.csr_matrix
    b: np.ndarray
    n_levels: int
    m_points: int


def _pde_coefficients(model: FirmModel, grid: Grid, c1: np.ndarray, c2: float):
    """Row coefficients of -(L W) with per-node central/upwind differencing.

    Returns (diag, upper, lower) arrays; upper/lower are guaranteed <= 0 by
    the differencing switch 2*C2 >= |C1|*dx (positive coefficient condition).
    """
    dx = grid.dx
    upwind = 2.0 * c2 < np.abs(c1) * dx
    diag = model.r + 2.0 * c2 / dx**2 + np.abs(c1) / dx * upwind
    upper = -(c2 / dx**2 + c1 / (2.0 * dx) + np.abs(c1) / (2.0 * dx) * upwind)
    lower = -(c2 / dx**2 - c1 / (2.0 * dx) + np.abs(c1) / (2.0 * dx) * upwind)
    return diag, upper, lower


def _level_drift_diffusion(model: FirmModel, grid: Grid):
    """C1 (n_levels, m_points) and C2 (n_levels,) on the whole mesh."""
    x = grid.nodes
    beta = model.beta_levels
    drawn = np.maximum((1.0 - model.gamma) * model.levels[:, None] - x[None, :], 0.0)
    c1 = model.mu * beta[:, None] - model.debt.cost_vec(drawn)
    c2 = 0.5 * (model.sigma * beta) ** 2
    return c1, c2


def assemble(
    model: FirmModel, grid: Grid, stencil: SwitchStencil, controls: ControlField
) -> SparseSystem:
    """Build A(rho,theta,psi) and B for the given control field."""
    bad = controls.validate(stencil)
    if bad:
        raise ValueError("invalid control field: " + "; ".join(bad))
    n, m = controls.shape
    dx = grid.dx
    d, lam = stencil.d, stencil.lam
    c1_all, c2_all = _level_drift_diffusion(model, grid)
    kinds = controls.kinds()

    rows, cols, vals = [], [], []
    b = np.zeros(n * m)

    def put(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    for i0 in range(n):
        base = i0 * m
        diag, upper, lower = _pde_coefficients(model, grid, c1_all[i0], c2_all[i0])
        k = kinds[i0]
        j = base + np.arange(m)

        put(j[0:1], j[0:1], np.ones(1))  # Dirichlet W_{1,i} = 0

        pde = np.flatnonzero(k[1:-1] == ResidualKind.PDE) + 1
        put(j[pde], j[pde], diag[pde])
        put(j[pde], j[pde] + 1, upper[pde])
        put(j[pde], j[pde] - 1, lower[pde])

        div = np.flatnonzero(k[1:] == ResidualKind.DIVIDEND) + 1
        put(j[div], j[div], np.full(div.size, 1.0 / dx))
        put(j[div], j[div] - 1, np.full(div.size, -1.0 / dx))
        b[j[div]] = -1.0

        dis = np.flatnonzero(k[1:-1] == ResidualKind.DISINVEST) + 1
        put(j[dis], j[dis], np.ones(dis.size))
        put(j[dis], j[dis] - m, np.full(dis.size, -1.0))

        inv = np.flatnonzero(k[1:-1] == ResidualKind.INVEST) + 1
        put(j[inv], j[inv], np.ones(inv.size))
        if lam != 0.0:
            put(j[inv], j[inv] + m - d, np.full(inv.size, -lam))
        put(j[inv], j[inv] + m - d + 1, np.full(inv.size, -(1.0 - lam)))

    a = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n * m, n * m),
    ).tocsr()
    return SparseSystem(a=a, b=b, n_levels=n, m_points=m)


def availability(
    model: FirmModel, grid: Grid, stencil: SwitchStencil
) -> np.ndarray:
    """Admissible residual kinds per node, shape (4, n_levels, m_points).

    Free nodes are the interior columns 2..M-1; the Dirichlet column and the
    forced dividend column at l = M admit no choice.
    """
    n, m = model.n_levels, grid.m_points
    ok = np.zeros((4, n, m), dtype=bool)
    interior = np.zeros(m, dtype=bool)
    interior[1:-1] = True
    ok[ResidualKind.PDE, :, :] = interior
    ok[ResidualKind.DIVIDEND, :, :] = interior
    ok[ResidualKind.DISINVEST, 1:, :] = interior
    inv_cols = interior & (np.arange(m) >= stencil.d)
    ok[ResidualKind.INVEST, :-1, :] = inv_cols
    return ok


def residual_table(
    model: FirmModel, grid: Grid, stencil: SwitchStencil, w: np.ndarray
) -> np.ndarray:
    """All four residuals at every node, +inf where a stencil leaves the grid.

    Computed directly from the difference formulas, independently of the
    assembled matrix, so it can serve as the second route when certifying
    the discrete variational inequality. Which kinds a node may actually
    select is governed by `availability`; this table also fills rows that
    exist but are not free choices (the forced dividend at l = M).
    """
    n, m = w.shape
    dx = grid.dx
    d, lam = stencil.d, stencil.lam
    c1_all, c2_all = _level_drift_diffusion(model, grid)

    res = np.full((4, n, m), np.inf)
    for i0 in range(n):
        diag, upper, lower = _pde_coefficients(model, grid, c1_all[i0], c2_all[i0])
        res[ResidualKind.PDE, i0, 1:-1] = (
            diag[1:-1] * w[i0, 1:-1]
            + upper[1:-1] * w[i0, 2:]
            + lower[1:-1] * w[i0, :-2]
        )
    res[ResidualKind.DIVIDEND, :, 1:] = (w[:, 1:] - w[:, :-1]) / dx - 1.0
    res[ResidualKind.DISINVEST, 1:, 1:-1] = w[1:, 1:-1] - w[:-1, 1:-1]
    if m - 1 > d:
        tgt = lam * w[1:, : m - 1 - d] + (1.0 - lam) * w[1:, 1 : m - d]
        res[ResidualKind.INVEST, :-1, d : m - 1] = w[:-1, d : m - 1] - tgt
    return res


def row_residual(
    model: FirmModel,
    grid: Grid,
    stencil: SwitchStencil,
    w: np.ndarray,
    level_index: int,
    node_index: int,
    kind: ResidualKind,
) -> float:
    """Residual the row (node_index, level_index, kind) produces on w.

    Indices are 1-based per the node layout j = l + (i-1)*M. Raises
    ValueError if the kind is not admissible at the node.
    """
    n, m = w.shape
    if not (1 <= level_index <= n and 1 <= node_index <= m):
        raise IndexError(f"node ({node_index}, {level_index}) outside grid")
    i0, l0 = level_index - 1, node_index - 1
    if kind == ResidualKind.DIRICHLET:
        if l0 != 0:
            raise ValueError("Dirichlet row exists only at l = 1")
        return float(w[i0, 0])
    if l0 == 0:
        raise ValueError("only the Dirichlet kind is admissible at l = 1")
    if kind == ResidualKind.DIVIDEND:
        return float((w[i0, l0] - w[i0, l0 - 1]) / grid.dx - 1.0)
    if l0 == m - 1:
        raise ValueError("l = M is forced to the dividend control")
    if kind == ResidualKind.PDE:
        c1, c2 = _level_drift_diffusion(model, grid)
        diag, upper, lower = _pde_coefficients(model, grid, c1[i0], c2[i0])
        return float(
            diag[l0] * w[i0, l0] + upper[l0] * w[i0, l0 + 1] + lower[l0] * w[i0, l0 - 1]
        )
    if kind == ResidualKind.DISINVEST:
        if i0 == 0:
            raise ValueError("disinvest is not admissible at the bottom level")
        return float(w[i0, l0] - w[i0 - 1, l0])
    if kind == ResidualKind.INVEST:
        if i0 == n - 1:
            raise ValueError("invest is not admissible at the top level")
        if l0 < stencil.d:
            raise ValueError("invest interpolation would leave the grid")
        tgt = stencil.lam * w[i0 + 1, l0 - stencil.d] + (1.0 - stencil.lam) * w[
            i0 + 1, l0 - stencil.d + 1
        ]
        return float(w[i0, l0] - tgt)
    raise ValueError(f"unknown residual kind {kind!r}")


def dump_system(system: SparseSystem, a_path, b_path) -> None:
    """Debug dump: A as 0-based 'row col value' triplets, B one value per line."""
    coo = system.a.tocoo()
    with open(a_path, "w") as fh:
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {float(v)!r}\n")
    with open(b_path, "w") as fh:
        for v in system.b:
            fh.write(f"{float(v)!r}\n")
