"""Policy iteration on the controlled linear system.

Starting from the all-continuation control field and W = 0, alternate exact
sparse solves of A(controls)*U = -B(controls) with pointwise argmin control
improvement until the sup-norm change drops below tolerance. Because every
A is an M-matrix the iterates are non-decreasing and the loop terminates;
both facts are monitored at runtime (per-iteration monotonicity slack and an
explicit M-matrix certificate).

The M-matrix certificate checks off-diagonal signs and exhibits a strictly
positive vector whose image under A is strictly positive. With witness
entries 1 + l*eps + i*eta (eps = r*dx/(mu*beta_bar)), the row products are

  PDE row        >= l*r*eps        dividend row   = eps/dx
  disinvest row  = eta             invest row     = (d-1+lam)*eps - eta

so eta must lie strictly inside (0, (d-1+lam)*eps) whenever invest rows can
occur; note d-1+lam = 2*gamma*h/dx > 0 for any positive switching cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as sla

from .assemble import (
    ControlField,
    ResidualKind,
    SparseSystem,
    assemble,
    availability,
    residual_table,
)
from .grid import Grid, SwitchStencil, switch_stencil
from .model import FirmModel

__all__ = [
    "SolverConfig",
    "IterationRecord",
    "MMatrixReport",
    "Solution",
    "SingularSystemError",
    "witness_vector",
    "verify_m_matrix",
    "solve_linear",
    "improve_policy",
    "policy_iteration",
]

# Residuals within this window (relative to 1 + |W|) of the row minimum are
# treated as tied and resolved by the fixed kind priority. The window must
# sit above factorization noise on slope-1 value chains (~1e-12) and far
# below any economic margin (~dx^2 and larger); it is what keeps the huge
# degenerate paying zones, where dividend and switch residuals agree to
# round-off, labelled uniformly instead of creeping one cell per iteration.
TIE_TOL = 1e-10

# Margin diagnostic threshold: how often the argmin is nearly degenerate.
CLOSE_MARGIN = 1e-10


class SingularSystemError(RuntimeError):
    """The factorization failed; the control field is inconsistent."""


@dataclass
class SolverConfig:
    tol: float = 1e-8
    max_iter: int = 200
    tol_lin: float = 1e-12
    verify_each_iteration: bool = True
    tie_tol: float = TIE_TOL


@dataclass
class MMatrixReport:
    offdiag_ok: bool
    witness_ok: bool
    min_slack: float
    min_diag: float
    eps: float
    eta: float


@dataclass
class IterationRecord:
    q: int
    sup_change: float
    controls_changed: int
    lin_residual: float
    mono_slack: float
    close_ties: int = 0
    m_matrix: MMatrixReport | None = None


@dataclass(eq=False)
class Solution:
    """Converged value surface (n_levels, m_points) with its control field."""

    w: np.ndarray
    controls: ControlField
    log: list[IterationRecord]
    converged: bool
    iterations: int
    model: FirmModel
    grid: Grid
    stencil: SwitchStencil

    @property
    def value_scale(self) -> float:
        """Scale mu*beta_bar/r + x_max bounding the surface (stability bound)."""
        return self.model.value_bound + self.grid.x_max


def witness_vector(
    model: FirmModel, grid: Grid, stencil: SwitchStencil, eta: float | None = None
):
    """Positive vector 1 + l*eps + i*eta used to certify the M-matrix property.

    Default eta sits at the midpoint of the valid open interval
    (0, (d-1+lam)*eps); invest rows force the upper end (see module docstring).
    """
    eps = model.r * grid.dx / (model.mu * model.beta_bar)
    if eta is None:
        eta = 0.5 * stencil.span * eps if stencil.span > 0 else 0.5 * eps
    n, m = model.n_levels, grid.m_points
    l = np.arange(1, m + 1, dtype=float)
    i = np.arange(1, n + 1, dtype=float)
    vec = (1.0 + l[None, :] * eps + i[:, None] * eta).ravel()
    return vec, eps, eta


def verify_m_matrix(
    system: SparseSystem,
    stencil: SwitchStencil,
    model: FirmModel,
    grid: Grid,
    eta: float | None = None,
) -> MMatrixReport:
    """Off-diagonal sign check plus the positive-witness product A*w > 0."""
    coo = system.a.tocoo()
    off = coo.data[coo.row != coo.col]
    offdiag_ok = bool((off <= 0.0).all()) if off.size else True
    min_diag = float(system.a.diagonal().min())
    vec, eps, eta = witness_vector(model, grid, stencil, eta)
    slack = system.a @ vec
    min_slack = float(slack.min())
    return MMatrixReport(
        offdiag_ok=offdiag_ok,
        witness_ok=min_slack > 0.0,
        min_slack=min_slack,
        min_diag=min_diag,
        eps=eps,
        eta=eta,
    )


def solve_linear(system: SparseSystem, tol_lin: float = 1e-12):
    """Direct solve of A*U = -B with iterative refinement.

    Returns (u, residual_norm) with ||A u + B||_inf <= tol_lin*max(1, ||B||_inf)
    unless refinement stalls at round-off (the achieved norm is returned).
    """
    try:
        lu = sla.splu(system.a.tocsc())
    except RuntimeError as exc:  # pragma: no cover - signals assembly bugs
        raise SingularSystemError(
            "singular factorization: A(rho,theta,psi) should be an M-matrix, "
            "so the control field violates an availability rule"
        ) from exc
    b = system.b
    u = lu.solve(-b)
    target = tol_lin * max(1.0, float(np.abs(b).max(initial=0.0)))
    resid_norm = float(np.abs(system.a @ u + b).max(initial=0.0))
    for _ in range(5):
        if resid_norm <= target:
            break
        u_next = u - lu.solve(system.a @ u + b)
        next_norm = float(np.abs(system.a @ u_next + b).max(initial=0.0))
        if next_norm >= 0.5 * resid_norm:  # stalled at factorization round-off
            if next_norm < resid_norm:
                u, resid_norm = u_next, next_norm
            break
        u, resid_norm = u_next, next_norm
    return u, resid_norm


def improve_policy(
    model: FirmModel,
    grid: Grid,
    stencil: SwitchStencil,
    w: np.ndarray,
    previous: ControlField,
    tie_tol: float = TIE_TOL,
):
    """Pointwise argmin over admissible residuals at the surface w.

    Residuals within tie_tol*(1 + |W|) of the node minimum count as tied and
    resolve by the fixed priority PDE > dividend > disinvest > invest, which
    keeps the control field a deterministic function of the surface (hence
    stationary at convergence) and labels the degenerate overlap zones
    uniformly. Returns (controls, changed, close) where `changed` counts
    flipped free nodes and `close` counts free nodes whose argmin margin is
    below CLOSE_MARGIN (scale-sensitivity diagnostic).
    """
    res = residual_table(model, grid, stencil, w)
    res = np.where(availability(model, grid, stencil), res, np.inf)
    best = res.min(axis=0)
    near = res <= best + tie_tol * (1.0 + np.abs(w))
    kinds = np.argmax(near, axis=0).astype(np.int8)  # first hit = priority order
    prev_kinds = previous.kinds()
    kinds[:, 0] = ResidualKind.PDE  # Dirichlet column, controls ignored
    kinds[:, -1] = ResidualKind.DIVIDEND  # forced right boundary

    free = slice(1, w.shape[1] - 1)
    changed = int(np.count_nonzero(kinds[:, free] != prev_kinds[:, free]))
    two = np.partition(res[:, :, free], 1, axis=0)
    close = int(np.count_nonzero((two[1] - two[0]) < CLOSE_MARGIN))
    return ControlField.from_kinds(kinds), changed, close


def policy_iteration(
    model: FirmModel, grid: Grid, config: SolverConfig | None = None
) -> Solution:
    """Run the fixed-point iteration from (1,1,1) controls and W = 0.

    Stops when the sup-norm change is <= config.tol; if max_iter is hit the
    partial solution is returned with converged=False.
    """
    cfg = config or SolverConfig()
    if not cfg.tol > 0 and not np.isinf(cfg.tol):
        raise ValueError("tol must be positive")
    stencil = switch_stencil(model, grid)
    n, m = model.n_levels, grid.m_points
    controls = ControlField.initial(n, m)
    w_prev = np.zeros((n, m))
    log: list[IterationRecord] = []
    converged = False

    for q in range(1, cfg.max_iter + 1):
        system = assemble(model, grid, stencil, controls)
        report = (
            verify_m_matrix(system, stencil, model, grid)
            if cfg.verify_each_iteration
            else None
        )
        u, lin_residual = solve_linear(system, cfg.tol_lin)
        w = u.reshape(n, m)
        diff = w - w_prev
        sup_change = float(np.abs(diff).max())
        mono_slack = float(diff.min())
        controls, changed, close = improve_policy(
            model, grid, stencil, w, controls, cfg.tie_tol
        )
        log.append(
            IterationRecord(
                q=q,
                sup_change=sup_change,
                controls_changed=changed,
                lin_residual=lin_residual,
                mono_slack=mono_slack,
                close_ties=close,
                m_matrix=report,
            )
        )
        w_prev = w
        if sup_change <= cfg.tol:
            converged = True
            break

    return Solution(
        w=w_prev,
        controls=controls,
        log=log,
        converged=converged,
        iterations=len(log),
        model=model,
        grid=grid,
        stencil=stencil,
    )
