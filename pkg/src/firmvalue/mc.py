"""Monte Carlo cross-validation of the solved policy.

Simulates the shifted-equity diffusion under the region policy extracted
from a converged solution and estimates the discounted dividend stream,
which should match the value surface within statistical and discretization
error. Per step: Euler drift/diffusion, bankruptcy absorption at x <= 0
(with the Brownian-bridge probability of an intra-step hit, so the
continuous-time ruin is not systematically missed at coarse steps), then
the node policy — chained switches (at most one per level, hard guard
n_levels), and dividend reflection paying the overshoot above the level's
paying boundary.

Paths use a counter-based generator (splitmix-style finalizer on the
(path, draw) pair), so results are bit-reproducible for a fixed seed
independent of thread count, and distinct paths never share a stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .grid import Grid
from .model import FirmModel
from .regions import classify, extract_boundaries
from .solver import Solution

__all__ = ["SimConfig", "SimResult", "default_dt", "simulate_policy"]


@dataclass
class SimConfig:
    dt: float | None = None
    n_paths: int = 10_000
    horizon: float = 350.0
    seed: int = 0


@dataclass
class SimResult:
    start_x: float
    level: int
    mean: float
    std_err: float
    bankrupt_fraction: float
    mean_bankruptcy_time: float
    overflow_events: int
    n_paths: int


def default_dt(model: FirmModel, grid: Grid) -> float:
    """Step keeping one diffusion move at half a cell: (dx/(sigma*beta_bar))^2/4."""
    return 0.25 * (grid.dx / (model.sigma * model.beta_bar)) ** 2


U64 = np.uint64


@njit(cache=True, inline="always")
def _mix(z):
    z = (z ^ (z >> U64(30))) * U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> U64(27))) * U64(0x94D049BB133111EB)
    return z ^ (z >> U64(31))


@njit(cache=True, inline="always")
def _unit(key, k):
    # uniform in (0, 1] from the (path key, draw counter) pair
    z = _mix(key + k * U64(0x9E3779B97F4A7C15))
    return (np.float64(z >> U64(11)) + 1.0) * (0.5 ** 53)


@njit(cache=True, parallel=True, fastmath=True)
def _run_paths(
    labels,
    pay_x,
    drift0,
    debt_kink,
    lam_debt,
    vol,
    two_gh,
    r,
    dx,
    x_max,
    start_x,
    start_level,
    dt,
    n_steps,
    n_paths,
    seed,
):
    n_levels, m_points = labels.shape
    values = np.zeros(n_paths)
    went_bankrupt = np.zeros(n_paths, dtype=np.uint8)
    tau = np.full(n_paths, n_steps * dt)
    overflow = np.zeros(n_paths, dtype=np.int64)
    sqdt = math.sqrt(dt)
    edt = math.exp(-r * dt)
    inv_dx = 1.0 / dx

    for p in prange(n_paths):
        key = _mix(U64(seed) * U64(0xD1342543DE82EF95) + U64(p) + U64(1))
        draw = U64(0)
        x = start_x
        i = start_level
        disc = 1.0
        acc = 0.0
        spare = 0.0
        have_spare = False
        alive = x > 0.0
        if not alive:
            went_bankrupt[p] = 1
            tau[p] = 0.0

        step = 0
        while alive:
            # region policy at the nearest node, chaining switches
            for _ in range(n_levels):
                if x > x_max:
                    overflow[p] += 1
                l = int(x * inv_dx + 0.5)
                if l > m_points - 1:
                    l = m_points - 1
                lab = labels[i, l]
                if lab == 3 and i < n_levels - 1:  # invest
                    x -= two_gh
                    i += 1
                    if x <= 0.0:
                        alive = False
                        went_bankrupt[p] = 1
                        tau[p] = step * dt
                        break
                elif lab == 2 and i > 0:  # disinvest
                    i -= 1
                elif lab == 1:  # dividend: pay overshoot, reflect
                    pay = x - pay_x[i]
                    if pay > 0.0:
                        acc += disc * pay
                        x = pay_x[i]
                    break
                else:
                    break
            if not alive or step >= n_steps:
                break

            # Euler step in shifted equity (polar normal draw)
            if have_spare:
                xi = spare
                have_spare = False
            else:
                while True:
                    v1 = 2.0 * _unit(key, draw) - 1.0
                    v2 = 2.0 * _unit(key, draw + U64(1)) - 1.0
                    draw += U64(2)
                    rsq = v1 * v1 + v2 * v2
                    if 0.0 < rsq < 1.0:
                        f = math.sqrt(-2.0 * math.log(rsq) / rsq)
                        xi = v1 * f
                        spare = v2 * f
                        have_spare = True
                        break
            drawn = debt_kink[i] - x
            drift = drift0[i] - (lam_debt * drawn if drawn > 0.0 else 0.0)
            x_old = x
            x += drift * dt + vol[i] * sqdt * xi
            step += 1
            disc *= edt
            if x <= 0.0:
                alive = False
                went_bankrupt[p] = 1
                tau[p] = step * dt
            else:
                # Brownian-bridge correction: the continuous path may have
                # hit zero inside the step even though both endpoints are
                # positive; absorb with the exact bridge probability.
                v2dt = vol[i] * vol[i] * dt
                if v2dt > 0.0 and x_old * x < 10.0 * v2dt:
                    p_hit = math.exp(-2.0 * x_old * x / v2dt)
                    u = _unit(key, draw)
                    draw += U64(1)
                    if u < p_hit:
                        alive = False
                        went_bankrupt[p] = 1
                        tau[p] = step * dt

        values[p] = acc
    return values, went_bankrupt, tau, overflow


def simulate_policy(
    model: FirmModel,
    grid: Grid,
    solution: Solution,
    start: tuple[float, int],
    cfg: SimConfig,
) -> SimResult:
    """Estimate the discounted dividend value of the extracted policy.

    `start` is (shifted equity x, 1-based level). The policy is also applied
    once at time zero, matching the control convention that action may be
    taken immediately.
    """
    start_x, level = float(start[0]), int(start[1])
    if not solution.converged:
        raise ValueError("simulation requires a converged solution")
    if not (0.0 <= start_x <= grid.x_max):
        raise ValueError(f"start x={start_x} outside the grid [0, {grid.x_max}]")
    if not 1 <= level <= model.n_levels:
        raise ValueError(f"start level {level} outside 1..{model.n_levels}")
    if cfg.n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    dt = cfg.dt if cfg.dt is not None else default_dt(model, grid)
    if not dt > 0:
        raise ValueError("dt must be positive")

    region_map = classify(solution)
    boundaries = extract_boundaries(region_map, grid, model)
    pay_x = np.array([grid.nodes[lb.pay_index] for lb in boundaries.levels])

    n_steps = int(math.ceil(cfg.horizon / dt))
    values, bankrupt, tau, overflow = _run_paths(
        region_map.labels,
        pay_x,
        model.mu * model.beta_levels,
        (1.0 - model.gamma) * model.levels,
        model.debt.lam,
        model.sigma * model.beta_levels,
        2.0 * model.gamma * model.h,
        model.r,
        grid.dx,
        grid.x_max,
        start_x,
        level - 1,
        dt,
        n_steps,
        int(cfg.n_paths),
        cfg.seed,
    )
    bk = bankrupt.astype(bool)
    mean = float(values.mean())
    std_err = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return SimResult(
        start_x=start_x,
        level=level,
        mean=mean,
        std_err=std_err,
        bankrupt_fraction=float(bk.mean()),
        mean_bankruptcy_time=float(tau[bk].mean()) if bk.any() else float("nan"),
        overflow_events=int(overflow.sum()),
        n_paths=int(cfg.n_paths),
    )
