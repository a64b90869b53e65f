"""Region labelling, free-boundary extraction, and shape validation.

The converged control field induces one label per node: continuation,
dividend, disinvest, invest, or liquidation (the l = 1 column). From the
label rows we extract, per capital level,

  b  first node of the trailing run whose labels are all dividend/invest
     (the paying region; equals the dividend boundary when no invest
     overlap is present),
  d  right edge of the initial disinvest run,
  a  left edge of the last invest run (the run abutting the dividend tail
     whenever the shape checks pass),

plus k_star, the lowest level whose invest region is empty.

Where dividends and a switch are simultaneously optimal the single label is
an arbitrary-but-deterministic pick among the active constraints, so
`activity` re-derives region membership from the residuals themselves; that
is the right tool for counting the six economic zones (pure disinvest /
invest / continuation / dividend and the dividend-switch overlaps).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .assemble import ResidualKind, residual_table
from .grid import Grid
from .solver import Solution

__all__ = [
    "Label",
    "RegionMap",
    "LevelBoundary",
    "Boundaries",
    "classify",
    "extract_boundaries",
    "check_shape",
    "xmax_margin",
    "activity",
    "area_census",
]


class Label(enum.IntEnum):
    CONTINUATION = 0
    DIVIDEND = 1
    DISINVEST = 2
    INVEST = 3
    LIQUIDATION = 4


@dataclass(eq=False)
class RegionMap:
    """One label per node, shape (n_levels, m_points)."""

    labels: np.ndarray

    @property
    def n_levels(self) -> int:
        return self.labels.shape[0]

    @property
    def m_points(self) -> int:
        return self.labels.shape[1]

    def count(self, label: Label) -> int:
        return int(np.count_nonzero(self.labels == label))


@dataclass
class LevelBoundary:
    level: int
    k: float
    b: float
    b_original: float
    d: float | None
    d_original: float | None
    a: float | None
    a_original: float | None
    b_index: int
    d_index: int | None
    a_index: int | None
    pay_index: int


@dataclass
class Boundaries:
    levels: list[LevelBoundary]
    k_star: int
    all_levels_invest: bool = False


def classify(solution: Solution) -> RegionMap:
    """Map converged controls to labels; l = 1 is liquidation regardless."""
    labels = solution.controls.kinds().astype(np.int8)
    labels[:, 0] = Label.LIQUIDATION
    return RegionMap(labels=labels)


def _trailing_run_start(row: np.ndarray, members) -> int:
    """First index of the maximal suffix whose entries are all in `members`."""
    bad = ~np.isin(row, members)
    last_bad = int(np.flatnonzero(bad).max())
    return last_bad + 1


def extract_boundaries(region_map: RegionMap, grid: Grid, model) -> Boundaries:
    labels = region_map.labels
    n, m = labels.shape
    x = grid.nodes
    out = []
    has_invest = np.zeros(n, dtype=bool)
    for i0 in range(n):
        row = labels[i0]
        b_idx = _trailing_run_start(row, (Label.DIVIDEND, Label.INVEST))
        pay_idx = _trailing_run_start(row, (Label.DIVIDEND,))

        d_idx = None
        if m > 1 and row[1] == Label.DISINVEST:
            run = np.flatnonzero(row[1:] != Label.DISINVEST)
            d_idx = int(run[0]) if run.size else m - 1

        a_idx = None
        inv_at = np.flatnonzero(row == Label.INVEST)
        if inv_at.size:
            # start of the last contiguous invest run (the run abutting the
            # dividend tail when the shape checks pass)
            brk = np.flatnonzero(np.diff(inv_at) > 1)
            a_idx = int(inv_at[brk[-1] + 1] if brk.size else inv_at[0])

        has_invest[i0] = bool((row == Label.INVEST).any())
        k = float(model.levels[i0])
        shift = model.gamma * k
        out.append(
            LevelBoundary(
                level=i0 + 1,
                k=k,
                b=float(x[b_idx]),
                b_original=float(x[b_idx] + shift),
                d=None if d_idx is None else float(x[d_idx]),
                d_original=None if d_idx is None else float(x[d_idx] + shift),
                a=None if a_idx is None else float(x[a_idx]),
                a_original=None if a_idx is None else float(x[a_idx] + shift),
                b_index=b_idx,
                d_index=d_idx,
                a_index=a_idx,
                pay_index=pay_idx,
            )
        )
    empty = np.flatnonzero(~has_invest)
    if empty.size:
        k_star = int(empty[0]) + 1
        all_invest = False
    else:
        k_star = n + 1
        all_invest = True
    return Boundaries(levels=out, k_star=k_star, all_levels_invest=all_invest)


def check_shape(region_map: RegionMap, isolated_tolerance: int = 2) -> list[str]:
    """Validate the expected region layout per level; returns violations.

    Dividend labels must form a trailing suffix, up to `isolated_tolerance`
    stray interior nodes per level (grid effects can flip isolated nodes in
    the degenerate overlap zones). Disinvest labels must form a prefix
    starting at the first free node, invest labels a single run followed
    only by dividend nodes, and the set of levels with any invest region
    must be downward closed.
    """
    labels = region_map.labels
    n, m = labels.shape
    bad = []
    has_invest = np.zeros(n, dtype=bool)
    for i0 in range(n):
        row = labels[i0]
        lvl = i0 + 1

        is_div = row == Label.DIVIDEND
        nondiv = np.flatnonzero(~is_div)
        interior_div = int(is_div[: nondiv.max() + 1].sum()) if nondiv.size else 0
        if interior_div > isolated_tolerance:
            bad.append(
                f"level {lvl}: dividend labels not a suffix "
                f"({interior_div} interior dividend nodes)"
            )

        is_dis = row == Label.DISINVEST
        if is_dis.any():
            first = int(np.flatnonzero(is_dis).min())
            last = int(np.flatnonzero(is_dis).max())
            if first != 1 or int(is_dis[first : last + 1].sum()) != last - first + 1:
                bad.append(f"level {lvl}: disinvest labels not a contiguous prefix")

        is_inv = row == Label.INVEST
        has_invest[i0] = bool(is_inv.any())
        if is_inv.any():
            first = int(np.flatnonzero(is_inv).min())
            last = int(np.flatnonzero(is_inv).max())
            contiguous = int(is_inv[first : last + 1].sum()) == last - first + 1
            tail_div = bool((row[last + 1 :] == Label.DIVIDEND).all())
            if not (contiguous and tail_div):
                bad.append(f"level {lvl}: invest labels not a trailing suffix")

    inv_levels = np.flatnonzero(has_invest)
    if inv_levels.size and inv_levels.max() + 1 != inv_levels.size:
        bad.append("levels with an invest region are not downward closed")
    return bad


def xmax_margin(region_map: RegionMap) -> tuple[bool, list[int]]:
    """True when the top 5% of nodes of every level carry no continuation
    label, the numerical witness that x_max exceeds every dividend boundary."""
    labels = region_map.labels
    n, m = labels.shape
    tail = math.ceil(0.05 * m)
    offending = [
        i0 + 1
        for i0 in range(n)
        if (labels[i0, m - tail :] == Label.CONTINUATION).any()
    ]
    return (not offending), offending


def activity(solution: Solution, tol_scale: float = 1e-6) -> dict[str, np.ndarray]:
    """Boolean masks of which obstacle constraints bind at each node.

    A constraint counts as active when its residual is below
    tol_scale*(1 + |W|); at a converged solution the active ones sit at the
    linear-solve tolerance while inactive ones carry an O(dx) margin.
    """
    res = residual_table(solution.model, solution.grid, solution.stencil, solution.w)
    tol = tol_scale * (1.0 + np.abs(solution.w))
    div = res[ResidualKind.DIVIDEND] <= tol
    dis = res[ResidualKind.DISINVEST] <= tol
    inv = res[ResidualKind.INVEST] <= tol
    div[:, 0] = dis[:, 0] = inv[:, 0] = False
    return {"dividend": div, "disinvest": dis, "invest": inv}


def area_census(solution: Solution, tol_scale: float = 1e-6) -> dict[str, int]:
    """Node counts of the six economic zones derived from constraint activity."""
    act = activity(solution, tol_scale)
    div, dis, inv = act["dividend"], act["disinvest"], act["invest"]
    interior = np.zeros_like(div)
    interior[:, 1:] = True
    none = interior & ~div & ~dis & ~inv
    return {
        "disinvest": int(np.count_nonzero(dis & ~div)),
        "invest": int(np.count_nonzero(inv & ~div)),
        "continuation": int(np.count_nonzero(none)),
        "dividend_invest": int(np.count_nonzero(div & inv)),
        "dividend_disinvest": int(np.count_nonzero(div & dis)),
        "dividend": int(np.count_nonzero(div & ~dis & ~inv)),
    }
