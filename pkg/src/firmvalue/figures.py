"""Figure rendering for run reports.

Renders the region map, value surface, and free boundaries to image files
next to the delimited output. The pixmap/CSV/JSON artifacts remain the
machine-readable interface; these figures are for human inspection only.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import ListedColormap

from .artifacts import PIXMAP_COLORS
from .grid import Grid
from .model import FirmModel
from .regions import Boundaries, Label, RegionMap
from .solver import Solution

__all__ = ["save_region_figure", "save_value_figure", "save_boundary_figure"]

plt.rcParams["figure.dpi"] = 110
plt.rcParams["font.size"] = 9
plt.rcParams["axes.grid"] = False

_LEGEND_ORDER = [
    Label.CONTINUATION,
    Label.DIVIDEND,
    Label.INVEST,
    Label.DISINVEST,
    Label.LIQUIDATION,
]


def _region_cmap() -> ListedColormap:
    return ListedColormap([np.array(PIXMAP_COLORS[lab]) / 255.0 for lab in _LEGEND_ORDER])


def save_region_figure(path, region_map: RegionMap, model: FirmModel, grid: Grid) -> None:
    lut = np.empty(len(_LEGEND_ORDER), dtype=np.int64)
    for idx, lab in enumerate(_LEGEND_ORDER):
        lut[int(lab)] = idx
    img = lut[region_map.labels]
    half = 0.5 * model.h
    fig, ax = plt.subplots(figsize=(7.0, 3.2))
    ax.imshow(
        img,
        origin="lower",
        aspect="auto",
        cmap=_region_cmap(),
        vmin=-0.5,
        vmax=len(_LEGEND_ORDER) - 0.5,
        extent=(0.0, grid.x_max, model.levels[0] - half, model.levels[-1] + half),
        interpolation="nearest",
    )
    ax.set_xlabel("equity x (shifted)")
    ax.set_ylabel("productive assets k")
    handles = [
        plt.Rectangle((0, 0), 1, 1, color=np.array(PIXMAP_COLORS[lab]) / 255.0)
        for lab in _LEGEND_ORDER
    ]
    ax.legend(
        handles,
        [lab.name.lower() for lab in _LEGEND_ORDER],
        loc="lower right",
        fontsize=7,
        framealpha=0.9,
    )
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_value_figure(path, solution: Solution) -> None:
    model, grid = solution.model, solution.grid
    fig, ax = plt.subplots(figsize=(7.0, 3.6))
    shown = np.linspace(0, model.n_levels - 1, min(model.n_levels, 8)).astype(int)
    for i0 in shown:
        ax.plot(grid.nodes, solution.w[i0], lw=1.0, label=f"k = {model.levels[i0]:g}")
    ax.set_xlabel("equity x (shifted)")
    ax.set_ylabel("value W")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_boundary_figure(path, boundaries: Boundaries, model: FirmModel, grid: Grid) -> None:
    ks = [lb.k for lb in boundaries.levels]
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    for attr, marker, label in (("b", "o", "b (paying)"), ("d", "s", "d (disinvest)"), ("a", "^", "a (invest)")):
        xs = [getattr(lb, attr) for lb in boundaries.levels]
        pts = [(x, k) for x, k in zip(xs, ks) if x is not None]
        if pts:
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker, ms=3.5, lw=0.8, ls="-", label=label)
    ax.set_xlim(0.0, grid.x_max)
    ax.set_xlabel("equity x (shifted)")
    ax.set_ylabel("productive assets k")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
