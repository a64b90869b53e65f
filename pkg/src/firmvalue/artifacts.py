"""Artifact writers: delimited surfaces, pixmaps, JSON summaries, reports.

Every writer is deterministic for identical inputs (fixed float formatting
via repr round-tripping, sorted JSON keys, no timestamps), so repeated runs
with the same configuration produce byte-identical files. The verification
report carries a manifest line (name, sha256) for every other emitted file.

Sign convention reminder for the debug dump consumers: the assembled system
is A*U + B = 0 and the solver solves A*U = -B.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from .mc import SimResult
from .regions import Boundaries, Label, RegionMap
from .solver import Solution

__all__ = [
    "write_values_csv",
    "write_region_pixmap",
    "write_boundaries_json",
    "write_iteration_log",
    "write_mc_csv",
    "write_refine_csv",
    "write_verification_report",
    "file_sha256",
]

# One node = one pixel; level N on the top row. Fixed five-color legend.
PIXMAP_COLORS = {
    Label.CONTINUATION: (0, 0, 0),
    Label.DIVIDEND: (0, 255, 0),
    Label.INVEST: (0, 0, 255),
    Label.DISINVEST: (255, 165, 0),
    Label.LIQUIDATION: (255, 255, 255),
}


def _fmt(value: float) -> str:
    return repr(float(value))


def write_values_csv(path, solution: Solution) -> None:
    model, grid = solution.model, solution.grid
    x = grid.nodes
    with open(path, "w") as fh:
        fh.write("level,k_i,x_shifted,x_original,W\n")
        for i0 in range(model.n_levels):
            shift = model.gamma * model.levels[i0]
            for l0 in range(grid.m_points):
                fh.write(
                    f"{i0 + 1},{_fmt(model.levels[i0])},{_fmt(x[l0])},"
                    f"{_fmt(x[l0] + shift)},{_fmt(solution.w[i0, l0])}\n"
                )


def write_region_pixmap(path, region_map: RegionMap) -> None:
    """Plain-text portable pixmap (P3), x horizontal, level vertical."""
    labels = region_map.labels
    n, m = labels.shape
    lut = np.zeros((5, 3), dtype=np.int64)
    for lab, rgb in PIXMAP_COLORS.items():
        lut[int(lab)] = rgb
    with open(path, "w") as fh:
        fh.write(f"P3\n{m} {n}\n255\n")
        for i0 in range(n - 1, -1, -1):  # level N on top
            row = lut[labels[i0]]
            fh.write(" ".join(f"{r} {g} {b}" for r, g, b in row))
            fh.write("\n")


def write_boundaries_json(path, boundaries: Boundaries, violations: list[str]) -> None:
    doc = {
        "k_star": boundaries.k_star,
        "all_levels_invest": boundaries.all_levels_invest,
        "violations": violations,
        "levels": [
            {
                "level": lb.level,
                "k_i": lb.k,
                "b_i": lb.b,
                "b_i_original": lb.b_original,
                "d_i": lb.d,
                "d_i_original": lb.d_original,
                "a_i": lb.a,
                "a_i_original": lb.a_original,
            }
            for lb in boundaries.levels
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_iteration_log(path, solution: Solution) -> None:
    with open(path, "w") as fh:
        fh.write("q,sup_change,controls_changed,lin_residual,mono_slack\n")
        for rec in solution.log:
            fh.write(
                f"{rec.q},{_fmt(rec.sup_change)},{rec.controls_changed},"
                f"{_fmt(rec.lin_residual)},{_fmt(rec.mono_slack)}\n"
            )


def write_mc_csv(path, results: list[tuple[SimResult, float]]) -> None:
    """Rows of (simulation result, value surface entry at the start node)."""
    with open(path, "w") as fh:
        fh.write("start_x,level,mc_mean,std_err,pde_value,z_score\n")
        for res, pde in results:
            z = (res.mean - pde) / res.std_err if res.std_err > 0 else 0.0
            fh.write(
                f"{_fmt(res.start_x)},{res.level},{_fmt(res.mean)},"
                f"{_fmt(res.std_err)},{_fmt(pde)},{_fmt(z)}\n"
            )


def write_refine_csv(path, rows: list[dict]) -> None:
    with open(path, "w") as fh:
        fh.write("m_points,iterations,converged,sup_diff_vs_previous\n")
        for row in rows:
            diff = "" if row["sup_diff"] is None else _fmt(row["sup_diff"])
            fh.write(
                f"{row['m_points']},{row['iterations']},{int(row['converged'])},{diff}\n"
            )


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_verification_report(path, report: dict, artifact_paths: list[str]) -> None:
    manifest = [
        {"name": os.path.basename(p), "sha256": file_sha256(p)}
        for p in sorted(artifact_paths)
    ]
    doc = {"checks": report, "manifest": manifest}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
