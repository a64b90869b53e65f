"""Runtime verification suite for a solved problem.

Bundles every invariant the solution is expected to satisfy into one
machine-readable report: value bounds, the exact slope (dividend) bound,
the linear growth bound, obstacle inequalities, the discrete variational
inequality certificate, M-matrix results collected during iteration,
iterate monotonicity, region-shape checks, and the x_max sufficiency
witness. The CLI serializes this and gates its exit code on the hard
entries; the acceptance tests assert the same numbers at their stated
tolerances.
"""

from __future__ import annotations

import numpy as np

from .assemble import ResidualKind, assemble, availability, residual_table
from .regions import RegionMap, area_census, check_shape, classify, xmax_margin
from .solver import Solution, verify_m_matrix

__all__ = ["invariant_report", "hard_failures"]

VI_TOL = 1e-7
OBSTACLE_TOL = 1e-8
GROWTH_TOL = 1e-6
SLOPE_TOL = 1e-12  # exact bound: allowance for factorization round-off only
MONO_TOL = 1e-10


def invariant_report(solution: Solution, region_map: RegionMap | None = None) -> dict:
    """Evaluate the full invariant suite; every entry carries ok + evidence."""
    model, grid, stencil = solution.model, solution.grid, solution.stencil
    w = solution.w
    x = grid.nodes
    scale = solution.value_scale
    report: dict = {}

    report["converged"] = {
        "ok": bool(solution.converged),
        "iterations": solution.iterations,
        "final_sup_change": solution.log[-1].sup_change if solution.log else None,
    }

    lo, hi = float(w.min()), float(w.max())
    report["value_bounds"] = {
        "ok": bool(lo >= -SLOPE_TOL * scale and hi <= scale + 1e-9 * scale),
        "min": lo,
        "max": hi,
        "upper_bound": scale,
    }

    slope_slack = float((w[:, 1:] - w[:, :-1] - grid.dx).min())
    report["slope_bound"] = {
        "ok": bool(slope_slack >= -SLOPE_TOL * scale),
        "min_slack": slope_slack,
        "tolerance": SLOPE_TOL * scale,
    }

    growth_slack = float((x[None, :] + model.value_bound - w).min())
    report["growth_bound"] = {
        "ok": bool(growth_slack >= -GROWTH_TOL),
        "min_slack": growth_slack,
        "tolerance": GROWTH_TOL,
    }

    res = residual_table(model, grid, stencil, w)
    tol_node = OBSTACLE_TOL * (1.0 + np.abs(w))
    dis = res[ResidualKind.DISINVEST, 1:, 1:]
    inv = res[ResidualKind.INVEST, :-1, stencil.d : grid.m_points - 1]
    dis_min = float(dis.min()) if dis.size else 0.0
    inv_min = float(inv.min()) if inv.size else 0.0
    dis_ok = bool((dis >= -tol_node[1:, 1:]).all()) if dis.size else True
    inv_ok = (
        bool((inv >= -tol_node[:-1, stencil.d : grid.m_points - 1]).all())
        if inv.size
        else True
    )
    report["obstacle_bounds"] = {
        "ok": dis_ok and inv_ok,
        "disinvest_min": dis_min,
        "invest_min": inv_min,
        "tolerance": OBSTACLE_TOL,
    }

    masked = np.where(availability(model, grid, stencil), res, np.inf)
    free = np.zeros(w.shape, dtype=bool)
    free[:, 1:-1] = True
    vi_tol_node = VI_TOL * (1.0 + np.abs(w))
    best = masked.min(axis=0)
    worst_active = float(np.abs(best[free] / vi_tol_node[free]).max())
    neg = np.where(masked < -vi_tol_node[None], 1, 0)[:, free].sum()
    report["vi_certificate"] = {
        "ok": bool(worst_active <= 1.0 and neg == 0),
        "worst_active_rel": worst_active,
        "negative_residuals": int(neg),
        "tolerance": VI_TOL,
    }

    mm = [rec.m_matrix for rec in solution.log if rec.m_matrix is not None]
    if mm:
        report["m_matrix"] = {
            "ok": bool(all(r.offdiag_ok and r.witness_ok for r in mm)),
            "iterations_checked": len(mm),
            "min_witness_slack": min(r.min_slack for r in mm),
            "offdiag_all_ok": bool(all(r.offdiag_ok for r in mm)),
        }
    else:
        final = verify_m_matrix(
            assemble(model, grid, stencil, solution.controls), stencil, model, grid
        )
        report["m_matrix"] = {
            "ok": bool(final.offdiag_ok and final.witness_ok),
            "iterations_checked": 1,
            "min_witness_slack": final.min_slack,
            "offdiag_all_ok": final.offdiag_ok,
        }

    mono = min((rec.mono_slack for rec in solution.log), default=0.0)
    report["monotone_iterates"] = {
        "ok": bool(mono >= -MONO_TOL * scale),
        "min_slack": mono,
        "tolerance": MONO_TOL * scale,
    }

    rm = region_map if region_map is not None else classify(solution)
    violations = check_shape(rm)
    report["region_shape"] = {"ok": not violations, "violations": violations}

    ok_margin, offending = xmax_margin(rm)
    report["xmax_sufficiency"] = {"ok": ok_margin, "offending_levels": offending}

    report["argmin_margin_diagnostic"] = {
        "ok": True,  # informational: how often the raw argmin is nearly degenerate
        "max_close_ties": max((rec.close_ties for rec in solution.log), default=0),
        "final_close_ties": solution.log[-1].close_ties if solution.log else 0,
    }

    report["area_census"] = {"ok": True, **area_census(solution)}
    return report


def hard_failures(report: dict) -> list[str]:
    """Entries whose failure should abort a run (nonzero exit).

    x_max sufficiency and the shape checks are warnings by contract: they
    flag questionable configurations, not broken solves.
    """
    hard = ["converged", "value_bounds", "slope_bound", "m_matrix", "vi_certificate"]
    return [name for name in hard if not report[name]["ok"]]
