"""Command-line entry point: configuration, orchestration, artifact emission.

Single runs solve the problem, verify the invariant suite, and write the
artifact set (value CSV, region pixmap + figures, boundary JSON, iteration
log, verification report with a content-hash manifest). Sweeps run one
sub-directory per value concurrently; --refine performs the nested-grid
convergence study instead of a normal run.

Exit codes: 0 success, 1 configuration error, 2 non-convergence,
3 hard invariant failure. Insufficient x_max is a warning, not a failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .artifacts import (
    write_boundaries_json,
    write_iteration_log,
    write_mc_csv,
    write_refine_csv,
    write_region_pixmap,
    write_values_csv,
    write_verification_report,
)
from .checks import hard_failures, invariant_report
from .config import ConfigError, RunConfig, apply_overrides, load_config
from .figures import save_boundary_figure, save_region_figure, save_value_figure
from .grid import build_grid
from .mc import SimConfig, simulate_policy
from .regions import check_shape, classify, extract_boundaries
from .solver import policy_iteration

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NO_CONVERGENCE = 2
EXIT_INVARIANT = 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="firmvalue",
        description="Solve the cash-constrained firm value and policy map.",
    )
    p.add_argument("--config", metavar="PATH", help="key = value configuration file")
    p.add_argument("--output-dir", metavar="PATH", help="artifact directory")
    p.add_argument("--grid-points", type=int, metavar="M", help="mesh size override")
    p.add_argument("--levels", type=int, metavar="N", help="capital level count override")
    p.add_argument("--tol", type=float, help="policy-iteration stopping tolerance")
    p.add_argument("--max-iter", type=int, help="policy-iteration budget")
    p.add_argument(
        "--sweep", metavar="KEY=V1,V2,...", help="run once per value of a config key"
    )
    p.add_argument(
        "--refine", type=int, metavar="D", help="nested-grid refinement study, D doublings"
    )
    p.add_argument("--mc", action="store_true", help="run Monte Carlo cross-validation")
    p.add_argument("--seed", type=int, help="Monte Carlo seed")
    p.add_argument(
        "--emit",
        choices=["values", "regions", "boundaries", "all"],
        help="which artifact families to write",
    )
    return p


def _overrides_from_args(args) -> dict[str, str]:
    kv: dict[str, str] = {}
    if args.output_dir is not None:
        kv["outputs.directory"] = args.output_dir
    if args.grid_points is not None:
        kv["grid.m_points"] = str(args.grid_points)
    if args.levels is not None:
        kv["model.n_levels"] = str(args.levels)
    if args.tol is not None:
        kv["solver.tol"] = repr(args.tol)
    if args.max_iter is not None:
        kv["solver.max_iter"] = str(args.max_iter)
    if args.emit is not None:
        kv["outputs.emit"] = args.emit
    if args.mc:
        kv["mc.enabled"] = "true"
    if args.seed is not None:
        kv["mc.seed"] = str(args.seed)
    if args.sweep is not None:
        key, _, values = args.sweep.partition("=")
        if not key or not values:
            raise ConfigError("--sweep expects KEY=V1,V2,...")
        kv["sweep.key"] = key.strip()
        kv["sweep.values"] = values
    if args.refine is not None:
        kv["refine.doublings"] = str(args.refine)
    return kv


def default_mc_starts(cfg: RunConfig) -> list[tuple[float, int]]:
    """Deterministic interior start nodes spread over levels and equity."""
    n, m = cfg.model.n_levels, cfg.grid.m_points
    n_levels_used = max(1, min(n, (cfg.mc_n_starts + 1) // 2))
    levels = sorted(set(int(round(v)) for v in np.linspace(1, n, n_levels_used)))
    starts = []
    for frac in (0.3, 0.6, 0.45, 0.75):
        for lvl in levels:
            node = int(round(frac * (m - 1)))
            node = min(max(node, 1), m - 2)
            starts.append((float(cfg.grid.nodes[node]), lvl))
            if len(starts) == cfg.mc_n_starts:
                return starts
    return starts


def run_single(cfg: RunConfig, out_dir: str) -> int:
    os.makedirs(out_dir, exist_ok=True)
    solution = policy_iteration(cfg.model, cfg.grid, cfg.solver)
    region_map = classify(solution)
    boundaries = extract_boundaries(region_map, cfg.grid, cfg.model)
    violations = check_shape(region_map)
    report = invariant_report(solution, region_map)

    emit = cfg.emit
    paths: list[str] = []

    def emit_path(name):
        p = os.path.join(out_dir, name)
        paths.append(p)
        return p

    if emit in ("values", "all"):
        write_values_csv(emit_path("values.csv"), solution)
        save_value_figure(emit_path("values.png"), solution)
    if emit in ("regions", "all"):
        write_region_pixmap(emit_path("regions.ppm"), region_map)
        save_region_figure(emit_path("regions.png"), region_map, cfg.model, cfg.grid)
    if emit in ("boundaries", "all"):
        write_boundaries_json(emit_path("boundaries.json"), boundaries, violations)
        save_boundary_figure(emit_path("boundaries.png"), boundaries, cfg.model, cfg.grid)
    write_iteration_log(emit_path("iterations.csv"), solution)

    if cfg.mc_enabled and solution.converged:
        sim_cfg = SimConfig(
            dt=cfg.mc_dt, n_paths=cfg.mc_n_paths, horizon=cfg.mc_horizon, seed=cfg.mc_seed
        )
        results = []
        for start_x, level in default_mc_starts(cfg):
            res = simulate_policy(cfg.model, cfg.grid, solution, (start_x, level), sim_cfg)
            node = int(round(start_x / cfg.grid.dx))
            results.append((res, float(solution.w[level - 1, node])))
        write_mc_csv(emit_path("mc.csv"), results)

    write_verification_report(os.path.join(out_dir, "verification.json"), report, paths)

    if not report["xmax_sufficiency"]["ok"]:
        print(
            f"warning: continuation labels in the top 5% of the mesh "
            f"(levels {report['xmax_sufficiency']['offending_levels']}); "
            "x_max may not exceed every dividend boundary",
            file=sys.stderr,
        )
    if violations:
        print(f"warning: region shape violations: {violations}", file=sys.stderr)

    failures = hard_failures(report)
    status = "ok" if not failures else "FAILED " + ",".join(failures)
    print(
        f"{out_dir}: iterations={solution.iterations} "
        f"converged={solution.converged} k_star={boundaries.k_star} [{status}]"
    )
    if not solution.converged:
        return EXIT_NO_CONVERGENCE
    if failures:
        return EXIT_INVARIANT
    return EXIT_OK


def run_sweep(cfg: RunConfig, out_dir: str) -> int:
    key = cfg.sweep_key
    short = key.rsplit(".", 1)[-1]
    jobs = []
    for value in cfg.sweep_values:
        sub_cfg = apply_overrides(cfg, {key: value, "sweep.key": key})
        sub_cfg.sweep_key = None
        sub_dir = os.path.join(out_dir, f"{short}_{value}")
        jobs.append((sub_cfg, sub_dir))
    with ThreadPoolExecutor(max_workers=min(4, len(jobs))) as pool:
        codes = list(pool.map(lambda job: run_single(*job), jobs))
    return max(codes)


def refine_study(cfg: RunConfig, out_dir: str, doublings: int) -> tuple[int, list[dict]]:
    """Solve on nested meshes M, 2M-1, 4M-3, ...; report coarse-grid diffs.

    Successive solutions are compared after restriction to the coarser mesh
    of each pair (every second node of the finer one).
    """
    if doublings < 1:
        raise ConfigError("--refine needs at least 1 doubling")
    os.makedirs(out_dir, exist_ok=True)
    rows: list[dict] = []
    prev = None
    m_points = cfg.grid.m_points
    worst = EXIT_OK
    for _ in range(doublings + 1):
        grid = build_grid(cfg.grid.x_max, m_points)
        sol = policy_iteration(cfg.model, grid, cfg.solver)
        if not sol.converged:
            worst = max(worst, EXIT_NO_CONVERGENCE)
        diff = None
        if prev is not None:
            diff = float(np.abs(prev.w - sol.w[:, ::2]).max())
        rows.append(
            {
                "m_points": m_points,
                "iterations": sol.iterations,
                "converged": sol.converged,
                "sup_diff": diff,
            }
        )
        prev = sol
        m_points = 2 * m_points - 1
    write_refine_csv(os.path.join(out_dir, "refine.csv"), rows)
    for row in rows:
        diff = "-" if row["sup_diff"] is None else f"{row['sup_diff']:.3e}"
        print(
            f"M={row['m_points']}: iterations={row['iterations']} "
            f"converged={row['converged']} sup_diff={diff}"
        )
    diffs = [row["sup_diff"] for row in rows if row["sup_diff"] is not None]
    if any(d2 >= d1 for d1, d2 in zip(diffs, diffs[1:])):
        print("warning: successive differences are not decreasing", file=sys.stderr)
    return worst, rows


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = apply_overrides(cfg, _overrides_from_args(args))
        out_dir = cfg.output_dir
        if args.refine is not None:
            code, _ = refine_study(cfg, out_dir, args.refine)
            return code
        if cfg.sweep_key is not None:
            return run_sweep(cfg, out_dir)
        return run_single(cfg, out_dir)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
