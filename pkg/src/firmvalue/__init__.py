"""firmvalue: value function and optimal dividend/investment policy of a
cash-constrained firm, computed by a monotone finite-difference scheme with
policy iteration and validated by M-matrix certificates, invariant checks,
and Monte Carlo simulation of the controlled diffusion."""

from .model import DebtSpec, FirmModel, GainSpec, coefficients, gain_at, validate
from .grid import Grid, StencilKind, SwitchStencil, build_grid, stencil_kind, switch_stencil
from .assemble import (
    ControlField,
    ResidualKind,
    SparseSystem,
    assemble,
    availability,
    dump_system,
    residual_table,
    row_residual,
)
from .solver import (
    IterationRecord,
    MMatrixReport,
    SingularSystemError,
    Solution,
    SolverConfig,
    improve_policy,
    policy_iteration,
    solve_linear,
    verify_m_matrix,
    witness_vector,
)
from .regions import (
    Boundaries,
    Label,
    LevelBoundary,
    RegionMap,
    activity,
    area_census,
    check_shape,
    classify,
    extract_boundaries,
    xmax_margin,
)
from .mc import SimConfig, SimResult, default_dt, simulate_policy
from .checks import hard_failures, invariant_report
from .config import ConfigError, RunConfig, load_config

__version__ = "0.1.0"
