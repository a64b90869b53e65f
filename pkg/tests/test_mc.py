import math

import pytest

import firmvalue as fv
from firmvalue.mc import SimConfig, default_dt, simulate_policy
from firmvalue.solver import Solution
from conftest import reference_model, single_regime_model


@pytest.fixture(scope="module")
def oracle_solution():
    model = single_regime_model()
    grid = fv.build_grid(10.0, 1001)
    sol = fv.policy_iteration(model, grid)
    assert sol.converged
    return model, grid, sol


def test_start_at_zero_is_absorbed(oracle_solution):
    model, grid, sol = oracle_solution
    res = simulate_policy(model, grid, sol, (0.0, 1), SimConfig(dt=0.01, n_paths=64, horizon=5, seed=3))
    assert res.mean == 0.0
    assert res.bankrupt_fraction == 1.0
    assert res.mean_bankruptcy_time == 0.0


def test_deterministic_barrier_stream_matches_geometric_sum():
    """sigma = 0: starting at the paying boundary the stream pays C1*dt per
    step; the discounted total is the explicit geometric sum."""
    model = fv.FirmModel(
        mu=0.25, sigma=0.0, r=0.02, gamma=0.0, k1=1e-6, h=1.0, n_levels=1,
        gain=fv.GainSpec.constant(2.0), debt=fv.DebtSpec(lam=0.10),
    )
    grid = fv.build_grid(10.0, 1001)
    sol = fv.policy_iteration(model, grid)
    assert sol.converged
    rm = fv.classify(sol)
    bd = fv.extract_boundaries(rm, grid, model)
    b = grid.nodes[bd.levels[0].pay_index]
    dt, steps = 0.01, 800
    res = simulate_policy(
        model, grid, sol, (b, 1), SimConfig(dt=dt, n_paths=2, horizon=steps * dt, seed=5)
    )
    c1 = model.mu * 2.0
    edt = math.exp(-model.r * dt)
    expected = c1 * dt * sum(edt**k for k in range(1, steps + 1))
    assert res.mean == pytest.approx(expected, rel=1e-12)
    assert res.std_err == 0.0
    # and the continuous limit of that sum is C1/r as dt -> 0
    assert c1 * dt * edt / (1 - edt) == pytest.approx(c1 / model.r, rel=2 * model.r * dt)


def test_bit_reproducible_for_fixed_seed(oracle_solution):
    model, grid, sol = oracle_solution
    cfg = SimConfig(dt=0.02, n_paths=500, horizon=30.0, seed=42)
    r1 = simulate_policy(model, grid, sol, (3.0, 1), cfg)
    r2 = simulate_policy(model, grid, sol, (3.0, 1), cfg)
    assert r1.mean == r2.mean
    assert r1.std_err == r2.std_err
    assert r1.bankrupt_fraction == r2.bankrupt_fraction
    r3 = simulate_policy(model, grid, sol, (3.0, 1), SimConfig(dt=0.02, n_paths=500, horizon=30.0, seed=43))
    assert r3.mean != r1.mean


def test_standard_error_scaling(oracle_solution):
    model, grid, sol = oracle_solution
    base = SimConfig(dt=0.02, n_paths=4000, horizon=40.0, seed=9)
    half = SimConfig(dt=0.02, n_paths=2000, horizon=40.0, seed=9)
    se_full = simulate_policy(model, grid, sol, (2.0, 1), base).std_err
    se_half = simulate_policy(model, grid, sol, (2.0, 1), half).std_err
    ratio = se_half / se_full
    assert ratio == pytest.approx(math.sqrt(2.0), rel=0.20)


def test_suboptimal_policy_never_beats_the_value(oracle_solution):
    """Forcing dividends from a lower barrier is admissible but suboptimal:
    its simulated value must stay below W (up to noise and margin)."""
    model, grid, sol = oracle_solution
    kinds = sol.controls.kinds().copy()
    rm = fv.classify(sol)
    b_idx = fv.extract_boundaries(rm, grid, model).levels[0].pay_index
    lower = b_idx - 150
    kinds[0, lower:] = 1  # dividend from a barrier well below the optimum
    worse = Solution(
        w=sol.w, controls=fv.ControlField.from_kinds(kinds), log=sol.log,
        converged=True, iterations=sol.iterations, model=model, grid=grid,
        stencil=sol.stencil,
    )
    cfg = SimConfig(dt=0.02, n_paths=4000, horizon=200.0, seed=17)
    start = (3.0, 1)
    res = simulate_policy(model, grid, worse, start, cfg)
    w_at = sol.w[0, int(round(3.0 / grid.dx))]
    assert res.mean >= 0.0
    assert res.mean <= w_at + 3 * res.std_err + 0.02 * w_at


def test_overflow_beyond_xmax_is_flagged():
    model = single_regime_model()
    grid = fv.build_grid(4.0, 101)  # x_max below the unconstrained barrier
    sol = fv.policy_iteration(model, grid)
    assert sol.converged
    res = simulate_policy(
        model, grid, sol, (3.95, 1), SimConfig(dt=0.05, n_paths=2000, horizon=10.0, seed=21)
    )
    assert res.overflow_events > 0
    assert math.isfinite(res.mean)


def test_start_validation(oracle_solution):
    model, grid, sol = oracle_solution
    with pytest.raises(ValueError):
        simulate_policy(model, grid, sol, (-1.0, 1), SimConfig(dt=0.01, n_paths=8, horizon=1))
    with pytest.raises(ValueError):
        simulate_policy(model, grid, sol, (11.0, 1), SimConfig(dt=0.01, n_paths=8, horizon=1))
    with pytest.raises(ValueError):
        simulate_policy(model, grid, sol, (1.0, 2), SimConfig(dt=0.01, n_paths=8, horizon=1))
    bad = Solution(
        w=sol.w, controls=sol.controls, log=sol.log, converged=False,
        iterations=sol.iterations, model=model, grid=grid, stencil=sol.stencil,
    )
    with pytest.raises(ValueError):
        simulate_policy(model, grid, bad, (1.0, 1), SimConfig(dt=0.01, n_paths=8, horizon=1))


def test_default_dt_half_cell():
    model = reference_model()
    grid = fv.build_grid(10.0, 2001)
    dt = default_dt(model, grid)
    # one diffusion standard deviation equals half a cell
    assert model.sigma * model.beta_bar * math.sqrt(dt) == pytest.approx(grid.dx / 2)


def test_switch_chaining_runs_and_pays(small_solution):
    """A start deep in the disinvest zone of the top level must chain down
    and still produce a sensible nonnegative estimate."""
    sol = small_solution
    model, grid = sol.model, sol.grid
    res = simulate_policy(model, grid, sol, (3.0, 20), SimConfig(dt=0.05, n_paths=500, horizon=50.0, seed=2))
    assert res.mean >= 0.0
    assert res.mean <= sol.value_scale
