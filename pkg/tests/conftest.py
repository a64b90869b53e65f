import pytest

import firmvalue as fv


def reference_model(gamma=1e-3, n_levels=20, k_max=10.0, k1=None):
    """Base parameter set used across the suite (mu=.25 sigma=.40 r=.02 lam=.10)."""
    if k1 is None:
        h = k_max / n_levels
        k1 = h
    else:
        h = (k_max - k1) / (n_levels - 1)
    return fv.FirmModel(
        mu=0.25,
        sigma=0.40,
        r=0.02,
        gamma=gamma,
        k1=k1,
        h=h,
        n_levels=n_levels,
        gain=fv.GainSpec.exponential(beta_bar=2.0, eta=1.0),
        debt=fv.DebtSpec(lam=0.10),
    )


def single_regime_model(sigma=0.40):
    """One capital level, constant gain, zero switching cost: the setting of
    the closed-form dividend-barrier benchmark."""
    return fv.FirmModel(
        mu=0.25,
        sigma=sigma,
        r=0.02,
        gamma=0.0,
        k1=1e-6,
        h=1.0,
        n_levels=1,
        gain=fv.GainSpec.constant(2.0),
        debt=fv.DebtSpec(lam=0.10),
    )


@pytest.fixture(scope="session")
def small_solution():
    """Converged multi-level solve at smoke scale, shared by read-only tests."""
    model = reference_model()
    grid = fv.build_grid(10.0, 1001)
    sol = fv.policy_iteration(model, grid)
    assert sol.converged
    return sol
