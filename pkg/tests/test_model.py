import numpy as np
import pytest
from hypothesis import given, strategies as st

import firmvalue as fv
from conftest import reference_model


def test_reference_model_is_valid():
    assert fv.validate(reference_model()) == []


def test_debt_slope_below_rate_is_flagged():
    model = fv.FirmModel(
        mu=0.25, sigma=0.4, r=0.02, gamma=0.0, k1=1.0, h=1.0, n_levels=2,
        gain=fv.GainSpec.constant(2.0), debt=fv.DebtSpec(lam=0.01),
    )
    assert any("debt slope" in v for v in fv.validate(model))


def test_gamma_one_is_flagged():
    model = fv.FirmModel(
        mu=0.25, sigma=0.4, r=0.02, gamma=1.0, k1=1.0, h=1.0, n_levels=2,
        gain=fv.GainSpec.constant(2.0), debt=fv.DebtSpec(lam=0.1),
    )
    assert any("gamma" in v for v in fv.validate(model))


def test_validate_collects_multiple_violations():
    model = fv.FirmModel(
        mu=-1.0, sigma=0.4, r=0.02, gamma=1.5, k1=1.0, h=1.0, n_levels=2,
        gain=fv.GainSpec.constant(2.0), debt=fv.DebtSpec(lam=0.01),
    )
    assert len(fv.validate(model)) >= 3


def test_exponential_gain_values():
    g = fv.GainSpec.exponential(beta_bar=2.0, eta=1.0)
    assert g.value(0.0) == 0.0
    # 2*(1 - e^-1), checked by hand: e^-1 = 0.36787944117144233
    assert g.value(2.0) == pytest.approx(1.2642411176571153, abs=1e-15)
    assert g.value(200.0) == pytest.approx(2.0, abs=1e-12)


def test_table_gain_exact_lookup_only():
    g = fv.GainSpec.table([(1.0, 0.5), (2.0, 0.8)])
    assert g.value(2.0) == 0.8
    assert g.beta_bar == 0.8
    with pytest.raises(KeyError):
        g.value(1.5)


def test_gain_at_bounds_and_errors():
    model = reference_model()
    with pytest.raises(IndexError):
        fv.gain_at(model, 0)
    with pytest.raises(IndexError):
        fv.gain_at(model, 21)
    values = [fv.gain_at(model, i) for i in range(1, 21)]
    assert all(a <= b for a, b in zip(values, values[1:]))
    assert values[-1] <= model.beta_bar


@given(
    beta_bar=st.floats(0.5, 10.0),
    eta=st.floats(0.1, 5.0),
    k1=st.floats(0.05, 2.0),
    h=st.floats(0.05, 2.0),
    n=st.integers(1, 30),
)
def test_gain_monotone_bounded_for_any_ladder(beta_bar, eta, k1, h, n):
    model = fv.FirmModel(
        mu=0.25, sigma=0.4, r=0.02, gamma=0.0, k1=k1, h=h, n_levels=n,
        gain=fv.GainSpec.exponential(beta_bar, eta), debt=fv.DebtSpec(lam=0.1),
    )
    beta = model.beta_levels
    assert np.all(np.diff(beta) >= -1e-15)
    assert np.all(beta <= beta_bar + 1e-12)


def test_coefficients_drift_saturates():
    model = reference_model()
    k5 = model.levels[4]
    c1, c2 = fv.coefficients(model, (1 - model.gamma) * k5 + 0.3, 5)
    assert c1 == pytest.approx(0.25 * fv.gain_at(model, 5), rel=1e-14)
    assert c2 > 0


def test_coefficients_diffusion_value():
    # sigma = 0.40, beta = 2: C2 = sigma^2 beta^2 / 2 = 0.16 * 4 / 2 = 0.32
    model = fv.FirmModel(
        mu=0.25, sigma=0.40, r=0.02, gamma=0.0, k1=5.0, h=1.0, n_levels=1,
        gain=fv.GainSpec.constant(2.0), debt=fv.DebtSpec(lam=0.1),
    )
    _, c2 = fv.coefficients(model, 1.0, 1)
    assert c2 == pytest.approx(0.32, abs=1e-15)


def test_coefficients_full_draw():
    model = reference_model()
    k3 = model.levels[2]
    c1, _ = fv.coefficients(model, 0.0, 3)
    expected = 0.25 * fv.gain_at(model, 3) - 0.10 * (1 - model.gamma) * k3
    assert c1 == pytest.approx(expected, rel=1e-14)


def test_coefficients_monotone_in_x():
    model = reference_model()
    xs = np.linspace(0.0, 10.0, 57)
    c1, c2 = fv.coefficients(model, xs, 20)
    assert np.all(np.diff(c1) >= 0)
    assert np.all(c2 == c2[0])


def test_coefficients_index_error():
    with pytest.raises(IndexError):
        fv.coefficients(reference_model(), 1.0, 0)
