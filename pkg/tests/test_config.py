import pytest

from firmvalue.config import ConfigError, apply_overrides, build_run_config, load_config, parse_kv_text


def test_parse_kv_grammar():
    text = """
    # comment line
    model.mu = 0.3

    grid.m_points = 501
    """
    kv = parse_kv_text(text)
    assert kv == {"model.mu": "0.3", "grid.m_points": "501"}


def test_parse_rejects_unknown_and_malformed():
    with pytest.raises(ConfigError):
        parse_kv_text("model.unknown = 1")
    with pytest.raises(ConfigError):
        parse_kv_text("just a line")
    with pytest.raises(ConfigError):
        parse_kv_text("model.mu = ")


def test_defaults_reproduce_reference_configuration():
    cfg = build_run_config({})
    assert cfg.model.n_levels == 20
    assert cfg.model.h == pytest.approx(0.5)
    assert cfg.model.k1 == pytest.approx(0.5)  # k1 defaults to k_max/N
    assert cfg.grid.m_points == 2001
    assert cfg.solver.tol == 1e-8
    assert cfg.solver.max_iter == 200


def test_ladder_with_explicit_k1():
    cfg = build_run_config({"model.k1": "0.5", "model.k_max": "10.0", "model.n_levels": "20"})
    assert cfg.model.k1 == 0.5
    assert cfg.model.h == pytest.approx(9.5 / 19)
    assert cfg.model.levels[-1] == pytest.approx(10.0)


def test_h_and_k_max_are_exclusive():
    with pytest.raises(ConfigError):
        build_run_config({"model.h": "0.5", "model.k_max": "10.0"})
    cfg = build_run_config({"model.h": "0.25"})
    assert cfg.model.h == 0.25
    assert cfg.model.k1 == 0.25


def test_gain_variants():
    cfg = build_run_config({"model.gain.variant": "constant", "model.gain.beta_bar": "3.0"})
    assert cfg.model.gain.value(123.0) == 3.0
    cfg = build_run_config(
        {
            "model.gain.variant": "table",
            "model.gain.table": "0.5:0.1; 1.0:0.2",
            "model.n_levels": "2",
            "model.k_max": "1.0",
        }
    )
    assert cfg.model.beta_levels[1] == pytest.approx(0.2)
    with pytest.raises(ConfigError):
        build_run_config({"model.gain.variant": "cubic"})


def test_invalid_model_is_a_config_error():
    with pytest.raises(ConfigError):
        build_run_config({"model.debt.lambda": "0.001"})  # slope below r


def test_sweep_requires_values():
    with pytest.raises(ConfigError):
        build_run_config({"sweep.key": "model.gamma"})
    cfg = build_run_config({"sweep.key": "model.gamma", "sweep.values": "0.05, 0.1"})
    assert cfg.sweep_values == ["0.05", "0.1"]


def test_bad_numbers_are_reported():
    with pytest.raises(ConfigError):
        build_run_config({"model.mu": "fast"})
    with pytest.raises(ConfigError):
        build_run_config({"grid.m_points": "many"})
    with pytest.raises(ConfigError):
        build_run_config({"mc.enabled": "maybe"})


def test_load_config_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/path.cfg")


def test_apply_overrides_rebuilds(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("model.gamma = 0.05\ngrid.m_points = 301\n")
    cfg = load_config(str(path))
    assert cfg.model.gamma == 0.05
    cfg2 = apply_overrides(cfg, {"grid.m_points": "501"})
    assert cfg2.grid.m_points == 501
    assert cfg2.model.gamma == 0.05
