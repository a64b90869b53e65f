"""Run configuration: flat key-value files plus command-line overrides.

Grammar (see docs/formats.md): one `key = value` pair per line, dotted
section keys, `#` comments, blank lines ignored. Exactly one of model.h /
model.k_max may be given; k_max implies h = (k_max - k1)/(N - 1) when k1 is
set explicitly, and h = k1 = k_max/N otherwise (uniform ladder ending at
k_max).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .grid import Grid, build_grid
from .model import DebtSpec, FirmModel, GainSpec, validate
from .solver import SolverConfig

__all__ = ["ConfigError", "RunConfig", "parse_kv_text", "load_config", "apply_overrides"]


class ConfigError(ValueError):
    """Malformed configuration file or inconsistent option set."""


_DEFAULTS = {
    "model.mu": "0.25",
    "model.sigma": "0.40",
    "model.r": "0.02",
    "model.gamma": "1e-3",
    "model.n_levels": "20",
    "model.k_max": "10.0",
    "model.gain.variant": "exponential",
    "model.gain.beta_bar": "2.0",
    "model.gain.eta": "1.0",
    "model.debt.lambda": "0.10",
    "grid.x_max": "10.0",
    "grid.m_points": "2001",
    "solver.tol": "1e-8",
    "solver.max_iter": "200",
    "outputs.directory": "out",
    "outputs.emit": "all",
    "mc.enabled": "false",
    "mc.n_paths": "20000",
    "mc.horizon": "300.0",
    "mc.seed": "0",
    "mc.n_starts": "10",
}

_KNOWN = set(_DEFAULTS) | {
    "model.k1",
    "model.h",
    "model.gain.table",
    "sweep.key",
    "sweep.values",
    "mc.dt",
    "refine.doublings",
}


@dataclass
class RunConfig:
    model: FirmModel
    grid: Grid
    solver: SolverConfig
    output_dir: str
    emit: str
    sweep_key: str | None = None
    sweep_values: list[str] = field(default_factory=list)
    mc_enabled: bool = False
    mc_dt: float | None = None
    mc_n_paths: int = 20_000
    mc_horizon: float = 300.0
    mc_seed: int = 0
    mc_n_starts: int = 10
    refine_doublings: int = 0
    raw: dict[str, str] = field(default_factory=dict)


def parse_kv_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse the flat `key = value` grammar into a string map."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError(f"{source}:{lineno}: empty key or value")
        if key not in _KNOWN:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _as_float(kv, key):
    try:
        return float(kv[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: not a number: {kv[key]!r}") from exc


def _as_int(kv, key):
    try:
        return int(kv[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: not an integer: {kv[key]!r}") from exc


def _as_bool(kv, key):
    val = kv[key].lower()
    if val in ("true", "1", "yes", "on"):
        return True
    if val in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"{key}: not a boolean: {kv[key]!r}")


def _build_gain(kv) -> GainSpec:
    variant = kv["model.gain.variant"]
    if variant == "exponential":
        return GainSpec.exponential(
            _as_float(kv, "model.gain.beta_bar"), _as_float(kv, "model.gain.eta")
        )
    if variant == "constant":
        return GainSpec.constant(_as_float(kv, "model.gain.beta_bar"))
    if variant == "table":
        pairs = []
        try:
            for item in kv["model.gain.table"].split(";"):
                k, v = item.split(":")
                pairs.append((float(k), float(v)))
        except (KeyError, ValueError) as exc:
            raise ConfigError(
                "model.gain.table: expected 'k1:v1; k2:v2; ...'"
            ) from exc
        return GainSpec.table(pairs)
    raise ConfigError(f"model.gain.variant: unknown variant {variant!r}")


def _capital_ladder(kv) -> tuple[float, float]:
    """Resolve (k1, h) from the h / k_max alternatives."""
    has_h = "model.h" in kv
    has_kmax = "model.k_max" in kv
    if has_h and has_kmax:
        raise ConfigError("give exactly one of model.h / model.k_max, got both")
    if not has_h and not has_kmax:
        raise ConfigError("give exactly one of model.h / model.k_max")
    n = _as_int(kv, "model.n_levels")
    if has_h:
        h = _as_float(kv, "model.h")
        k1 = _as_float(kv, "model.k1") if "model.k1" in kv else h
        return k1, h
    k_max = _as_float(kv, "model.k_max")
    if "model.k1" in kv:
        k1 = _as_float(kv, "model.k1")
        if n < 2:
            raise ConfigError("model.k_max with explicit model.k1 needs n_levels >= 2")
        return k1, (k_max - k1) / (n - 1)
    h = k_max / n
    return h, h


def build_run_config(kv: dict[str, str]) -> RunConfig:
    merged = dict(_DEFAULTS)
    # defaults carry k_max; an explicit h replaces it
    if "model.h" in kv:
        merged.pop("model.k_max", None)
    merged.update(kv)
    k1, h = _capital_ladder(merged)
    model = FirmModel(
        mu=_as_float(merged, "model.mu"),
        sigma=_as_float(merged, "model.sigma"),
        r=_as_float(merged, "model.r"),
        gamma=_as_float(merged, "model.gamma"),
        k1=k1,
        h=h,
        n_levels=_as_int(merged, "model.n_levels"),
        gain=_build_gain(merged),
        debt=DebtSpec(lam=_as_float(merged, "model.debt.lambda")),
    )
    violations = validate(model)
    if violations:
        raise ConfigError("invalid model: " + "; ".join(violations))
    grid = build_grid(_as_float(merged, "grid.x_max"), _as_int(merged, "grid.m_points"))
    solver = SolverConfig(
        tol=_as_float(merged, "solver.tol"), max_iter=_as_int(merged, "solver.max_iter")
    )
    emit = merged["outputs.emit"]
    if emit not in ("values", "regions", "boundaries", "all"):
        raise ConfigError(f"outputs.emit: unknown artifact set {emit!r}")

    sweep_key = merged.get("sweep.key")
    sweep_values: list[str] = []
    if sweep_key is not None:
        if sweep_key not in _KNOWN:
            raise ConfigError(f"sweep.key: unknown key {sweep_key!r}")
        raw_values = merged.get("sweep.values", "")
        sweep_values = [v.strip() for v in raw_values.split(",") if v.strip()]
        if not sweep_values:
            raise ConfigError("sweep.values: need a non-empty comma-separated list")

    return RunConfig(
        model=model,
        grid=grid,
        solver=solver,
        output_dir=merged["outputs.directory"],
        emit=emit,
        sweep_key=sweep_key,
        sweep_values=sweep_values,
        mc_enabled=_as_bool(merged, "mc.enabled"),
        mc_dt=_as_float(merged, "mc.dt") if "mc.dt" in merged else None,
        mc_n_paths=_as_int(merged, "mc.n_paths"),
        mc_horizon=_as_float(merged, "mc.horizon"),
        mc_seed=_as_int(merged, "mc.seed"),
        mc_n_starts=_as_int(merged, "mc.n_starts"),
        refine_doublings=_as_int(merged, "refine.doublings")
        if "refine.doublings" in merged
        else 0,
        raw=merged,
    )


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return build_run_config({})
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return build_run_config(parse_kv_text(text, source=path))


def apply_overrides(cfg: RunConfig, kv: dict[str, str]) -> RunConfig:
    """Re-build the configuration with flag overrides layered on top."""
    merged = dict(cfg.raw)
    if "model.h" in kv:
        merged.pop("model.k_max", None)
    merged.update(kv)
    return build_run_config(merged)
