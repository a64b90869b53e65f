"""Economic primitives of the cash-constrained firm.

A firm runs productive assets on a ladder of N capital levels
k_i = k1 + (i-1)*h, earns cash flows with gain rate beta(k_i), draws on a
collateralized credit line at cost alpha(.) when equity is short, and pays a
proportional cost gamma per unit of capital switched. Everything downstream
(grid, assembly, solver) consumes these primitives through `FirmModel`.

Working coordinate: the solver operates on shifted equity x = X - gamma*k_i,
so that liquidation sits at x = 0 for every level. The drift/diffusion pair
in that coordinate is provided by `coefficients`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["GainSpec", "DebtSpec", "FirmModel", "validate", "gain_at", "coefficients"]


@dataclass(frozen=True, eq=False)
class GainSpec:
    """Gain-rate function beta evaluated on the capital levels.

    Variants:
      exponential  beta(x) = beta_bar * (1 - exp(-eta * x / beta_bar))
      constant     beta(x) = beta_bar
      table        explicit (level, value) pairs; no interpolation, capital
                   is discrete so beta is only ever needed at the k_i
    """

    variant: str
    beta_bar: float = 0.0
    eta: float = 0.0
    pairs: tuple[tuple[float, float], ...] = ()

    @classmethod
    def exponential(cls, beta_bar: float, eta: float) -> "GainSpec":
        return cls(variant="exponential", beta_bar=float(beta_bar), eta=float(eta))

    @classmethod
    def constant(cls, beta_bar: float) -> "GainSpec":
        return cls(variant="constant", beta_bar=float(beta_bar))

    @classmethod
    def table(cls, pairs) -> "GainSpec":
        tup = tuple((float(k), float(v)) for k, v in sorted(pairs))
        bb = max((v for _, v in tup), default=0.0)
        return cls(variant="table", beta_bar=bb, pairs=tup)

    def value(self, x: float) -> float:
        if self.variant == "exponential":
            return self.beta_bar * (1.0 - math.exp(-self.eta * x / self.beta_bar))
        if self.variant == "constant":
            return self.beta_bar
        if self.variant == "table":
            for k, v in self.pairs:
                if math.isclose(k, x, rel_tol=1e-12, abs_tol=1e-12):
                    return v
            raise KeyError(f"gain table has no entry for capital level {x!r}")
        raise ValueError(f"unknown gain variant {self.variant!r}")


@dataclass(frozen=True, eq=False)
class DebtSpec:
    """Credit-line cost alpha. Linear variant: alpha(x) = lam * x.

    Any replacement must keep alpha(0) = 0 and slope > r so the line is
    profitable for the lender; `validate` enforces this for the linear case.
    """

    lam: float

    def cost(self, drawn: float) -> float:
        return self.lam * drawn

    def cost_vec(self, drawn: np.ndarray) -> np.ndarray:
        return self.lam * drawn


@dataclass(frozen=True, eq=False)
class FirmModel:
    """Immutable bundle of economic parameters.

    beta_bar is the upper bound of the gain function (the exponential
    variant's asymptote); it dominates beta(k_i) at every level and is the
    constant entering the value bound mu*beta_bar/r + x_max and the
    M-matrix witness scale.
    """

    mu: float
    sigma: float
    r: float
    gamma: float
    k1: float
    h: float
    n_levels: int
    gain: GainSpec
    debt: DebtSpec
    levels: np.ndarray = field(init=False, repr=False)
    beta_levels: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        ks = self.k1 + self.h * np.arange(self.n_levels, dtype=float)
        object.__setattr__(self, "levels", ks)
        object.__setattr__(
            self, "beta_levels", np.array([self.gain.value(k) for k in ks])
        )

    @property
    def beta_bar(self) -> float:
        return self.gain.beta_bar

    @property
    def value_bound(self) -> float:
        """Uniform bound mu*beta_bar/r on the dividend value of perpetual flows."""
        return self.mu * self.beta_bar / self.r


def validate(model: FirmModel) -> list[str]:
    """Collect every violated admissibility constraint; empty list = valid."""
    bad = []
    if not model.mu > 0:
        bad.append("mu must be positive")
    if not model.sigma > 0:
        bad.append("sigma must be positive")
    if not model.r > 0:
        bad.append("r must be positive")
    if not model.k1 > 0:
        bad.append("k1 must be positive")
    if not model.h > 0:
        bad.append("h must be positive")
    if model.n_levels < 1:
        bad.append("n_levels must be >= 1")
    if not 0.0 <= model.gamma < 1.0:
        bad.append("gamma out of [0,1)")

    if model.n_levels >= 1 and model.h > 0 and model.k1 > 0:
        try:
            beta = model.beta_levels
        except KeyError as exc:
            bad.append(f"gain table incomplete: {exc}")
            return bad
        if np.any(np.diff(beta) < 0):
            bad.append("gain must be non-decreasing across capital levels")
        if np.any(beta > model.beta_bar * (1 + 1e-12)):
            bad.append("gain exceeds beta_bar")
        if not np.all(np.isfinite(beta)):
            bad.append("gain unbounded on capital levels")

    if model.debt.cost(0.0) != 0.0:
        bad.append("debt cost must vanish at zero draw")
    if not model.debt.lam > model.r:
        bad.append("debt slope <= r")
    return bad


def gain_at(model: FirmModel, level_index: int) -> float:
    """beta(k_i) for the 1-based level index."""
    if not 1 <= level_index <= model.n_levels:
        raise IndexError(f"level index {level_index} outside 1..{model.n_levels}")
    return float(model.beta_levels[level_index - 1])


def coefficients(model: FirmModel, x, level_index: int):
    """Drift and diffusion coefficients at shifted equity x for a level.

    C1(x, k_i) = mu*beta(k_i) - alpha(((1-gamma)*k_i - x)^+)
    C2(x, k_i) = sigma^2 * beta(k_i)^2 / 2

    Credit is drawn only while x < (1-gamma)*k_i; beyond that the drift is
    the pure gain mu*beta(k_i). Accepts scalar or array x.
    """
    if not 1 <= level_index <= model.n_levels:
        raise IndexError(f"level index {level_index} outside 1..{model.n_levels}")
    beta = model.beta_levels[level_index - 1]
    k = model.levels[level_index - 1]
    drawn = np.maximum((1.0 - model.gamma) * k - np.asarray(x, dtype=float), 0.0)
    c1 = model.mu * beta - model.debt.cost_vec(drawn)
    c2 = 0.5 * (model.sigma * beta) ** 2
    if np.ndim(x) == 0:
        return float(c1), float(c2)
    return c1, np.full_like(c1, c2)
