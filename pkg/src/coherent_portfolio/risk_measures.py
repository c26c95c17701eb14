"""Coherent risk measures on finite scenario spaces and their Gaussian coefficients.

Three law-invariant measures are supported: the negative expectation,
value-at-risk and average value-at-risk (AV@R).  On a finite scenario space
only the negative expectation and AV@R are coherent, so value-at-risk is
accepted exclusively through :func:`gaussian_coefficient`.

Conventions: ``Y`` holds portfolio returns per scenario (larger is better),
a risk is a number where larger is worse, and ``theta`` is the tail
probability (``theta=0.05`` looks at the worst 5% of outcomes).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidScenarioSpace,
    ThetaOutOfRange,
    UnsupportedDual,
)

PROB_SUM_TOL = 1e-12


class RiskKind(enum.Enum):
    NEG_EXPECTATION = "neg_expectation"
    VAR = "var"
    AVAR = "avar"


def _check_theta(theta) -> float:
    theta = float(theta)
    if not (0.0 < theta < 1.0):
        raise ThetaOutOfRange(f"theta must lie in (0, 1), got {theta!r}")
    return theta


@dataclass(frozen=True)
class RiskSpec:
    """A law-invariant risk measure: its kind and probability level."""

    kind: RiskKind
    theta: float | None = None

    def __post_init__(self):
        if self.kind is RiskKind.NEG_EXPECTATION:
            if self.theta is not None:
                raise ValueError("negative expectation takes no theta")
        else:
            object.__setattr__(self, "theta", _check_theta(self.theta))

    @classmethod
    def neg_expectation(cls) -> RiskSpec:
        return cls(RiskKind.NEG_EXPECTATION)

    @classmethod
    def var(cls, theta: float) -> RiskSpec:
        return cls(RiskKind.VAR, theta)

    @classmethod
    def avar(cls, theta: float) -> RiskSpec:
        return cls(RiskKind.AVAR, theta)

    @classmethod
    def parse(cls, text: str) -> RiskSpec:
        """Parse ``neg_expectation``, ``var:0.05`` or ``avar:0.05``."""
        name, _, level = text.strip().partition(":")
        name = name.strip().lower()
        if name == "neg_expectation":
            if level:
                raise ValueError("neg_expectation takes no level")
            return cls.neg_expectation()
        if name in ("var", "avar"):
            if not level:
                raise ValueError(f"{name} needs a level, e.g. {name}:0.05")
            return cls(RiskKind(name), float(level))
        raise ValueError(f"unknown risk measure {text!r}")

    @property
    def scenario_capable(self) -> bool:
        """True when the measure is coherent on arbitrary scenario spaces."""
        return self.kind is not RiskKind.VAR

    def __str__(self):
        if self.kind is RiskKind.NEG_EXPECTATION:
            return "neg_expectation"
        return f"{self.kind.value}:{self.theta:g}"


@dataclass(frozen=True)
class ScenarioSpace:
    """K equally or unequally weighted scenarios of n asset returns.

    Parameters
    ----------
    returns : (K, n) array
        Per-period return multiples of each asset in each scenario.
    probs : (K,) array
        Strictly positive scenario probabilities summing to one.
    """

    returns: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        returns = np.array(self.returns, dtype=float)
        probs = np.array(self.probs, dtype=float)
        if returns.ndim != 2:
            raise InvalidScenarioSpace("returns must be a K x n matrix")
        K, n = returns.shape
        if K < 1 or n < 2:
            raise InvalidScenarioSpace(f"need K >= 1 and n >= 2, got K={K}, n={n}")
        if probs.shape != (K,):
            raise DimensionMismatch(f"probs has shape {probs.shape}, expected ({K},)")
        if not np.all(np.isfinite(returns)) or not np.all(np.isfinite(probs)):
            raise InvalidScenarioSpace("non-finite entries")
        if np.any(probs <= 0):
            raise InvalidScenarioSpace("probabilities must be strictly positive")
        if abs(probs.sum() - 1.0) > PROB_SUM_TOL:
            raise InvalidScenarioSpace(f"probabilities sum to {probs.sum()!r}, not 1")
        returns.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "returns", returns)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def equiprobable(cls, returns) -> ScenarioSpace:
        returns = np.asarray(returns, dtype=float)
        K = returns.shape[0]
        return cls(returns, np.full(K, 1.0 / K))

    @property
    def n_scenarios(self) -> int:
        return self.returns.shape[0]

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]

    def portfolio_returns(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if w.shape != (self.n_assets,):
            raise DimensionMismatch(f"portfolio has shape {w.shape}, expected ({self.n_assets},)")
        return self.returns @ w

    def mean(self) -> np.ndarray:
        return self.probs @ self.returns


def _vectors(Y, probs):
    Y = np.asarray(Y, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if Y.ndim != 1 or Y.shape != probs.shape:
        raise DimensionMismatch(f"outcomes {Y.shape} and probabilities {probs.shape} disagree")
    return Y, probs


def neg_expectation(Y, probs) -> float:
    """Negative expected value ``-sum_k p_k Y_k``."""
    Y, probs = _vectors(Y, probs)
    return -float(probs @ Y)


def avar_density(Y, probs, theta) -> np.ndarray:
    """Maximizing density of the AV@R dual representation.

    Puts weight ``1/theta`` on the worst outcomes until their probability
    mass reaches ``theta``; the boundary atom gets the fractional remainder.
    Ties are broken by scenario index (stable sort), so the result is one
    vertex of the maximizing face.
    """
    Y, probs = _vectors(Y, probs)
    theta = _check_theta(theta)
    order = np.argsort(Y, kind="stable")
    mass_before = np.concatenate(([0.0], np.cumsum(probs[order])[:-1]))
    taken = np.clip(theta - mass_before, 0.0, probs[order])
    V = np.empty_like(Y)
    V[order] = taken / (probs[order] * theta)
    return V


def avar_scenario(Y, probs, theta) -> float:
    """Average value-at-risk of a discrete outcome vector.

    Equals ``min_t t + E[(-Y - t)^+] / theta``; evaluated exactly as the
    probability-weighted average of the worst ``theta`` mass of outcomes.
    """
    Y, probs = _vectors(Y, probs)
    V = avar_density(Y, probs, theta)
    return -float(np.sum(probs * V * Y))


def evaluate(spec: RiskSpec, Y, probs) -> float:
    """Risk of outcome vector ``Y`` under a scenario-capable measure."""
    if spec.kind is RiskKind.NEG_EXPECTATION:
        return neg_expectation(Y, probs)
    if spec.kind is RiskKind.AVAR:
        return avar_scenario(Y, probs, spec.theta)
    raise UnsupportedDual("value-at-risk is not coherent on scenario spaces")


# Gaussian quantile: Cephes ``ndtri`` rational approximations.
_S2PI = 2.50662827463100050242
_EXP_M2 = 0.13533528323661269189  # exp(-2)

_P0 = (-5.99633501014107895267e1, 9.80010754185999661536e1, -5.66762857469070293439e1,
       1.39312609387279679503e1, -1.23916583867381258016e0)
_Q0 = (1.0, 1.95448858338141759834e0, 4.67627912898881538453e0, 8.63602421390890590575e1,
       -2.25462687854119370527e2, 2.00260212380060660359e2, -8.20372256168333339912e1,
       1.59056225126211695515e1, -1.18331621121330003142e0)
_P1 = (4.05544892305962419923e0, 3.15251094599893866154e1, 5.71628192246421288162e1,
       4.40805073893200834700e1, 1.46849561928858024014e1, 2.18663306850790267539e0,
       -1.40256079171354495875e-1, -3.50424626827848203418e-2, -8.57456785154685413611e-4)
_Q1 = (1.0, 1.57799883256466749731e1, 4.53907635128879210584e1, 4.13172038254672030440e1,
       1.50425385692907503408e1, 2.50464946208309415979e0, -1.42182922854787788574e-1,
       -3.80806407691578277194e-2, -9.33259480895457427372e-4)
_P2 = (3.23774891776946035970e0, 6.91522889068984211695e0, 3.93881025292474443415e0,
       1.33303460815807542389e0, 2.01485389549179081538e-1, 1.23716634817820021358e-2,
       3.01581553508235416007e-4, 2.65806974686737550832e-6, 6.23974539184983293730e-9)
_Q2 = (1.0, 6.02427039364742014255e0, 3.67983563856160859403e0, 1.37702099489081330271e0,
       2.16236993594496635890e-1, 1.34204006088543189037e-2, 3.28014464682127739104e-4,
       2.89247864745380683936e-6, 6.79019408009981274425e-9)


def _polevl(x, coef):
    acc = 0.0
    for c in coef:
        acc = acc * x + c
    return acc


def norm_ppf(p: float) -> float:
    """Standard Gaussian quantile function for ``p`` in (0, 1)."""
    p = float(p)
    if not (0.0 < p < 1.0):
        raise ThetaOutOfRange(f"probability must lie in (0, 1), got {p!r}")
    negate = True
    y = p
    if y > 1.0 - _EXP_M2:
        y = 1.0 - y
        negate = False
    if y > _EXP_M2:
        y -= 0.5
        y2 = y * y
        return (y + y * (y2 * _polevl(y2, _P0) / _polevl(y2, _Q0))) * _S2PI
    x = math.sqrt(-2.0 * math.log(y))
    x0 = x - math.log(x) / x
    z = 1.0 / x
    if x < 8.0:
        x1 = z * _polevl(z, _P1) / _polevl(z, _Q1)
    else:
        x1 = z * _polevl(z, _P2) / _polevl(z, _Q2)
    x = x0 - x1
    return -x if negate else x


def norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def var_gaussian_coeff(theta: float) -> float:
    """V@R of a standard Gaussian at level ``theta``: ``Phi^{-1}(1 - theta)``."""
    theta = _check_theta(theta)
    # Phi^{-1}(1 - theta) = -Phi^{-1}(theta) avoids cancellation in 1 - theta.
    return -norm_ppf(theta)


def avar_gaussian_coeff(theta: float) -> float:
    """AV@R of a standard Gaussian at level ``theta``.

    Closed form ``phi(Phi^{-1}(1 - theta)) / theta`` of the tail average
    ``(1/theta) * int_0^theta Phi^{-1}(1 - u) du``.
    """
    theta = _check_theta(theta)
    return norm_pdf(var_gaussian_coeff(theta)) / theta


def gaussian_coefficient(spec: RiskSpec) -> float:
    """The scalar ``rho(Z)`` for a standard Gaussian ``Z``.

    For Gaussian returns, ``rho(w'X) = rho(Z) * sqrt(w'Cw) - m'w``.
    """
    if spec.kind is RiskKind.NEG_EXPECTATION:
        return 0.0
    if spec.kind is RiskKind.VAR:
        return var_gaussian_coeff(spec.theta)
    return avar_gaussian_coeff(spec.theta)


@dataclass(frozen=True)
class DensityBounds:
    """Box and normalization description of a dual density set.

    ``lower``/``upper`` bound each density coordinate; when ``normalized``
    is set, the density must also satisfy ``sum_k p_k V_k = 1``.
    """

    lower: np.ndarray
    upper: np.ndarray
    normalized: bool

    @property
    def fixed(self) -> bool:
        return bool(np.all(self.lower == self.upper))


def dual_density_bounds(spec: RiskSpec, K: int) -> DensityBounds:
    """Describe the dual density set of ``spec`` on a K-scenario space."""
    if spec.kind is RiskKind.VAR:
        raise UnsupportedDual("value-at-risk has no coherent dual density set")
    if K < 1:
        raise ValueError("K must be positive")
    if spec.kind is RiskKind.NEG_EXPECTATION:
        ones = np.ones(K)
        return DensityBounds(ones, ones.copy(), normalized=False)
    return DensityBounds(np.zeros(K), np.full(K, 1.0 / spec.theta), normalized=True)
