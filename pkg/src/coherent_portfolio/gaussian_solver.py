"""Closed-form solution of the two-risk portfolio problem for Gaussian returns.

With jointly Gaussian returns and law-invariant coherent measures, each risk
is ``rho_j * sigma_w - mu_w`` where ``rho_j = rho_j(Z)`` for a standard
Gaussian ``Z``.  The problem

    minimize    rho1 * sigma - mu
    subject to  rho2 * sigma - mu <= r,   1'w = 1

is solved on the Markowitz hyperbola.  Which case applies depends on how
``rho1`` and ``rho2`` compare with the asymptote slope ``sqrt(delta/gamma)``.
Every optimal portfolio is rebuilt as ``w(mu)`` at the optimal mean.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidProblem
from .markowitz import GaussianMarket, min_variance_portfolio, mu_of_sigma

SLOPE_RTOL = 1e-9


class Outcome(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    INFIMUM_NOT_ATTAINED = "infimum_not_attained"


@dataclass(frozen=True)
class GaussianProblem:
    """Gaussian instance: market, the two Gaussian coefficients and the bound r."""

    market: GaussianMarket
    rho1: float
    rho2: float
    r: float

    def __post_init__(self):
        for name in ("rho1", "rho2", "r"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidProblem(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.rho1 < 0 or self.rho2 < 0:
            raise InvalidProblem("Gaussian coefficients must be nonnegative")


@dataclass
class SolveOutcome:
    """Tagged result shared by the closed-form and the scenario solvers.

    ``value`` is the optimal value for OPTIMAL, the finite infimum for
    INFIMUM_NOT_ATTAINED, ``-inf`` for UNBOUNDED and ``nan`` for INFEASIBLE.
    """

    tag: Outcome
    value: float
    case_label: str
    portfolio: np.ndarray | None = None
    sigma: float | None = None
    mu: float | None = None
    details: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.tag is Outcome.OPTIMAL


@dataclass(frozen=True)
class Thresholds:
    """Critical levels of the risk bound; ``None`` where undefined."""

    slope: float
    r_zero: float
    r_star: float | None = None
    sigma_star: float | None = None
    mu_star: float | None = None
    r_minus: float | None = None
    r_plus: float | None = None


def compare_slope(rho: float, slope: float) -> int:
    """-1, 0 or +1 as ``rho`` is below, within tolerance of, or above ``slope``."""
    if abs(rho - slope) <= SLOPE_RTOL * max(1.0, slope):
        return 0
    return -1 if rho < slope else 1


def thresholds(problem: GaussianProblem) -> Thresholds:
    mk = problem.market
    b, g, d = mk.beta, mk.gamma, mk.delta
    rho1, rho2 = problem.rho1, problem.rho2
    slope = mk.slope
    kw = {}
    if compare_slope(rho1, slope) > 0:
        root = math.sqrt(g * rho1 * rho1 - d)
        sigma_star = rho1 / root
        mu_star = b / g + d / (g * root)
        kw.update(sigma_star=sigma_star, mu_star=mu_star, r_star=rho2 * sigma_star - mu_star)
    if compare_slope(rho2, slope) > 0:
        root = math.sqrt(g * rho2 * rho2 - d)
        kw.update(r_minus=(-b - root) / g, r_plus=(-b + root) / g)
    return Thresholds(slope=slope, r_zero=rho2 / math.sqrt(g) - b / g, **kw)


def discriminant(problem: GaussianProblem, r: float | None = None) -> float:
    """Discriminant of the hyperbola/line intersection quadratic in sigma."""
    mk = problem.market
    r = problem.r if r is None else r
    return 4.0 / mk.delta * (mk.gamma * r * r + 2 * mk.beta * r + mk.alpha - problem.rho2**2)


@dataclass(frozen=True)
class Intersection:
    """Points where the hyperbola meets the line ``rho2*sigma - mu = r``.

    ``kind`` is ``"two"``, ``"tangent"``, ``"single"`` (line parallel to an
    asymptote) or ``"empty"``.  ``plus`` and ``minus`` follow the +/- root
    labelling of the quadratic; ``single`` holds the parallel-case point.
    """

    kind: str
    plus: tuple[float, float] | None = None
    minus: tuple[float, float] | None = None
    single: tuple[float, float] | None = None


def intersect_line(problem: GaussianProblem, r: float | None = None) -> Intersection:
    mk = problem.market
    a, b, g, d = mk.alpha, mk.beta, mk.gamma, mk.delta
    rho2 = problem.rho2
    r = problem.r if r is None else r
    regime = compare_slope(rho2, mk.slope)
    if regime == 0:
        if g * r + b == 0.0:
            return Intersection("empty")
        sigma = (g * r * r + 2 * b * r + a) / (2 * rho2 * (g * r + b))
        return Intersection("single", single=(sigma, rho2 * sigma - r))

    rad = d * (g * r * r + 2 * b * r + a - rho2 * rho2)
    if regime > 0 and abs(rad) <= 1e-12 * d * max(1.0, g * r * r, a):
        rad = 0.0  # rounding noise around the tangency at r = r+
    if rad < 0.0:
        return Intersection("empty")
    root = math.sqrt(rad)
    denom = d - g * rho2 * rho2
    s_plus = (-(g * r + b) * rho2 + root) / denom
    s_minus = (-(g * r + b) * rho2 - root) / denom
    plus = (s_plus, rho2 * s_plus - r)
    minus = (s_minus, rho2 * s_minus - r)
    return Intersection("tangent" if root == 0.0 else "two", plus=plus, minus=minus)


def _optimal(problem, mu, label, th, sigma=None):
    mk = problem.market
    w = min_variance_portfolio(mk, mu)
    if sigma is None:
        sigma = mk.portfolio_sigma(w)
    return SolveOutcome(
        Outcome.OPTIMAL,
        problem.rho1 * sigma - mu,
        label,
        portfolio=w,
        sigma=sigma,
        mu=mu,
        details={"thresholds": th},
    )


def solve(problem: GaussianProblem) -> SolveOutcome:
    """Classify the instance and return the optimal portfolio when it exists."""
    mk = problem.market
    r = problem.r
    th = thresholds(problem)
    infimum = -mk.beta / mk.gamma
    c1 = compare_slope(problem.rho1, th.slope)
    c2 = compare_slope(problem.rho2, th.slope)

    def unattained(label):
        if c1 < 0:
            return SolveOutcome(Outcome.UNBOUNDED, -math.inf, f"{label}(i): rho1 < slope",
                                details={"thresholds": th})
        return SolveOutcome(Outcome.INFIMUM_NOT_ATTAINED, infimum, f"{label}(ii): rho1 = slope",
                            details={"thresholds": th})

    def at_star(label):
        return _optimal(problem, th.mu_star, f"{label}: r >= r*", th, sigma=th.sigma_star)

    if c2 < 0:
        if c1 <= 0:
            return unattained("rho2<slope")
        if r >= th.r_star:
            return at_star("rho2<slope(iii)")
        sigma, mu = intersect_line(problem).plus
        return _optimal(problem, mu, "rho2<slope(iii): r < r*, upper intersection", th, sigma)

    if c2 > 0:
        if r < th.r_plus:
            return SolveOutcome(Outcome.INFEASIBLE, math.nan, "rho2>slope: r < r+",
                                details={"thresholds": th})
        cut = intersect_line(problem)
        if c1 <= 0:
            sigma, mu = cut.minus
            return _optimal(problem, mu, "rho2>slope(i): rho1 <= slope, far intersection", th, sigma)
        if r >= th.r_star:
            return at_star("rho2>slope(ii)")
        if problem.rho1 < problem.rho2:
            sigma, mu = cut.minus
            return _optimal(problem, mu, "rho2>slope(ii)a: r+ <= r < r*, rho1 < rho2", th, sigma)
        sigma, mu = cut.plus
        return _optimal(problem, mu, "rho2>slope(ii)b: r+ <= r < r*, rho1 > rho2", th, sigma)

    if r <= infimum:
        return SolveOutcome(Outcome.INFEASIBLE, math.nan, "rho2=slope: r <= -beta/gamma",
                            details={"thresholds": th})
    if c1 <= 0:
        return unattained("rho2=slope")
    if r >= th.r_star:
        return at_star("rho2=slope(iii)")
    sigma, mu = intersect_line(problem).single
    return _optimal(problem, mu, "rho2=slope(iii): r < r*, single intersection", th, sigma)


def epsilon_portfolio(problem: GaussianProblem, epsilon: float) -> np.ndarray:
    """A feasible portfolio within ``epsilon`` of an unattained infimum.

    Only meaningful when ``rho1`` equals the asymptote slope and the
    instance is feasible.  Walks up the upper branch far enough that
    ``slope*sigma - mu(sigma)`` is within ``epsilon`` of ``-beta/gamma``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    outcome = solve(problem)
    if outcome.tag is not Outcome.INFIMUM_NOT_ATTAINED:
        raise InvalidProblem(f"no unattained infimum here (outcome {outcome.tag.value})")
    mk = problem.market
    if compare_slope(problem.rho2, mk.slope) == 0:
        start = intersect_line(problem).single[0]
    else:
        start = intersect_line(problem).plus[0]
    # gap(sigma) = slope / (gamma * (sigma + sqrt(sigma^2 - 1/gamma))) <= slope / (gamma * sigma)
    sigma = max(start, 1.0 / math.sqrt(mk.gamma), mk.slope / (mk.gamma * epsilon)) * (1 + 1e-9)
    return min_variance_portfolio(mk, mu_of_sigma(mk, sigma))
