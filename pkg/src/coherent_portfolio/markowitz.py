"""Gaussian market statistics and the Markowitz minimum-variance hyperbola.

Every closed-form result downstream is expressed through the four scalars

    alpha = m' C^-1 m,  beta = m' C^-1 1,  gamma = 1' C^-1 1,
    delta = alpha * gamma - beta**2,

which are computed once when the market is built.  ``delta`` and ``w(mu)``
are evaluated through the centered mean ``m - (beta/gamma) 1``; this is the
same algebra without the cancellation in ``alpha*gamma - beta**2`` when
``m`` is close to a multiple of the ones vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import (
    DimensionMismatch,
    MeanParallelToOnes,
    NotPositiveDefinite,
    SigmaBelowCorner,
)

PIVOT_RTOL = 1e-10
PARALLEL_RTOL = 1e-10
CORNER_REJECT = 1e-9


@dataclass(frozen=True)
class GaussianMarket:
    """Mean vector and covariance of jointly Gaussian asset returns.

    Build through :func:`build_market`, which validates the inputs.
    """

    m: np.ndarray
    C: np.ndarray
    Cinv: np.ndarray = field(repr=False)
    Cinv_m: np.ndarray = field(repr=False)
    Cinv_1: np.ndarray = field(repr=False)
    tilt: np.ndarray = field(repr=False)
    alpha: float
    beta: float
    gamma: float
    delta: float

    @property
    def n(self) -> int:
        return self.m.shape[0]

    @property
    def slope(self) -> float:
        """Slope ``sqrt(delta/gamma)`` of the hyperbola's asymptotes."""
        return math.sqrt(self.delta / self.gamma)

    @property
    def corner(self) -> tuple[float, float]:
        """Global minimum-variance point ``(1/sqrt(gamma), beta/gamma)``."""
        return 1.0 / math.sqrt(self.gamma), self.beta / self.gamma

    def portfolio_sigma(self, w) -> float:
        w = np.asarray(w, dtype=float)
        return math.sqrt(max(float(w @ self.C @ w), 0.0))

    def portfolio_mu(self, w) -> float:
        return float(self.m @ np.asarray(w, dtype=float))


def build_market(m, C) -> GaussianMarket:
    """Validate ``(m, C)`` and precompute the inverse and hyperbola constants.

    Raises
    ------
    DimensionMismatch
        Shapes disagree or fewer than two assets.
    NotPositiveDefinite
        Cholesky fails or a pivot is below ``1e-10 * max(diag C)``.
    MeanParallelToOnes
        ``m`` is numerically a multiple of the ones vector.
    """
    m = np.array(m, dtype=float)
    C = np.array(C, dtype=float)
    if m.ndim != 1 or m.shape[0] < 2:
        raise DimensionMismatch(f"need a mean vector with n >= 2 entries, got shape {m.shape}")
    n = m.shape[0]
    if C.shape != (n, n):
        raise DimensionMismatch(f"covariance has shape {C.shape}, expected ({n}, {n})")
    if not (np.all(np.isfinite(m)) and np.all(np.isfinite(C))):
        raise DimensionMismatch("non-finite market data")
    if not np.allclose(C, C.T, rtol=1e-12, atol=1e-14 * np.abs(C).max()):
        raise NotPositiveDefinite("covariance matrix is not symmetric")
    C = 0.5 * (C + C.T)

    try:
        L = np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("covariance matrix is not positive definite") from None
    pivots = np.diag(L) ** 2
    if pivots.min() <= PIVOT_RTOL * np.diag(C).max():
        raise NotPositiveDefinite(
            f"covariance is numerically singular (smallest pivot {pivots.min():.3e})"
        )

    scale = np.abs(m).max()
    resid = m - m.mean()
    if scale == 0.0 or np.abs(resid).max() <= PARALLEL_RTOL * scale:
        raise MeanParallelToOnes("mean vector is parallel to the ones vector")

    factor = (L, True)
    Cinv = linalg.cho_solve(factor, np.eye(n))
    Cinv = 0.5 * (Cinv + Cinv.T)
    Cinv_m = linalg.cho_solve(factor, m)
    Cinv_1 = linalg.cho_solve(factor, np.ones(n))
    alpha = float(m @ Cinv_m)
    beta = float(m @ Cinv_1)
    gamma = float(Cinv_1.sum())
    centered = m - beta / gamma
    Cinv_c = Cinv_m - (beta / gamma) * Cinv_1
    Cinv_c -= (Cinv_c.sum() / gamma) * Cinv_1  # enforce 1' C^-1 (m - beta/gamma 1) = 0
    spread = float(centered @ Cinv_c)  # equals delta / gamma
    delta = gamma * spread
    if not (alpha > 0 and gamma > 0 and delta > 0):
        raise MeanParallelToOnes(f"degenerate market constants (delta={delta:.3e})")
    tilt = Cinv_c / spread  # w(mu) moves along this direction as mu changes

    for a in (m, C, Cinv, Cinv_m, Cinv_1, tilt):
        a.setflags(write=False)
    return GaussianMarket(m, C, Cinv, Cinv_m, Cinv_1, tilt, alpha, beta, gamma, delta)


def min_variance_portfolio(market: GaussianMarket, mu: float) -> np.ndarray:
    """Unique minimum-variance portfolio with expected return ``mu``.

    ``w(mu) = ((gamma*mu - beta) C^-1 m + (alpha - beta*mu) C^-1 1) / delta``,
    evaluated as ``C^-1 1 / gamma + (mu - beta/gamma) * tilt``.
    """
    g = market.gamma
    return market.Cinv_1 / g + (mu - market.beta / g) * market.tilt


def sigma_of_mu(market: GaussianMarket, mu: float) -> float:
    """Standard deviation of ``w(mu)``, i.e. the right wing of the hyperbola."""
    g = market.gamma
    dev = mu - market.beta / g
    return math.sqrt(1.0 / g + (g / market.delta) * dev * dev)


def mu_of_sigma(market: GaussianMarket, sigma: float) -> float:
    """Upper branch of the right wing: the largest attainable mean at ``sigma``."""
    g, d = market.gamma, market.delta
    corner = 1.0 / math.sqrt(g)
    if sigma < corner - CORNER_REJECT:
        raise SigmaBelowCorner(f"sigma={sigma!r} is below the corner {corner!r}")
    rad = (d / g) * sigma * sigma - d / (g * g)
    # sigma within the clamp band of the corner maps to the corner itself
    return market.beta / g + math.sqrt(max(rad, 0.0))


def hyperbola_residual(market: GaussianMarket, sigma: float, mu: float) -> float:
    """``sigma^2 - (gamma/delta)(mu - beta/gamma)^2 - 1/gamma``; zero on the hyperbola."""
    g = market.gamma
    dev = mu - market.beta / g
    return sigma * sigma - (g / market.delta) * dev * dev - 1.0 / g


@dataclass(frozen=True)
class FrontierPoint:
    sigma: float
    mu: float
    w: np.ndarray


def frontier_points(market: GaussianMarket, mu_lo: float, mu_hi: float, count: int):
    """Sample the right wing on an equally spaced grid of expected returns."""
    if not mu_lo < mu_hi:
        raise ValueError("mu_lo must be smaller than mu_hi")
    if count < 2:
        raise ValueError("count must be at least 2")
    return [
        FrontierPoint(sigma_of_mu(market, mu), float(mu), min_variance_portfolio(market, mu))
        for mu in np.linspace(mu_lo, mu_hi, count)
    ]
