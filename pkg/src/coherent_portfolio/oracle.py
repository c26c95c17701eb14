"""Brute-force and Monte Carlo checks that share no code path with the solvers.

The grid oracles search portfolios directly: along the mean axis of the
Markowitz hyperbola in the Gaussian case, and on a lattice over the budget
plane in the scenario case.  The scalar oracles recompute risk values from
definitions (tail minimization, quadrature, bisection) instead of the
closed forms used by the library.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .errors import EmptyFeasibleGrid, UnsupportedDimension
from .gaussian_solver import GaussianProblem
from .markowitz import GaussianMarket
from .risk_measures import RiskKind, RiskSpec, ScenarioSpace
from .scenario_dual import ScenarioProblem

FEAS_SLACK = 1e-12
CHUNK = 200_000


@dataclass
class OracleReport:
    """Best feasible grid point.

    ``portfolio`` sums to one by construction: its last weight is one minus
    the others.  ``on_boundary`` is set when the best point sits on the edge
    of the searched region, which hints that the true problem is unbounded.
    """

    value: float
    portfolio: np.ndarray
    resolution: float
    feasible_count: int
    max_violation: float
    on_boundary: bool = False
    sigma: float | None = None
    mu: float | None = None


def _close_budget(w):
    w = np.array(w, dtype=float)
    w[-1] = 1.0 - w[:-1].sum()
    return w


def grid_oracle_gaussian(problem: GaussianProblem, mu_lo: float, mu_hi: float,
                         count: int) -> OracleReport:
    """Scan ``rho1*sigma(mu) - mu`` over an equally spaced mean grid.

    Only the upper half of the hyperbola is searched.  A point below the
    corner mean is beaten by its mirror image, which has the same sigma and
    a larger mean and is therefore better for both risks.

    Raises
    ------
    EmptyFeasibleGrid
        No grid point satisfies the risk constraint.
    """
    if count < 100:
        raise ValueError("count must be at least 100")
    if not mu_lo < mu_hi:
        raise ValueError("mu_lo must be smaller than mu_hi")
    mk = problem.market
    a, b, g, d = mk.alpha, mk.beta, mk.gamma, mk.delta
    mu = np.linspace(mu_lo, mu_hi, count)
    mu = mu[mu >= b / g]
    # sigma and weights straight from the variance of w(mu), not via sigma_of_mu
    sigma = np.sqrt(np.maximum((g * mu * mu - 2 * b * mu + a) / d, 0.0))
    constraint = problem.rho2 * sigma - mu
    feasible = constraint <= problem.r + FEAS_SLACK * max(1.0, abs(problem.r))
    if not feasible.any():
        raise EmptyFeasibleGrid(
            f"no feasible point among {count} means in [{mu_lo}, {mu_hi}]"
        )
    obj = np.where(feasible, problem.rho1 * sigma - mu, np.inf)
    k = int(np.argmin(obj))
    # Lagrange multipliers of min w'Cw s.t. m'w = mu, 1'w = 1
    lam = np.linalg.solve(np.array([[a, b], [b, g]]), np.array([mu[k], 1.0]))
    w = lam[0] * mk.Cinv_m + lam[1] * mk.Cinv_1
    return OracleReport(
        value=float(obj[k]),
        portfolio=_close_budget(w),
        resolution=(mu_hi - mu_lo) / (count - 1),
        feasible_count=int(feasible.sum()),
        max_violation=max(0.0, float(constraint[k] - problem.r)),
        on_boundary=k == 0 or k == mu.size - 1,
        sigma=float(sigma[k]),
        mu=float(mu[k]),
    )


def batch_risk(spec: RiskSpec, Y: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Risk of each row of ``Y`` (portfolios x scenarios)."""
    if spec.kind is RiskKind.NEG_EXPECTATION:
        return -(Y @ probs)
    if spec.kind is not RiskKind.AVAR:
        raise ValueError("only the negative expectation and AV@R are supported")
    theta = spec.theta
    order = np.argsort(Y, axis=1, kind="stable")
    ys = np.take_along_axis(Y, order, axis=1)
    ps = probs[order]
    before = np.cumsum(ps, axis=1) - ps
    weight = np.clip(theta - before, 0.0, ps)
    return -(weight * ys).sum(axis=1) / theta


def _lattice(n, N, long_only, box):
    """Integer lattice coordinates of the free weights w_1..w_{n-1}, scaled by N."""
    if long_only:
        lo, hi = 0, N
    else:
        lo, hi = -int(round(box * N)), int(round((1 + box) * N))
    axis = np.arange(lo, hi + 1)
    if n == 2:
        free = axis[:, None]
    else:
        i, j = np.meshgrid(axis, axis, indexing="ij")
        free = np.column_stack([i.ravel(), j.ravel()])
    last = N - free.sum(axis=1)
    keep = (last >= lo) & (last <= hi)
    return np.column_stack([free[keep], last[keep]]), lo, hi


def grid_oracle_scenario(problem: ScenarioProblem, resolution: float,
                         box: float = 2.0) -> OracleReport:
    """Exhaustive lattice search with step ``resolution`` for n = 2 or 3.

    Long-only problems search the unit simplex.  Otherwise the search runs
    over ``[-box, 1 + box]^n`` intersected with the budget plane.

    Raises
    ------
    UnsupportedDimension
        More than three assets.
    EmptyFeasibleGrid
        No lattice point satisfies the risk constraint.
    """
    X, p = problem.space.returns, problem.space.probs
    n = X.shape[1]
    if n > 3:
        raise UnsupportedDimension(f"lattice search supports n <= 3, got {n}")
    N = int(round(1.0 / resolution))
    if N < 1:
        raise ValueError("resolution must be at most 1")
    points, lo, hi = _lattice(n, N, problem.long_only, box)
    tol = FEAS_SLACK * max(1.0, abs(problem.r))

    best_val, best_idx, best_viol, n_feasible = math.inf, -1, 0.0, 0
    for start in range(0, points.shape[0], CHUNK):
        W = points[start : start + CHUNK] / N
        Y = W @ X.T
        c2 = batch_risk(problem.rho2, Y, p)
        ok = c2 <= problem.r + tol
        n_feasible += int(ok.sum())
        if not ok.any():
            continue
        obj = np.where(ok, batch_risk(problem.rho1, Y, p), np.inf)
        k = int(np.argmin(obj))
        if obj[k] < best_val:  # strict: earlier index wins ties
            best_val, best_idx = float(obj[k]), start + k
            best_viol = max(0.0, float(c2[k] - problem.r))
    if best_idx < 0:
        raise EmptyFeasibleGrid(f"no feasible lattice point at resolution 1/{N}")
    best = points[best_idx]
    on_boundary = bool(not problem.long_only and (best.min() == lo or best.max() == hi))
    w = _close_budget(best / N)
    Yb = X @ w
    return OracleReport(
        value=best_val,
        portfolio=w,
        resolution=1.0 / N,
        feasible_count=n_feasible,
        max_violation=best_viol,
        on_boundary=on_boundary,
        sigma=float(np.sqrt(p @ (Yb - p @ Yb) ** 2)),
        mu=float(p @ Yb),
    )


def standard_normals(rng: np.random.Generator, size: int) -> np.ndarray:
    """Box-Muller transform of uniform draws."""
    half = (size + 1) // 2
    u1 = rng.random(half)
    u2 = rng.random(half)
    radius = np.sqrt(-2.0 * np.log1p(-u1))  # 1 - u1 lies in (0, 1]
    angle = 2.0 * np.pi * u2
    return np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:size]


def sample_gaussian(market: GaussianMarket, K: int, seed: int) -> ScenarioSpace:
    """K equiprobable draws from N(m, C).

    Uses a Philox counter-based generator, so a given seed yields the same
    scenarios on every platform.
    """
    if K < 2:
        raise ValueError("need at least two scenarios")
    rng = np.random.Generator(np.random.Philox(seed))
    Z = standard_normals(rng, K * market.n).reshape(K, market.n)
    L = np.linalg.cholesky(market.C)
    return ScenarioSpace.equiprobable(market.m + Z @ L.T)


def golden_section(f, a: float, b: float, tol: float = 1e-12, max_iter: int = 500):
    """Minimize a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def avar_ru(Y, probs, theta: float) -> float:
    """AV@R as ``min_t t + E[(-Y - t)^+] / theta``.

    The objective is convex and piecewise linear with kinks at the losses.
    A coarse grid brackets the minimum, golden-section search narrows the
    bracket, and the kinks inside the bracket are evaluated exactly.
    """
    loss = -np.asarray(Y, dtype=float)
    probs = np.asarray(probs, dtype=float)

    def f(t):
        return t + probs @ np.maximum(loss - t, 0.0) / theta

    lo, hi = float(loss.min()), float(loss.max())
    if hi - lo <= 0.0:
        return f(lo)
    grid = np.linspace(lo, hi, 201)
    values = np.array([f(t) for t in grid])
    k = int(np.argmin(values))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    x, fx = golden_section(f, a, b, tol=1e-13 * max(1.0, hi - lo))
    kinks = loss[(loss >= a) & (loss <= b)]
    return float(min([fx, values[k], *[f(t) for t in kinks]]))


def avar_dual_lp(Y, probs, theta: float) -> tuple[float, np.ndarray]:
    """Maximize ``E[-V Y]`` over ``0 <= V <= 1/theta``, ``E[V] = 1`` with HiGHS."""
    Y = np.asarray(Y, dtype=float)
    probs = np.asarray(probs, dtype=float)
    res = optimize.linprog(
        probs * Y,
        A_eq=probs[None, :],
        b_eq=[1.0],
        bounds=[(0.0, 1.0 / theta)] * Y.size,
        method="highs",
    )
    if res.status != 0:
        raise RuntimeError(f"density LP failed: {res.message}")
    return float(-res.fun), res.x


def avar_gaussian_quadrature(theta: float) -> float:
    """Average of the standard Gaussian upper quantiles over levels in (0, theta)."""
    value, _ = integrate.quad(lambda u: special.ndtri(1.0 - u), 0.0, theta,
                              epsabs=1e-13, epsrel=1e-12, limit=200)
    return value / theta


def var_gaussian_bisection(theta: float, tol: float = 1e-14) -> float:
    """Solve ``P(Z <= -x) = theta`` for x by bisection on the normal CDF."""
    lo, hi = -40.0, 40.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if special.ndtr(-mid) > theta:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
