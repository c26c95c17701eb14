"""Finite-scenario portfolio problem solved through its equality-constrained dual.

On a scenario space with probabilities ``p`` the problem

    minimize rho1(w'X)  subject to  rho2(w'X) <= r,  1'w = 1  (w >= 0 if long-only)

has the linear dual

    maximize    -r E[M] - lambda
    subject to  E[U X] + E[M X] - lambda 1 = 0     (<= 0 when long-only)
                U in D(rho1),  M in cone D(rho2),  lambda free,

where ``D(.)`` is the dual density set of a measure.  The optimal portfolio
is the vector of multipliers of the n asset-balance rows.  Only the negative
expectation and AV@R are supported; both give box/linear density sets.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidProblem, SlaterViolated, UnsupportedDual
from .gaussian_solver import Outcome, SolveOutcome
from .lp import LinearProgram, LPResult, LPStatus, optimality_residuals, simplex_solve
from .risk_measures import (
    RiskKind,
    RiskSpec,
    ScenarioSpace,
    avar_density,
    dual_density_bounds,
    evaluate,
)

SLATER_TOL = 1e-10
SLATER_EPS = 1e-6
GAP_TOL = 1e-6
BUDGET_TOL = 1e-8


@dataclass(frozen=True)
class ScenarioProblem:
    space: ScenarioSpace
    rho1: RiskSpec
    rho2: RiskSpec
    r: float
    long_only: bool = False

    def __post_init__(self):
        for spec in (self.rho1, self.rho2):
            if not spec.scenario_capable:
                raise UnsupportedDual("value-at-risk cannot be used with scenario data")
        r = float(self.r)
        if not math.isfinite(r):
            raise InvalidProblem("r must be finite")
        object.__setattr__(self, "r", r)

    def risk1(self, w) -> float:
        return evaluate(self.rho1, self.space.portfolio_returns(w), self.space.probs)

    def risk2(self, w) -> float:
        return evaluate(self.rho2, self.space.portfolio_returns(w), self.space.probs)


@dataclass(frozen=True)
class DualLayout:
    """Column and row positions of the dual variables inside the LP."""

    U: slice | None        # None when U is fixed to 1 and eliminated
    M: slice               # K columns for AV@R, one scalar column for the expectation
    lam: int
    balance: slice
    normalization: int | None


def build_dual(problem: ScenarioProblem) -> tuple[LinearProgram, DualLayout]:
    """Assemble the dual LP; rows are balance rows, then normalization, then cone rows."""
    X = problem.space.returns
    p = problem.space.probs
    K, n = X.shape
    pX = p[:, None] * X  # row k: p_k X_k

    u_bounds = dual_density_bounds(problem.rho1, K)
    dual_density_bounds(problem.rho2, K)  # rejects value-at-risk

    cols_c, cols_A, lows, highs, names = [], [], [], [], []
    balance_rhs = np.zeros(n)
    n_cols = 0

    if u_bounds.fixed:
        # U == 1: E[UX] is the constant E[X] on the right-hand side
        balance_rhs -= pX.sum(axis=0)
        U = None
    else:
        cols_c.append(np.zeros(K))
        cols_A.append(pX.T)
        lows.append(u_bounds.lower)
        highs.append(u_bounds.upper)
        names += [f"U[{k}]" for k in range(K)]
        U = slice(0, K)
        n_cols = K

    if problem.rho2.kind is RiskKind.NEG_EXPECTATION:
        cols_c.append(np.array([-problem.r]))
        cols_A.append(pX.sum(axis=0)[:, None])
        lows.append(np.zeros(1))
        highs.append(np.full(1, np.inf))
        names.append("m")
        M = slice(n_cols, n_cols + 1)
    else:
        cols_c.append(-problem.r * p)
        cols_A.append(pX.T)
        lows.append(np.zeros(K))
        highs.append(np.full(K, np.inf))
        names += [f"M[{k}]" for k in range(K)]
        M = slice(n_cols, n_cols + K)
    n_cols = M.stop

    cols_c.append(np.array([-1.0]))
    cols_A.append(-np.ones((n, 1)))
    lows.append(np.full(1, -np.inf))
    highs.append(np.full(1, np.inf))
    names.append("lambda")
    lam = n_cols
    n_cols += 1

    c = np.concatenate(cols_c)
    A_bal = np.hstack(cols_A)
    rows = [A_bal]
    b = [balance_rhs]
    is_ub = [np.full(n, problem.long_only)]
    row_names = [f"balance[{i}]" for i in range(n)]

    normalization = None
    if U is not None:
        row = np.zeros((1, n_cols))
        row[0, U] = p
        rows.append(row)
        b.append(np.ones(1))
        is_ub.append(np.zeros(1, bool))
        row_names.append("E[U]=1")
        normalization = n

    if problem.rho2.kind is RiskKind.AVAR:
        theta = problem.rho2.theta
        cone = np.zeros((K, n_cols))
        cone[:, M] = theta * np.eye(K) - p[None, :]
        rows.append(cone)
        b.append(np.zeros(K))
        is_ub.append(np.ones(K, bool))
        row_names += [f"cone[{k}]" for k in range(K)]

    lp = LinearProgram(
        c,
        np.vstack(rows),
        np.concatenate(b),
        np.concatenate(is_ub),
        np.concatenate(lows),
        np.concatenate(highs),
        balance_rows=np.arange(n),
        var_names=names,
        row_names=row_names,
    )
    return lp, DualLayout(U, M, lam, slice(0, n), normalization)


@dataclass
class DualSolution:
    """Optimal dual variables and the asset-balance multipliers."""

    status: LPStatus
    U: np.ndarray | None = None
    M: np.ndarray | None = None
    lam: float = math.nan
    value: float = math.nan
    portfolio: np.ndarray | None = None
    multipliers: np.ndarray | None = None
    lp_result: LPResult | None = None
    residuals: dict = field(default_factory=dict)


def solve_dual(problem: ScenarioProblem) -> DualSolution:
    """Solve the dual LP and read the portfolio off the balance-row multipliers."""
    lp, layout = build_dual(problem)
    res = simplex_solve(lp)
    if not res.optimal:
        return DualSolution(res.status, lp_result=res)
    K = problem.space.n_scenarios
    x = res.x
    U = np.ones(K) if layout.U is None else x[layout.U].copy()
    if problem.rho2.kind is RiskKind.NEG_EXPECTATION:
        M = np.full(K, x[layout.M][0])
    else:
        M = x[layout.M].copy()
    w = res.row_duals[layout.balance].copy()
    if w.sum() < 0:
        w = -w
    return DualSolution(
        LPStatus.OPTIMAL,
        U=U,
        M=M,
        lam=float(x[layout.lam]),
        value=res.objective,
        portfolio=w,
        multipliers=res.row_duals.copy(),
        lp_result=res,
        residuals=optimality_residuals(lp, res),
    )


def stationarity_residual(problem: ScenarioProblem, dual: DualSolution) -> float:
    """Infinity norm of ``E[-U X] + E[-M X] + lambda 1``."""
    X, p = problem.space.returns, problem.space.probs
    r = -(p * dual.U) @ X - (p * dual.M) @ X + dual.lam
    return float(np.abs(r).max())


@dataclass(frozen=True)
class SlaterCheck:
    """Outcome of the strict-feasibility search.

    ``margin`` is ``r - rho2(w'X)`` at the best point found, capped at 1.
    """

    holds: bool
    margin: float
    strict_point: np.ndarray | None


def _max_margin(problem: ScenarioProblem, eps: float) -> tuple[float, np.ndarray | None]:
    """Maximize ``s <= 1`` subject to ``rho2(w'X) + s <= r`` over admissible w."""
    X, p = problem.space.returns, problem.space.probs
    K, n = X.shape
    lo_w = eps if problem.long_only else -np.inf
    if problem.rho2.kind is RiskKind.NEG_EXPECTATION:
        # columns: w (n), s
        c = np.r_[np.zeros(n), 1.0]
        A_ub = np.r_[-(p @ X), 1.0][None, :]
        b_ub = [problem.r]
        A_eq = np.r_[np.ones(n), 0.0][None, :]
        lower = np.r_[np.full(n, lo_w), -np.inf]
        upper = np.r_[np.full(n, np.inf), 1.0]
    else:
        theta = problem.rho2.theta
        # columns: w (n), t, z (K), s
        N = n + 1 + K + 1
        c = np.zeros(N)
        c[-1] = 1.0
        A_ub = np.zeros((K + 1, N))
        A_ub[0, n] = 1.0
        A_ub[0, n + 1 : n + 1 + K] = p / theta
        A_ub[0, -1] = 1.0
        A_ub[1:, :n] = -X
        A_ub[1:, n] = -1.0
        A_ub[1:, n + 1 : n + 1 + K] = -np.eye(K)
        b_ub = np.r_[problem.r, np.zeros(K)]
        A_eq = np.zeros((1, N))
        A_eq[0, :n] = 1.0
        lower = np.r_[np.full(n, lo_w), -np.inf, np.zeros(K), -np.inf]
        upper = np.r_[np.full(n + 1 + K, np.inf), 1.0]
    lp = LinearProgram.from_blocks(c, A_eq, [1.0], A_ub, b_ub, lower, upper)
    res = simplex_solve(lp)
    if not res.optimal:
        return -math.inf, None
    return res.objective, res.x[:n].copy()


def check_slater(problem: ScenarioProblem) -> SlaterCheck:
    """Look for a portfolio with ``rho2(w'X) < r``.

    For long-only problems the point must also be strictly positive; the
    search then enforces ``w_i >= 1e-6``.
    """
    eps = SLATER_EPS if problem.long_only else 0.0
    margin, w = _max_margin(problem, eps)
    holds = margin > SLATER_TOL
    return SlaterCheck(holds, margin, w if holds else None)


@dataclass(frozen=True)
class Attainment:
    """A maximizing density and the subgradient it induces."""

    density: np.ndarray
    subgradient: np.ndarray
    value: float
    degenerate: bool


def subgradient_attainment(problem: ScenarioProblem, w, which: int) -> Attainment:
    """Maximizer of ``E[-V w'X]`` over the density set of ``rho1`` or ``rho2``.

    ``subgradient`` is ``E[-V X]``, a subgradient of ``w -> rho(w'X)``.  When
    tied outcomes receive different weights the maximizer is a face rather
    than a point; one vertex is returned and ``degenerate`` is set.
    """
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    spec = problem.rho1 if which == 1 else problem.rho2
    X, p = problem.space.returns, problem.space.probs
    Y = problem.space.portfolio_returns(w)
    if spec.kind is RiskKind.NEG_EXPECTATION:
        V = np.ones_like(Y)
        degenerate = False
    else:
        V = avar_density(Y, p, spec.theta)
        scale = max(1.0, float(np.abs(Y).max()))
        order = np.argsort(Y, kind="stable")
        ys, vs = Y[order], V[order]
        tied = np.abs(np.diff(ys)) <= 1e-12 * scale
        degenerate = bool(np.any(tied & (np.abs(np.diff(vs)) > 1e-12)))
    s = -(p * V) @ X
    return Attainment(V, s, float(-(p * V) @ Y), degenerate)


def solve_scenario(problem: ScenarioProblem) -> SolveOutcome:
    """Solve on scenarios; the optimal portfolio comes from the dual multipliers.

    An unbounded dual means the primal is infeasible.  An infeasible dual
    means the primal is unbounded when it has a feasible point.  When no
    strictly feasible portfolio exists a :class:`SlaterViolated` warning is
    issued and the duality-gap check is only reported.
    """
    slater = check_slater(problem)
    if not slater.holds:
        warnings.warn(
            f"no strictly feasible portfolio (margin {slater.margin:.3g}); "
            "the duality gap may be nonzero",
            SlaterViolated,
            stacklevel=2,
        )
    details = {"slater": slater}
    dual = solve_dual(problem)
    details["dual"] = dual

    if dual.status is LPStatus.UNBOUNDED:
        return SolveOutcome(Outcome.INFEASIBLE, math.nan, "dual unbounded", details=details)
    if dual.status is LPStatus.INFEASIBLE:
        details["diagnostic"] = "dual_infeasible"
        margin, _ = _max_margin(problem, 0.0)
        if margin >= -1e-9:
            return SolveOutcome(Outcome.UNBOUNDED, -math.inf, "dual infeasible", details=details)
        return SolveOutcome(Outcome.INFEASIBLE, math.nan, "dual infeasible, primal infeasible",
                            details=details)

    w = dual.portfolio
    if problem.long_only:
        w = np.where(w < 0, np.where(w >= -1e-9, 0.0, w), w)
    Y = problem.space.portfolio_returns(w)
    p = problem.space.probs
    risk1 = problem.risk1(w)
    risk2 = problem.risk2(w)
    mu = float(p @ Y)
    sigma = math.sqrt(max(float(p @ (Y - mu) ** 2), 0.0))
    gap = abs(risk1 - dual.value)
    details.update(
        dual_value=dual.value,
        duality_gap=gap,
        gap_ok=gap <= GAP_TOL * max(1.0, abs(dual.value)),
        gap_checked=slater.holds,
        budget_residual=abs(w.sum() - 1.0),
        risk2=risk2,
        constraint_residual=risk2 - problem.r,
    )
    label = "long-only dual multipliers" if problem.long_only else "dual multipliers"
    return SolveOutcome(Outcome.OPTIMAL, risk1, label, portfolio=w, sigma=sigma, mu=mu,
                        details=details)
