"""Bounded-variable revised simplex with row multipliers.

Problems are stated as

    maximize    c'x
    subject to  A_i x  = b_i   (equality rows)
                A_i x <= b_i   (inequality rows)
                lower <= x <= upper      (entries may be infinite)

The solver reports the row multipliers ``y`` of the final basis, oriented so
that ``c - A'y`` are the reduced costs.  With that orientation the
multipliers of ``<=`` rows are nonnegative at optimality, and the dual
objective ``b'y`` plus the bound terms ``sum_j d_j x_j`` equals the primal
optimum.

Entering variables are priced by largest reduced cost.  After
``DEGENERATE_SWITCH`` consecutive degenerate pivots the solver falls back to
Bland's smallest-index rule until a pivot makes progress, which rules out
cycling.  ``pricing="bland"`` uses the smallest-index rule throughout.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, MaxIterations

REFACTOR_EVERY = 50
PIVOT_TOL = 1e-9
OPT_TOL = 1e-9
FEAS_TOL = 1e-9
DEGENERATE_SWITCH = 20
DEGENERATE_STEP = 1e-12


class LPStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LinearProgram:
    """Dense LP in the form above.

    ``is_ub[i]`` marks row ``i`` as an inequality.  ``balance_rows`` lists
    rows whose multipliers carry meaning for the caller (the asset-balance
    rows of the portfolio dual); ``row_names``/``var_names`` are optional.
    """

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    is_ub: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    balance_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    var_names: list[str] | None = None
    row_names: list[str] | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        N = self.c.shape[0]
        self.A = np.asarray(self.A, dtype=float).reshape(-1, N)
        m = self.A.shape[0]
        self.b = np.asarray(self.b, dtype=float).reshape(m)
        self.is_ub = np.asarray(self.is_ub, dtype=bool).reshape(m)
        self.lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (N,)).copy()
        self.upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (N,)).copy()
        self.balance_rows = np.asarray(self.balance_rows, dtype=int)
        if np.any(self.lower > self.upper):
            raise DimensionMismatch("a lower bound exceeds its upper bound")
        if np.any(self.lower == np.inf) or np.any(self.upper == -np.inf):
            raise DimensionMismatch("bounds must admit a finite value")
        if self.balance_rows.size and (self.balance_rows.max() >= m or self.balance_rows.min() < 0):
            raise DimensionMismatch("balance row index out of range")

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]

    @classmethod
    def from_blocks(cls, c, A_eq=None, b_eq=None, A_ub=None, b_ub=None,
                    lower=0.0, upper=np.inf, **kw) -> LinearProgram:
        """Stack equality rows first, then inequality rows."""
        c = np.asarray(c, dtype=float)
        N = c.shape[0]
        A_eq = np.zeros((0, N)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, N)
        A_ub = np.zeros((0, N)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, N)
        b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).reshape(-1)
        b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).reshape(-1)
        A = np.vstack([A_eq, A_ub])
        b = np.concatenate([b_eq, b_ub])
        is_ub = np.concatenate([np.zeros(len(b_eq), bool), np.ones(len(b_ub), bool)])
        return cls(c, A, b, is_ub, lower, upper, **kw)


@dataclass
class LPResult:
    status: LPStatus
    x: np.ndarray | None = None
    objective: float = np.nan
    row_duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    basis: np.ndarray | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL


class _Simplex:
    """Working state of one solve; never shared between threads."""

    def __init__(self, lp: LinearProgram, pricing: str = "dantzig"):
        if pricing not in ("dantzig", "bland"):
            raise ValueError(f"unknown pricing rule {pricing!r}")
        self.pricing = pricing
        m, N = lp.A.shape
        ub_rows = np.flatnonzero(lp.is_ub)
        n_slack = ub_rows.size
        self.lp = lp
        self.m = m
        self.n_struct = N
        self.n_slack = n_slack

        slack_cols = np.zeros((m, n_slack))
        slack_cols[ub_rows, np.arange(n_slack)] = 1.0
        A = np.hstack([lp.A, slack_cols])
        lower = np.concatenate([lp.lower, np.zeros(n_slack)])
        upper = np.concatenate([lp.upper, np.full(n_slack, np.inf)])

        # nonbasic start: the finite bound nearest zero, or zero if free
        x = np.where(np.isfinite(lower), lower, 0.0)
        both = np.isfinite(lower) & np.isfinite(upper)
        x = np.where(both & (np.abs(upper) < np.abs(lower)), upper, x)
        x = np.where(~np.isfinite(lower) & np.isfinite(upper), upper, x)
        resid = lp.b - A @ x

        basis = np.empty(m, dtype=int)
        art_rows = []
        slack_of_row = {row: N + k for k, row in enumerate(ub_rows)}
        for i in range(m):
            j = slack_of_row.get(i)
            if j is not None and resid[i] >= 0:
                basis[i] = j
                x[j] = resid[i]
            else:
                art_rows.append(i)
        n_art = len(art_rows)
        art_cols = np.zeros((m, n_art))
        for k, i in enumerate(art_rows):
            sign = 1.0 if resid[i] >= 0 else -1.0
            art_cols[i, k] = sign
            basis[i] = A.shape[1] + k
        self.first_art = A.shape[1]
        x = np.concatenate([x, np.abs(resid[art_rows])])
        self.A = np.hstack([A, art_cols])
        self.lower = np.concatenate([lower, np.zeros(n_art)])
        self.upper = np.concatenate([upper, np.full(n_art, np.inf)])
        self.x = x
        self.basis = basis
        self.is_basic = np.zeros(self.A.shape[1], dtype=bool)
        self.is_basic[basis] = True
        self.iterations = 0
        self.max_iter = 50 * (m + N)
        self._pivots_since_refactor = 0
        self.refactor()

    def refactor(self):
        self.B_inv = np.linalg.inv(self.A[:, self.basis])
        nonbasic = ~self.is_basic
        rhs = self.lp.b - self.A[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = self.B_inv @ rhs
        self._pivots_since_refactor = 0

    def duals(self, cost):
        return cost[self.basis] @ self.B_inv

    def run(self, cost) -> LPStatus:
        A, lower, upper = self.A, self.lower, self.upper
        movable = lower < upper
        tol = OPT_TOL * max(1.0, np.abs(cost).max())
        degenerate_run = 0
        while True:
            y = self.duals(cost)
            d = cost - y @ A
            x = self.x
            at_lower = x <= lower + FEAS_TOL
            at_upper = x >= upper - FEAS_TOL
            up = (d > tol) & ~at_upper
            down = (d < -tol) & ~at_lower
            candidates = np.flatnonzero((up | down) & movable & ~self.is_basic)
            if candidates.size == 0:
                return LPStatus.OPTIMAL
            bland = self.pricing == "bland" or degenerate_run >= DEGENERATE_SWITCH
            if not bland:
                candidates = candidates[np.argsort(-np.abs(d[candidates]), kind="stable")]
            # A bound flip keeps the basis, so d stays valid and the
            # remaining candidates keep their order: continue down the list
            # until a pivot changes the basis.
            for j in candidates:
                j = int(j)
                if self.iterations >= self.max_iter:
                    raise MaxIterations(f"simplex exceeded {self.max_iter} iterations")
                t = self._step(j, 1.0 if up[j] else -1.0)
                if t is None:
                    return LPStatus.UNBOUNDED
                if self.is_basic[j]:
                    degenerate_run = degenerate_run + 1 if t <= DEGENERATE_STEP else 0
                    break

    def _step(self, j, direction):
        """Move nonbasic ``j`` in ``direction``; flip its bound or pivot it in.

        Returns the step length, or None when the ray is unbounded.
        """
        A, lower, upper, x = self.A, self.lower, self.upper, self.x
        alpha = self.B_inv @ A[:, j]
        step = alpha * direction
        t_best = upper[j] - lower[j]
        leave = -1
        leave_to_upper = False
        xb = x[self.basis]
        lb = lower[self.basis]
        ubb = upper[self.basis]
        dec = step > PIVOT_TOL
        inc = step < -PIVOT_TOL
        ratios = np.full(self.m, np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios[dec] = (xb[dec] - lb[dec]) / step[dec]
            ratios[inc] = (ubb[inc] - xb[inc]) / (-step[inc])
        ratios = np.maximum(ratios, 0.0)
        t_min = ratios.min() if self.m else np.inf
        if t_min < t_best:
            ties = np.flatnonzero(ratios <= t_min + 1e-12)
            leave = int(ties[np.argmin(self.basis[ties])])
            t_best = ratios[leave]
            leave_to_upper = bool(inc[leave])
        if not np.isfinite(t_best):
            return None

        self.iterations += 1
        x[j] += direction * t_best
        x[self.basis] = xb - t_best * step
        if leave >= 0:
            out = self.basis[leave]
            x[out] = upper[out] if leave_to_upper else lower[out]
            self._pivot(leave, j, alpha)
        return t_best

    def _pivot(self, row, j, alpha):
        out = self.basis[row]
        self.basis[row] = j
        self.is_basic[out] = False
        self.is_basic[j] = True
        self._pivots_since_refactor += 1
        if self._pivots_since_refactor >= REFACTOR_EVERY:
            self.refactor()
            return
        piv = alpha[row]
        pivot_row = self.B_inv[row] / piv
        self.B_inv -= np.outer(alpha, pivot_row)
        self.B_inv[row] = pivot_row

    def drive_out_artificials(self):
        for row in range(self.m):
            if self.basis[row] < self.first_art:
                continue
            r_inv = self.B_inv[row]
            candidates = np.flatnonzero(~self.is_basic[: self.first_art])
            if candidates.size == 0:
                continue
            entries = r_inv @ self.A[:, candidates]
            usable = np.flatnonzero(np.abs(entries) > 1e-7)
            if usable.size == 0:
                continue  # redundant row; the artificial stays basic at zero
            j = int(candidates[usable[0]])
            alpha = self.B_inv @ self.A[:, j]
            self._pivot(row, j, alpha)
        self.refactor()


def simplex_solve(lp: LinearProgram, pricing: str = "dantzig") -> LPResult:
    """Solve ``lp`` to optimality or report infeasibility/unboundedness.

    Raises
    ------
    MaxIterations
        More than ``50 * (rows + columns)`` iterations in one phase.
    """
    sx = _Simplex(lp, pricing)
    n_total = sx.A.shape[1]
    total_iter = 0
    if n_total > sx.first_art:
        phase1 = np.zeros(n_total)
        phase1[sx.first_art:] = -1.0
        sx.run(phase1)
        infeas = sx.x[sx.first_art:].sum()
        if infeas > FEAS_TOL * max(1.0, np.abs(lp.b).max(initial=0.0)):
            return LPResult(LPStatus.INFEASIBLE, iterations=sx.iterations)
        sx.drive_out_artificials()
        sx.x[sx.first_art:] = np.clip(sx.x[sx.first_art:], 0.0, None)
        sx.upper[sx.first_art:] = 0.0
        sx.x[sx.first_art:] = np.where(sx.is_basic[sx.first_art:], sx.x[sx.first_art:], 0.0)
        total_iter = sx.iterations
        sx.iterations = 0
    cost = np.zeros(n_total)
    cost[: sx.n_struct] = lp.c
    status = sx.run(cost)
    total_iter += sx.iterations
    if status is LPStatus.UNBOUNDED:
        return LPResult(status, iterations=total_iter)
    sx.refactor()
    y = sx.duals(cost)
    d = lp.c - y @ lp.A
    x = sx.x[: sx.n_struct].copy()
    return LPResult(
        LPStatus.OPTIMAL,
        x=x,
        objective=float(lp.c @ x),
        row_duals=y,
        reduced_costs=d,
        basis=sx.basis.copy(),
        iterations=total_iter,
    )


def optimality_residuals(lp: LinearProgram, res: LPResult) -> dict:
    """Primal feasibility, dual feasibility and complementary slackness residuals."""
    x, y, d = res.x, res.row_duals, res.reduced_costs
    act = lp.A @ x - lp.b
    eq = ~lp.is_ub
    primal = max(
        np.abs(act[eq]).max(initial=0.0),
        np.clip(act[lp.is_ub], 0, None).max(initial=0.0),
        np.clip(lp.lower - x, 0, None).max(initial=0.0),
        np.clip(x - lp.upper, 0, None).max(initial=0.0),
    )
    # d_j > 0 needs x_j at its upper bound, d_j < 0 at its lower bound
    gap_up = np.where(np.isfinite(lp.upper), lp.upper - x, np.inf)
    gap_lo = np.where(np.isfinite(lp.lower), x - lp.lower, np.inf)
    dual = max(
        np.clip(-y[lp.is_ub], 0, None).max(initial=0.0),
        np.where(d > 0, np.where(np.isfinite(gap_up), 0.0, d), 0.0).max(initial=0.0),
        np.where(d < 0, np.where(np.isfinite(gap_lo), 0.0, -d), 0.0).max(initial=0.0),
    )
    slack = np.where(lp.is_ub, -act, 0.0)
    # bounded variables: d_j > 0 needs x_j = u_j, d_j < 0 needs x_j = l_j
    comp = max(
        np.abs(y * slack).max(initial=0.0),
        np.where(d > 0, np.minimum(d, gap_up), 0.0).max(initial=0.0),
        np.where(d < 0, np.minimum(-d, gap_lo), 0.0).max(initial=0.0),
    )
    return {
        "primal": float(primal),
        "dual": float(dual),
        "complementarity": float(comp),
        "duality_gap": float(abs(lp.c @ x - lp.b @ y - _bound_term(lp, x, d))),
    }


def _bound_term(lp, x, d):
    # contribution of active finite bounds to the dual objective
    return float(np.sum(np.where(np.abs(d) > 0, d * x, 0.0)))
