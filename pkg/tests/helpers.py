"""Shared builders for randomized test instances."""

import numpy as np
from scipy.optimize import linprog

from coherent_portfolio import ScenarioSpace, build_market


def random_market(rng, n=None):
    n = n or int(rng.integers(2, 5))
    A = rng.normal(size=(n, n))
    C = A @ A.T / n * 0.05 + np.eye(n) * 0.01
    m = rng.normal(0.08, 0.05, n)
    return build_market(m, C)


def random_space(rng, K=None, n=None):
    K = K or int(rng.integers(2, 9))
    n = n or int(rng.integers(2, 5))
    return ScenarioSpace(rng.normal(0.05, 0.2, (K, n)), rng.dirichlet(np.ones(K)))


def _risk_block(spec, X, p):
    """Columns and rows expressing rho(w'X) as a linear function of (w, aux).

    Returns (objective row over [w, aux], A_ub over [w, aux], aux count).
    AV@R uses the tail-minimization form t + E[(-w'X - t)^+] / theta.
    """
    K, n = X.shape
    if spec.theta is None:
        return np.r_[-(p @ X)], np.zeros((0, n)), 0
    theta = spec.theta
    obj = np.r_[np.zeros(n), 1.0, p / theta]
    A = np.hstack([-X, -np.ones((K, 1)), -np.eye(K)])
    return obj, A, K + 1


def primal_value(problem, r=None):
    """Optimal value of the primal by HiGHS; inf if infeasible, -inf if unbounded."""
    X, p = problem.space.returns, problem.space.probs
    K, n = X.shape
    r = problem.r if r is None else r
    o1, A1, k1 = _risk_block(problem.rho1, X, p)
    o2, A2, k2 = _risk_block(problem.rho2, X, p)
    N = n + k1 + k2
    c = np.zeros(N)
    c[:n] = o1[:n]
    c[n:n + k1] = o1[n:]
    rows, rhs = [], []
    if k1:
        blk = np.zeros((K, N))
        blk[:, :n] = A1[:, :n]
        blk[:, n:n + k1] = A1[:, n:]
        rows.append(blk)
        rhs.append(np.zeros(K))
    risk_row = np.zeros(N)
    risk_row[:n] = o2[:n]
    risk_row[n + k1:] = o2[n:]
    rows.append(risk_row[None, :])
    rhs.append([r])
    if k2:
        blk = np.zeros((K, N))
        blk[:, :n] = A2[:, :n]
        blk[:, n + k1:] = A2[:, n:]
        rows.append(blk)
        rhs.append(np.zeros(K))
    lo_w = 0.0 if problem.long_only else None
    bounds = [(lo_w, None)] * n
    for k in (k1, k2):
        if k:
            bounds += [(None, None)] + [(0.0, None)] * (k - 1)
    res = linprog(c, A_ub=np.vstack(rows), b_ub=np.concatenate(rhs),
                  A_eq=np.r_[np.ones(n), np.zeros(N - n)][None, :], b_eq=[1.0],
                  bounds=bounds, method="highs")
    if res.status == 2:
        return np.inf
    if res.status == 3:
        return -np.inf
    assert res.status == 0, res.message
    return res.fun
