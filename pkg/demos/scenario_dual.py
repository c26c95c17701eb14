"""Recover an optimal portfolio from the multipliers of a dual LP.

Run with ``python demos/scenario_dual.py``.  Two equally likely states, each
asset pays 0.2 in one of them.  Minimizing AV@R(0.5) under a bound on
expected loss has the symmetric optimum (0.5, 0.5); the solver never
optimizes over portfolios directly, it reads them off the balance rows.
"""

import warnings

import numpy as np

from coherent_portfolio import (
    RiskSpec,
    ScenarioProblem,
    ScenarioSpace,
    build_dual,
    check_slater,
    solve_scenario,
    subgradient_attainment,
)

space = ScenarioSpace.equiprobable([[0.0, 0.2], [0.2, 0.0]])
avar, neg = RiskSpec.avar(0.5), RiskSpec.neg_expectation()

problem = ScenarioProblem(space, avar, neg, r=-0.05)
lp, layout = build_dual(problem)
print("dual LP columns:", ", ".join(lp.var_names))
print("dual LP rows:   ", ", ".join(lp.row_names))

out = solve_scenario(problem)
dual = out.details["dual"]
print(f"\ndual value {dual.value:+.6f} with U = {dual.U}, m = {dual.M[0]:.3g}, lambda = {dual.lam:.3g}")
print(f"balance-row multipliers -> w* = {out.portfolio}, objective {out.value:+.6f}")
print(f"duality gap {out.details['duality_gap']:.1e}, Slater margin {check_slater(problem).margin:+.3f}")

# The expected loss is -0.1 for every budget-feasible portfolio, so the
# bound either holds strictly, holds with equality or fails everywhere.
for r in (-0.1, -0.15):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = solve_scenario(ScenarioProblem(space, avar, neg, r))
    note = f" (warning: {caught[0].category.__name__})" if caught else ""
    print(f"r = {r:+.2f}: {res.tag.value}{note}")

# Subgradients come from a maximizing density.  At w = (1, 0) the bad state
# is the first one; at the symmetric point the two states tie.
for w in ([1.0, 0.0], [0.5, 0.5]):
    att = subgradient_attainment(problem, np.array(w), 1)
    print(f"w = {w}: density {att.density}, subgradient {att.subgradient}, tie {att.degenerate}")
