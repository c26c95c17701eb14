"""Walk the closed-form Gaussian solver across its regimes on a two-asset market.

Run with ``python demos/gaussian_taxonomy.py``.  Each line shows which branch
of the case analysis fires as the risk budget ``r`` moves, and how the
optimal point slides along the efficient frontier.
"""

from coherent_portfolio import GaussianProblem, avar_gaussian_coeff, build_market, solve
from coherent_portfolio.gaussian_solver import thresholds

market = build_market([0.1, 0.2], [[0.04, 0.01], [0.01, 0.09]])
sigma0, mu0 = market.corner
print(f"frontier corner (sigma, mu) = ({sigma0:.5f}, {mu0:.5f}); asymptote slope {market.slope:.6f}")

rho_avar = avar_gaussian_coeff(0.05)  # AV@R at 5% of a standard normal
print(f"AV@R(0.05) coefficient {rho_avar:.6f}\n")


def sweep(title, rho1, rho2, budgets):
    th = thresholds(GaussianProblem(market, rho1, rho2, 0.0))
    print(title)
    for name in ("r_star", "r_zero", "r_plus"):
        value = getattr(th, name)
        if value is not None:
            print(f"  {name:<7}= {value:+.5f}")
    for r in budgets:
        out = solve(GaussianProblem(market, rho1, rho2, r))
        w = "" if out.portfolio is None else "  w = (" + ", ".join(f"{x:+.4f}" for x in out.portfolio) + ")"
        print(f"  r = {r:+.3f}: {out.tag.value:<21} {out.value:+.6f}  [{out.case_label}]{w}")
    print()


# A tail-risk objective under a mean constraint.  Tight budgets force the
# optimum up the frontier; beyond r* the constraint stops binding.
sweep("objective AV@R(0.05), constraint on expected loss", rho_avar, 0.0,
      [-0.2, -0.15, -0.14, -0.13, 0.0])

# AV@R constraint with a steeper objective.  Below r+ the constraint line
# misses the frontier; between r+ and r* it binds at the near intersection.
sweep("objective coefficient 3, constraint AV@R(0.05)", 3.0, rho_avar,
      [0.2, 0.2368, 0.24, 0.3])

# An objective coefficient under the slope cannot be bounded below.
sweep("objective coefficient 0.2 (below the slope)", 0.2, 0.0, [0.0])

# Exactly at the slope the infimum exists but no portfolio attains it.
sweep("objective coefficient equal to the slope", market.slope, 0.0, [0.0])
