"""Command-line entry point: ``estimate``, ``solve``, ``frontier`` and ``verify``.

Configs, market files and result documents are INI files; the key set is
listed in the README.  Floats are written with 17 significant digits so a
document read back reproduces the same doubles.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import math
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    EmptyFeasibleGrid,
    InvalidProblem,
    ParseError,
    PortfolioError,
    SlaterViolated,
    UnsupportedDual,
)
from .gaussian_solver import GaussianProblem, Outcome, SolveOutcome, epsilon_portfolio, solve
from .markowitz import GaussianMarket, build_market, frontier_points
from .oracle import grid_oracle_gaussian, grid_oracle_scenario, sample_gaussian
from .risk_measures import RiskSpec, ScenarioSpace, gaussian_coefficient
from .scenario_dual import ScenarioProblem, solve_scenario, stationarity_residual

EXIT_CODES = {
    Outcome.OPTIMAL: 0,
    Outcome.INFEASIBLE: 2,
    Outcome.UNBOUNDED: 3,
    Outcome.INFIMUM_NOT_ATTAINED: 4,
}
EXIT_ERROR = 1


def fmt(x) -> str:
    if x is None:
        return "none"
    return f"{float(x):.17g}"


def fmt_vec(v) -> str:
    return ", ".join(fmt(x) for x in v)


# ---------------------------------------------------------------- CSV input


def _numeric_rows(path, expected_header, min_rows):
    """Parse a numeric CSV whose first line must equal ``expected_header``."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read file ({exc.strerror})", path) from None
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty file", path, 1, 1)
    header = [h.strip() for h in next(csv.reader([lines[0]]))]
    if header != expected_header(len(header)):
        raise ParseError(
            f"expected header {','.join(expected_header(len(header)))!r}", path, 1, 1
        )
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = next(csv.reader([line]))
        if len(fields) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(fields)}",
                             path, lineno, 1)
        values, col = [], 1
        for raw in fields:
            try:
                v = float(raw)
            except ValueError:
                raise ParseError(f"not a number: {raw.strip()!r}", path, lineno, col) from None
            if not math.isfinite(v):
                raise ParseError(f"non-finite value {raw.strip()!r}", path, lineno, col)
            values.append(v)
            col += len(raw) + 1
        rows.append(values)
    if len(rows) < min_rows(len(header)):
        raise ParseError(f"need at least {min_rows(len(header))} data rows, found {len(rows)}",
                         path, len(lines), 1)
    return np.array(rows, dtype=float)


def _asset_names(n):
    return [f"asset_{i}" for i in range(1, n + 1)]


def read_returns_csv(path) -> np.ndarray:
    """Historical returns, header ``asset_1,...,asset_n``, at least n+1 rows."""
    return _numeric_rows(path, _asset_names, lambda k: k + 1)


def read_scenarios_csv(path) -> ScenarioSpace:
    """Scenario table, header ``prob,asset_1,...,asset_n``."""
    data = _numeric_rows(path, lambda k: ["prob"] + _asset_names(k - 1), lambda k: 1)
    return ScenarioSpace(data[:, 1:], data[:, 0])


def write_scenarios_csv(space: ScenarioSpace, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["prob"] + _asset_names(space.n_assets))
    for p, row in zip(space.probs, space.returns):
        w.writerow([fmt(p)] + [fmt(x) for x in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


# ------------------------------------------------------------- market files


def estimate_market(returns: np.ndarray) -> GaussianMarket:
    """Sample mean and unbiased sample covariance, validated by build_market."""
    return build_market(returns.mean(axis=0), np.cov(returns, rowvar=False, ddof=1))


def market_document(market: GaussianMarket) -> str:
    lines = ["[market]", f"assets = {market.n}", f"mean = {fmt_vec(market.m)}"]
    lines += [f"cov_{i + 1} = {fmt_vec(row)}" for i, row in enumerate(market.C)]
    return "\n".join(lines) + "\n"


def _floats(text, path, key):
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise ParseError(f"key {key!r} must be a list of numbers", path) from None


def market_from_section(section, path=None) -> GaussianMarket:
    if "mean" not in section:
        raise ParseError("market section needs a 'mean' key", path)
    m = _floats(section["mean"], path, "mean")
    rows = []
    for i in range(1, len(m) + 1):
        key = f"cov_{i}"
        if key not in section:
            raise ParseError(f"market section needs key {key!r}", path)
        rows.append(_floats(section[key], path, key))
    return build_market(m, rows)


def _read_ini(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ParseError(f"cannot read file ({exc.strerror})", path) from None
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ParseError(str(exc).splitlines()[0], path, line) from None
    return cp


def read_market_file(path) -> GaussianMarket:
    cp = _read_ini(path)
    if not cp.has_section("market"):
        raise ParseError("missing [market] section", path)
    return market_from_section(cp["market"], path)


# ------------------------------------------------------------------ configs


@dataclass
class ProblemConfig:
    """Parsed ``[problem]`` config with exactly one market source."""

    mode: str
    rho1: str
    rho2: str
    r: float
    long_only: bool = False
    source: str = "inline"
    source_value: object = None
    samples: int | None = None
    out: str | None = None
    path: Path | None = None


def load_config(path) -> ProblemConfig:
    path = Path(path)
    cp = _read_ini(path)
    if not cp.has_section("problem"):
        raise ParseError("missing [problem] section", path)
    sec = cp["problem"]
    for key in ("mode", "rho1", "rho2", "r"):
        if key not in sec:
            raise ParseError(f"missing key {key!r} in [problem]", path)
    mode = sec["mode"].strip().lower()
    if mode not in ("gaussian", "scenario"):
        raise ParseError(f"mode must be 'gaussian' or 'scenario', got {mode!r}", path)
    try:
        r = float(sec["r"])
        long_only = sec.getboolean("long_only", fallback=False)
        samples = sec.getint("samples", fallback=None)
    except ValueError as exc:
        raise ParseError(str(exc), path) from None

    base = path.parent
    found = []
    if cp.has_section("market"):
        found.append(("inline", cp["market"]))
    for key in ("market", "returns", "scenarios"):
        if key in sec:
            found.append((key, base / sec[key].strip()))
    if len(found) != 1:
        names = ", ".join(k for k, _ in found) or "none"
        raise ParseError(f"exactly one market source is required, found: {names}", path)
    source, value = found[0]

    if mode == "gaussian" and source == "scenarios":
        raise ParseError("gaussian mode needs a market, inline moments or returns", path)
    if mode == "gaussian" and long_only:
        raise ParseError("long-only problems need scenario mode", path)
    if mode == "scenario" and source in ("inline", "market") and samples is None:
        raise ParseError("scenario mode with a Gaussian market needs 'samples'", path)
    return ProblemConfig(mode, sec["rho1"].strip(), sec["rho2"].strip(), r, long_only,
                         source, value, samples, sec.get("out"), path)


def parse_coefficient(text: str) -> tuple[float, RiskSpec | None]:
    """Gaussian coefficient from ``coeff:x`` or from a risk spec."""
    if text.lower().startswith("coeff:"):
        try:
            return float(text.split(":", 1)[1]), None
        except ValueError:
            raise InvalidProblem(f"bad coefficient {text!r}") from None
    spec = RiskSpec.parse(text)
    return gaussian_coefficient(spec), spec


def config_market(cfg: ProblemConfig) -> GaussianMarket:
    if cfg.source == "inline":
        return market_from_section(cfg.source_value, cfg.path)
    if cfg.source == "market":
        return read_market_file(cfg.source_value)
    if cfg.source == "returns":
        return estimate_market(read_returns_csv(cfg.source_value))
    raise InvalidProblem("scenario files do not define a Gaussian market")


def build_gaussian(cfg: ProblemConfig) -> GaussianProblem:
    market = config_market(cfg)
    rho1, _ = parse_coefficient(cfg.rho1)
    rho2, _ = parse_coefficient(cfg.rho2)
    return GaussianProblem(market, rho1, rho2, cfg.r)


def build_scenario(cfg: ProblemConfig, seed: int) -> ScenarioProblem:
    if cfg.source == "scenarios":
        space = read_scenarios_csv(cfg.source_value)
    elif cfg.source == "returns":
        space = ScenarioSpace.equiprobable(read_returns_csv(cfg.source_value))
    else:
        space = sample_gaussian(config_market(cfg), cfg.samples, seed)
    for text in (cfg.rho1, cfg.rho2):
        if text.lower().startswith("coeff:"):
            raise UnsupportedDual("raw Gaussian coefficients need gaussian mode")
    return ScenarioProblem(space, RiskSpec.parse(cfg.rho1), RiskSpec.parse(cfg.rho2),
                           cfg.r, cfg.long_only)


# ---------------------------------------------------------- result document


def result_document(outcome: SolveOutcome, mode: str, epsilon=None) -> str:
    lines = [
        "[result]",
        f"mode = {mode}",
        f"tag = {outcome.tag.value}",
        f"exit_code = {EXIT_CODES[outcome.tag]}",
        f"value = {fmt(outcome.value)}",
        f"case = {outcome.case_label}",
    ]
    if outcome.portfolio is not None:
        lines += [
            f"portfolio = {fmt_vec(outcome.portfolio)}",
            f"sigma = {fmt(outcome.sigma)}",
            f"mu = {fmt(outcome.mu)}",
        ]
    th = outcome.details.get("thresholds")
    if th is not None:
        lines += ["", "[thresholds]"]
        for name in ("slope", "r_zero", "r_star", "sigma_star", "mu_star", "r_minus", "r_plus"):
            lines.append(f"{name} = {fmt(getattr(th, name))}")
    slater = outcome.details.get("slater")
    if slater is not None:
        lines += ["", "[slater]", f"holds = {str(slater.holds).lower()}",
                  f"margin = {fmt(slater.margin)}"]
    if "dual_value" in outcome.details:
        d = outcome.details
        lines += [
            "",
            "[dual]",
            f"value = {fmt(d['dual_value'])}",
            f"duality_gap = {fmt(d['duality_gap'])}",
            f"gap_checked = {str(d['gap_checked']).lower()}",
            f"risk2 = {fmt(d['risk2'])}",
            f"budget_residual = {fmt(d['budget_residual'])}",
        ]
    if "diagnostic" in outcome.details:
        lines += ["", "[diagnostic]", f"status = {outcome.details['diagnostic']}"]
    if epsilon is not None:
        eps, w, value = epsilon
        lines += ["", "[epsilon]", f"epsilon = {fmt(eps)}", f"portfolio = {fmt_vec(w)}",
                  f"value = {fmt(value)}"]
    return "\n".join(lines) + "\n"


def _emit(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ----------------------------------------------------------------- commands


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    eps_part = None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SlaterViolated)
        if cfg.mode == "gaussian":
            problem = build_gaussian(cfg)
            outcome = solve(problem)
            if args.epsilon is not None and outcome.tag is Outcome.INFIMUM_NOT_ATTAINED:
                w = epsilon_portfolio(problem, args.epsilon)
                mk = problem.market
                value = problem.rho1 * mk.portfolio_sigma(w) - mk.portfolio_mu(w)
                eps_part = (args.epsilon, w, value)
        else:
            outcome = solve_scenario(build_scenario(cfg, args.seed))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    _emit(result_document(outcome, cfg.mode, eps_part), args.out or cfg.out)
    return EXIT_CODES[outcome.tag]


def cmd_estimate(args) -> int:
    market = estimate_market(read_returns_csv(args.returns))
    _emit(market_document(market), args.out)
    return 0


def _frontier_market(path) -> GaussianMarket:
    cp = _read_ini(path)
    if cp.has_section("problem"):
        return config_market(load_config(path))
    if cp.has_section("market"):
        return market_from_section(cp["market"], path)
    raise ParseError("expected a [market] or [problem] section", path)


def frontier_table(market: GaussianMarket, lo: float, hi: float, count: int) -> str:
    corner = market.corner
    lines = [
        f"# alpha = {fmt(market.alpha)}",
        f"# beta = {fmt(market.beta)}",
        f"# gamma = {fmt(market.gamma)}",
        f"# delta = {fmt(market.delta)}",
        f"# corner_sigma = {fmt(corner[0])}",
        f"# corner_mu = {fmt(corner[1])}",
        f"# slope = {fmt(market.slope)}",
        ",".join(["mu", "sigma"] + [f"w_{i}" for i in range(1, market.n + 1)]),
    ]
    for pt in frontier_points(market, lo, hi, count):
        lines.append(",".join([fmt(pt.mu), fmt(pt.sigma)] + [fmt(x) for x in pt.w]))
    return "\n".join(lines) + "\n"


def cmd_frontier(args) -> int:
    market = _frontier_market(args.config)
    if args.range:
        try:
            lo, hi = (float(t) for t in args.range.split(":"))
        except ValueError:
            raise InvalidProblem(f"--range must look like LO:HI, got {args.range!r}") from None
    else:
        spread = float(market.m.max() - market.m.min())
        lo, hi = float(market.m.min()) - 0.5 * spread, float(market.m.max()) + 0.5 * spread
    _emit(frontier_table(market, lo, hi, args.count), args.out)
    return 0


@dataclass
class Check:
    name: str
    status: str  # PASS, FAIL, REPORT or SKIP
    detail: str


def _check(name, ok, detail):
    return Check(name, "PASS" if ok else "FAIL", detail)


def verify_gaussian(problem: GaussianProblem, grid: int) -> tuple[SolveOutcome, list[Check]]:
    outcome = solve(problem)
    mk = problem.market
    corner_mu = mk.beta / mk.gamma
    checks = []
    if outcome.tag is Outcome.OPTIMAL:
        w = outcome.portfolio
        sigma, mu = mk.portfolio_sigma(w), mk.portfolio_mu(w)
        checks.append(_check("budget", abs(w.sum() - 1) <= 1e-10, f"|1'w - 1| = {abs(w.sum() - 1):.2e}"))
        viol = problem.rho2 * sigma - mu - problem.r
        checks.append(_check("risk constraint", viol <= 1e-8, f"rho2*sigma - mu - r = {viol:.2e}"))
        span = 2.0 * (abs(outcome.mu - corner_mu) + outcome.sigma + 0.1)
        wide = grid_oracle_gaussian(problem, corner_mu, outcome.mu + span, grid)
        checks.append(_check("wide grid dominance", wide.value >= outcome.value - 1e-5,
                             f"oracle {wide.value:.10g} vs solver {outcome.value:.10g}"))
        half = 1e-3 * max(1.0, abs(outcome.mu))
        try:
            local = grid_oracle_gaussian(problem, outcome.mu - half, outcome.mu + half, grid)
            gap = abs(local.value - outcome.value)
            checks.append(_check("local grid agreement", gap <= 1e-5, f"|oracle - solver| = {gap:.2e}"))
        except EmptyFeasibleGrid:
            checks.append(Check("local grid agreement", "FAIL", "no feasible point near the optimum"))
    elif outcome.tag is Outcome.INFEASIBLE:
        try:
            rep = grid_oracle_gaussian(problem, corner_mu, corner_mu + 100.0, grid)
            checks.append(Check("oracle feasibility", "FAIL",
                                f"oracle found a feasible point with value {rep.value:.6g}"))
        except EmptyFeasibleGrid:
            checks.append(Check("oracle feasibility", "PASS", "no feasible grid point"))
    else:
        # widen the grid and watch the best value
        bests = []
        for extent in (10.0, 100.0, 1000.0):
            try:
                bests.append(grid_oracle_gaussian(problem, corner_mu, corner_mu + extent, grid).value)
            except EmptyFeasibleGrid:
                bests.append(math.inf)
        if outcome.tag is Outcome.UNBOUNDED:
            ok = bests[0] > bests[1] > bests[2]
            checks.append(_check("oracle decreasing", ok, "best values " + ", ".join(f"{b:.6g}" for b in bests)))
        else:
            ok = all(b >= outcome.value - 1e-9 for b in bests) and bests[-1] - outcome.value < bests[0] - outcome.value
            checks.append(_check("oracle approaches infimum", ok,
                                 "best values " + ", ".join(f"{b:.6g}" for b in bests)))
    return outcome, checks


def verify_scenario(problem: ScenarioProblem, grid: int) -> tuple[SolveOutcome, list[Check]]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SlaterViolated)
        outcome = solve_scenario(problem)
    checks = []
    slater = outcome.details["slater"]
    if not slater.holds:
        checks.append(Check("slater", "REPORT", f"violated (margin {slater.margin:.3g}); gap check downgraded"))
    n = problem.space.n_assets
    if outcome.tag is Outcome.OPTIMAL:
        d = outcome.details
        dual = d["dual"]
        checks.append(_check("budget", d["budget_residual"] <= 1e-8, f"|1'w - 1| = {d['budget_residual']:.2e}"))
        checks.append(_check("risk constraint", d["risk2"] <= problem.r + 1e-6,
                             f"rho2 - r = {d['risk2'] - problem.r:.2e}"))
        gap = d["duality_gap"]
        if slater.holds:
            checks.append(_check("duality gap", d["gap_ok"], f"{gap:.2e}"))
        else:
            checks.append(Check("duality gap", "REPORT", f"{gap:.2e}"))
        st = stationarity_residual(problem, dual)
        checks.append(_check("stationarity", st <= 1e-8, f"{st:.2e}"))
        lp = max(dual.residuals.values())
        checks.append(_check("LP certificate", lp <= 1e-8, f"{lp:.2e}"))
        if problem.long_only:
            checks.append(_check("nonnegative", outcome.portfolio.min() >= 0, f"min w = {outcome.portfolio.min():.2e}"))
    if n > 3:
        checks.append(Check("lattice oracle", "SKIP", f"n = {n} > 3"))
        return outcome, checks
    try:
        rep = grid_oracle_scenario(problem, 1.0 / grid)
    except EmptyFeasibleGrid:
        rep = None
    if outcome.tag is Outcome.OPTIMAL:
        if rep is None:
            checks.append(Check("lattice oracle", "REPORT", "no feasible lattice point"))
        else:
            checks.append(_check("lattice dominance", rep.value >= outcome.value - 1e-4,
                                 f"oracle {rep.value:.10g} vs solver {outcome.value:.10g}"))
    elif outcome.tag is Outcome.INFEASIBLE:
        checks.append(_check("lattice feasibility", rep is None,
                             "no feasible lattice point" if rep is None else f"feasible point value {rep.value:.6g}"))
    elif outcome.tag is Outcome.UNBOUNDED:
        ok = rep is not None and rep.on_boundary
        checks.append(_check("lattice boundary", ok, "best point on the search box edge" if ok else "interior best point"))
    return outcome, checks


def bridge_check(problem: GaussianProblem, rho1: RiskSpec, rho2: RiskSpec,
                 samples: int, seed: int) -> Check:
    """Solve on sampled scenarios and compare with the closed-form portfolio."""
    closed = solve(problem)
    if not closed.optimal:
        return Check("gaussian/scenario bridge", "SKIP", f"closed form is {closed.tag.value}")
    space = sample_gaussian(problem.market, samples, seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SlaterViolated)
        sampled = solve_scenario(ScenarioProblem(space, rho1, rho2, problem.r))
    if not sampled.optimal:
        return Check("gaussian/scenario bridge", "FAIL", f"scenario solve is {sampled.tag.value}")
    dist = float(np.abs(sampled.portfolio - closed.portfolio).max())
    return _check("gaussian/scenario bridge", dist <= 0.05, f"l-inf distance {dist:.4f} ({samples} samples)")


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    if cfg.mode == "gaussian":
        problem = build_gaussian(cfg)
        outcome, checks = verify_gaussian(problem, args.grid or 4001)
        if args.samples:
            specs = [parse_coefficient(t)[1] for t in (cfg.rho1, cfg.rho2)]
            if all(s is not None and s.scenario_capable for s in specs):
                checks.append(bridge_check(problem, specs[0], specs[1], args.samples, args.seed))
            else:
                checks.append(Check("gaussian/scenario bridge", "SKIP", "needs expectation or AV@R specs"))
    else:
        outcome, checks = verify_scenario(build_scenario(cfg, args.seed), args.grid or 400)
    width = max(len(c.name) for c in checks)
    lines = [f"solver: {outcome.tag.value}, value {fmt(outcome.value)}"]
    lines += [f"{c.status:<6} {c.name:<{width}}  {c.detail}" for c in checks]
    _emit("\n".join(lines) + "\n", args.out)
    return 0 if all(c.status != "FAIL" for c in checks) else 1


# --------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coherent-portfolio",
        description="Portfolio optimization with a coherent risk objective and a risk constraint.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate a Gaussian market from a returns CSV")
    p.add_argument("returns", help="CSV with header asset_1,...,asset_n")
    p.add_argument("--out", help="market file to write (default: stdout)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("solve", help="solve the problem described by a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="result file to write (default: stdout)")
    p.add_argument("--seed", type=int, default=0, help="seed for sampled scenarios")
    p.add_argument("--epsilon", type=float,
                   help="emit an epsilon-optimal portfolio when the infimum is not attained")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("frontier", help="tabulate the minimum-variance frontier")
    p.add_argument("--config", required=True, help="market file or problem config")
    p.add_argument("--out", help="CSV file to write (default: stdout)")
    p.add_argument("--range", help="mean range LO:HI")
    p.add_argument("--count", type=int, default=101)
    p.set_defaults(func=cmd_frontier)

    p = sub.add_parser("verify", help="check a solve against brute-force oracles")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="report file to write (default: stdout)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=int,
                   help="grid points (gaussian, default 4001) or lattice denominator (scenario, default 400)")
    p.add_argument("--samples", type=int, help="also run the sampled-scenario bridge check")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PortfolioError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
