import configparser
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from coherent_portfolio import (
    GaussianProblem,
    MeanParallelToOnes,
    NotPositiveDefinite,
    ParseError,
    solve,
)
from coherent_portfolio.cli import (
    estimate_market,
    load_config,
    main,
    market_document,
    read_market_file,
    read_returns_csv,
    read_scenarios_csv,
    write_scenarios_csv,
)
from coherent_portfolio.markowitz import hyperbola_residual
from coherent_portfolio.oracle import sample_gaussian

MARKET = """[market]
mean = 0.1, 0.2
cov_1 = 0.04, 0.01
cov_2 = 0.01, 0.09
"""


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def _gaussian_config(tmp_path, rho1, rho2, r, name="problem.ini"):
    text = f"[problem]\nmode = gaussian\nrho1 = {rho1}\nrho2 = {rho2}\nr = {r}\n\n" + MARKET
    return _write(tmp_path / name, text)


def _worked_config(tmp_path, r, name="worked.ini"):
    _write(tmp_path / "worked.csv", "prob,asset_1,asset_2\n0.5,0.0,0.2\n0.5,0.2,0.0\n")
    text = f"[problem]\nmode = scenario\nrho1 = avar:0.5\nrho2 = neg_expectation\nr = {r}\nscenarios = worked.csv\n"
    return _write(tmp_path / name, text)


def _result(path):
    cp = configparser.ConfigParser()
    cp.read(path, encoding="utf-8")
    return cp


def _vec(text):
    return np.array([float(t) for t in text.split(",")])


# ---- estimate


def test_estimate_rank_deficient(tmp_path, capsys):
    csv = _write(tmp_path / "r.csv", "asset_1,asset_2\n0.1,0.1\n0.2,0.2\n0.3,0.3\n")
    with pytest.raises(NotPositiveDefinite):
        estimate_market(read_returns_csv(csv))
    assert main(["estimate", str(csv)]) == 1
    assert "NotPositiveDefinite" in capsys.readouterr().err


def test_estimate_constant_mean(tmp_path):
    csv = _write(tmp_path / "r.csv", "asset_1,asset_2\n0.1,0.2\n0.3,0.1\n0.2,0.3\n0.2,0.2\n")
    with pytest.raises(MeanParallelToOnes):
        estimate_market(read_returns_csv(csv))


def test_estimate_needs_enough_rows(tmp_path):
    csv = _write(tmp_path / "r.csv", "asset_1,asset_2\n0.1,0.3\n0.3,0.1\n")
    with pytest.raises(ParseError):
        read_returns_csv(csv)


def test_parse_error_location(tmp_path):
    csv = _write(tmp_path / "r.csv", "asset_1,asset_2\n0.1,0.3\n0.3,abc\n0.2,0.2\n")
    with pytest.raises(ParseError) as info:
        read_returns_csv(csv)
    assert (info.value.line, info.value.column) == (3, 5)
    csv = _write(tmp_path / "h.csv", "a,b\n0.1,0.3\n")
    with pytest.raises(ParseError) as info:
        read_returns_csv(csv)
    assert info.value.line == 1


def test_estimate_round_trip_100k(tmp_path, market):
    K = 100_000
    X = sample_gaussian(market, K, seed=3).returns
    csv = tmp_path / "returns.csv"
    np.savetxt(csv, X, delimiter=",", header="asset_1,asset_2", comments="", fmt="%.17g")
    out = tmp_path / "market.ini"
    assert main(["estimate", str(csv), "--out", str(out)]) == 0
    est = read_market_file(out)
    assert np.all(np.abs(est.m - market.m) <= 3 * np.sqrt(np.diag(market.C) / K))
    assert np.linalg.norm(est.C - market.C) <= 0.05 * np.linalg.norm(market.C)
    # the file carries every digit
    assert_allclose(est.m, X.mean(axis=0), rtol=1e-15)


def test_market_document_round_trip(tmp_path, market):
    back = read_market_file(_write(tmp_path / "m.ini", market_document(market)))
    assert np.array_equal(back.m, market.m) and np.array_equal(back.C, market.C)


def test_scenarios_csv_round_trip(tmp_path, worked_space):
    path = tmp_path / "s.csv"
    write_scenarios_csv(worked_space, path)
    back = read_scenarios_csv(path)
    assert np.array_equal(back.returns, worked_space.returns)
    assert np.array_equal(back.probs, worked_space.probs)


# ---- configs


def test_config_needs_one_source(tmp_path):
    cfg = _write(tmp_path / "c.ini", "[problem]\nmode = gaussian\nrho1 = avar:0.05\nrho2 = neg_expectation\nr = 0\n")
    with pytest.raises(ParseError, match="exactly one"):
        load_config(cfg)
    cfg = _write(tmp_path / "c2.ini", "[problem]\nmode = gaussian\nrho1 = avar:0.05\nrho2 = neg_expectation\n"
                 "r = 0\nmarket = m.ini\n\n" + MARKET)
    with pytest.raises(ParseError, match="exactly one"):
        load_config(cfg)


def test_config_mode_consistency(tmp_path):
    _write(tmp_path / "s.csv", "prob,asset_1,asset_2\n0.5,0.0,0.2\n0.5,0.2,0.0\n")
    cfg = _write(tmp_path / "c.ini", "[problem]\nmode = gaussian\nrho1 = avar:0.05\nrho2 = neg_expectation\n"
                 "r = 0\nscenarios = s.csv\n")
    with pytest.raises(ParseError):
        load_config(cfg)
    cfg = _write(tmp_path / "c2.ini", "[problem]\nmode = gaussian\nrho1 = avar:0.05\nrho2 = neg_expectation\n"
                 "r = 0\nlong_only = yes\n\n" + MARKET)
    with pytest.raises(ParseError):
        load_config(cfg)
    cfg = _write(tmp_path / "c3.ini", "[problem]\nmode = scenario\nrho1 = avar:0.05\nrho2 = neg_expectation\n"
                 "r = 0\n\n" + MARKET)
    with pytest.raises(ParseError, match="samples"):
        load_config(cfg)


# ---- solve


def test_solve_gaussian_optimal(tmp_path):
    cfg = _gaussian_config(tmp_path, "avar:0.05", "neg_expectation", -0.15)
    out = tmp_path / "result.ini"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
    res = _result(out)
    assert res["result"]["tag"] == "optimal"
    assert_allclose(_vec(res["result"]["portfolio"]), [0.5, 0.5], atol=1e-12)
    assert "slope" in res["thresholds"]


def test_solve_raw_coefficients_match_specs(tmp_path):
    a = _gaussian_config(tmp_path, "coeff:2.0627", "coeff:0", -0.15, "a.ini")
    assert main(["solve", "--config", str(a), "--out", str(tmp_path / "a.out")]) == 0
    w = _vec(_result(tmp_path / "a.out")["result"]["portfolio"])
    assert_allclose(w, [0.5, 0.5], atol=1e-12)


def test_solve_unbounded(tmp_path):
    cfg = _gaussian_config(tmp_path, "coeff:0.2", "neg_expectation", -0.15)
    out = tmp_path / "result.ini"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 3
    res = _result(out)
    assert res["result"]["tag"] == "unbounded" and res["result"]["value"] == "-inf"


def test_solve_infimum_with_epsilon(tmp_path, market):
    cfg = _gaussian_config(tmp_path, f"coeff:{market.slope!r}", "coeff:0", 0.0)
    out = tmp_path / "result.ini"
    assert main(["solve", "--config", str(cfg), "--out", str(out), "--epsilon", "1e-3"]) == 4
    res = _result(out)
    infimum = float(res["result"]["value"])
    value = float(res["epsilon"]["value"])
    assert infimum <= value <= infimum + 1e-3
    assert_allclose(_vec(res["epsilon"]["portfolio"]).sum(), 1.0, atol=1e-12)


def test_solve_worked_scenarios(tmp_path):
    out = tmp_path / "result.ini"
    assert main(["solve", "--config", str(_worked_config(tmp_path, -0.05)), "--out", str(out)]) == 0
    res = _result(out)
    assert_allclose(_vec(res["result"]["portfolio"]), [0.5, 0.5], atol=1e-12)
    assert res["slater"]["holds"] == "true"
    assert float(res["dual"]["duality_gap"]) <= 1e-12


def test_solve_worked_infeasible(tmp_path, capsys):
    out = tmp_path / "result.ini"
    assert main(["solve", "--config", str(_worked_config(tmp_path, -0.15)), "--out", str(out)]) == 2
    assert _result(out)["result"]["tag"] == "infeasible"
    assert "warning" in capsys.readouterr().err


def test_solve_missing_file(tmp_path, capsys):
    assert main(["solve", "--config", str(tmp_path / "nope.ini")]) == 1
    assert "ParseError" in capsys.readouterr().err


def test_round_trip_estimate_then_solve(tmp_path, market):
    K = 200_000
    X = sample_gaussian(market, K, seed=11).returns
    csv = tmp_path / "returns.csv"
    np.savetxt(csv, X, delimiter=",", header="asset_1,asset_2", comments="", fmt="%.17g")
    assert main(["estimate", str(csv), "--out", str(tmp_path / "est.ini")]) == 0
    cfg = _write(tmp_path / "c.ini", "[problem]\nmode = gaussian\nrho1 = avar:0.05\n"
                 "rho2 = neg_expectation\nr = -0.15\nmarket = est.ini\n")
    out = tmp_path / "result.ini"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
    w = _vec(_result(out)["result"]["portfolio"])
    truth = solve(GaussianProblem(market, 2.0627128075074, 0.0, -0.15)).portfolio
    assert np.abs(w - truth).max() <= 0.05


# ---- frontier


def test_frontier_table(tmp_path, market):
    mfile = _write(tmp_path / "m.ini", MARKET)
    out = tmp_path / "f.csv"
    assert main(["frontier", "--config", str(mfile), "--out", str(out), "--count", "2",
                 "--range", "0:0.3"]) == 0
    lines = out.read_text().splitlines()
    header = {l[2:].split(" = ")[0]: float(l.split(" = ")[1]) for l in lines if l.startswith("#")}
    assert abs(header["slope"] - 0.301511) <= 1e-6
    rows = [l for l in lines if not l.startswith("#")]
    assert rows[0] == "mu,sigma,w_1,w_2" and len(rows) == 3
    assert main(["frontier", "--config", str(mfile), "--out", str(out)]) == 0
    data = np.loadtxt(out, delimiter=",", comments="#", skiprows=8)
    assert data.shape == (101, 4)
    for mu, sigma, *_ in data:
        assert abs(hyperbola_residual(market, sigma, mu)) <= 1e-9


def test_frontier_bad_range(tmp_path, capsys):
    mfile = _write(tmp_path / "m.ini", MARKET)
    assert main(["frontier", "--config", str(mfile), "--range", "0-1"]) == 1


# ---- verify


def test_verify_gaussian_pass(tmp_path, capsys):
    cfg = _gaussian_config(tmp_path, "avar:0.05", "neg_expectation", -0.15)
    assert main(["verify", "--config", str(cfg)]) == 0
    report = capsys.readouterr().out
    assert "FAIL" not in report and "local grid agreement" in report


@pytest.mark.parametrize("rho1, rho2, r, check", [
    ("coeff:0.2", "coeff:0", 0.0, "oracle decreasing"),
    ("coeff:2.0627", "coeff:2.0627", 0.2, "oracle feasibility"),
])
def test_verify_gaussian_statuses(tmp_path, capsys, rho1, rho2, r, check):
    cfg = _gaussian_config(tmp_path, rho1, rho2, r)
    assert main(["verify", "--config", str(cfg)]) == 0
    assert f"PASS   {check}" in capsys.readouterr().out


def test_verify_slater_report(tmp_path, capsys):
    assert main(["verify", "--config", str(_worked_config(tmp_path, -0.1)), "--grid", "200"]) == 0
    report = capsys.readouterr().out
    assert "REPORT slater" in report and "REPORT duality gap" in report


def test_verify_bridge(tmp_path, capsys):
    cfg = _gaussian_config(tmp_path, "avar:0.05", "neg_expectation", -0.15)
    assert main(["verify", "--config", str(cfg), "--samples", "5000", "--seed", "0"]) == 0
    report = capsys.readouterr().out
    line = next(l for l in report.splitlines() if "bridge" in l)
    assert line.startswith("PASS")
    dist = float(line.split("distance ")[1].split()[0])
    assert math.isfinite(dist) and dist <= 0.05
