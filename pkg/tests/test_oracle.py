from fractions import Fraction

import numpy as np
import pytest

from gimp_engine import oracle as orc
from gimp_engine import suites
from gimp_engine.copula import CopulaSpec, StateMap
from gimp_engine.errors import ConfigError, ResourceError
from gimp_engine.oracle import LatticeClock, LatticeSpec
from gimp_engine.process import GimpModel, TwoPointMarginal, simulate

LN11, LN09 = np.log(1.1), np.log(0.9)


def two(**kw):
    kw.setdefault("horizon", 3)
    return LatticeSpec(2, up=(LN11, LN11), down=(LN09, LN09), **kw)


def family_max(report, fam):
    return max(c.violation for c in report.checks if c.name.split("[")[0] == fam)


def fixture(name, kind):
    pool = suites.lattice_fixtures() + suites.timechange_fixtures()
    return next(f for f in pool if f.name == name and f.kind == kind)


# ----------------------------------------------------------- examples


def test_martingale_p_is_one_half():
    assert orc.martingale_p(LN11, LN09) == pytest.approx(0.5, abs=1e-15)


def test_independent_and_max_dependence_martingale(frozen):
    assert orc.enumerate_and_check_martingale(two()).max_violation < orc.TOL
    r = orc.enumerate_and_check_martingale(two(dependence=1.0))
    assert r.max_violation < orc.TOL
    assert float(Fraction(frozen["lattice"]["max_dependence_martingale"])) == 0.0


def test_broken_normalization(frozen):
    lat = two(p_up=(0.6, 0.6))
    with pytest.raises(ConfigError, match="asset 0"):
        orc.enumerate_and_check_martingale(lat)
    r = orc.enumerate_and_check_martingale(lat, strict=False)
    assert r.max_violation == pytest.approx(float(Fraction(frozen["lattice"]["broken_normalization"])), abs=1e-12)
    assert not r.passed and r["martingale[0]"].witness["levels"]


def test_granger_examples():
    r = orc.enumerate_and_check_granger(two())
    assert r.passed and r.max_violation < orc.TOL and r.info["joint_law_spread"] < orc.TOL
    lvl = orc.enumerate_and_check_granger(two(horizon=4, dependence_fn=suites.LevelGap()))
    assert lvl["stable_increments[0]"].passed and lvl["stable_increments[1]"].passed
    assert lvl.info["joint_law_spread"] > 0.1
    bad = orc.enumerate_and_check_granger(two(kernel=suites.ContaminatedKernel()))
    assert not bad["no_causality[1]"].passed and bad["no_causality[0]"].passed
    assert bad["no_causality[1]"].witness["levels"]


def test_own_level_marginal_separates_definitions():
    r = orc.enumerate_and_check_granger(two(kernel=suites.OwnLevelKernel(2)))
    assert r["no_causality[0]"].passed and not r["stable_increments[0]"].passed


def test_timechange_examples(frozen):
    ident = orc.enumerate_and_check_timechange(two(dependence=0.5, clock=LatticeClock.deterministic(2, 3)))
    assert ident.passed
    iid = orc.enumerate_and_check_timechange(two(clock=LatticeClock.uniform([0, 1], 2, 3)))
    assert iid.passed
    for fam in ("own_history", "tc_martingale", "tc_increments"):
        exact = float(Fraction(frozen["lattice"]["iid_base_uniform_clock"][fam]["exact"]))
        assert family_max(iid, fam) == pytest.approx(exact, abs=orc.TOL)


def test_nonstationary_base_breaks_increment_law(frozen):
    r = orc.enumerate_and_check_timechange(
        two(kernel=suites.OwnLevelKernel(2), clock=LatticeClock.uniform([0, 1], 2, 3)))
    exp = frozen["lattice"]["nonstationary_base"]
    for fam in ("own_history", "tc_martingale", "tc_increments"):
        assert family_max(r, fam) == pytest.approx(float(Fraction(exp[fam]["exact"])), abs=1e-12)
    worst = max((c for c in r.checks if c.name.startswith("tc_increments[")), key=lambda c: c.violation)
    assert worst.violation > 0 and worst.witness["x_T"] and worst.witness["clock"]


def test_async_clock_counterexample_values(frozen):
    """Coupled base plus asynchronous clock: the conditional-law and
    martingale statements fail with these exact violations."""
    r = orc.enumerate_and_check_timechange(two(dependence=0.5, clock=LatticeClock.uniform([0, 1], 2, 3)))
    exp = frozen["lattice"]["async_clock_coupled_base"]
    for fam in ("own_history", "tc_martingale", "tc_increments"):
        assert family_max(r, fam) == pytest.approx(float(Fraction(exp[fam]["exact"])), abs=1e-12)
    assert family_max(r, "mixture") < orc.TOL


def test_synchronized_clock_restores_results():
    r = orc.enumerate_and_check_timechange(two(dependence=0.5, clock=LatticeClock(np.diag([0.3, 0.5, 0.2]), 2)))
    assert r.passed


# ------------------------------------------------------------ fixtures


@pytest.mark.parametrize("fx", suites.lattice_fixtures() + suites.timechange_fixtures(),
                         ids=lambda f: f"{f.kind}-{f.name}")
def test_named_fixtures_match_predictions(fx):
    out = suites.run_fixture(fx)
    assert out.ok, out.mismatches


@pytest.mark.parametrize("regime", ["synchronized", "independent"])
def test_random_clock_regimes_pass(regime):
    rng = np.random.default_rng(11)
    for _ in range(10):
        r = orc.enumerate_and_check_timechange(orc.random_clock_lattice(rng, regime))
        assert r.passed, r.table()


def test_general_random_clock_regime_has_counterexamples():
    rng = np.random.default_rng(11)
    reports = [orc.enumerate_and_check_timechange(orc.random_clock_lattice(rng, "general")) for _ in range(20)]
    assert any(not r.passed for r in reports)
    for r in reports:
        assert family_max(r, "mixture") < orc.TOL


def test_random_lattices_pass():
    for fx in suites.random_lattice_fixtures(seed=3, n=15):
        assert suites.run_fixture(fx).ok


# ---------------------------------------------------------- exhaustive


@pytest.mark.parametrize("m,N", [(2, 1), (2, 4), (3, 2), (3, 3)])
def test_enumeration_is_exhaustive(m, N):
    lat = LatticeSpec(m, N, up=(LN11,) * m, down=(LN09,) * m, dependence=0.3)
    r = orc.enumerate_and_check_granger(lat)
    assert r.visited["histories"] == [(2**m) ** t for t in range(N + 1)]
    tree = orc.enumerate_base(lat)
    assert tree.prob.sum() == pytest.approx(1.0, abs=1e-14)


def test_timechange_atom_count():
    clock = LatticeClock.uniform([0, 1, 2], 2, 2)
    r = orc.enumerate_and_check_timechange(two(clock=clock))
    assert r.visited["atoms"] == r.visited["base_paths"] * r.visited["clock_paths"]
    assert r.visited["clock_paths"] == 9**2 and r.visited["base_paths"] == 4**4


def test_atom_guard():
    with pytest.raises(ResourceError, match="atoms"):
        orc.enumerate_and_check_timechange(two(clock=LatticeClock.uniform([0, 1], 2, 3)), max_atoms=100)


def test_table_pmf_has_requested_margins():
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = rng.uniform(0.05, 0.95, 3)
        pmf = orc.table_pmf(p, float(rng.uniform(-1, 1)))
        bits = orc.outcome_bits(3)
        assert np.all(pmf >= -1e-15) and pmf.sum() == pytest.approx(1.0)
        np.testing.assert_allclose(pmf @ bits, p, atol=1e-14)


def test_copula_pmf_matches_copula_cdf():
    spec = CopulaSpec.clayton(2.0)
    p = (0.5, 0.4)
    pmf = orc.copula_pmf(spec, p)
    bits = orc.outcome_bits(2)
    down = pmf[(bits[:, 0] == 0) & (bits[:, 1] == 0)][0]
    from gimp_engine.copula import copula_cdf
    assert down == pytest.approx(copula_cdf(spec, [0.5, 0.6]), abs=1e-14)


def test_lattice_expectation_matches_frozen_everest(frozen):
    for theta, val in frozen["everest_clayton_lattice"].items():
        lat = two(copula=CopulaSpec.clayton(float(theta)))
        assert orc.lattice_expectation(lat, lambda S: S.min(axis=1)) == pytest.approx(val, abs=1e-12)


def test_monte_carlo_bridge_reproduces_lattice_pmf(frozen):
    """The process module run on two-point marginals with the drawdown
    Clayton coupling reproduces the enumerated two-step outcome pmf."""
    tp = TwoPointMarginal(LN11, LN09)
    model = GimpModel((tp, tp), CopulaSpec.clayton(None, state_map=StateMap(0.5, 40.0)))
    n = 100_000
    X = simulate(model, n, 2, seed=12).log_prices
    up = np.diff(X, axis=1) > 0  # (n, 2, m)
    key = [f"{int(a)}{int(b)}|{int(c)}{int(d)}" for a, b, c, d in
           zip(up[:, 0, 0], up[:, 0, 1], up[:, 1, 0], up[:, 1, 1])]
    keys, counts = np.unique(key, return_counts=True)
    emp = dict(zip(keys, counts / n))
    for k, p in frozen["clayton_drawdown_pmf"].items():
        assert abs(emp.get(k, 0.0) - p) < 4 * np.sqrt(p * (1 - p) / n), k


def test_oracle_granger_agrees_on_clayton_drawdown():
    lat = two(copula=CopulaSpec.clayton(None, state_map=StateMap(0.5, 40.0)))
    r = orc.enumerate_and_check_granger(lat)
    assert r.passed and r.info["joint_law_spread"] > 0.05


@pytest.mark.parametrize("kw", [dict(m=4), dict(horizon=6), dict(horizon=0), dict(up=(0.1,)),
                                dict(up=(-0.2, -0.2)), dict(p_up=(1.2, 0.5)), dict(dependence=1.5),
                                dict(copula=CopulaSpec.clayton(1.0, dim=3))])
def test_invalid_lattices(kw):
    base = dict(m=2, horizon=2, up=(LN11, LN11), down=(LN09, LN09))
    base.update(kw)
    if kw.get("m") == 4:
        base.update(up=(LN11,) * 4, down=(LN09,) * 4)
    with pytest.raises(ConfigError):
        LatticeSpec(**base)


def test_invalid_clocks():
    with pytest.raises(ConfigError):
        LatticeClock(np.full((2, 2), 0.3), 2)
    with pytest.raises(ConfigError):
        LatticeClock.uniform([0, 3], 2, 2)
    with pytest.raises(ConfigError):
        orc.enumerate_and_check_timechange(two())
    with pytest.raises(ConfigError):
        orc.random_clock_lattice(np.random.default_rng(0), "bogus")


def test_report_serialization():
    r = orc.enumerate_and_check_martingale(two(p_up=(0.6, 0.6)), strict=False)
    d = r.to_dict()
    assert d["passed"] is False and d["checks"][0]["witness"]
    assert "FAIL" in r.table()
