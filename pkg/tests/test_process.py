import numpy as np
import pytest
from scipy import stats

from gimp_engine import marginal as mg
from gimp_engine.copula import CopulaSpec, StateMap
from gimp_engine.diagnostics import increment_stability_test
from gimp_engine.errors import ConfigError, InputError
from gimp_engine.marginal import GarchParams
from gimp_engine.process import (
    GimpModel,
    advance,
    IidMarginal,
    TwoPointMarginal,
    initial_state,
    simulate,
    state_feature,
    step,
)
from gimp_engine.rng import DOMAIN_BASE, FixedStream, RngStream

G1 = GarchParams(2e-6, 0.9, 0.08)
G2 = GarchParams(5e-6, 0.85, 0.1, h2_init=4e-4)


def test_independence_step_is_componentwise():
    model = GimpModel((G1, G2), CopulaSpec.independence())
    paths = np.arange(50)
    state = initial_state(model, 50)
    _, y = step(model, state, RngStream(9, DOMAIN_BASE, paths))
    u = RngStream(9, DOMAIN_BASE, paths).uniforms(2)
    for j, p in enumerate((G1, G2)):
        own = mg.initial_state(p)
        np.testing.assert_array_equal(y[:, j], mg.conditional_quantile("Q", p, own, u[:, j]))


@pytest.mark.parametrize("copula", [CopulaSpec.independence(), CopulaSpec.clayton(3.0), CopulaSpec.gaussian(0.7)],
                         ids=["indep", "clayton", "gauss"])
def test_median_draw_gives_minus_half_variance(copula):
    model = GimpModel((G1, G2), copula)
    state = initial_state(model)
    _, y = advance(model, state, np.array([[0.5, 0.5]]))
    expected = [-0.5 * mg.variance_update(p, mg.initial_state(p)) for p in (G1, G2)]
    np.testing.assert_allclose(y[0], expected, rtol=1e-15)


def test_forced_stream_median_through_step():
    model = GimpModel((G1, G2), CopulaSpec.independence())
    _, y = step(model, initial_state(model), FixedStream([[0.5, 0.5]]))
    assert y[0, 0] == pytest.approx(-0.5 * G1.stationary_variance, rel=1e-14)
    # pre-sample y_prev^2 = h2_init, so the first variance is omega0 + (omega1 + omega2) * h2_init
    assert y[0, 1] == pytest.approx(-0.5 * (5e-6 + 0.95 * 4e-4), rel=1e-14)


def test_clayton_tau_survives_quantile_maps(frozen):
    model = GimpModel((G1, G2), CopulaSpec.clayton(5.0))
    _, y = step(model, initial_state(model, 100_000), RngStream(4, DOMAIN_BASE, np.arange(100_000)))
    assert abs(stats.kendalltau(y[:, 0], y[:, 1])[0] - frozen["closed_forms"]["clayton_tau"]["5"]) < 0.01


def test_paths_start_at_log_s0_and_are_deterministic():
    model = GimpModel((G1, G2), CopulaSpec.clayton(2.0), s0=(100.0, 50.0))
    a = simulate(model, 300, 5, seed=11)
    assert np.all(a.log_prices[:, 0] == np.log([100.0, 50.0]))
    assert a.digest() == simulate(model, 300, 5, seed=11).digest()
    assert a.digest() != simulate(model, 300, 5, seed=12).digest()


def test_worker_count_does_not_change_paths():
    model = GimpModel((G1, G2), CopulaSpec.clayton(2.0, state_map=StateMap(1.0, 1e3)))
    digests = {simulate(model, 20_000, 4, seed=5, workers=w).digest() for w in (1, 3, 8)}
    assert len(digests) == 1


def test_path_prefix_is_stable():
    model = GimpModel((G1, G2), CopulaSpec.gaussian(0.4))
    big = simulate(model, 10_000, 3, seed=2)
    small = simulate(model, 100, 3, seed=2)
    np.testing.assert_array_equal(big.log_prices[:100], small.log_prices)


def test_csv_and_sidecar(tmp_path):
    model = GimpModel((G1, G2), CopulaSpec.clayton(2.0))
    ps = simulate(model, 3, 2, seed=1, config_hash="abc")
    csv, side = ps.write(tmp_path / "p.csv")
    lines = open(csv).read().splitlines()
    assert lines[0] == "path,time,asset,logprice,variance"
    assert len(lines) == 1 + 3 * 3 * 2
    row = lines[1 + 2 * 2 + 1].split(",")  # path 0, t=2, asset 1
    assert float(row[3]) == ps.log_prices[0, 2, 1]
    import json
    meta = json.load(open(side))
    assert meta["config_hash"] == "abc" and meta["seed"] == 1 and meta["scheme"].startswith("philox")


def test_horizon_zero():
    model = GimpModel((G1, G2), CopulaSpec.independence())
    assert simulate(model, 4, 0, seed=0).log_prices.shape == (4, 1, 2)


def test_p_measure_drift():
    pg = GarchParams(2e-6, 0.9, 0.08, mu=0.01)
    model = GimpModel((pg, pg), CopulaSpec.independence(), measure="P")
    S = simulate(model, 50_000, 1, seed=0).prices()[:, 1, 0]
    assert abs(S.mean() - np.exp(0.01)) < 4 * S.std(ddof=1) / np.sqrt(S.size)


def test_multiasset_martingale_means():
    model = GimpModel((G1, G2, G1), CopulaSpec.clayton(1.5, dim=3), s0=(1.0, 2.0, 3.0))
    S = simulate(model, 50_000, 10, seed=8).prices()
    mean = S.mean(axis=0)
    se = S.std(axis=0, ddof=1) / np.sqrt(S.shape[0])
    assert np.all(np.abs(mean - np.array([1.0, 2.0, 3.0])) < 4 * se + 1e-15)


def test_lattice_marginals_match_two_point_law():
    tp = TwoPointMarginal(np.log(1.1), np.log(0.9))
    assert tp.p_up == pytest.approx(0.5)
    model = GimpModel((tp, tp), CopulaSpec.clayton(3.0))
    X = simulate(model, 40_000, 2, seed=0).log_prices
    up = np.diff(X, axis=1) > 0
    assert abs(up.mean() - 0.5) < 4 * 0.5 / np.sqrt(up.size / 2)


def test_state_dependent_coupling_but_granger_independent_increments():
    """Without a clock the Clayton-drawdown model has state-dependent joint
    laws (tau varies across bins) while each marginal law is state-free."""
    model = GimpModel((IidMarginal(0.1), IidMarginal(0.1)),
                      CopulaSpec.clayton(None, state_map=StateMap(0.5, 20.0)))
    paths = simulate(model, 100_000, 10, seed=1)
    reports = increment_stability_test(paths, bins=5)
    assert not any(r.reject for r in reports)
    assert reports[0].cell["tau_spread"] > 0.1


def test_drawdown_feature():
    model = GimpModel((IidMarginal(0.1), IidMarginal(0.1)), CopulaSpec.clayton(1.0))
    s = initial_state(model, 2)
    s.x[:] = [[-0.2, 0.0], [0.1, 0.3]]
    np.testing.assert_allclose(state_feature(model, s), [0.1, 0.0])
    gm = GimpModel((G1, G2), CopulaSpec.clayton(1.0))
    gs = initial_state(gm, 1)
    expected = (G1.stationary_variance + 5e-6 + 0.95 * 4e-4) / 2
    assert state_feature(gm, gs)[0] == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("make", [
    lambda: GimpModel((G1,), CopulaSpec.independence()),
    lambda: GimpModel((G1, IidMarginal(0.1)), CopulaSpec.independence()),
    lambda: GimpModel((G1, G2), CopulaSpec.independence(3)),
    lambda: GimpModel((G1, G2), CopulaSpec.independence(), s0=(1.0, -1.0)),
    lambda: GimpModel((G1, G2), CopulaSpec.independence(), measure="R"),
    lambda: GimpModel((G1, G2), CopulaSpec.independence(), state_feature="vix"),
    lambda: IidMarginal(0.0),
    lambda: TwoPointMarginal(0.1, 0.2),
])
def test_invalid_models(make):
    with pytest.raises(ConfigError):
        make()


def test_invalid_run_sizes():
    model = GimpModel((G1, G2), CopulaSpec.independence())
    with pytest.raises(InputError):
        simulate(model, 0, 5, seed=0)
    with pytest.raises(InputError):
        simulate(model, 5, -1, seed=0)
