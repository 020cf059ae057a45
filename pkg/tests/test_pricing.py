import numpy as np
import pytest

from gimp_engine.clock import ClockSpec
from gimp_engine.copula import CopulaSpec
from gimp_engine.errors import ConfigError, InputError
from gimp_engine.marginal import GarchParams
from gimp_engine.pricing import PayoffSpec, estimate, payoff_eval, price, price_many
from gimp_engine.process import GimpModel, TwoPointMarginal

G = GarchParams(2e-6, 0.9, 0.08)
LN11, LN09 = np.log(1.1), np.log(0.9)


def model(theta=2.0, **kw):
    return GimpModel((G, G), CopulaSpec.clayton(theta), **kw)


def test_payoff_examples():
    assert payoff_eval(PayoffSpec("basket_call", 1, strike=1.0, weights=(0.5, 0.5)), [1.2, 0.8]) == 0.0
    assert payoff_eval(PayoffSpec("everest", 1), [1.3, 0.7, 1.1]) == 0.7
    assert payoff_eval(PayoffSpec("altiplano", 1, thresholds=(1, 1), coupon=5), [1.01, 0.99]) == 0.0
    assert payoff_eval(PayoffSpec("altiplano", 1, thresholds=(1, 1), coupon=5), [1.01, 1.0]) == 5.0
    assert payoff_eval(PayoffSpec("identity", 1, asset=1), [1.3, 0.7]) == 0.7
    np.testing.assert_array_equal(payoff_eval(PayoffSpec("best_of_call", 1, strike=1.0), [[1.3, 0.7], [0.5, 0.9]]),
                                  [pytest.approx(0.3), 0.0])


def test_constant_payoff_prices_to_one():
    est = price(model(), PayoffSpec("altiplano", 10, thresholds=(0, 0)), 5000, seed=1)
    assert est.value == 1.0 and est.stderr == 0.0 and est.ci95 == (1.0, 1.0)


@pytest.mark.parametrize("clock", [None, ClockSpec.poisson(1.0)], ids=["plain", "poisson-clock"])
def test_identity_prices_to_s0(clock):
    m = model(s0=(100.0, 50.0))
    for j, s0 in enumerate((100.0, 50.0)):
        est = price(m, PayoffSpec("identity", 10, asset=j), 50_000, seed=2, clock=clock)
        assert abs(est.value - s0) < 4 * est.stderr


def test_static_bounds_and_strike_monotonicity():
    ks = (0.8, 0.9, 1.0, 1.1, 1.2)
    specs = []
    for k in ks:
        specs += [PayoffSpec("best_of_call", 20, strike=k), PayoffSpec("basket_call", 20, strike=k),
                  PayoffSpec("worst_of_call", 20, strike=k)]
    est = price_many(model(), specs, 20_000, seed=3)
    v = np.array([e.value for e in est]).reshape(len(ks), 3)
    assert np.all(v[:, 0] >= v[:, 1]) and np.all(v[:, 1] >= v[:, 2])
    assert np.all(np.diff(v[:, 1]) <= 0)


def test_everest_monotone_in_dependence():
    vals = [price(model(th), PayoffSpec("everest", 20), 20_000, seed=4).value for th in (0.1, 1.0, 5.0)]
    assert vals[0] < vals[1] < vals[2]


def test_everest_bounded_by_notional():
    est = price(model(5.0), PayoffSpec("everest", 20), 20_000, seed=4)
    assert est.value <= 1 + 4 * est.stderr


@pytest.mark.parametrize("theta", ["0.1", "1", "5"])
def test_everest_matches_exact_lattice_price(theta, frozen):
    tp = TwoPointMarginal(LN11, LN09)
    lat = GimpModel((tp, tp), CopulaSpec.clayton(float(theta)))
    est = price(lat, PayoffSpec("everest", 3), 100_000, seed=5)
    assert abs(est.value - frozen["everest_clayton_lattice"][theta]) < 4 * est.stderr


def test_lattice_everest_prices_increase_with_theta(frozen):
    exact = frozen["everest_clayton_lattice"]
    assert exact["0.1"] < exact["1"] < exact["5"] < 1


def test_p_measure_refused():
    with pytest.raises(ConfigError, match="Q measure"):
        price(model(measure="P"), PayoffSpec("identity", 1), 100, seed=0)


def test_rate_extension_discounts_and_notes():
    m = model(rate=0.001)
    est = price(m, PayoffSpec("identity", 10), 50_000, seed=6)
    assert abs(est.value - 1.0) < 4 * est.stderr
    assert est.notes and "rate" in est.notes[0]
    with pytest.raises(ConfigError):
        price(m, PayoffSpec("identity", 10), 10, seed=0, clock=ClockSpec.poisson(1.0))


def test_price_many_uses_common_paths():
    specs = [PayoffSpec("identity", 5, asset=0), PayoffSpec("identity", 10, asset=0)]
    a, b = price_many(model(), specs, 5000, seed=7)
    assert b.value == price(model(), specs[1], 5000, seed=7).value
    assert a.n_paths == b.n_paths == 5000


def test_estimate_interval():
    est = estimate([0.0, 2.0], seed=1)
    assert est.value == 1.0 and est.ci95 == pytest.approx((1 - 1.96, 1 + 1.96))
    assert est.to_dict()["ci95"] == list(est.ci95)


@pytest.mark.parametrize("kw", [dict(kind="digital"), dict(kind="everest", maturity=-1),
                                dict(kind="basket_call", strike=-1.0),
                                dict(kind="basket_call", weights=(0.7, 0.7))])
def test_invalid_payoffs(kw):
    kw.setdefault("maturity", 1)
    with pytest.raises(ConfigError):
        PayoffSpec(**kw)


def test_payoff_dimension_mismatch():
    with pytest.raises(InputError):
        payoff_eval(PayoffSpec("basket_call", 1, weights=(0.2, 0.3, 0.5)), [1.0, 1.0])
    with pytest.raises(InputError):
        payoff_eval(PayoffSpec("identity", 1, asset=3), [1.0, 1.0])
