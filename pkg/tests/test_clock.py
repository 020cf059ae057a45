import numpy as np
import pytest
from scipy import stats

from gimp_engine.clock import (
    ClockSpec,
    increment_pmf,
    initial_clock_state,
    simulate_clock,
    simulate_time_changed,
    time_change,
)
from gimp_engine.copula import CopulaSpec, StateMap
from gimp_engine.diagnostics import increment_stability_test, martingale_test, rejection_rate
from gimp_engine.errors import ConfigError, InputError, ResourceError
from gimp_engine.marginal import GarchParams
from gimp_engine.process import GimpModel, IidMarginal, simulate

G = GarchParams(2e-6, 0.9, 0.08)
GARCH2 = GimpModel((G, G), CopulaSpec.clayton(2.0))
IID_STATE = GimpModel((IidMarginal(0.1), IidMarginal(0.1)), CopulaSpec.clayton(None, state_map=StateMap(0.5, 20.0)))


def test_deterministic_clock_is_calendar():
    T = simulate_clock(ClockSpec.deterministic([1, 1]), np.arange(3), 5, seed=0)
    np.testing.assert_array_equal(T[1], np.repeat(np.arange(6)[:, None], 2, axis=1))


def test_poisson_clock_mean_and_monotone():
    T = simulate_clock(ClockSpec.poisson([1.0, 1.0]), np.arange(100_000), 1, seed=0)
    assert np.all(np.abs(T[:, 1].mean(axis=0) - 1.0) < 0.02)
    T = simulate_clock(ClockSpec.poisson([1.0, 2.5]), np.arange(2000), 30, seed=1)
    assert np.all(T[:, 0] == 0) and np.all(np.diff(T, axis=1) >= 0)


def test_geometric_zero_mass():
    spec = ClockSpec.geometric([0.5, 0.5])
    assert increment_pmf(spec, 0) == pytest.approx(0.5)
    dT = simulate_clock(spec, np.arange(100_000), 1, seed=2)[:, 1]
    assert abs((dT == 0).mean() - 0.5) < 4 * 0.5 / np.sqrt(dT.size)


def test_synchronized_clock_shares_increments():
    T = simulate_clock(ClockSpec.poisson([1.5, 1.5], synchronized=True), np.arange(1000), 8, seed=3)
    np.testing.assert_array_equal(T[..., 0], T[..., 1])
    assert T[:, -1, 0].std() > 0


def test_identity_and_stride_time_change():
    base = simulate(GARCH2, 200, 12, seed=4)
    same = simulate_time_changed(GARCH2, ClockSpec.deterministic(1), 200, 12, seed=4)
    np.testing.assert_array_equal(same.log_prices, base.log_prices)
    two = simulate_time_changed(GARCH2, ClockSpec.deterministic(2), 200, 6, seed=4)
    np.testing.assert_array_equal(two.log_prices, base.log_prices[:, ::2])
    T = simulate_clock(ClockSpec.deterministic([2, 2]), np.arange(200), 6, seed=0)
    np.testing.assert_array_equal(time_change(base, T).log_prices, base.log_prices[:, ::2])


def test_time_changed_prices_are_martingales():
    ps = simulate_time_changed(GARCH2, ClockSpec.poisson(1.0), 100_000, 10, seed=5)
    S = ps.prices()
    mean = S.mean(axis=0)
    se = S.std(axis=0, ddof=1) / np.sqrt(S.shape[0])
    assert np.all(np.abs(mean - 1.0) < 4 * se + 1e-15)
    ratio = S[:, 1:] / S[:, :-1]
    r_se = ratio.std(axis=0, ddof=1) / np.sqrt(ratio.shape[0])
    assert np.all(np.abs(ratio.mean(axis=0) - 1) < 4 * r_se)


def test_clock_is_independent_of_base():
    ps = simulate_time_changed(GARCH2, ClockSpec.poisson(1.0), 20_000, 3, seed=6)
    dT = np.diff(ps.clock, axis=1)[..., 0].ravel()
    z = (np.diff(ps.log_prices, axis=1)[..., 1].ravel())
    # asset 1's one-step return is uncorrelated with asset 0's clock increment
    assert abs(stats.spearmanr(dT, z)[0]) < 4 / np.sqrt(dT.size)


def test_mixture_identity_statistically():
    """Increment law over one external step equals the clock mixture of
    base increment laws: N(-k s^2/2, k s^2) weighted by P(dT = k)."""
    sigma = 0.1
    model = GimpModel((IidMarginal(sigma), IidMarginal(sigma)), CopulaSpec.clayton(2.0))
    clock = ClockSpec.poisson(1.0)
    ps = simulate_time_changed(model, clock, 50_000, 1, seed=7)
    dx = np.diff(ps.log_prices, axis=1)[:, 0, 0]
    ks = np.arange(0, 30)
    w = stats.poisson.pmf(ks, 1.0)

    def mix_cdf(x):
        x = np.asarray(x)[..., None]
        parts = np.where(ks == 0, (x >= 0).astype(float),
                         stats.norm.cdf(x, -ks * sigma**2 / 2, sigma * np.sqrt(np.maximum(ks, 1))))
        return parts @ w

    cont = dx[dx != 0]  # the atom at 0 carries mass P(dT = 0)
    assert abs((dx == 0).mean() - w[0]) < 4 * np.sqrt(w[0] * (1 - w[0]) / dx.size)
    cond_cdf = lambda x: (mix_cdf(x) - w[0] * (np.asarray(x) >= 0)) / (1 - w[0])  # noqa: E731
    assert stats.kstest(cont, cond_cdf).pvalue > 0.01


def test_synchronized_clock_keeps_granger_independence():
    ps = simulate_time_changed(IID_STATE, ClockSpec.poisson(1.0, synchronized=True), 100_000, 10, seed=8)
    reports = increment_stability_test(ps, bins=5)
    assert not any(r.reject for r in reports)
    assert reports[0].cell["tau_spread"] > 0.1
    assert rejection_rate(martingale_test(ps)) <= 0.1


def test_asynchronous_clock_with_coupled_base_breaks_granger_independence():
    """Counterexample: when a component's clock runs ahead it reveals
    same-step increments of the others, so the time-changed increments are
    not Granger independent even though base and clock each are."""
    ps = simulate_time_changed(IID_STATE, ClockSpec.poisson(1.0), 100_000, 10, seed=8)
    assert any(r.reject for r in increment_stability_test(ps, bins=5))


def test_asynchronous_clock_with_independent_base_is_fine():
    model = GimpModel((IidMarginal(0.1), IidMarginal(0.1)), CopulaSpec.independence())
    ps = simulate_time_changed(model, ClockSpec.poisson(1.0), 100_000, 10, seed=9)
    assert not any(r.reject for r in increment_stability_test(ps, bins=5))


def test_internal_time_guard_names_path():
    with pytest.raises(ResourceError, match="path"):
        simulate_time_changed(GARCH2, ClockSpec.poisson(50.0), 100, 5, seed=0, max_internal=100)


def test_time_change_rejects_short_base():
    base = simulate(GARCH2, 3, 2, seed=0)
    with pytest.raises(InputError):
        time_change(base, np.full((3, 2, 2), 5))


def test_state_dependent_clock_catches_up():
    spec = ClockSpec.poisson([1.0, 1.0], state_dependent=True, catch_up=3.0)
    T = simulate_clock(spec, np.arange(20_000), 20, seed=1)
    free = simulate_clock(ClockSpec.poisson([1.0, 1.0]), np.arange(20_000), 20, seed=1)
    gap = lambda x: np.abs(x[:, -1, 0] - x[:, -1, 1]).mean()  # noqa: E731
    assert gap(T) < gap(free)


@pytest.mark.parametrize("make", [
    lambda: ClockSpec("gamma", 1.0),
    lambda: ClockSpec.poisson(0.0),
    lambda: ClockSpec.geometric(1.5),
    lambda: ClockSpec.deterministic(1.5),
    lambda: ClockSpec.poisson([1.0, 2.0], synchronized=True),
    lambda: ClockSpec.geometric(0.5, state_dependent=True),
    lambda: ClockSpec.poisson([1.0, 1.0], coupling=CopulaSpec.independence(3)),
    lambda: ClockSpec.poisson([1.0, 1.0, 1.0]).with_dim(2),
])
def test_invalid_clocks(make):
    with pytest.raises(ConfigError):
        make()


def test_initial_state_zero():
    assert np.all(initial_clock_state(ClockSpec.poisson([1, 1]), 4).t_values == 0)
