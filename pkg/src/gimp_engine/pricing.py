"""Monte Carlo pricing of multivariate equity payoffs under Q."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .clock import simulate_time_changed
from .errors import ConfigError, InputError
from .process import simulate

KINDS = ("basket_call", "everest", "altiplano", "best_of_call", "worst_of_call", "identity")


@dataclass(frozen=True)
class PayoffSpec:
    """A European payoff on the terminal price vector.

    ``weights``/``strike`` for baskets, ``notional`` for Everest,
    ``thresholds``/``coupon`` for Altiplano, ``strike`` for best/worst-of
    calls and ``asset`` for the identity claim.
    """

    kind: str
    maturity: int
    strike: float = 0.0
    weights: tuple | None = None
    notional: float = 1.0
    thresholds: tuple | None = None
    coupon: float = 1.0
    asset: int = 0
    name: str | None = None

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        if kind not in KINDS:
            raise ConfigError(f"unknown payoff kind {self.kind!r}")
        if self.maturity < 0:
            raise ConfigError("maturity must be >= 0")
        if self.strike < 0:
            raise ConfigError("strike must be >= 0")
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if min(w) < 0 or abs(sum(w) - 1.0) > 1e-12:
                raise ConfigError("basket weights must be nonnegative and sum to 1")
            object.__setattr__(self, "weights", w)
        if self.thresholds is not None:
            object.__setattr__(self, "thresholds", tuple(float(x) for x in self.thresholds))
        if self.name is None:
            object.__setattr__(self, "name", kind)


def payoff_eval(spec, prices):
    """Payoff for terminal prices of shape ``(m,)`` or ``(n, m)``."""
    S = np.asarray(prices, dtype=float)
    single = S.ndim == 1
    S = np.atleast_2d(S)
    m = S.shape[1]
    kind = spec.kind
    if kind == "basket_call":
        w = np.full(m, 1.0 / m) if spec.weights is None else np.asarray(spec.weights)
        if len(w) != m:
            raise InputError(f"basket has {len(w)} weights for {m} assets")
        out = np.maximum(S @ w - spec.strike, 0.0)
    elif kind == "everest":
        out = spec.notional * S.min(axis=1)
    elif kind == "altiplano":
        th = np.zeros(m) if spec.thresholds is None else np.asarray(spec.thresholds)
        if len(th) != m:
            raise InputError(f"altiplano has {len(th)} thresholds for {m} assets")
        out = spec.coupon * np.all(S >= th, axis=1).astype(float)
    elif kind == "best_of_call":
        out = np.maximum(S.max(axis=1) - spec.strike, 0.0)
    elif kind == "worst_of_call":
        out = np.maximum(S.min(axis=1) - spec.strike, 0.0)
    else:
        if not 0 <= spec.asset < m:
            raise InputError(f"asset index {spec.asset} out of range for {m} assets")
        out = S[:, spec.asset].copy()
    return float(out[0]) if single else out


@dataclass
class PriceEstimate:
    value: float
    stderr: float
    n_paths: int
    ci95: tuple
    seed: int
    config_hash: str | None = None
    payoff: str | None = None
    notes: list = field(default_factory=list)

    def to_dict(self):
        d = asdict(self)
        d["ci95"] = list(self.ci95)
        return d


def estimate(samples, seed=None, **kw):
    """Mean, standard error and 95% interval of i.i.d. payoff samples."""
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    value = float(np.mean(samples))
    se = float(np.std(samples, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return PriceEstimate(value, se, n, (value - 1.96 * se, value + 1.96 * se), seed, **kw)


def terminal_prices(model, maturity, n_paths, seed, clock=None, workers=1):
    if clock is None:
        paths = simulate(model, n_paths, maturity, seed, workers)
    else:
        paths = simulate_time_changed(model, clock, n_paths, maturity, seed, workers)
    return paths.prices()[:, maturity, :]


def price(model, payoff, n_paths, seed, clock=None, workers=1, config_hash=None):
    """Discounted Q-expectation of ``payoff``.

    Refuses P-measure models.  A nonzero ``model.rate`` discounts by
    ``exp(-rate * maturity)`` and is reported in ``notes``; it cannot be
    combined with a clock.
    """
    _check_model(model, clock)
    S = terminal_prices(model, payoff.maturity, n_paths, seed, clock, workers)
    discount, notes = _discount(model, payoff)
    return estimate(discount * payoff_eval(payoff, S), seed, config_hash=config_hash,
                    payoff=payoff.name, notes=notes)


def _check_model(model, clock):
    if model.measure != "Q":
        raise ConfigError("pricing requires Q measure: the model is not a martingale under P")
    if model.rate != 0.0 and clock is not None:
        raise ConfigError("a nonzero rate cannot be combined with a stochastic clock")


def _discount(model, payoff):
    if model.rate == 0.0:
        return 1.0, []
    note = f"constant-rate extension: r={model.rate} per step, drift r - h2/2"
    return float(np.exp(-model.rate * payoff.maturity)), [note]


def price_many(model, payoffs, n_paths, seed, clock=None, workers=1):
    """Price several payoffs on one common set of paths (common random numbers)."""
    _check_model(model, clock)
    horizon = max(p.maturity for p in payoffs)
    if clock is None:
        paths = simulate(model, n_paths, horizon, seed, workers)
    else:
        paths = simulate_time_changed(model, clock, n_paths, horizon, seed, workers)
    S = paths.prices()
    out = []
    for p in payoffs:
        discount, notes = _discount(model, p)
        out.append(estimate(discount * payoff_eval(p, S[:, p.maturity, :]), seed, payoff=p.name, notes=notes))
    return out
