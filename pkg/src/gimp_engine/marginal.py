"""Univariate GARCH(1,1) log-return dynamics under P and Q.

With conditional variance ``h2`` the one-step log-return is

    P:  Y = mu - h2 / 2 + sqrt(h2) * Z
    Q:  Y =    - h2 / 2 + sqrt(h2) * Z

and the variance follows ``h2' = omega0 + omega1 * h2 + omega2 * Y**2``.
Under Q, ``exp(X)`` is a martingale in the asset's own filtration.

A ``MarginalState`` holds the variance and increment of the *last* step;
the variance driving the next increment is ``variance_update(params, state)``.
All functions broadcast over arrays of states.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .copula import EPS
from .errors import ConfigError, InputError
from .normal import norm_cdf, norm_ppf

MEASURES = ("P", "Q")


@dataclass(frozen=True)
class GarchParams:
    omega0: float
    omega1: float
    omega2: float
    mu: float = 0.0
    h2_init: float | str = "stationary"

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ConfigError(f"omega0 must be > 0, got {self.omega0}")
        if self.omega1 < 0 or self.omega2 < 0:
            raise ConfigError("omega1 and omega2 must be >= 0")
        if self.omega1 + self.omega2 >= 1:
            raise ConfigError(
                f"omega1 + omega2 must be < 1 for a stationary variance, got {self.omega1 + self.omega2}"
            )
        if self.h2_init != "stationary" and not (isinstance(self.h2_init, (int, float)) and self.h2_init > 0):
            raise ConfigError(f"h2_init must be 'stationary' or a positive number, got {self.h2_init!r}")

    @property
    def stationary_variance(self):
        return self.omega0 / (1.0 - self.omega1 - self.omega2)

    @property
    def initial_variance(self):
        return self.stationary_variance if self.h2_init == "stationary" else float(self.h2_init)


@dataclass
class MarginalState:
    x: np.ndarray | float
    h2: np.ndarray | float
    y_prev: np.ndarray | float


def initial_state(params, x0=0.0):
    """State at time 0.

    The pre-sample squared increment is set to its conditional mean, so the
    first-step variance equals ``h2_init`` whenever it is the stationary value.
    """
    h2 = params.initial_variance
    return MarginalState(x=x0, h2=h2, y_prev=np.sqrt(h2))


def variance_update(params, state):
    return params.omega0 + params.omega1 * state.h2 + params.omega2 * np.square(state.y_prev)


def _check_measure(measure):
    if measure not in MEASURES:
        raise InputError(f"measure must be 'P' or 'Q', got {measure!r}")


def _mean(measure, params, h2, rate=0.0):
    _check_measure(measure)
    drift = params.mu if measure == "P" else rate
    return drift - 0.5 * h2


def conditional_cdf(measure, params, state, y, rate=0.0):
    """P(Y_next <= y | own history) under the chosen measure.

    ``rate`` is a constant per-step risk-free rate shifting the Q drift
    (zero by default).
    """
    h2 = variance_update(params, state)
    return norm_cdf((y - _mean(measure, params, h2, rate)) / np.sqrt(h2))


def conditional_quantile(measure, params, state, p, rate=0.0):
    """Inverse of :func:`conditional_cdf` in ``y``."""
    p = np.asarray(p, dtype=float)
    if np.any(~(p > 0.0) | ~(p < 1.0)):
        raise InputError("quantile level must lie in (0, 1)")
    h2 = variance_update(params, state)
    z = norm_ppf(np.clip(p, EPS, 1.0 - EPS))
    return _mean(measure, params, h2, rate) + np.sqrt(h2) * z


def martingale_factor(params, state, measure="Q", rate=0.0):
    """E[exp(Y_next) | state] in closed form: 1 under Q, exp(mu) under P."""
    h2 = variance_update(params, state)
    return np.exp(_mean(measure, params, h2, rate) + 0.5 * h2)


def advance(params, state, y):
    """State after observing increment ``y``."""
    return MarginalState(x=state.x + y, h2=variance_update(params, state), y_prev=y)
