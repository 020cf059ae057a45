"""Simulation, pricing and exact verification of Granger-independent martingale processes."""

__version__ = "0.1.0"

from .clock import ClockSpec, simulate_clock, simulate_time_changed, time_change  # noqa: E402
from .copula import (  # noqa: E402
    CopulaSpec,
    StateMap,
    copula_cdf,
    copula_density,
    resolve_state_param,
    rosenblatt_forward,
    sample_copula,
)
from .errors import ComputationError, ConfigError, GimpError, InputError, ResourceError  # noqa: E402
from .marginal import GarchParams, MarginalState  # noqa: E402
from .pricing import PayoffSpec, PriceEstimate, payoff_eval, price, price_many  # noqa: E402
from .process import GimpModel, IidMarginal, PathSet, TwoPointMarginal, simulate, step  # noqa: E402
from .rng import RngStream  # noqa: E402

__all__ = [
    "ClockSpec", "ComputationError", "ConfigError", "CopulaSpec", "GarchParams", "GimpError",
    "GimpModel", "IidMarginal", "InputError", "MarginalState", "PathSet", "PayoffSpec",
    "PriceEstimate", "ResourceError", "RngStream", "StateMap", "TwoPointMarginal", "copula_cdf",
    "copula_density", "payoff_eval", "price", "price_many", "resolve_state_param",
    "rosenblatt_forward", "sample_copula", "simulate", "simulate_clock", "simulate_time_changed",
    "step", "time_change",
]
