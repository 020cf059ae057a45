"""Integer-valued multidimensional stochastic clocks and time change.

A clock ``T`` starts at ``T_0 = 0`` and adds a nonnegative integer vector
at every external step.  The marginal increment laws are Poisson,
geometric (support ``{0, 1, ...}``) or deterministic; same-step increments
are coupled by a copula through the discrete quantile functions.  With a
fixed copula and ``state_dependent=False`` the increments are i.i.d. across
steps, hence Granger independent.

Clock draws use their own substream domain, so a clock is independent of
the base process it changes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .copula import CopulaSpec, sample_copula
from .errors import ConfigError, InputError, ResourceError
from .process import PathSet, initial_state, next_variance, run_chunks, step
from .rng import DOMAIN_BASE, DOMAIN_CLOCK, RngStream

INCREMENT_FAMILIES = ("poisson", "geometric", "deterministic")
MAX_INTERNAL = 10**6


@dataclass(frozen=True)
class ClockSpec:
    """Clock increment laws.

    Parameters
    ----------
    family : {"poisson", "geometric", "deterministic"}
    params : sequence of float
        One parameter per component: Poisson mean, geometric ``P(dT = 0)``,
        or the deterministic step.
    coupling : CopulaSpec, optional
        Couples same-step increments; independence by default.
    state_dependent : bool
        When set (Poisson only) a component lagging behind the leading one
        runs at rate ``lambda_j * (1 + catch_up)``.  Such a clock is still
        independent of the base process but its increments are no longer
        Granger independent.
    catch_up : float
    synchronized : bool
        All components share one increment per step (a common clock, which
        requires equal parameters).  ``coupling`` is then unused.
    """

    family: str
    params: tuple
    coupling: CopulaSpec | None = None
    state_dependent: bool = False
    catch_up: float = 0.0
    synchronized: bool = False

    def __post_init__(self):
        fam = self.family.lower()
        object.__setattr__(self, "family", fam)
        if fam not in INCREMENT_FAMILIES:
            raise ConfigError(f"unknown clock family {self.family!r}")
        params = tuple(float(p) for p in np.atleast_1d(self.params))
        object.__setattr__(self, "params", params)
        if len(params) < 1:
            raise ConfigError("clock needs one parameter per component")
        if fam == "poisson" and min(params) <= 0:
            raise ConfigError("poisson rates must be > 0")
        if fam == "geometric" and not all(0 < p <= 1 for p in params):
            raise ConfigError("geometric parameters must lie in (0, 1]")
        if fam == "deterministic" and not all(p >= 0 and p == int(p) for p in params):
            raise ConfigError("deterministic steps must be nonnegative integers")
        coupling = self.coupling or CopulaSpec.independence(max(len(params), 2))
        if coupling.dim != len(params) and len(params) > 1:
            raise ConfigError("clock coupling dimension must match the number of components")
        object.__setattr__(self, "coupling", coupling)
        if self.state_dependent and fam != "poisson":
            raise ConfigError("state-dependent clocks are only supported for the poisson family")
        if self.catch_up < 0:
            raise ConfigError("catch_up must be >= 0")
        if self.synchronized and len(set(params)) != 1:
            raise ConfigError("a synchronized clock needs equal parameters for all components")

    @property
    def m(self):
        return len(self.params)

    @classmethod
    def poisson(cls, lam, coupling=None, **kw):
        return cls("poisson", lam, coupling, **kw)

    @classmethod
    def geometric(cls, p, coupling=None, **kw):
        return cls("geometric", p, coupling, **kw)

    @classmethod
    def deterministic(cls, k):
        return cls("deterministic", k)

    def with_dim(self, m):
        """Broadcast a single-parameter spec to ``m`` components."""
        if self.m == m:
            return self
        if self.m != 1:
            raise ConfigError(f"clock has {self.m} components, model has {m}")
        coupling = self.coupling if self.coupling.dim == m else CopulaSpec.independence(m)
        return ClockSpec(self.family, self.params * m, coupling, self.state_dependent, self.catch_up,
                         self.synchronized)


@dataclass
class ClockState:
    s: int
    t_values: np.ndarray  # (n, m) integers


def initial_clock_state(spec, n=1):
    return ClockState(0, np.zeros((n, spec.m), dtype=np.int64))


def increment_quantile(spec, u, t_values=None):
    """Discrete inverse CDF of the clock increments, elementwise over ``(n, m)``."""
    params = np.asarray(spec.params)
    if spec.family == "deterministic":
        return np.broadcast_to(params.astype(np.int64), u.shape).copy()
    if spec.family == "geometric":
        # P(dT = k) = p (1 - p)^k, k >= 0
        return (stats.geom.ppf(u, params) - 1).astype(np.int64)
    lam = np.broadcast_to(params, u.shape)
    if spec.state_dependent and t_values is not None:
        lagging = t_values < t_values.max(axis=1, keepdims=True)
        lam = lam * np.where(lagging, 1.0 + spec.catch_up, 1.0)
    return stats.poisson.ppf(u, lam).astype(np.int64)


def increment_pmf(spec, k, component=0):
    """P(dT^j = k) for a state-free clock."""
    p = spec.params[component]
    if spec.family == "deterministic":
        return float(k == p)
    if spec.family == "geometric":
        return float(stats.geom.pmf(k + 1, p))
    return float(stats.poisson.pmf(k, p))


def clock_step(spec, state, stream):
    """Advance every path's clock by one external step."""
    if spec.family == "deterministic":
        u = np.full(state.t_values.shape, 0.5)
    elif spec.m == 1 or spec.synchronized:
        u = np.repeat(stream.uniforms(1), spec.m, axis=1)
    else:
        u = sample_copula(spec.coupling, stream)
    inc = increment_quantile(spec, u, state.t_values)
    return ClockState(state.s + 1, state.t_values + inc)


def simulate_clock(spec, paths, horizon, seed):
    """Clock trajectories ``(n, horizon + 1, m)`` for the given path indices."""
    paths = np.atleast_1d(paths)
    stream = RngStream(seed, DOMAIN_CLOCK, paths)
    state = initial_clock_state(spec, len(paths))
    out = np.empty((len(paths), horizon + 1, spec.m), dtype=np.int64)
    out[:, 0] = state.t_values
    for s in range(1, horizon + 1):
        state = clock_step(spec, state, stream)
        out[:, s] = state.t_values
    return out


def time_change(base, clock_values):
    """Sample a base PathSet at clock times: ``out[p, s, j] = base[p, T^j_s, j]``."""
    clock_values = np.asarray(clock_values)
    if clock_values.shape[0] != base.n_paths or clock_values.shape[2] != base.m:
        raise InputError("clock values must have shape (n_paths, S + 1, m) matching the base")
    too_far = clock_values[:, -1].max(axis=1) > base.horizon
    if np.any(too_far):
        p = int(np.argmax(too_far))
        raise InputError(f"base horizon {base.horizon} does not cover clock of path {p}")
    logs = _gather(base.log_prices, clock_values)
    var = _gather(base.variances, clock_values) if base.variances is not None else None
    return PathSet(logs, var, clock_values, seed=base.seed, config_hash=base.config_hash,
                   meta=dict(base.meta, time_changed=True))


def _gather(arr, T):
    n, S1, m = T.shape
    return arr[np.arange(n)[:, None, None], T, np.arange(m)[None, None, :]]


def simulate_time_changed(model, clock, n_paths, horizon, seed, workers=1,
                          max_internal=MAX_INTERNAL, config_hash=None):
    """Simulate ``model`` run on ``clock`` for ``horizon`` external steps.

    The base is simulated lazily, per chunk, up to the largest clock value
    reached in that chunk.  Base and clock draws live in separate substream
    domains.
    """
    clock = clock.with_dim(model.m)

    def work(idx):
        T = simulate_clock(clock, idx, horizon, seed)
        last = T[:, -1].max(axis=1)
        if last.max() > max_internal:
            p = int(idx[np.argmax(last)])
            raise ResourceError(f"path {p} needs internal time {int(last.max())} > cap {max_internal}")
        stream = RngStream(seed, DOMAIN_BASE, idx)
        state = initial_state(model, len(idx))
        n, m = len(idx), model.m
        logs = np.empty((n, horizon + 1, m))
        var = np.empty((n, horizon + 1, m))
        pending = np.ones((n, horizon + 1, m), dtype=bool)
        # walk internal time, recording wherever a clock value is hit
        for t in range(int(last.max()) + 1):
            if t > 0:
                state, _ = step(model, state, stream)
            hit = pending & (T == t)
            if hit.any():
                p_i, s_i, j_i = np.nonzero(hit)
                logs[p_i, s_i, j_i] = state.x[p_i, j_i]
                var[p_i, s_i, j_i] = next_variance(model, state)[p_i, j_i]
                pending &= ~hit
        return logs, var, T

    parts = run_chunks(work, n_paths, workers)
    return PathSet(
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts]),
        np.concatenate([p[2] for p in parts]),
        seed=seed,
        config_hash=config_hash,
        meta={"measure": model.measure, "mode": model.mode, "time_changed": True},
    )
