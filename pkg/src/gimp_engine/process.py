"""Multivariate Granger-independent martingale processes.

One step of the process draws a copula point ``U`` (whose parameter may
depend on the whole current state) and pushes each coordinate through the
conditional quantile function of its own marginal.  The marginal law of
asset ``j`` therefore only ever reads asset ``j``'s own state, which is
what rules out Granger causality between the components.
"""
from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import marginal as mg
from .copula import EPS, CopulaSpec, sample_copula
from .errors import ConfigError, InputError, ResourceError
from .marginal import GarchParams, MarginalState
from .rng import DOMAIN_BASE, SCHEME, RngStream

CHUNK = 8192  # paths per work unit; fixed so results never depend on worker count

FEATURES = ("mean_variance", "drawdown")


@dataclass(frozen=True)
class IidMarginal:
    """Stationary marginal: i.i.d. Normal(-sigma^2/2, sigma^2) log-increments."""

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class TwoPointMarginal:
    """Log-increment ``up`` with probability ``p_up``, else ``down``.

    ``p_up`` defaults to the martingale value ``(1 - e^down) / (e^up - e^down)``.
    """

    up: float
    down: float
    p_up: float | None = None

    def __post_init__(self):
        if not self.up > self.down:
            raise ConfigError("two-point marginal needs up > down")
        if self.p_up is None:
            p = (1.0 - np.exp(self.down)) / (np.exp(self.up) - np.exp(self.down))
            object.__setattr__(self, "p_up", float(p))
        if not 0.0 < self.p_up < 1.0:
            raise ConfigError(f"p_up must lie in (0, 1), got {self.p_up}")


_MODES = {GarchParams: "garch", IidMarginal: "iid", TwoPointMarginal: "lattice"}


@dataclass(frozen=True)
class GimpModel:
    """Marginals, initial prices and the coupling copula.

    Parameters
    ----------
    marginals : sequence of GarchParams, IidMarginal or TwoPointMarginal
        All of one kind.
    copula : CopulaSpec
    s0 : sequence of float, optional
        Initial prices (default all ones).
    measure : {"Q", "P"}
        Q simulates the martingale dynamics; P applies each GARCH ``mu``.
    state_feature : {"mean_variance", "drawdown"}, optional
        Scalar summary of the state fed to the copula's state map.  Defaults
        to the mean conditional variance for GARCH marginals and to the
        drawdown ``max(0, -mean_j(X^j_t - X^j_0))`` otherwise.
    rate : float
        Constant per-step risk-free rate added to the Q drift.  Zero in the
        base construction.
    """

    marginals: tuple
    copula: CopulaSpec
    s0: tuple | None = None
    measure: str = "Q"
    state_feature: str | None = None
    rate: float = 0.0

    def __post_init__(self):
        marginals = tuple(self.marginals)
        object.__setattr__(self, "marginals", marginals)
        if len(marginals) < 2:
            raise ConfigError("a GIMP needs at least two assets")
        kinds = {type(mm) for mm in marginals}
        if len(kinds) != 1 or kinds.pop() not in _MODES:
            raise ConfigError("all marginals must share one supported increment mode")
        if self.copula.dim != len(marginals):
            raise ConfigError(f"copula dimension {self.copula.dim} != number of assets {len(marginals)}")
        s0 = (1.0,) * len(marginals) if self.s0 is None else tuple(float(v) for v in self.s0)
        if len(s0) != len(marginals) or min(s0) <= 0:
            raise ConfigError("s0 must hold one positive price per asset")
        object.__setattr__(self, "s0", s0)
        if self.measure not in mg.MEASURES:
            raise ConfigError(f"measure must be 'P' or 'Q', got {self.measure!r}")
        feat = self.state_feature or ("mean_variance" if self.mode == "garch" else "drawdown")
        if feat not in FEATURES:
            raise ConfigError(f"unknown state feature {feat!r}")
        object.__setattr__(self, "state_feature", feat)

    @property
    def m(self):
        return len(self.marginals)

    @property
    def mode(self):
        return _MODES[type(self.marginals[0])]

    @property
    def x0(self):
        return np.log(np.asarray(self.s0))


@dataclass
class ProcessState:
    """Per-path Markov state; every array has shape ``(n, m)``."""

    t: int
    x: np.ndarray
    h2: np.ndarray
    y_prev: np.ndarray

    def asset(self, j):
        return MarginalState(self.x[:, j], self.h2[:, j], self.y_prev[:, j])


def initial_state(model, n=1):
    m = model.m
    x = np.broadcast_to(model.x0, (n, m)).copy()
    if model.mode == "garch":
        h2 = np.array([p.initial_variance for p in model.marginals])
        y_prev = np.sqrt(h2)
    elif model.mode == "iid":
        h2 = np.array([mm.sigma**2 for mm in model.marginals])
        y_prev = np.zeros(m)
    else:
        h2 = np.array([mm.p_up * (1 - mm.p_up) * (mm.up - mm.down) ** 2 for mm in model.marginals])
        y_prev = np.zeros(m)
    return ProcessState(0, x, np.broadcast_to(h2, (n, m)).copy(), np.broadcast_to(y_prev, (n, m)).copy())


def next_variance(model, state):
    """Conditional variance of the next increment, shape ``(n, m)``."""
    if model.mode == "garch":
        return np.column_stack([mg.variance_update(p, state.asset(j)) for j, p in enumerate(model.marginals)])
    return state.h2.copy()


def state_feature(model, state):
    """Scalar copula feature per path."""
    if model.state_feature == "mean_variance":
        return next_variance(model, state).mean(axis=1)
    return np.maximum(0.0, -(state.x - model.x0).mean(axis=1))


def advance(model, state, u):
    """Map copula coordinates ``u`` (n, m) to increments and the next state.

    Asset ``j``'s increment depends only on ``u[:, j]`` and asset ``j``'s
    own state.
    """
    u = np.clip(np.asarray(u, dtype=float), EPS, 1.0 - EPS)
    y = np.empty_like(u)
    h2_new = np.empty_like(u)
    for j, mm in enumerate(model.marginals):
        if model.mode == "garch":
            own = state.asset(j)
            y[:, j] = mg.conditional_quantile(model.measure, mm, own, u[:, j], rate=model.rate)
            h2_new[:, j] = mg.variance_update(mm, own)
        elif model.mode == "iid":
            drift = model.rate if model.measure == "Q" else 0.0
            y[:, j] = drift - 0.5 * mm.sigma**2 + mm.sigma * mg.norm_ppf(u[:, j])
            h2_new[:, j] = state.h2[:, j]
        else:
            y[:, j] = np.where(u[:, j] <= 1.0 - mm.p_up, mm.down, mm.up)
            h2_new[:, j] = state.h2[:, j]
    return ProcessState(state.t + 1, state.x + y, h2_new, y), y


def step(model, state, stream):
    """One step of the coupled process: returns ``(next_state, increments)``."""
    feature = state_feature(model, state) if model.copula.state_dependent else None
    u = sample_copula(model.copula, stream, feature)
    return advance(model, state, u)


@dataclass
class PathSet:
    """Simulated trajectories.

    ``log_prices[p, t, j]`` is the log-price of asset ``j`` on path ``p`` at
    (external) time ``t``; ``variances[p, t, j]`` is the conditional variance
    of the increment from ``t`` to ``t + 1`` on the internal grid.  For
    time-changed sets ``clock[p, s, j]`` holds ``T^j_s``.
    """

    log_prices: np.ndarray
    variances: np.ndarray | None = None
    clock: np.ndarray | None = None
    seed: int | None = None
    scheme: str = SCHEME
    config_hash: str | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_paths(self):
        return self.log_prices.shape[0]

    @property
    def horizon(self):
        return self.log_prices.shape[1] - 1

    @property
    def m(self):
        return self.log_prices.shape[2]

    def prices(self):
        return prices_from_logs(self)

    def to_csv(self, path):
        """Write ``path,time,asset,logprice,variance[,clock]`` rows."""
        n, T1, m = self.log_prices.shape
        p, t, j = (a.ravel() for a in np.meshgrid(np.arange(n), np.arange(T1), np.arange(m), indexing="ij"))
        var = self.variances.ravel() if self.variances is not None else np.full(p.shape, np.nan)
        cols = [p, t, j, self.log_prices.ravel(), var]
        header = "path,time,asset,logprice,variance"
        fmt = ["%d", "%d", "%d", "%.17g", "%.17g"]
        if self.clock is not None:
            cols.append(self.clock.ravel())
            header += ",clock"
            fmt.append("%d")
        table = np.empty((len(p), len(cols)), dtype=object)
        for k, c in enumerate(cols):
            table[:, k] = c
        with open(path, "w", newline="\n") as fh:
            fh.write(header + "\n")
            np.savetxt(fh, table, fmt=fmt, delimiter=",")

    def sidecar(self):
        meta = {
            "config_hash": self.config_hash,
            "seed": self.seed,
            "scheme": self.scheme,
            "n_paths": self.n_paths,
            "horizon": self.horizon,
            "m": self.m,
            "time_changed": self.clock is not None,
        }
        meta.update(self.meta)
        return meta

    def write(self, csv_path, json_path=None):
        self.to_csv(csv_path)
        json_path = json_path or str(csv_path).rsplit(".", 1)[0] + ".json"
        with open(json_path, "w") as fh:
            json.dump(self.sidecar(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return csv_path, json_path

    def digest(self):
        """SHA-256 over the raw arrays; equal digests mean bit-identical paths."""
        h = hashlib.sha256()
        for a in (self.log_prices, self.variances, self.clock):
            if a is not None:
                h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()


def prices_from_logs(paths):
    logs = paths.log_prices if isinstance(paths, PathSet) else np.asarray(paths)
    return np.exp(logs)


def _chunks(n_paths):
    return [np.arange(lo, min(lo + CHUNK, n_paths)) for lo in range(0, n_paths, CHUNK)]


def run_chunks(fn, n_paths, workers=1):
    """Apply ``fn(path_indices)`` to fixed-size chunks, preserving order."""
    chunks = _chunks(n_paths)
    if workers <= 1 or len(chunks) == 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, chunks))


def simulate_paths(model, paths, horizon, seed):
    """Simulate the given path indices; returns (log_prices, variances)."""
    n = len(paths)
    try:
        logs = np.empty((n, horizon + 1, model.m))
        var = np.empty((n, horizon + 1, model.m))
    except MemoryError:
        raise ResourceError(f"cannot allocate {n} x {horizon + 1} x {model.m} path arrays") from None
    stream = RngStream(seed, DOMAIN_BASE, paths)
    state = initial_state(model, n)
    logs[:, 0] = state.x
    var[:, 0] = next_variance(model, state)
    for t in range(1, horizon + 1):
        state, _ = step(model, state, stream)
        logs[:, t] = state.x
        var[:, t] = next_variance(model, state)
    return logs, var


def simulate(model, n_paths, horizon, seed, workers=1, config_hash=None):
    """Simulate ``n_paths`` trajectories of length ``horizon``.

    Path ``p`` uses the counter-based substream keyed by ``(seed, p)``; the
    result is bit-identical for any ``workers``.
    """
    if n_paths < 1:
        raise InputError("n_paths must be >= 1")
    if horizon < 0:
        raise InputError("horizon must be >= 0")
    parts = run_chunks(lambda idx: simulate_paths(model, idx, horizon, seed), n_paths, workers)
    logs = np.concatenate([p[0] for p in parts])
    var = np.concatenate([p[1] for p in parts])
    return PathSet(logs, var, seed=seed, config_hash=config_hash,
                   meta={"measure": model.measure, "mode": model.mode})
