"""Exact verification on a discrete analogue of the construction.

A :class:`LatticeSpec` describes ``m`` assets whose log-prices move by one
of two values per step.  The joint one-step law is produced by a *kernel*
``kernel(history) -> (values, probs)``, where ``history`` is the
``(t + 1, m)`` array of log-levels so far, ``values`` is ``(2**m, m)`` and
``probs`` is ``(2**m,)``.  Outcome ``o`` moves asset ``j`` up iff bit
``j`` of ``o`` is set.  The default kernel couples fixed two-point
marginals either through a Frechet-bounded table parameter or through a
copula, optionally as a function of the current levels.

All conditional laws are computed by enumerating every path.  Filtrations
are represented by integer group labels on the enumerated atoms: two atoms
share a label at time ``t`` iff the generating observables agree up to
``t``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .copula import CopulaSpec, copula_cdf, resolve_state_param
from .errors import ConfigError, ResourceError

TOL = 1e-12
MAX_ATOMS = 10**7
MAX_HORIZON = 5
MAX_ASSETS = 3
_ROUND = 11  # decimals used to identify equal levels


# ------------------------------------------------------------------ specs


@dataclass(frozen=True)
class LatticeClock:
    """Integer clock with increments in ``{0, ..., kmax}`` per component.

    ``pmf`` has shape ``(kmax + 1,) * m`` and gives the joint law of one
    step's increments.  ``pmf_fn(t_values) -> pmf`` makes the law depend on
    the clock's own current value (the clock then need not have Granger
    independent increments).
    """

    pmf: np.ndarray
    horizon: int
    pmf_fn: object = None

    def __post_init__(self):
        pmf = np.asarray(self.pmf, dtype=float)
        object.__setattr__(self, "pmf", pmf)
        if np.any(pmf < 0) or abs(pmf.sum() - 1.0) > 1e-12:
            raise ConfigError("clock pmf must be nonnegative and sum to 1")
        if pmf.shape[0] > 3 or len(set(pmf.shape)) != 1:
            raise ConfigError("clock increments must lie in {0, 1, 2} for every component")
        if not 1 <= self.horizon <= MAX_HORIZON:
            raise ConfigError(f"clock horizon must be in 1..{MAX_HORIZON}")

    @property
    def kmax(self):
        return self.pmf.shape[0] - 1

    @property
    def m(self):
        return self.pmf.ndim

    def law(self, t_values):
        return self.pmf if self.pmf_fn is None else np.asarray(self.pmf_fn(t_values), dtype=float)

    @classmethod
    def uniform(cls, support, m, horizon):
        """Independent components, each uniform on ``support``."""
        one = np.zeros(max(support) + 1)
        one[list(support)] = 1.0 / len(support)
        pmf = one
        for _ in range(m - 1):
            pmf = np.multiply.outer(pmf, one)
        return cls(pmf, horizon)

    @classmethod
    def deterministic(cls, m, horizon, k=1):
        pmf = np.zeros((k + 1,) * m)
        pmf[(k,) * m] = 1.0
        return cls(pmf, horizon)


@dataclass(frozen=True)
class LatticeSpec:
    """Discrete multivariate model for exhaustive enumeration.

    Parameters
    ----------
    m, horizon : int
        Assets (2 or 3) and number of steps (at most 5).  With a clock,
        ``horizon`` is ignored and the base runs for ``clock.horizon *
        clock.kmax`` internal steps.
    up, down : sequence of float
        Log-increments per asset, ``up > down``.
    p_up : sequence of float, optional
        Up probabilities; default is the martingale value
        ``(1 - e^down) / (e^up - e^down)``.
    dependence : float
        Table parameter in ``[-1, 1]``: 0 independent, +1 / -1 the upper /
        lower Frechet bound for each pair ``(1, k)``.
    dependence_fn : callable, optional
        ``f(levels) -> dependence`` evaluated on the current levels.
    copula : CopulaSpec, optional
        Couple through ``P(all down) = C(q)``; a state map on it is driven
        by the drawdown ``max(0, -mean(x_t - x_0))``.
    kernel : callable, optional
        Custom kernel overriding all of the above.
    clock : LatticeClock, optional
    """

    m: int
    horizon: int
    up: tuple
    down: tuple
    p_up: tuple | None = None
    dependence: float = 0.0
    dependence_fn: object = None
    copula: CopulaSpec | None = None
    kernel: object = None
    clock: LatticeClock | None = None
    name: str = "lattice"

    def __post_init__(self):
        if not 2 <= self.m <= MAX_ASSETS:
            raise ConfigError(f"lattice supports 2..{MAX_ASSETS} assets, got {self.m}")
        if not 1 <= self.horizon <= MAX_HORIZON and self.clock is None:
            raise ConfigError(f"lattice horizon must be in 1..{MAX_HORIZON}")
        up = tuple(float(v) for v in self.up)
        down = tuple(float(v) for v in self.down)
        if len(up) != self.m or len(down) != self.m:
            raise ConfigError("need one up and one down value per asset")
        if any(u <= d for u, d in zip(up, down)):
            raise ConfigError("every asset needs up > down")
        object.__setattr__(self, "up", up)
        object.__setattr__(self, "down", down)
        p = tuple(martingale_p(u, d) for u, d in zip(up, down)) if self.p_up is None else tuple(
            float(v) for v in self.p_up)
        if len(p) != self.m or not all(0 < v < 1 for v in p):
            raise ConfigError("p_up must hold one probability in (0, 1) per asset")
        object.__setattr__(self, "p_up", p)
        if not -1.0 <= self.dependence <= 1.0:
            raise ConfigError("dependence must lie in [-1, 1]")
        if self.copula is not None and self.copula.dim != self.m:
            raise ConfigError("copula dimension must equal m")
        if self.clock is not None and self.clock.m != self.m:
            raise ConfigError("clock dimension must equal m")

    @property
    def internal_horizon(self):
        return self.horizon if self.clock is None else self.clock.horizon * self.clock.kmax

    def normalization_errors(self):
        """Per-asset ``p e^up + (1 - p) e^down - 1``."""
        return [p * np.exp(u) + (1 - p) * np.exp(d) - 1.0 for p, u, d in zip(self.p_up, self.up, self.down)]

    def make_kernel(self):
        if self.kernel is not None:
            return self.kernel
        return _default_kernel(self)


def martingale_p(up, down):
    return (1.0 - np.exp(down)) / (np.exp(up) - np.exp(down))


def outcome_bits(m):
    """``(2**m, m)`` array: entry ``[o, j]`` is 1 iff outcome ``o`` moves asset ``j`` up."""
    o = np.arange(2**m)
    return (o[:, None] >> np.arange(m)[None, :]) & 1


def pair_table(p1, pk, lam):
    """2x2 joint pmf ``[x1, xk]`` (0 down, 1 up) with the given margins.

    ``lam`` interpolates linearly between independence and the upper
    (``lam = 1``) or lower (``lam = -1``) Frechet bound.
    """
    if lam >= 0:
        c = lam * min(p1 * (1 - pk), (1 - p1) * pk)
    else:
        c = lam * min(p1 * pk, (1 - p1) * (1 - pk))
    uu = p1 * pk + c
    ud = p1 - uu
    du = pk - uu
    dd = 1.0 - uu - ud - du
    return np.array([[dd, du], [ud, uu]])


def table_pmf(p_up, lam):
    """Joint outcome pmf: asset 1 first, every other asset conditionally on asset 1."""
    m = len(p_up)
    bits = outcome_bits(m)
    p1 = p_up[0]
    probs = np.where(bits[:, 0] == 1, p1, 1.0 - p1)
    for k in range(1, m):
        tab = pair_table(p1, p_up[k], lam)
        cond = tab / tab.sum(axis=1, keepdims=True)
        probs = probs * cond[bits[:, 0], bits[:, k]]
    return probs


def _cdf_with_ones(spec, w):
    # exact margins: coordinates equal to 1 are dropped, not clamped
    keep = [j for j, v in enumerate(w) if v < 1.0]
    if not keep:
        return 1.0
    if len(keep) == 1:
        return float(w[keep[0]])
    if len(keep) == spec.dim:
        return copula_cdf(spec, np.asarray(w))
    if spec.family == "independence":
        sub = CopulaSpec.independence(len(keep))
    elif spec.family == "clayton":
        sub = CopulaSpec.clayton(spec.theta, dim=len(keep))
    else:
        R = np.asarray(spec.corr)[np.ix_(keep, keep)]
        sub = CopulaSpec.gaussian(R)
    return copula_cdf(sub, np.asarray([w[j] for j in keep]))


def copula_pmf(spec, p_up):
    """Outcome pmf induced by a copula and down-probabilities ``1 - p_up``."""
    m = len(p_up)
    q = 1.0 - np.asarray(p_up)
    bits = outcome_bits(m)
    probs = np.zeros(2**m)
    for o, b in enumerate(bits):
        ups = [j for j in range(m) if b[j]]
        total = 0.0
        # inclusion-exclusion over the assets required to be up
        for mask in range(2 ** len(ups)):
            w = [q[j] if not b[j] else 1.0 for j in range(m)]
            sign = 1
            for i, j in enumerate(ups):
                if mask >> i & 1:
                    w[j] = q[j]
                    sign = -sign
            total += sign * _cdf_with_ones(spec, w)
        probs[o] = total
    return np.clip(probs, 0.0, None)


def _default_kernel(spec):
    bits = outcome_bits(spec.m)
    values = np.where(bits == 1, np.asarray(spec.up), np.asarray(spec.down))
    cache = {}

    def kernel(history):
        x = history[-1]
        key = tuple(np.round(x - history[0], _ROUND))
        if key in cache:
            return cache[key]
        if spec.copula is not None:
            cop = spec.copula
            if cop.state_dependent:
                cop = resolve_state_param(cop, max(0.0, -float(np.mean(x - history[0]))))
            probs = copula_pmf(cop, spec.p_up)
        else:
            lam = spec.dependence if spec.dependence_fn is None else float(
                np.clip(spec.dependence_fn(x), -1.0, 1.0))
            probs = table_pmf(spec.p_up, lam)
        cache[key] = (values, probs)
        return values, probs

    return kernel


# ------------------------------------------------------------ enumeration


@dataclass
class Tree:
    """All paths of a lattice: levels ``(n, N + 1, m)``, probabilities ``(n,)``."""

    levels: np.ndarray
    prob: np.ndarray
    outcomes: np.ndarray  # (n, N) outcome index per step
    visited: list  # number of distinct histories at each t


def enumerate_base(spec, horizon=None):
    N = spec.internal_horizon if horizon is None else horizon
    kernel = spec.make_kernel()
    m = spec.m
    levels = np.zeros((1, 1, m))
    prob = np.ones(1)
    outcomes = np.zeros((1, 0), dtype=np.int64)
    visited = [1]
    for t in range(N):
        vals, probs = zip(*(kernel(h) for h in levels))
        vals = np.asarray(vals)  # (n, K, m)
        probs = np.asarray(probs)  # (n, K)
        n, K = probs.shape
        nxt = levels[:, -1][:, None, :] + vals
        levels = np.concatenate([np.repeat(levels, K, axis=0), nxt.reshape(n * K, 1, m)], axis=1)
        prob = (prob[:, None] * probs).ravel()
        outcomes = np.concatenate(
            [np.repeat(outcomes, K, axis=0), np.tile(np.arange(K), n)[:, None]], axis=1)
        visited.append(len(prob))
        if visited[-1] != (2**m) ** (t + 1):
            raise AssertionError("enumeration is not exhaustive")
    return Tree(levels, prob, outcomes, visited)


def enumerate_clock(clock):
    m, K = clock.m, clock.kmax + 1
    incs = np.stack(np.unravel_index(np.arange(K**m), (K,) * m), axis=1)  # (K^m, m)
    T = np.zeros((1, 1, m), dtype=np.int64)
    prob = np.ones(1)
    for s in range(clock.horizon):
        laws = np.stack([clock.law(tv).ravel() for tv in T[:, -1]])  # (n, K^m)
        n = len(T)
        nxt = T[:, -1][:, None, :] + incs[None]
        T = np.concatenate([np.repeat(T, K**m, axis=0), nxt.reshape(-1, 1, m)], axis=1)
        prob = (prob[:, None] * laws).ravel()
    return T, prob


# ------------------------------------------------------------- filtrations


def _codes(x):
    """Integer labels for (rounded) real values."""
    _, inv = np.unique(np.round(x, _ROUND), return_inverse=True)
    return inv.reshape(np.shape(x))


def _refine(groups, code):
    """Labels of the pair (group, code)."""
    if groups is None:
        groups = np.zeros(len(code), dtype=np.int64)
    key = groups.astype(np.int64) * (int(code.max()) + 1) + code
    _, inv = np.unique(key, return_inverse=True)
    return inv.ravel()


class Filtration:
    """Running labels of the sigma-algebra generated by chosen observables."""

    def __init__(self, n):
        self.groups = np.zeros(n, dtype=np.int64)

    def observe(self, *codes):
        for c in codes:
            self.groups = _refine(self.groups, c)
        return self.groups


# -------------------------------------------------------------- checks


@dataclass
class Check:
    name: str
    violation: float
    tolerance: float = TOL
    witness: dict | None = None

    @property
    def passed(self):
        return bool(self.violation < self.tolerance)


@dataclass
class EnumerationReport:
    """Outcome of an exhaustive check run."""

    lattice: str
    checks: list = field(default_factory=list)
    visited: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def add(self, name, violation, witness=None):
        """Record ``name``, keeping the worst violation seen so far."""
        for c in self.checks:
            if c.name == name:
                if violation > c.violation:
                    c.violation, c.witness = violation, witness
                return
        self.checks.append(Check(name, violation, witness=witness))

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def max_violation(self):
        return max((c.violation for c in self.checks), default=0.0)

    def to_dict(self):
        return {
            "lattice": self.lattice,
            "passed": self.passed,
            "checks": [
                {"name": c.name, "violation": c.violation, "tolerance": c.tolerance,
                 "passed": c.passed, "witness": c.witness}
                for c in self.checks
            ],
            "visited": self.visited,
            "info": self.info,
        }

    def table(self):
        lines = [f"{self.lattice}"]
        for c in self.checks:
            mark = "ok  " if c.passed else "FAIL"
            lines.append(f"  {mark} {c.name:<24s} max violation {c.violation:.3e}")
            if not c.passed and c.witness:
                lines.append(f"       witness: {c.witness}")
        return "\n".join(lines)


def law_gap(prob, fine, coarse, value):
    """Largest CDF difference between conditioning on ``fine`` and on ``coarse``.

    ``fine`` must refine ``coarse``.  Returns ``(gap, atom)`` where ``atom``
    is an atom of the fine group attaining the gap (or -1).
    """
    vcode = _codes(value)
    K = int(vcode.max()) + 1
    nf, nc = int(fine.max()) + 1, int(coarse.max()) + 1
    coarse_of = np.zeros(nf, dtype=np.int64)
    coarse_of[fine] = coarse
    if not np.array_equal(coarse_of[fine], coarse):
        raise ValueError("fine labels do not refine coarse labels")
    mf = np.bincount(fine * K + vcode, prob, minlength=nf * K).reshape(nf, K)
    mc = np.bincount(coarse * K + vcode, prob, minlength=nc * K).reshape(nc, K)
    wf, wc = mf.sum(axis=1), mc.sum(axis=1)
    live = wf > 0
    if not live.any():
        return 0.0, -1
    Ff = np.cumsum(mf[live], axis=1) / wf[live, None]
    Fc = np.cumsum(mc[coarse_of[live]], axis=1) / wc[coarse_of[live], None]
    gaps = np.abs(Ff - Fc).max(axis=1)
    g = int(np.argmax(gaps))
    group = np.flatnonzero(live)[g]
    return float(gaps[g]), int(np.flatnonzero(fine == group)[0])


def mean_gap(prob, groups, value, target=1.0):
    """max over positive-mass groups of ``|E[value | group] - target|``."""
    n = int(groups.max()) + 1
    w = np.bincount(groups, prob, minlength=n)
    s = np.bincount(groups, prob * value, minlength=n)
    live = w > 0
    gaps = np.abs(s[live] / w[live] - target)
    g = int(np.argmax(gaps))
    group = np.flatnonzero(live)[g]
    return float(gaps[g]), int(np.flatnonzero(groups == group)[0])


def _history_witness(tree, atom, t):
    return {"t": int(t), "levels": np.round(tree.levels[atom, : t + 1], 12).tolist()}


def enumerate_and_check_martingale(lattice, strict=True):
    """Check ``E[S^j_{t+1} / S^j_t | full history] = 1`` on every history.

    With ``strict`` a lattice whose declared probabilities break the
    martingale normalization is rejected up front with ``ConfigError``;
    otherwise the violation is measured and reported.
    """
    if strict and lattice.kernel is None:
        for j, err in enumerate(lattice.normalization_errors()):
            if abs(err) > TOL:
                raise ConfigError(f"asset {j}: p e^up + (1-p) e^down - 1 = {err:.3g} != 0")
    tree = enumerate_base(lattice, lattice.horizon)
    report = EnumerationReport(lattice.name, visited={"histories": tree.visited})
    n = len(tree.prob)
    full = Filtration(n)
    codes = [_codes(tree.levels[:, :, j]) for j in range(lattice.m)]
    for t in range(lattice.horizon):
        g = full.observe(*(c[:, t] for c in codes))
        for j in range(lattice.m):
            ratio = np.exp(tree.levels[:, t + 1, j] - tree.levels[:, t, j])
            gap, atom = mean_gap(tree.prob, g, ratio)
            report.add(f"martingale[{j}]", gap, _history_witness(tree, atom, t))
    return report


def enumerate_and_check_granger(lattice):
    """Exact checks of no-Granger-causality and Granger-independent increments.

    ``no_causality[k]`` compares the law of asset ``k``'s next increment given
    the full history with the law given ``k``'s own history;
    ``stable_increments[k]`` compares it with the unconditional law.  ``info``
    records how much the joint one-step law varies across histories.
    """
    tree = enumerate_base(lattice, lattice.horizon)
    m = lattice.m
    report = EnumerationReport(lattice.name, visited={"histories": tree.visited})
    n = len(tree.prob)
    codes = [_codes(tree.levels[:, :, j]) for j in range(m)]
    full = Filtration(n)
    own = [Filtration(n) for _ in range(m)]
    uncond = np.zeros(n, dtype=np.int64)
    spread = 0.0
    for t in range(lattice.horizon):
        g = full.observe(*(c[:, t] for c in codes))
        for k in range(m):
            gk = own[k].observe(codes[k][:, t])
            dx = tree.levels[:, t + 1, k] - tree.levels[:, t, k]
            gap, atom = law_gap(tree.prob, g, gk, dx)
            report.add(f"no_causality[{k}]", gap, _history_witness(tree, atom, t))
            gap, atom = law_gap(tree.prob, g, uncond, dx)
            report.add(f"stable_increments[{k}]", gap, _history_witness(tree, atom, t))
        spread = max(spread, _joint_spread(tree.prob, g, tree.outcomes[:, t], 2**m))
    report.info["joint_law_spread"] = spread
    return report


def _joint_spread(prob, groups, outcome, K):
    n = int(groups.max()) + 1
    mass = np.bincount(groups * K + outcome, prob, minlength=n * K).reshape(n, K)
    w = mass.sum(axis=1)
    cond = mass[w > 0] / w[w > 0, None]
    return float((cond.max(axis=0) - cond.min(axis=0)).max())


def enumerate_and_check_timechange(lattice, max_atoms=MAX_ATOMS):
    """Exact checks of the time-change results on the product of base and clock paths.

    Checks, per asset ``j`` and over all external times:

    ``own_history``         law of dX^j_T given (X_T, T) history vs given (X^j_T, T)
    ``clock_history``       the same law vs given the clock history alone
    ``tc_martingale``       E[S^j_T(s+1) / S^j_T(s) | X_T history] = 1
    ``tc_martingale_full``  the same given the (X_T, T) history
    ``tc_increments``       law of dX^j_T given X_T history vs unconditional
    ``tc_increments_full``  the same given the (X_T, T) history
    ``mixture``             unconditional law of dX^j_T vs sum_u P(X^j_u - X^j_0 <= x) P(dT^j = u)
    """
    clock = lattice.clock
    if clock is None:
        raise ConfigError("time-change checks need a lattice with a clock")
    m = lattice.m
    n_base = (2**m) ** lattice.internal_horizon
    n_clock = ((clock.kmax + 1) ** m) ** clock.horizon
    if n_base * n_clock > max_atoms:
        raise ResourceError(f"{n_base * n_clock} atoms exceed the guard of {max_atoms}")
    tree = enumerate_base(lattice)
    T, pc = enumerate_clock(clock)
    S = clock.horizon
    b = np.repeat(np.arange(len(tree.prob)), len(pc))
    c = np.tile(np.arange(len(pc)), len(tree.prob))
    prob = tree.prob[b] * pc[c]
    n = len(prob)
    report = EnumerationReport(lattice.name, visited={"base_paths": len(tree.prob), "clock_paths": len(pc),
                                                      "atoms": n})
    if n != n_base * n_clock:
        raise AssertionError("enumeration is not exhaustive")

    Tc = T[c]  # (n, S + 1, m)
    Y = np.stack([tree.levels[b[:, None], Tc[:, :, j], j] for j in range(m)], axis=2)
    ycode = [_codes(Y[:, :, j]) for j in range(m)]

    full, only_y, only_t = Filtration(n), Filtration(n), Filtration(n)
    own = [Filtration(n) for _ in range(m)]
    uncond = np.zeros(n, dtype=np.int64)

    # law of X^j_u - X^j_0 from the base tree, for the mixture identity
    base_incr = [[(tree.levels[:, u, j] - tree.levels[:, 0, j]) for u in range(lattice.internal_horizon + 1)]
                 for j in range(m)]

    def witness(atom, s, j):
        return {"s": int(s), "asset": int(j),
                "x_T": np.round(Y[atom, : s + 1], 12).tolist(),
                "clock": Tc[atom, : s + 1].tolist()}

    for s in range(S):
        tcodes = [Tc[:, s, j] for j in range(m)]
        gf = full.observe(*(ycode[j][:, s] for j in range(m)), *tcodes)
        gy = only_y.observe(*(ycode[j][:, s] for j in range(m)))
        gt = only_t.observe(*tcodes)
        for j in range(m):
            gj = own[j].observe(ycode[j][:, s], *tcodes)
            dy = Y[:, s + 1, j] - Y[:, s, j]
            for name, fine, coarse in (
                ("own_history", gf, gj),
                ("clock_history", gf, gt),
                ("tc_increments", gy, uncond),
                ("tc_increments_full", gf, uncond),
            ):
                gap, atom = law_gap(prob, fine, coarse, dy)
                report.add(f"{name}[{j}]", gap, witness(atom, s, j))
            ratio = np.exp(dy)
            for name, groups in (("tc_martingale", gy), ("tc_martingale_full", gf)):
                gap, atom = mean_gap(prob, groups, ratio)
                report.add(f"{name}[{j}]", gap, witness(atom, s, j))
            report.add(f"mixture[{j}]", _mixture_gap(prob, dy, Tc[:, s + 1, j] - Tc[:, s, j],
                                                     tree.prob, base_incr[j]), {"s": int(s), "asset": int(j)})
    return report


def _mixture_gap(prob, dy, dT, base_prob, base_incr):
    """sup_x |P(dY <= x) - sum_u P(X_u - X_0 <= x) P(dT = u)|."""
    xs = np.unique(np.round(np.concatenate([dy] + list(base_incr)), _ROUND))
    lhs = np.array([prob[np.round(dy, _ROUND) <= x].sum() for x in xs])
    rhs = np.zeros_like(lhs)
    for u in np.unique(dT):
        pu = prob[dT == u].sum()
        inc = np.round(base_incr[u], _ROUND)
        rhs += pu * np.array([base_prob[inc <= x].sum() for x in xs])
    return float(np.abs(lhs - rhs).max())


# ---------------------------------------------------------- lattice pricing


def lattice_expectation(lattice, fn):
    """Exact ``E[fn(terminal prices)]`` where ``fn`` maps ``(n, m)`` to ``(n,)``."""
    tree = enumerate_base(lattice, lattice.horizon)
    return float(np.dot(tree.prob, fn(np.exp(tree.levels[:, -1]))))


# ---------------------------------------------------------- random lattices


def random_lattice(rng, m=None, horizon=None, level_dependent=None):
    """A random admissible lattice (martingale two-point marginals)."""
    m = m or int(rng.integers(2, MAX_ASSETS + 1))
    horizon = horizon or int(rng.integers(2, MAX_HORIZON + 1))
    up = np.log1p(rng.uniform(0.02, 0.5, m))
    down = np.log1p(-rng.uniform(0.02, 0.5, m))
    lam = float(rng.uniform(-1, 1))
    if level_dependent is None:
        level_dependent = bool(rng.integers(2))
    fn = None
    if level_dependent:
        kappa = float(rng.uniform(0.5, 5.0))
        fn = _LevelDependence(lam, kappa)
    return LatticeSpec(m, horizon, tuple(up), tuple(down), dependence=lam, dependence_fn=fn,
                       name=f"random(m={m}, N={horizon}, level_dependent={level_dependent})")


@dataclass(frozen=True)
class _LevelDependence:
    lam: float
    kappa: float

    def __call__(self, x):
        return self.lam * np.tanh(self.kappa * (x[0] - x[1]))


def random_clock(rng, m, kmax, horizon, state_dependent=False, synchronized=False):
    """Random clock law; ``synchronized`` puts all mass on equal increments."""
    if synchronized:
        pmf = np.zeros((kmax + 1,) * m)
        w = rng.dirichlet(np.ones(kmax + 1))
        for k in range(kmax + 1):
            pmf[(k,) * m] = w[k]
    else:
        pmf = rng.dirichlet(np.ones((kmax + 1) ** m)).reshape((kmax + 1,) * m)
    fn = _CatchUp(pmf) if state_dependent else None
    return LatticeClock(pmf, horizon, fn)


@dataclass(frozen=True)
class _CatchUp:
    """Shift probability toward larger increments for lagging components."""

    pmf: np.ndarray

    def __call__(self, t_values):
        law = self.pmf
        for j in np.flatnonzero(np.asarray(t_values) < np.max(t_values)):
            moved = np.swapaxes(law, 0, j)
            shifted = 0.5 * moved
            shifted[1:] += 0.5 * moved[:-1]
            shifted[-1] += 0.5 * moved[-1]
            law = np.swapaxes(shifted, 0, j)
        return law


# sizes (m, kmax) -> largest external horizon keeping the atom count moderate
_CLOCK_SIZES = {(2, 1): 4, (2, 2): 2, (3, 1): 3, (3, 2): 1}


CLOCK_REGIMES = ("general", "synchronized", "independent")


def random_clock_lattice(rng, regime="general", state_dependent_clock=False):
    """Random lattice with i.i.d. marginals and a random clock (small enough to enumerate fast).

    ``regime`` selects the family:

    ``general``       any joint clock law, same-step coupled base increments
    ``synchronized``  all clock components move together, coupled base
    ``independent``   any joint clock law, independent base components
    """
    if regime not in CLOCK_REGIMES:
        raise ConfigError(f"unknown clock regime {regime!r}")
    m = int(rng.integers(2, MAX_ASSETS + 1))
    kmax = int(rng.integers(1, 3))
    S = int(rng.integers(1, _CLOCK_SIZES[(m, kmax)] + 1))
    base = random_lattice(rng, m=m, horizon=1)
    clock = random_clock(rng, m, kmax, S, state_dependent_clock, synchronized=regime == "synchronized")
    lam, fn = (0.0, None) if regime == "independent" else (base.dependence, base.dependence_fn)
    return LatticeSpec(m, 1, base.up, base.down, dependence=lam, dependence_fn=fn, clock=clock,
                       name=f"random-clock(m={m}, S={S}, kmax={kmax}, regime={regime}, "
                            f"level_dependent={fn is not None}, "
                            f"state_dependent_clock={state_dependent_clock})")
