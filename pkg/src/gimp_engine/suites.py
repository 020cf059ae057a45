"""Named lattice fixtures and the oracle suites run by ``gimp verify``.

Each fixture carries the outcome the theory predicts for every check
family: ``True`` when the check must pass, ``False`` when it must fail
(a counterexample).  A suite succeeds when every prediction is met.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import oracle as orc
from .copula import CopulaSpec, StateMap
from .errors import ConfigError
from .oracle import LatticeClock, LatticeSpec

LN11, LN09 = float(np.log(1.1)), float(np.log(0.9))
LN12, LN08 = float(np.log(1.2)), float(np.log(0.8))
N_RANDOM_LATTICES = 100
N_RANDOM_CLOCK_LATTICES = 50
SUITES = ("lattice", "timechange", "all")


@dataclass
class Fixture:
    name: str
    lattice: LatticeSpec
    kind: str  # "martingale", "granger" or "timechange"
    expect: dict  # check family -> must pass
    strict: bool = True
    note: str = ""


@dataclass
class SuiteOutcome:
    name: str
    kind: str
    report: orc.EnumerationReport
    expect: dict
    mismatches: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.mismatches

    def to_dict(self):
        d = self.report.to_dict()
        d.update(name=self.name, kind=self.kind, ok=self.ok, expect=self.expect,
                 mismatches=self.mismatches)
        return d


def _family(check_name):
    return check_name.split("[")[0]


def compare(report, expect):
    """Check families whose outcome contradicts ``expect``."""
    bad = []
    for fam, must_pass in expect.items():
        checks = [c for c in report.checks if _family(c.name) == fam]
        if not checks:
            bad.append(f"{fam}: no such check")
            continue
        passed = all(c.passed for c in checks)
        if passed != must_pass:
            worst = max(checks, key=lambda c: c.violation)
            bad.append(f"{fam}: expected {'pass' if must_pass else 'fail'}, "
                       f"max violation {worst.violation:.3e}")
    return bad


def run_check(lattice, kind, strict=True):
    if kind == "martingale":
        return orc.enumerate_and_check_martingale(lattice, strict=strict)
    if kind == "granger":
        return orc.enumerate_and_check_granger(lattice)
    if kind == "timechange":
        return orc.enumerate_and_check_timechange(lattice)
    raise ConfigError(f"unknown check kind {kind!r}")


def run_fixture(fx):
    report = run_check(fx.lattice, fx.kind, fx.strict)
    return SuiteOutcome(fx.name, fx.kind, report, fx.expect, compare(report, fx.expect))


# ------------------------------------------------------------- kernels


@dataclass(frozen=True)
class OwnLevelKernel:
    """Independent assets whose step size depends on their own level.

    Below its starting level an asset moves by ``(wide_up, wide_down)``,
    otherwise by ``(up, down)``; both pairs are martingale-normalized.
    Assets never forecast each other, yet each increment law moves with its own level.
    """

    m: int
    up: float = LN11
    down: float = LN09
    wide_up: float = LN12
    wide_down: float = LN08

    def __call__(self, history):
        below = history[-1] - history[0] < -1e-12
        up = np.where(below, self.wide_up, self.up)
        down = np.where(below, self.wide_down, self.down)
        p = (1.0 - np.exp(down)) / (np.exp(up) - np.exp(down))
        bits = orc.outcome_bits(self.m)
        values = np.where(bits == 1, up, down)
        probs = np.prod(np.where(bits == 1, p, 1.0 - p), axis=1)
        return values, probs


@dataclass(frozen=True)
class ContaminatedKernel:
    """Asset 1's up-probability depends on asset 0's level."""

    p_high: float = 0.6
    p_low: float = 0.4

    def __call__(self, history):
        p0 = 0.5
        p1 = self.p_high if history[-1][0] - history[0][0] > 1e-12 else self.p_low
        bits = orc.outcome_bits(2)
        values = np.where(bits == 1, LN11, LN09)
        probs = np.where(bits[:, 0] == 1, p0, 1 - p0) * np.where(bits[:, 1] == 1, p1, 1 - p1)
        return values, probs


@dataclass(frozen=True)
class LevelGap:
    """Table dependence ``lam * tanh(kappa * (x1 - x2))``."""

    lam: float = 0.9
    kappa: float = 5.0

    def __call__(self, x):
        return self.lam * np.tanh(self.kappa * (x[0] - x[1]))


# ------------------------------------------------------------- fixtures


def _two(name, **kw):
    kw.setdefault("horizon", 3)
    return LatticeSpec(2, up=(LN11, LN11), down=(LN09, LN09), name=name, **kw)


ALL_PASS_GRANGER = {"no_causality": True, "stable_increments": True}
ALL_PASS_TC = {k: True for k in ("own_history", "clock_history", "tc_martingale", "tc_martingale_full",
                                 "tc_increments", "tc_increments_full", "mixture")}


def lattice_fixtures():
    fx = [
        Fixture("independent", _two("independent"), "martingale", {"martingale": True}),
        Fixture("max-dependence", _two("max-dependence", dependence=1.0), "martingale", {"martingale": True}),
        Fixture("broken-normalization", _two("broken-normalization", p_up=(0.6, 0.6)), "martingale",
                {"martingale": False}, strict=False,
                note="p = 0.6 gives E[ratio] - 1 = 0.02"),
        Fixture("independent", _two("independent"), "granger", ALL_PASS_GRANGER),
        Fixture("level-dependent-coupling", _two("level-dependent-coupling", horizon=4, dependence_fn=LevelGap()),
                "granger", ALL_PASS_GRANGER, note="joint law varies with levels, marginals do not"),
        Fixture("clayton-drawdown-coupling",
                _two("clayton-drawdown-coupling", copula=CopulaSpec.clayton(0.5, state_map=StateMap(0.5, 40.0))),
                "granger", ALL_PASS_GRANGER),
        Fixture("contaminated-marginal", _two("contaminated-marginal", kernel=ContaminatedKernel()), "granger",
                {"no_causality": False}, note="asset 1's margin reads asset 0's level"),
        Fixture("own-level-marginal", _two("own-level-marginal", kernel=OwnLevelKernel(2)), "granger",
                {"no_causality": True, "stable_increments": False}),
    ]
    return fx


def timechange_fixtures():
    uniform01 = LatticeClock.uniform([0, 1], 2, 3)
    return [
        Fixture("identity-clock", _two("identity-clock", dependence=0.5, clock=LatticeClock.deterministic(2, 3)),
                "timechange", ALL_PASS_TC),
        Fixture("iid-base-uniform-clock", _two("iid-base-uniform-clock", clock=uniform01), "timechange",
                ALL_PASS_TC),
        Fixture("synchronized-clock", _two("synchronized-clock", dependence=0.5,
                                           clock=LatticeClock(np.diag([0.3, 0.5, 0.2]), 2)),
                "timechange", ALL_PASS_TC),
        Fixture("nonstationary-base", _two("nonstationary-base", kernel=OwnLevelKernel(2), clock=uniform01),
                "timechange", {"own_history": True, "tc_martingale": True, "tc_increments": False, "mixture": False},
                note="own-level step sizes break stationary increments"),
        Fixture("async-clock-coupled-base", _two("async-clock-coupled-base", dependence=0.5, clock=uniform01),
                "timechange", {"own_history": False, "tc_martingale": False, "tc_increments": False, "mixture": True},
                note="a component running ahead reveals same-step increments of the others"),
    ]


def random_lattice_fixtures(seed, n=N_RANDOM_LATTICES):
    rng = np.random.default_rng([seed, 1])
    out = []
    for i in range(n):
        lat = orc.random_lattice(rng)
        out.append(Fixture(f"random-{i}", lat, "martingale", {"martingale": True}))
        out.append(Fixture(f"random-{i}", lat, "granger", ALL_PASS_GRANGER))
    return out


def random_clock_fixtures(seed, n=N_RANDOM_CLOCK_LATTICES, regimes=("synchronized", "independent")):
    """Random clock lattices from regimes where all time-change checks hold."""
    rng = np.random.default_rng([seed, 2])
    return [Fixture(f"random-clock-{i}", orc.random_clock_lattice(rng, regimes[i % len(regimes)]),
                    "timechange", ALL_PASS_TC) for i in range(n)]


def run_suite(name, seed=0):
    if name not in SUITES:
        raise ConfigError(f"unknown suite {name!r}; choose one of {', '.join(SUITES)}")
    fixtures = []
    if name in ("lattice", "all"):
        fixtures += lattice_fixtures() + random_lattice_fixtures(seed)
    if name in ("timechange", "all"):
        fixtures += timechange_fixtures() + random_clock_fixtures(seed)
    return [run_fixture(f) for f in fixtures]


# ------------------------------------------------------------ custom lattices

_LATTICE_KEYS = {"m", "horizon", "up", "down", "p_up", "dependence", "copula", "clock", "name", "check"}


def lattice_from_dict(d):
    """Build ``(LatticeSpec, kind)`` from a JSON-style dict."""
    unknown = set(d) - _LATTICE_KEYS
    if unknown:
        raise ConfigError(f"unknown lattice keys: {sorted(unknown)}")
    for key in ("m", "up", "down"):
        if key not in d:
            raise ConfigError(f"lattice is missing {key!r}")
    clock = None
    if "clock" in d:
        c = d["clock"]
        if "uniform" in c:
            clock = LatticeClock.uniform(c["uniform"], d["m"], c.get("horizon", 1))
        else:
            clock = LatticeClock(np.asarray(c["pmf"], dtype=float), c.get("horizon", 1))
    copula = None
    if "copula" in d:
        from .config import parse_copula
        copula = parse_copula(d["copula"], d["m"])
    lat = LatticeSpec(int(d["m"]), int(d.get("horizon", 1)), tuple(d["up"]), tuple(d["down"]),
                      p_up=tuple(d["p_up"]) if "p_up" in d else None,
                      dependence=float(d.get("dependence", 0.0)), copula=copula, clock=clock,
                      name=d.get("name", "custom"))
    kind = d.get("check", "timechange" if clock is not None else "all")
    return lat, kind


def run_custom(d):
    lat, kind = lattice_from_dict(d)
    kinds = ("martingale", "granger") if kind == "all" else (kind,)
    out = []
    for k in kinds:
        report = run_check(lat, k, strict=False)
        out.append(SuiteOutcome(lat.name, k, report, {}, [f"{c.name}: violation {c.violation:.3e}"
                                                            for c in report.checks if not c.passed]))
    return out
