"""JSON engine configuration: schema validation, line-anchored errors, hashing.

Example::

    {
      "assets": [
        {"omega0": 1e-5, "omega1": 0.85, "omega2": 0.1, "s0": 1.0},
        {"omega0": 2e-5, "omega1": 0.80, "omega2": 0.1, "s0": 1.0}
      ],
      "copula": {"family": "clayton", "theta": 2.0},
      "clock": {"family": "poisson", "lambda": [1.0, 1.0]},
      "payoffs": [{"name": "everest", "kind": "everest", "maturity": 20}],
      "run": {"n_paths": 100000, "horizon": 20, "seed": 42}
    }

An asset is either a GARCH block (``omega0``, ``omega1``, ``omega2``,
optional ``mu``, ``h2_init``) or an i.i.d. block (``sigma``); both take
``s0``.
"""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from json.decoder import scanstring

from . import __version__
from .clock import ClockSpec
from .copula import CopulaSpec, StateMap
from .errors import ConfigError
from .marginal import GarchParams
from .pricing import PayoffSpec
from .process import GimpModel, IidMarginal

TOP_KEYS = {"assets", "copula", "clock", "payoffs", "run", "measure", "rate", "state_feature"}
GARCH_KEYS = {"omega0", "omega1", "omega2", "mu", "h2_init", "s0"}
IID_KEYS = {"sigma", "s0"}
COPULA_KEYS = {"family", "theta", "corr", "rho", "state_map", "sampler"}
STATE_MAP_KEYS = {"a", "b"}
CLOCK_KEYS = {"family", "lambda", "p", "k", "coupling", "state_dependent", "catch_up", "synchronized",
              "max_internal"}
PAYOFF_KEYS = {"name", "kind", "maturity", "strike", "weights", "notional", "thresholds", "coupon", "asset"}
RUN_KEYS = {"n_paths", "horizon", "seed", "workers", "out"}
RUN_DEFAULTS = {"n_paths": 10000, "horizon": 20, "seed": 0, "workers": 1, "out": "paths.csv"}


class ConfigFileError(ConfigError):
    """Configuration error anchored at a line of the source file."""

    def __init__(self, message, path=(), line=None, source=None):
        self.path, self.line, self.source = tuple(path), line, source
        where = _dotted(path)
        prefix = f"{source or '<config>'}:{line}: " if line else ""
        super().__init__(f"{prefix}{where + ': ' if where else ''}{message}")


def _dotted(path):
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else p)
    return out


# ---------------------------------------------------------- positions

_NUMBER = re.compile(r"-?(?:0|[1-9]\d*)(?:\.\d+)?(?:[eE][-+]?\d+)?")
_WS = re.compile(r"[ \t\n\r]*")


def value_lines(text):
    """Map every JSON path (tuple of keys/indices) to the line it starts on.

    For object members the line of the key is recorded.  Assumes ``text``
    is valid JSON (parse it with :mod:`json` first).
    """
    lines = {}
    line_starts = [0] + [m.end() for m in re.finditer("\n", text)]

    def line_of(pos):
        lo, hi = 0, len(line_starts)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if line_starts[mid] <= pos:
                lo = mid
            else:
                hi = mid
        return lo + 1

    def ws(i):
        return _WS.match(text, i).end()

    def value(i, path):
        i = ws(i)
        lines.setdefault(path, line_of(i))
        c = text[i]
        if c == "{":
            i = ws(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                i = ws(i)
                key_line = line_of(i)
                key, i = scanstring(text, i + 1)
                lines[path + (key,)] = key_line
                i = ws(i)
                i = value(i + 1, path + (key,))  # skip ':'
                lines[path + (key,)] = key_line
                i = ws(i)
                if text[i] == "}":
                    return i + 1
                i += 1  # ','
        if c == "[":
            i = ws(i + 1)
            if text[i] == "]":
                return i + 1
            k = 0
            while True:
                i = value(i, path + (k,))
                i = ws(i)
                if text[i] == "]":
                    return i + 1
                i += 1
                k += 1
        if c == '"':
            return scanstring(text, i + 1)[1]
        for lit in ("true", "false", "null"):
            if text.startswith(lit, i):
                return i + len(lit)
        return _NUMBER.match(text, i).end()

    value(0, ())
    return lines


# ---------------------------------------------------------- parsing


@dataclass
class EngineConfig:
    model: GimpModel
    clock: ClockSpec | None
    payoffs: list
    run: dict
    raw: dict = field(repr=False)
    max_internal: int = 10**6

    @property
    def config_hash(self):
        return config_hash(self.raw)

    def payoff(self, name):
        for p in self.payoffs:
            if p.name == name:
                return p
        known = ", ".join(p.name for p in self.payoffs) or "none"
        raise ConfigError(f"unknown payoff {name!r} (configured: {known})")


def config_hash(raw):
    """64-bit hash (16 hex digits) of the canonical serialization.

    Worker count and output paths are excluded: they never change results.
    """
    d = json.loads(json.dumps(raw))
    run = d.get("run", {})
    for k in ("workers", "out"):
        run.pop(k, None)
    canon = json.dumps(d, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


class _Validator:
    def __init__(self, lines, source):
        self.lines, self.source = lines, source

    def fail(self, msg, path):
        path = tuple(path)
        line = None
        p = path
        while p and line is None:
            line = self.lines.get(p)
            p = p[:-1]
        if line is None:
            line = self.lines.get((), 1)
        raise ConfigFileError(msg, path, line, self.source)

    def obj(self, d, path, allowed, required=()):
        if not isinstance(d, dict):
            self.fail("expected an object", path)
        for k in d:
            if k not in allowed:
                self.fail(f"unknown key {k!r}", tuple(path) + (k,))
        for k in required:
            if k not in d:
                self.fail(f"missing required field {k!r}", path)
        return d

    def number(self, d, key, path, default=None, positive=False, integer=False):
        if key not in d:
            if default is None:
                self.fail(f"missing required field {key!r}", path)
            return default
        v = d[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(f"{key} must be a number", tuple(path) + (key,))
        if integer and int(v) != v:
            self.fail(f"{key} must be an integer", tuple(path) + (key,))
        if positive and not v > 0:
            self.fail(f"{key} must be > 0", tuple(path) + (key,))
        return int(v) if integer else float(v)

    def guard(self, fn, path):
        try:
            return fn()
        except ConfigFileError:
            raise
        except (ConfigError, ValueError, TypeError) as e:
            self.fail(str(e), path)


def parse_copula(d, m, v=None, path=("copula",)):
    v = v or _Validator({}, None)
    v.obj(d, path, COPULA_KEYS, ("family",))
    fam = str(d["family"]).lower()
    sm = None
    if "state_map" in d:
        s = v.obj(d["state_map"], tuple(path) + ("state_map",), STATE_MAP_KEYS, ("a",))
        sm = StateMap(v.number(s, "a", tuple(path) + ("state_map",)),
                      v.number(s, "b", tuple(path) + ("state_map",), default=0.0))
    if fam == "independence":
        return v.guard(lambda: CopulaSpec.independence(m), path)
    if fam == "clayton":
        theta = v.number(d, "theta", path, default=0.0) if "theta" in d else None
        if theta is None and sm is None:
            v.fail("clayton copula needs 'theta' or 'state_map'", path)
        return v.guard(lambda: CopulaSpec.clayton(theta, m, sm, d.get("sampler", "conditional")), path)
    if fam == "gaussian":
        if "corr" in d:
            corr = d["corr"]
        elif "rho" in d:
            corr = v.number(d, "rho", path)
        else:
            corr = None
        if corr is None and sm is None:
            v.fail("gaussian copula needs 'corr', 'rho' or 'state_map'", path)
        spec = v.guard(lambda: CopulaSpec.gaussian(corr, dim=m, state_map=sm), path)
        if spec.dim != m:
            v.fail(f"corr is {spec.dim}x{spec.dim} but there are {m} assets", tuple(path) + ("corr",))
        return spec
    v.fail(f"unknown copula family {d['family']!r}", tuple(path) + ("family",))


def _parse_asset(v, d, path):
    if not isinstance(d, dict):
        v.fail("expected an object", path)
    if "sigma" in d:
        v.obj(d, path, IID_KEYS)
        return v.guard(lambda: IidMarginal(v.number(d, "sigma", path, positive=True)), path), \
            v.number(d, "s0", path, default=1.0, positive=True)
    v.obj(d, path, GARCH_KEYS, ("omega0", "omega1", "omega2"))
    h2 = d.get("h2_init", "stationary")
    if h2 != "stationary":
        h2 = v.number(d, "h2_init", path, positive=True)
    params = v.guard(lambda: GarchParams(v.number(d, "omega0", path), v.number(d, "omega1", path),
                                         v.number(d, "omega2", path), v.number(d, "mu", path, default=0.0),
                                         h2), path)
    return params, v.number(d, "s0", path, default=1.0, positive=True)


def _parse_clock(v, d, m):
    path = ("clock",)
    v.obj(d, path, CLOCK_KEYS, ("family",))
    fam = str(d["family"]).lower()
    key = {"poisson": "lambda", "geometric": "p", "deterministic": "k"}.get(fam)
    if key is None:
        v.fail(f"unknown clock family {d['family']!r}", path + ("family",))
    if key not in d:
        v.fail(f"missing required field {key!r}", path)
    params = d[key] if isinstance(d[key], list) else [d[key]] * m
    coupling = parse_copula(d["coupling"], m, v, path + ("coupling",)) if "coupling" in d else None
    spec = v.guard(lambda: ClockSpec(fam, params, coupling, bool(d.get("state_dependent", False)),
                                     v.number(d, "catch_up", path, default=0.0),
                                     bool(d.get("synchronized", False))), path)
    if spec.m != m:
        v.fail(f"clock has {spec.m} components but there are {m} assets", path + (key,))
    return spec


def parse_config(raw, lines=None, source=None):
    """Validate a decoded config dict and build the engine objects."""
    v = _Validator(lines or {}, source)
    v.obj(raw, (), TOP_KEYS, ("assets", "copula"))
    assets = raw["assets"]
    if not isinstance(assets, list) or len(assets) < 2:
        v.fail("assets must be a list of at least two asset blocks", ("assets",))
    parsed = [_parse_asset(v, a, ("assets", i)) for i, a in enumerate(assets)]
    m = len(parsed)
    copula = parse_copula(raw["copula"], m, v)
    measure = raw.get("measure", "Q")
    if measure not in ("P", "Q"):
        v.fail("measure must be 'P' or 'Q'", ("measure",))
    rate = v.number(raw, "rate", (), default=0.0)
    model = v.guard(lambda: GimpModel(tuple(p for p, _ in parsed), copula, tuple(s for _, s in parsed),
                                      measure, raw.get("state_feature"), rate), ())
    clock = _parse_clock(v, raw["clock"], m) if "clock" in raw else None
    max_internal = 10**6
    if clock is not None and "max_internal" in raw["clock"]:
        max_internal = v.number(raw["clock"], "max_internal", ("clock",), positive=True, integer=True)
    run = dict(RUN_DEFAULTS)
    if "run" in raw:
        r = v.obj(raw["run"], ("run",), RUN_KEYS)
        for k in ("n_paths", "horizon", "seed", "workers"):
            if k in r:
                run[k] = v.number(r, k, ("run",), integer=True)
        if "out" in r:
            run["out"] = str(r["out"])
    if run["n_paths"] < 1:
        v.fail("n_paths must be >= 1", ("run", "n_paths"))
    if run["horizon"] < 0:
        v.fail("horizon must be >= 0", ("run", "horizon"))
    payoffs = []
    for i, p in enumerate(raw.get("payoffs", [])):
        path = ("payoffs", i)
        v.obj(p, path, PAYOFF_KEYS, ("kind", "maturity"))
        kw = {k: p[k] for k in PAYOFF_KEYS if k in p}
        for k in ("weights", "thresholds"):
            if k in kw:
                kw[k] = tuple(kw[k])
        payoffs.append(v.guard(lambda kw=kw: PayoffSpec(**kw), path))
    names = [p.name for p in payoffs]
    if len(set(names)) != len(names):
        v.fail("payoff names must be unique", ("payoffs",))
    return EngineConfig(model, clock, payoffs, run, raw, int(max_internal))


def load_config(path):
    with open(path) as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigFileError(f"invalid JSON: {e.msg} (column {e.colno})", (), e.lineno, str(path)) from None
    return parse_config(raw, value_lines(text), str(path))


def provenance(cfg, seed):
    return {"config_hash": cfg.config_hash, "seed": seed, "engine_version": __version__}
