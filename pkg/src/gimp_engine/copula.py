"""Copula families used to couple same-step increments.

Three families are supported, all with a strictly positive density on the
open unit cube: independence, Gaussian and Clayton.  Each spec may carry an
affine state map that turns a nonnegative scalar feature of the current
market state into the copula parameter, clamped into the valid range.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy import integrate
from scipy.linalg import solve_triangular
from scipy.special import gammaincinv

from .errors import ComputationError, ConfigError, InputError
from .normal import norm_cdf, norm_ppf
from .rng import DOMAIN_AUX, RngStream

EPS = 1e-12
THETA_MAX = 50.0
THETA_MIN = 1e-6
RHO_MAX = 0.999

FAMILIES = ("independence", "gaussian", "clayton")
SAMPLERS = ("conditional", "frailty")


@dataclass(frozen=True)
class StateMap:
    """Parameter = clamp(a + b * feature)."""

    a: float
    b: float = 0.0


@dataclass(frozen=True)
class CopulaSpec:
    """An m-dimensional copula.

    Parameters
    ----------
    family : {"independence", "gaussian", "clayton"}
    dim : int
        Dimension ``m >= 2``.
    theta : float, optional
        Clayton parameter in ``(0, 50]``.
    corr : array-like, optional
        Gaussian correlation matrix, symmetric positive definite with unit
        diagonal.
    state_map : StateMap, optional
        For Clayton the map drives ``theta``; for Gaussian it drives a common
        pairwise correlation (equicorrelation matrix).
    sampler : {"conditional", "frailty"}
        Clayton sampling method: closed-form inverse Rosenblatt transform
        (m uniforms per draw) or the gamma-frailty construction (m + 1
        uniforms and a gamma quantile, about three times slower).  Both are
        exact.
    """

    family: str
    dim: int = 2
    theta: float | None = None
    corr: tuple | None = None
    state_map: StateMap | None = field(default=None)
    sampler: str = "conditional"

    def __post_init__(self):
        fam = self.family.lower()
        object.__setattr__(self, "family", fam)
        if fam not in FAMILIES:
            raise ConfigError(f"unknown copula family {self.family!r}")
        if self.dim < 2:
            raise ConfigError(f"copula dimension must be >= 2, got {self.dim}")
        if self.sampler not in SAMPLERS:
            raise ConfigError(f"unknown sampler {self.sampler!r}")
        if fam == "clayton":
            if self.theta is None and self.state_map is None:
                raise ConfigError("clayton copula needs theta or a state_map")
            if self.theta is not None and not 0.0 < self.theta <= THETA_MAX:
                raise ConfigError(f"clayton theta must be in (0, {THETA_MAX}], got {self.theta}")
        if fam == "gaussian":
            if self.corr is None and self.state_map is None:
                raise ConfigError("gaussian copula needs corr or a state_map")
            if self.corr is not None:
                R = np.asarray(self.corr, dtype=float)
                if R.shape != (self.dim, self.dim):
                    raise ConfigError(f"corr must be {self.dim}x{self.dim}, got {R.shape}")
                if not np.allclose(R, R.T) or not np.allclose(np.diag(R), 1.0):
                    raise ConfigError("corr must be symmetric with unit diagonal")
                try:
                    np.linalg.cholesky(R)
                except np.linalg.LinAlgError:
                    raise ConfigError("corr is not positive definite") from None
                object.__setattr__(self, "corr", tuple(map(tuple, R.tolist())))

    @classmethod
    def independence(cls, dim=2):
        return cls("independence", dim)

    @classmethod
    def clayton(cls, theta, dim=2, state_map=None, sampler="conditional"):
        return cls("clayton", dim, theta=theta, state_map=state_map, sampler=sampler)

    @classmethod
    def gaussian(cls, corr=None, dim=None, state_map=None):
        if corr is not None:
            corr = np.asarray(corr, dtype=float)
            if corr.ndim == 0:
                d = dim or 2
                corr = np.full((d, d), float(corr))
                np.fill_diagonal(corr, 1.0)
            dim = corr.shape[0]
        return cls("gaussian", dim or 2, corr=corr, state_map=state_map)

    @cached_property
    def chol(self):
        return np.linalg.cholesky(np.asarray(self.corr))

    @property
    def state_dependent(self):
        return self.state_map is not None and self.family != "independence"

    def param_bounds(self):
        if self.family == "clayton":
            return THETA_MIN, THETA_MAX
        if self.family == "gaussian":
            return -1.0 / (self.dim - 1) + 1e-3, RHO_MAX
        return 0.0, 0.0


def _equicorr(rho, dim):
    R = np.full((dim, dim), rho)
    np.fill_diagonal(R, 1.0)
    return R


def resolve_state_param(spec, feature):
    """Concrete-parameter copy of ``spec`` for one value of the state feature."""
    if spec.state_map is None:
        return spec
    lo, hi = spec.param_bounds()
    value = float(np.clip(spec.state_map.a + spec.state_map.b * float(feature), lo, hi))
    if spec.family == "clayton":
        return replace(spec, theta=value, state_map=None)
    if spec.family == "gaussian":
        return replace(spec, corr=_equicorr(value, spec.dim), state_map=None)
    return replace(spec, state_map=None)


def state_params(spec, feature):
    """Vectorised parameter map: one parameter per entry of ``feature``."""
    feature = np.asarray(feature, dtype=float)
    lo, hi = spec.param_bounds()
    return np.clip(spec.state_map.a + spec.state_map.b * feature, lo, hi)


def _as_points(spec, u):
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    u = np.atleast_2d(u)
    if u.shape[-1] != spec.dim:
        raise InputError(f"expected points of dimension {spec.dim}, got {u.shape[-1]}")
    if spec.state_map is not None and spec.family != "independence":
        raise InputError("resolve the state map before evaluating the copula")
    return np.clip(u, EPS, 1.0 - EPS), single


def _out(x, single):
    return float(x[0]) if single else x


def _clayton_gen(u, theta):
    # u**-theta - 1, accurate for tiny theta
    return np.expm1(-theta * np.log(u))


# ----------------------------------------------------------------- CDF


def _bvn_cdf(h, k, rho):
    if rho == 0.0:
        return float(norm_cdf(h) * norm_cdf(k))
    s = np.sqrt(1.0 - rho * rho)
    val, _ = integrate.quad(
        lambda x: np.exp(-0.5 * x * x) / np.sqrt(2 * np.pi) * norm_cdf((k - rho * x) / s),
        -np.inf, h, epsabs=1e-14, epsrel=1e-12, limit=200,
    )
    return val


def _mvn_cdf(h, R):
    """P(Z <= h) for Z ~ N(0, R) by nested quadrature (m <= 3)."""
    m = len(h)
    if m == 1:
        return float(norm_cdf(h[0]))
    if m == 2:
        return _bvn_cdf(h[0], h[1], R[0, 1])
    # condition on the first coordinate
    r1 = R[1:, 0]
    cond = R[1:, 1:] - np.outer(r1, r1)
    sd = np.sqrt(np.diag(cond))
    cond_corr = cond / np.outer(sd, sd)

    def inner(x):
        return np.exp(-0.5 * x * x) / np.sqrt(2 * np.pi) * _mvn_cdf((h[1:] - r1 * x) / sd, cond_corr)

    val, _ = integrate.quad(inner, -np.inf, h[0], epsabs=1e-12, epsrel=1e-10, limit=100)
    return val


def _gaussian_cdf_mc(z, R, n=100_000, seed=0):
    stream = RngStream(seed, DOMAIN_AUX, np.arange(n))
    draws = norm_ppf(stream.uniforms(len(z))) @ np.linalg.cholesky(R).T
    hit = np.all(draws <= z, axis=1).astype(float)
    return hit.mean(), hit.std(ddof=1) / np.sqrt(n)


def copula_cdf(spec, u, return_stderr=False):
    """Evaluate C(u) for one point ``(m,)`` or a batch ``(n, m)``.

    Gaussian CDFs use quadrature for ``m <= 3`` and a fixed-seed Monte
    Carlo estimate with 1e5 draws otherwise; pass ``return_stderr=True``
    to also receive the standard error (zero for closed forms).
    """
    u, single = _as_points(spec, u)
    se = np.zeros(len(u))
    if spec.family == "independence":
        val = np.prod(u, axis=1)
    elif spec.family == "clayton":
        th = spec.theta
        s = _clayton_gen(u, th).sum(axis=1)
        val = np.exp(-np.log1p(s) / th)
    else:
        R = np.asarray(spec.corr)
        z = norm_ppf(u)
        val = np.empty(len(u))
        for i, zi in enumerate(z):
            if spec.dim <= 3:
                val[i] = _mvn_cdf(zi, R)
            else:
                val[i], se[i] = _gaussian_cdf_mc(zi, R)
        val = np.clip(val, 0.0, 1.0)
    if return_stderr:
        return _out(val, single), _out(se, single)
    return _out(val, single)


# ------------------------------------------------------------- density


def copula_density(spec, u):
    """Copula density c(u) > 0 on the open cube."""
    u, single = _as_points(spec, u)
    m = spec.dim
    if spec.family == "independence":
        return _out(np.ones(len(u)), single)
    if spec.family == "clayton":
        th = spec.theta
        s = _clayton_gen(u, th).sum(axis=1)
        log_c = (
            np.sum(np.log1p(th * np.arange(m)))
            - (th + 1.0) * np.log(u).sum(axis=1)
            - (m + 1.0 / th) * np.log1p(s)
        )
        return _out(np.exp(log_c), single)
    R = np.asarray(spec.corr)
    z = norm_ppf(u)
    Rinv = np.linalg.inv(R)
    _, logdet = np.linalg.slogdet(R)
    quad = np.einsum("ni,ij,nj->n", z, Rinv - np.eye(m), z)
    return _out(np.exp(-0.5 * quad - 0.5 * logdet), single)


# ------------------------------------------------------------ Rosenblatt


def rosenblatt_forward(spec, u):
    """Map u to (u_1, C(u_2 | u_1), ..., C(u_m | u_1..u_{m-1}))."""
    u, single = _as_points(spec, u)
    if spec.family == "independence":
        w = u.copy()
    elif spec.family == "clayton":
        th = spec.theta
        cum = np.cumsum(_clayton_gen(u, th), axis=1)
        w = np.empty_like(u)
        w[:, 0] = u[:, 0]
        for k in range(1, spec.dim):
            expo = -(1.0 / th + k)
            w[:, k] = np.exp(expo * (np.log1p(cum[:, k]) - np.log1p(cum[:, k - 1])))
    else:
        z = norm_ppf(u)
        e = solve_triangular(spec.chol, z.T, lower=True).T
        w = norm_cdf(e)
    if not np.all(np.isfinite(w)):
        bad = np.argwhere(~np.isfinite(w))[0]
        raise ComputationError(f"conditional CDF failed at point {u[bad[0]].tolist()}, coordinate {bad[1]}")
    return w[0] if single else w


# --------------------------------------------------------------- sampling


def sample_copula(spec, stream, feature=None):
    """Draw one point per stream row from the copula.

    Parameters
    ----------
    spec : CopulaSpec
    stream : RngStream or FixedStream
    feature : array of shape (n,), optional
        State feature per row; required when ``spec`` has a state map.

    Returns
    -------
    ndarray of shape (n, m)
    """
    m = spec.dim
    if spec.family == "independence":
        return stream.uniforms(m)

    if spec.state_map is not None:
        if feature is None:
            raise InputError("state-dependent copula needs a feature per row")
        param = state_params(spec, np.broadcast_to(feature, (stream.n,)))
    elif spec.family == "clayton":
        param = np.full(stream.n, spec.theta)
    else:
        param = None

    if spec.family == "clayton":
        if spec.sampler == "frailty":
            return _clayton_frailty(stream.uniforms(m + 1), param)
        return _clayton_conditional(stream.uniforms(m), param)

    z = norm_ppf(stream.uniforms(m))
    if param is None:
        x = z @ spec.chol.T
    else:
        L = np.linalg.cholesky(_equicorr_batch(param, m))
        x = np.einsum("nij,nj->ni", L, z)
    return norm_cdf(x)


def _clayton_frailty(draws, theta):
    # W ~ Gamma(1/theta), U_j = (1 + E_j / W)^(-1/theta) with E_j standard exponential
    frailty = gammaincinv(1.0 / theta, draws[:, 0])
    expo = -np.log(draws[:, 1:])
    with np.errstate(divide="ignore"):
        return np.exp(-np.log1p(expo / frailty[:, None]) / theta[:, None])


def _clayton_conditional(w, theta):
    """Inverse Rosenblatt transform, in logs so that theta = 50 cannot overflow.

    Given ``u_1..u_{k-1}`` with ``S = sum_i u_i^-theta - (k - 2)``,
    ``u_k = (1 + S (w_k^(-1/a) - 1))^(-1/theta)`` where ``a = 1/theta + k - 1``.
    """
    m = w.shape[1]
    u = np.empty_like(w)
    u[:, 0] = w[:, 0]
    L = -theta[:, None] * np.log(w[:, :1])  # log u_i^-theta
    for k in range(1, m):
        top = L.max(axis=1)
        log_s = top + np.log(np.exp(L - top[:, None]).sum(axis=1) - (k - 1) * np.exp(-top))
        a = 1.0 / theta + k
        log_e = np.log(np.expm1(-np.log(w[:, k]) / a))
        log_u = -np.logaddexp(0.0, log_s + log_e) / theta
        u[:, k] = np.exp(log_u)
        L = np.column_stack([L, -theta * log_u])
    return u


def _equicorr_batch(rho, m):
    R = np.broadcast_to(rho[:, None, None], (len(rho), m, m)).copy()
    idx = np.arange(m)
    R[:, idx, idx] = 1.0
    return R


def kendall_tau_clayton(theta):
    return theta / (theta + 2.0)
