"""Statistical tests on simulated paths.

* ``martingale_test``: regress the one-step gross return minus one on the
  time-t observables and test that every coefficient is zero.
* ``granger_test``: regress each asset's increment on its own past and on
  another asset's past; test that the cross block is zero.  This is the
  conditional-mean form of no-Granger-causality, a necessary condition of
  the distributional definition.
* ``increment_stability_test``: compare each asset's increment law across
  bins of the market state with two-sample Kolmogorov-Smirnov tests.

Regressions use heteroskedasticity-robust (HC0) covariances, so the Wald
statistics are asymptotically chi-square under the null.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .errors import InputError

MIN_BIN = 100


@dataclass
class TestReport:
    """One hypothesis test.

    ``statistic`` is a Wald chi-square (regressions) or a KS distance;
    ``reject`` is the decision at ``significance`` (after any correction
    recorded in ``notes``).
    """

    __test__ = False  # not a pytest class

    name: str
    statistic: float
    p_value: float
    reject: bool
    significance: float
    n: int
    cell: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def rejection_rate(reports):
    return float(np.mean([r.reject for r in reports])) if reports else 0.0


def independent_columns(X, tol=1e-9):
    """Indices of a maximal set of linearly independent columns, in order.

    Column 0 (the intercept) is always kept; constant and collinear
    columns are dropped.
    """
    keep = [0]
    for k in range(1, X.shape[1]):
        if np.ptp(X[:, k]) == 0:
            continue
        cand = X[:, keep + [k]]
        sv = np.linalg.svd(cand / np.linalg.norm(cand, axis=0), compute_uv=False)
        if sv[-1] > tol:
            keep.append(k)
    return keep


def wald_zero(X, y):
    """HC0 Wald statistic for ``beta = 0`` in ``y = X beta + e``.

    Constant or collinear columns other than the first are dropped.
    Returns ``(statistic, dof, dropped_columns)``.
    """
    X = np.asarray(X, dtype=float)
    keep = independent_columns(X)
    dropped = [k for k in range(X.shape[1]) if k not in keep]
    X = X[:, keep]
    if not np.any(y):
        return 0.0, len(keep), dropped
    XtX = X.T @ X
    beta = np.linalg.solve(XtX, X.T @ y)
    e = y - X @ beta
    meat = (X * e[:, None] ** 2).T @ X
    bread = np.linalg.inv(XtX)
    V = bread @ meat @ bread
    return float(beta @ np.linalg.solve(V, beta)), len(keep), dropped


def wald_block(X, y, block):
    """HC0 Wald statistic for the coefficients in ``block`` (column indices)."""
    XtX = X.T @ X
    bread = np.linalg.inv(XtX)
    beta = bread @ (X.T @ y)
    e = y - X @ beta
    V = bread @ ((X * e[:, None] ** 2).T @ X) @ bread
    b = beta[block]
    return float(b @ np.linalg.solve(V[np.ix_(block, block)], b))


def _standardize(X):
    # scale non-intercept columns; Wald statistics are invariant to it
    X = np.asarray(X, dtype=float).copy()
    for k in range(1, X.shape[1]):
        s = X[:, k].std()
        if s > 0:
            X[:, k] = (X[:, k] - X[:, k].mean()) / s
    return X


def martingale_test(paths, significance=0.01, include_clock=True):
    """Per ``(asset, t)`` test of ``E[S^j_{t+1} / S^j_t - 1 | time-t observables] = 0``.

    The observables are all assets' time-t prices, plus the clock values for
    time-changed paths when ``include_clock`` is set.
    """
    S = paths.prices()
    n, T1, m = S.shape
    reports = []
    for t in range(T1 - 1):
        regs = [np.ones(n), *(S[:, t, k] for k in range(m))]
        if include_clock and paths.clock is not None:
            regs += [paths.clock[:, t, k].astype(float) for k in range(m)]
        X = _standardize(np.column_stack(regs))
        keep = independent_columns(X)
        dropped = [k for k in range(X.shape[1]) if k not in keep]
        X = X[:, keep]
        for j in range(m):
            y = S[:, t + 1, j] / S[:, t, j] - 1.0
            stat, dof, _ = wald_zero(X, y)
            p = float(stats.chi2.sf(stat, dof))
            notes = [f"degenerate regressors dropped: {dropped}"] if dropped else []
            reports.append(TestReport("martingale", stat, p, p < significance, significance, n,
                                      {"asset": j, "t": t, "dof": dof}, notes))
    return reports


def granger_test(paths, lags=1, significance=0.01):
    """Per ordered pair ``(k, j)`` test that asset ``k`` adds nothing to the
    conditional mean of asset ``j``'s next increment.

    Own block: intercept, level, ``lags`` lagged increments and (when the
    paths carry it) the conditional variance.  Cross block: asset ``k``'s
    level and lagged increments.  Observations are pooled over paths and
    times ``t >= lags``.  Decisions are Bonferroni-corrected over the
    ``m (m - 1)`` pairs.
    """
    m = paths.m
    if m < 2:
        report = TestReport("granger", 0.0, 1.0, False, significance, 0, {},
                            ["skipped: m >= 2 required"])
        return [report]
    X = paths.log_prices
    n, T1, _ = X.shape
    if T1 - 1 <= lags:
        raise InputError(f"horizon {T1 - 1} must exceed the number of lags {lags}")
    dX = np.diff(X, axis=1)  # dX[:, t] = X_{t+1} - X_t
    ts = np.arange(lags, T1 - 1)

    def block(a):
        cols = [X[:, ts, a]]
        cols += [dX[:, ts - l, a] for l in range(1, lags + 1)]
        return [c.ravel() for c in cols]

    pairs = [(k, j) for j in range(m) for k in range(m) if k != j]
    alpha = significance / len(pairs)
    reports = []
    for k, j in pairs:
        own = [np.ones(n * len(ts))] + block(j)
        if paths.variances is not None:
            own.append(paths.variances[:, ts, j].ravel())
        cross = block(k)
        Xr = _standardize(np.column_stack(own + cross))
        keep = independent_columns(Xr)
        n_own = sum(1 for c in keep if c < len(own))
        Xr = Xr[:, keep]
        cross_idx = list(range(n_own, Xr.shape[1]))
        y = dX[:, ts, j].ravel()
        notes = ["conditional-mean proxy of the distributional definition",
                 f"Bonferroni over {len(pairs)} pairs"]
        if not cross_idx:
            reports.append(TestReport("granger", 0.0, 1.0, False, significance, len(y),
                                      {"cause": k, "effect": j}, ["skipped: constant cross regressors"]))
            continue
        stat = wald_block(Xr, y, cross_idx)
        p = float(stats.chi2.sf(stat, len(cross_idx)))
        reports.append(TestReport("granger", stat, p, p < alpha, significance, len(y),
                                  {"cause": k, "effect": j, "dof": len(cross_idx)}, notes))
    return reports


def _merge_small(labels, n_bins, min_size=MIN_BIN):
    """Merge bins with fewer than ``min_size`` members into a neighbour."""
    labels = labels.copy()
    merged = []
    while True:
        present = np.unique(labels)
        sizes = np.array([(labels == b).sum() for b in present])
        if len(present) <= 1 or sizes.min() >= min_size:
            break
        i = int(np.argmin(sizes))
        target = present[i - 1] if i > 0 else present[i + 1]
        labels[labels == present[i]] = target
        merged.append((int(present[i]), int(target)))
    return labels, merged


def state_bins(paths, bins):
    """Bin label for every ``(path, t)`` observation, ``t < horizon``.

    The feature is the cross-asset mean log-return since time 0; bins are
    its pooled quantiles.
    """
    X = paths.log_prices
    feat = (X[:, :-1] - X[:, :1]).mean(axis=2).ravel()
    edges = np.quantile(feat, np.linspace(0, 1, bins + 1)[1:-1])
    return np.searchsorted(edges, feat, side="right")


def increment_stability_test(paths, bins=5, significance=0.01):
    """Per-asset KS tests of the increment law in each state bin against the rest.

    A bin's sample is compared with its complement (not the pooled sample,
    which contains it), Bonferroni-corrected over ``bins * m`` tests.  The
    report also records the per-bin Kendall tau of assets 0 and 1.
    """
    if bins < 2:
        raise InputError("need at least two bins")
    X = paths.log_prices
    n, T1, m = X.shape
    if T1 < 2:
        raise InputError("need at least one increment")
    labels, merged = _merge_small(state_bins(paths, bins), bins)
    present = np.unique(labels)
    dX = np.diff(X, axis=1).reshape(-1, m)
    alpha = significance / (len(present) * m)
    taus = {}
    if m >= 2:
        for b in present:
            sel = labels == b
            taus[int(b)] = float(stats.kendalltau(dX[sel, 0], dX[sel, 1])[0])
    spread = (max(taus.values()) - min(taus.values())) if len(taus) > 1 else 0.0
    reports = []
    for j in range(m):
        worst_d, worst_p, worst_bin = 0.0, 1.0, None
        for b in present:
            sel = labels == b
            if sel.all():
                continue
            res = stats.ks_2samp(dX[sel, j], dX[~sel, j])
            if res.pvalue < worst_p or worst_bin is None:
                worst_d, worst_p, worst_bin = float(res.statistic), float(res.pvalue), int(b)
        notes = [f"Bonferroni over {len(present) * m} bin tests"]
        if merged:
            notes.append(f"merged small bins: {merged}")
        reports.append(TestReport("increment_stability", worst_d, worst_p, worst_p < alpha, significance,
                                  len(dX), {"asset": j, "worst_bin": worst_bin, "bins": len(present),
                                            "kendall_tau": taus, "tau_spread": spread}, notes))
    return reports
