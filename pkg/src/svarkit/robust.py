"""Multivariate least trimmed squares for VARs, reweighting, and robust
order selection.

The estimator picks the h-row subset whose least-squares residual
scatter has minimal determinant. Exact enumeration is infeasible, so the
search runs seeded random elemental starts, ranks rows, and applies
concentration steps, which provably never increase the determinant. The
retained scatter is inflated by the elliptical-truncation consistency
factor; setting the trimming proportion to zero reproduces plain OLS
exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .datamodel import TimeSeriesDataset
from .errors import DegenerateSubset, InsufficientData, InvalidOrder
from .lagselect import SelectedLag
from .var import VarModel, _ols, lag_design


@dataclass(frozen=True)
class MltsSearchConfig:
    """Concentration-step search settings."""

    n_starts: int = 500
    c_steps: int = 2
    n_finalists: int = 10
    max_refine: int = 100


@dataclass(frozen=True)
class RobustVarModel(VarModel):
    """A VAR fit from a trimmed subset, with the rows it kept and flagged.

    ``subset`` and ``flagged_outliers`` index rows of the effective
    regression sample; ``distances`` are residual Mahalanobis distances
    under the corrected scatter. The design pair is retained so the
    reweighted refit can reuse the identical regression problem.
    """

    h: int = 0
    alpha_trim: float = 0.0
    c_factor: float = 1.0
    subset: tuple[int, ...] = ()
    distances: np.ndarray | None = None
    flagged_outliers: tuple[int, ...] = ()
    design: tuple = field(default=(), repr=False)


@dataclass(frozen=True)
class RobustIcRow:
    p: int
    aic: float
    bic: float
    hqc: float
    logdet: float
    n_retained: int


def consistency_factor(alpha: float, d: int) -> float:
    """(1 - alpha) / F_{chi2(d+2)}(q_alpha), q_alpha the upper-alpha chi2(d) quantile."""
    if alpha <= 0.0:
        return 1.0
    q = stats.chi2.ppf(1.0 - alpha, d)
    return float((1.0 - alpha) / stats.chi2.cdf(q, d + 2))


def _subset_fit(x: np.ndarray, y: np.ndarray, rows: np.ndarray):
    """OLS on a row subset; returns (beta, residuals over ALL rows, subset scatter)."""
    xs, ys = x[rows], y[rows]
    gram = xs.T @ xs
    if np.linalg.cond(gram) > 1e12:
        return None
    beta = np.linalg.solve(gram, xs.T @ ys)
    resid = y - x @ beta
    scatter = resid[rows].T @ resid[rows] / rows.shape[0]
    return beta, resid, scatter


def _det(scatter: np.ndarray) -> float:
    sign, ld = np.linalg.slogdet(scatter)
    return float(np.exp(ld)) if sign > 0 else np.inf


def _smallest_rows(dist2: np.ndarray, h: int) -> np.ndarray:
    """Indices of the h smallest distances with a deterministic index tie-break."""
    order = np.lexsort((np.arange(dist2.shape[0]), dist2))
    return np.sort(order[:h])


def _mahalanobis_sq(resid: np.ndarray, scatter: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", resid, np.linalg.solve(scatter, resid.T).T)


def _concentration_steps(x, y, rows, h, n_steps):
    """Iterate subset-OLS / re-rank; the subset determinant never increases."""
    state = _subset_fit(x, y, rows)
    if state is None:
        return None
    beta, resid, scatter = state
    det = _det(scatter)
    for _ in range(n_steps):
        if not np.isfinite(det) or det <= 0.0:
            return None
        dist2 = _mahalanobis_sq(resid, scatter)
        rows = _smallest_rows(dist2, h)
        state = _subset_fit(x, y, rows)
        if state is None:
            return None
        beta, resid, scatter = state
        new_det = _det(scatter)
        if new_det > det * (1.0 + 1e-9):
            raise RuntimeError("concentration step increased the determinant")
        converged = det - new_det <= 1e-15 * max(det, 1e-300)
        det = new_det
        if converged:
            break
    return det, tuple(int(i) for i in rows), beta, resid, scatter


def _mlts_regression(x, y, alpha_trim, cfg: MltsSearchConfig, seed: int, key: tuple = ()):
    """FAST-LTS style search on a prepared regression problem.

    Returns (beta, residuals, raw subset scatter, subset, h). Ties among
    equal-determinant subsets break to the lexicographically smallest
    index set.
    """
    n, q = x.shape
    d = y.shape[1]
    h = int(np.ceil((1.0 - alpha_trim) * n))
    if h <= q + d:
        raise InsufficientData(
            f"subset size {h} cannot support {q} regressors and a {d}x{d} scatter"
        )
    if alpha_trim == 0.0:
        beta, resid = _ols(x, y)
        scatter = resid.T @ resid / n
        return beta, resid, scatter, tuple(range(n)), h

    candidates = []
    for s in range(cfg.n_starts):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key + (s,)))
        rows0 = None
        for _ in range(50):
            trial = rng.choice(n, size=q, replace=False)
            if np.linalg.matrix_rank(x[trial]) == q:
                rows0 = trial
                break
        if rows0 is None:
            continue
        beta0 = np.linalg.solve(x[rows0], y[rows0])
        resid0 = y - x @ beta0
        rows = _smallest_rows(np.einsum("ij,ij->i", resid0, resid0), h)
        result = _concentration_steps(x, y, rows, h, cfg.c_steps)
        if result is not None:
            candidates.append(result[:2])

    if not candidates:
        raise DegenerateSubset("no elemental start produced a nonsingular subset fit")
    candidates.sort(key=lambda c: (c[0], c[1]))
    finalists = []
    seen = set()
    for det, rows in candidates[: 5 * cfg.n_finalists]:
        if rows in seen:
            continue
        seen.add(rows)
        refined = _concentration_steps(x, y, np.asarray(rows), h, cfg.max_refine)
        if refined is not None:
            finalists.append(refined)
        if len(finalists) >= cfg.n_finalists:
            break
    if not finalists:
        raise DegenerateSubset("all finalist subsets produced singular scatters")
    finalists.sort(key=lambda c: (c[0], c[1]))
    det, subset, beta, resid, scatter = finalists[0]
    if not np.isfinite(det) or det <= 0.0:
        raise DegenerateSubset("best subset has a singular residual scatter")
    return beta, resid, scatter, subset, h


def _assemble(p, d, intercept, beta, resid, sigma, h, alpha_trim, c, subset, names, design):
    nu = beta[0].copy() if intercept and beta.shape[0] else None
    offset = 1 if intercept else 0
    coeffs = tuple(beta[offset + j * d : offset + (j + 1) * d].T.copy() for j in range(p))
    distances = np.sqrt(np.maximum(_mahalanobis_sq(resid, sigma), 0.0))
    flagged = tuple(sorted(set(range(resid.shape[0])) - set(subset)))
    return RobustVarModel(
        p=p,
        intercept=nu,
        coeffs=coeffs,
        residuals=resid,
        sigma_u=sigma,
        nobs_effective=resid.shape[0],
        names=names,
        regressor_moment=None,
        h=h,
        alpha_trim=alpha_trim,
        c_factor=c,
        subset=subset,
        distances=distances,
        flagged_outliers=flagged,
        design=design,
    )


def fit_mlts(
    ds: TimeSeriesDataset,
    p: int,
    alpha_trim: float = 0.25,
    cfg: MltsSearchConfig | None = None,
    seed: int = 0,
    intercept: bool = True,
) -> RobustVarModel:
    """Determinant-minimizing trimmed VAR fit.

    ``alpha_trim`` is the trimming proportion; the retained subset has
    ceil((1 - alpha) n) rows. With ``alpha_trim=0`` the result equals
    :func:`svarkit.var.fit_var` exactly.
    """
    if p < 0:
        raise InvalidOrder("lag order must be >= 0")
    if not 0.0 <= alpha_trim <= 0.5:
        raise InsufficientData(f"trimming proportion must lie in [0, 0.5], got {alpha_trim}")
    cfg = cfg or MltsSearchConfig()
    y, x = lag_design(ds.values, p, intercept)
    beta, resid, scatter, subset, h = _mlts_regression(x, y, alpha_trim, cfg, seed)
    c = consistency_factor(alpha_trim, ds.nvar)
    return _assemble(
        p, ds.nvar, intercept, beta, resid, c * scatter, h, alpha_trim, c, subset, ds.names, (x, y)
    )


def reweight_rmlts(rm: RobustVarModel, delta: float = 0.01) -> RobustVarModel:
    """Refit on the rows the trimmed fit does not flag as outlying.

    A row is kept when its squared Mahalanobis distance under the trimmed
    fit is at most the upper-delta chi-square(d) quantile; the refit
    scatter is rescaled by the delta consistency factor.
    """
    if rm.distances is None or not rm.design:
        raise DegenerateSubset("input model does not carry distances and its design")
    d = rm.neq
    x, y = rm.design
    q_delta = stats.chi2.ppf(1.0 - delta, d)
    keep = np.flatnonzero(rm.distances**2 <= q_delta)
    if keep.size <= x.shape[1] + d:
        raise DegenerateSubset(f"only {keep.size} rows pass the reweighting threshold")
    state = _subset_fit(x, y, keep)
    if state is None:
        raise DegenerateSubset("reweighted subset has singular regressors")
    beta, resid, scatter = state
    c = consistency_factor(delta, d)
    intercept = rm.intercept is not None
    return _assemble(
        rm.p,
        d,
        intercept,
        beta,
        resid,
        c * scatter,
        int(keep.size),
        rm.alpha_trim,
        c,
        tuple(int(i) for i in keep),
        rm.names,
        (x, y),
    )


def robust_order_select(
    ds: TimeSeriesDataset,
    pmax: int,
    alpha_trim: float = 0.25,
    delta: float = 0.01,
    cfg: MltsSearchConfig | None = None,
    seed: int = 0,
    intercept: bool = True,
) -> SelectedLag:
    """Information criteria with the reweighted trimmed scatter.

    Outlying rows are flagged once, from the reweighted trimmed fit at
    order ``pmax`` on the common sample, and every candidate order is
    refit on the same retained rows; re-flagging per candidate makes the
    criteria incomparable across orders (the retained-set noise swamps
    the penalty increments). Each criterion is log det of the corrected
    scatter plus the likelihood's trimming-adjusted last term
    (m - p) d / c_delta over the sample, plus the usual penalty; ``p_hat``
    is the robust-BIC minimizer.
    """
    if pmax < 0:
        raise InvalidOrder("pmax must be >= 0")
    cfg = cfg or MltsSearchConfig()
    t, d = ds.values.shape
    n = t - pmax
    if n <= d * pmax + d + 2:
        raise InsufficientData(f"T={t} too small for pmax={pmax}")

    # flag rows once at the richest candidate order
    y_max, x_max = lag_design(ds.values, max(pmax, 0), intercept, start=pmax)
    _, resid, scatter, _, _ = _mlts_regression(x_max, y_max, alpha_trim, cfg, seed, key=(pmax,))
    c_a = consistency_factor(alpha_trim, d)
    dist2 = _mahalanobis_sq(resid, c_a * scatter)
    keep = np.flatnonzero(dist2 <= stats.chi2.ppf(1.0 - delta, d))
    if keep.size <= d * pmax + d + 2:
        raise DegenerateSubset(f"only {keep.size} rows pass the reweighting threshold")
    c_d = consistency_factor(delta, d)
    m = int(keep.size)

    rows = []
    for p in range(pmax + 1):
        y, x = lag_design(ds.values, p, intercept, start=pmax)
        state = _subset_fit(x, y, keep)
        if state is None:
            raise DegenerateSubset(f"retained rows give singular regressors at p={p}")
        _, _, raw_scatter = state
        sign, logdet = np.linalg.slogdet(c_d * raw_scatter)
        if sign <= 0:
            raise DegenerateSubset(f"reweighted scatter singular at p={p}")
        last_term = (m - p) * d / (2.0 * c_d)
        base = logdet + 2.0 * last_term / n
        k = d * d * p
        rows.append(
            RobustIcRow(
                p=p,
                aic=base + 2.0 * k / n,
                bic=base + math.log(n) * k / n,
                hqc=base + 2.0 * math.log(math.log(n)) * k / n,
                logdet=float(logdet),
                n_retained=m,
            )
        )
    p_hat = min(rows, key=lambda r: r.bic).p
    return SelectedLag(p_hat=p_hat, trace=tuple(rows))
