"""Lag-order selection: information criteria and general-to-specific Wald descent.

Both procedures fit every candidate order on the common sample whose
responses start after ``pmax`` rows, so criteria and test statistics are
comparable across candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .datamodel import TimeSeriesDataset
from .errors import InsufficientData, InvalidOrder, SingularRegressors
from .var import GRAM_RCOND_MIN, _ols, lag_design


@dataclass(frozen=True)
class ICTable:
    """Information criteria per candidate order p = 0..pmax."""

    pmax: int
    logdet: np.ndarray
    aic: np.ndarray
    bic: np.ndarray
    hqc: np.ndarray
    nobs_effective: int
    p_aic: int
    p_bic: int
    p_hqc: int


@dataclass(frozen=True)
class WaldStep:
    p: int
    statistic: float
    critical_value: float
    significant: bool


@dataclass(frozen=True)
class SelectedLag:
    p_hat: int
    trace: tuple


def _common_sample_fit(values: np.ndarray, p: int, pmax: int, intercept: bool):
    """OLS of the candidate VAR(p) with responses fixed to rows pmax..T-1.

    Returns (coefficient matrix, residuals, demeaned-lag regressor block).
    """
    y, x = lag_design(values, p, intercept, start=pmax)
    beta, resid = _ols(x, y)
    offset = 1 if intercept else 0
    lags = x[:, offset:]
    if intercept and p > 0:
        lags = lags - lags.mean(axis=0)
    return beta, resid, lags


def ic_table(ds: TimeSeriesDataset, pmax: int, intercept: bool = True) -> ICTable:
    """AIC, BIC (SIC), and HQC over p = 0..pmax on the common sample.

    Each criterion is log det Sigma_u(p) plus its penalty weight
    (2, log n, 2 log log n) times d^2 p / n.
    """
    if pmax < 0:
        raise InvalidOrder(f"pmax must be >= 0, got {pmax}")
    t, d = ds.values.shape
    n = t - pmax
    if n <= d * pmax + 1:
        raise InsufficientData(f"T={t} leaves only {n} common rows for pmax={pmax}")

    logdet = np.empty(pmax + 1)
    for p in range(pmax + 1):
        _, resid, _ = _common_sample_fit(ds.values, p, pmax, intercept)
        sigma = resid.T @ resid / n
        sign, ld = np.linalg.slogdet(sigma)
        if sign <= 0:
            raise InsufficientData(f"residual covariance singular at p={p}")
        logdet[p] = ld

    k = d * d * np.arange(pmax + 1)
    aic = logdet + 2.0 * k / n
    bic = logdet + math.log(n) * k / n
    hqc = logdet + 2.0 * math.log(math.log(n)) * k / n
    return ICTable(
        pmax=pmax,
        logdet=logdet,
        aic=aic,
        bic=bic,
        hqc=hqc,
        nobs_effective=n,
        p_aic=int(np.argmin(aic)),
        p_bic=int(np.argmin(bic)),
        p_hqc=int(np.argmin(hqc)),
    )


def last_lag_wald(values: np.ndarray, p: int, pmax: int, intercept: bool = True) -> float:
    """Wald statistic for the joint nullity of the order-p lag matrix in a VAR(p)
    fitted on the common sample."""
    t, d = values.shape
    n = t - pmax
    beta, resid, lags = _common_sample_fit(values, p, pmax, intercept)
    sigma = resid.T @ resid / n
    gamma = lags.T @ lags / n
    if gamma.size and np.linalg.cond(gamma) > 1.0 / GRAM_RCOND_MIN:
        raise SingularRegressors("common-sample regressor moment is singular")
    # coefficient vector of the last-lag block, regressor-major
    offset = 1 if intercept else 0
    last_block = beta[offset + (p - 1) * d : offset + p * d]  # (d regressors) x (d equations)
    b = last_block.ravel()
    gaminv = np.linalg.inv(gamma)
    vblock = np.kron(gaminv[(p - 1) * d : p * d, (p - 1) * d : p * d], sigma)
    stat = float(n * b @ np.linalg.solve(vblock, b))
    return max(stat, 0.0)


def sequential_wald(ds: TimeSeriesDataset, pmax: int, alpha: float = 0.05) -> SelectedLag:
    """General-to-specific descent: p_hat is the first j in pmax..1 whose
    last-lag Wald statistic exceeds the chi-square(d^2) critical value,
    and 0 if none does."""
    if pmax < 1:
        raise InvalidOrder(f"pmax must be >= 1, got {pmax}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    t, d = ds.values.shape
    if t - pmax <= d * pmax + 1:
        raise InsufficientData(f"T={t} too small for pmax={pmax}")
    crit = float(stats.chi2.ppf(1.0 - alpha, d * d))

    trace = []
    p_hat = 0
    for j in range(pmax, 0, -1):
        stat = last_lag_wald(ds.values, j, pmax)
        significant = stat > crit
        trace.append(WaldStep(p=j, statistic=stat, critical_value=crit, significant=significant))
        if significant:
            p_hat = j
            break
    return SelectedLag(p_hat=p_hat, trace=tuple(trace))
