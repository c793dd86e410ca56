"""Local-projection estimation of impulse responses.

A horizon-h projection regresses y_{t+h} on the current observation (or
a supplied shock series) with p lags of every variable as controls. At
h = 1 the projection solves the same normal equations as the
corresponding VAR(p+1) row, which pins the two estimators together
exactly; standard errors use Bartlett-kernel HAC weights with bandwidth
h because the projection residual is serially correlated by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datamodel import TimeSeriesDataset
from .dynamics import ImpulseResponseSet
from .errors import InsufficientData, ShapeError
from .var import _ols


@dataclass(frozen=True)
class LpEstimate:
    """Projection coefficients on the impulse block at one horizon.

    ``beta`` has one row per response variable and one column per
    impulse regressor (all d current variables, or the single supplied
    shock series); ``se`` matches its shape.
    """

    horizon: int
    beta: np.ndarray
    se: np.ndarray
    controls: int
    nobs: int
    detail: dict = field(default_factory=dict)


def _hac_cov(x: np.ndarray, resid: np.ndarray, bandwidth: int) -> np.ndarray:
    """Bartlett-kernel sandwich covariance for one projection equation."""
    n = x.shape[0]
    score = x * resid[:, None]
    s = score.T @ score / n
    for lag in range(1, bandwidth + 1):
        w = 1.0 - lag / (bandwidth + 1.0)
        gamma = score[lag:].T @ score[:-lag] / n
        s += w * (gamma + gamma.T)
    xtx_inv = np.linalg.inv(x.T @ x / n)
    return xtx_inv @ s @ xtx_inv / n


def _lp_design(values: np.ndarray, h: int, p: int, shock: np.ndarray | None):
    """Rows where both y_{t+h} and y_{t-p} exist, with the impulse block first."""
    t, d = values.shape
    n = t - p - h
    if n < 1:
        raise InsufficientData(f"no usable rows with T={t}, h={h}, p={p}")
    if shock is None:
        impulse = values[p : t - h]
    else:
        impulse = shock[p : t - h, None]
    blocks = [np.ones((n, 1)), impulse]
    for j in range(1, p + 1):
        blocks.append(values[p - j : t - h - j])
    x = np.hstack(blocks)
    y = values[p + h : t]
    return y, x, impulse.shape[1]


def fit_lp(
    ds: TimeSeriesDataset,
    h: int,
    p: int,
    response: int | None = None,
    impulse: int | np.ndarray | None = None,
) -> LpEstimate:
    """One local projection at horizon h with p control lags.

    ``impulse`` selects a variable (the projection is still run on all d
    current values; the index only labels the column of interest) or
    supplies an external shock series aligned with the dataset rows.
    ``response`` of None fits every variable, giving a d-by-d beta.
    """
    if h < 0:
        raise ShapeError("horizon must be >= 0")
    if p < 0:
        raise ShapeError("control lag count must be >= 0")
    t, d = ds.values.shape
    if t <= h + p + d * p + 2:
        raise InsufficientData(f"T={t} too small for h={h}, p={p} controls")

    shock = None
    if impulse is not None and not np.isscalar(impulse):
        shock = np.asarray(impulse, dtype=float).ravel()
        if shock.shape[0] != t:
            raise ShapeError(f"shock series has {shock.shape[0]} rows, dataset has {t}")
        if not np.all(np.isfinite(shock)):
            raise ShapeError("shock series contains non-finite values")

    y, x, n_impulse = _lp_design(ds.values, h, p, shock)
    responses = range(d) if response is None else [int(response)]
    beta, resid = _ols(x, y)

    rows_beta = []
    rows_se = []
    for r in responses:
        cov = _hac_cov(x, resid[:, r], bandwidth=h)
        se_all = np.sqrt(np.maximum(np.diag(cov), 0.0))
        rows_beta.append(beta[1 : 1 + n_impulse, r])
        rows_se.append(se_all[1 : 1 + n_impulse])
    return LpEstimate(
        horizon=h,
        beta=np.vstack(rows_beta),
        se=np.vstack(rows_se),
        controls=p,
        nobs=y.shape[0],
        detail={"impulse": "series" if shock is not None else "levels"},
    )


def lp_irf(ds: TimeSeriesDataset, horizon: int, p: int, impulse: np.ndarray) -> ImpulseResponseSet:
    """Stack per-horizon projections on a shock series into a response set.

    theta[h, r, 0] is the horizon-h response of variable r; h = 0 is the
    contemporaneous projection.
    """
    if horizon < 0:
        raise ShapeError("horizon must be >= 0")
    d = ds.nvar
    theta = np.empty((horizon + 1, d, 1))
    ses = np.empty((horizon + 1, d, 1))
    for h in range(horizon + 1):
        est = fit_lp(ds, h, p, response=None, impulse=impulse)
        theta[h, :, 0] = est.beta[:, 0]
        ses[h, :, 0] = est.se[:, 0]
    return ImpulseResponseSet(
        theta=theta,
        lower=theta - 1.959963984540054 * ses,
        upper=theta + 1.959963984540054 * ses,
        var_names=ds.names,
        shock_names=("shock",),
    )
