"""Least-squares VAR(p) estimation and the machinery built directly on it.

Covers the companion form, stability diagnostics, moving-average
coefficients, the asymptotic coefficient covariance, iterated multistep
forecasts, and Wald tests for Granger causality.

Coefficient-vector convention used throughout: stack the d-by-dp matrix
``[A_1 ... A_p]`` regressor-major, equation-minor, i.e. entry
``r*d + e`` is the coefficient of regressor ``r`` (lag-block ordering)
in equation ``e``. Under this ordering the asymptotic covariance is the
Kronecker product ``inv(Gamma) (x) Sigma_u``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .datamodel import TimeSeriesDataset
from .errors import (
    EmptySelection,
    InsufficientData,
    InvalidOrder,
    ShapeError,
    SingularRegressors,
)

#: Gram matrices with reciprocal condition below this are treated as singular.
GRAM_RCOND_MIN = 1e-12


@dataclass(frozen=True)
class VarModel:
    """A fitted reduced-form VAR(p)."""

    p: int
    intercept: np.ndarray | None
    coeffs: tuple[np.ndarray, ...]
    residuals: np.ndarray
    sigma_u: np.ndarray
    nobs_effective: int
    names: tuple[str, ...] | None = None
    #: second-moment matrix of the stacked lag regressor (intercept partialled out)
    regressor_moment: np.ndarray | None = None

    @property
    def neq(self) -> int:
        return self.sigma_u.shape[0]

    def coeff_stack(self) -> np.ndarray:
        """The d-by-dp matrix [A_1 ... A_p]."""
        d = self.neq
        if self.p == 0:
            return np.zeros((d, 0))
        return np.hstack(self.coeffs)

    def coeff_vector(self) -> np.ndarray:
        """Regressor-major stacking of the lag coefficients (length d*d*p)."""
        return self.coeff_stack().T.ravel()


@dataclass(frozen=True)
class CompanionMatrix:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    spectral_radius: float


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    spectral_radius: float
    boundary: bool
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class TestResult:
    """Carrier for Wald/J statistics with their reference distribution."""

    statistic: float
    df: int
    p_value: float
    rejected_at: float | None = None
    detail: dict = field(default_factory=dict)


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares fit with a Gram-matrix singularity guard.

    Returns (coefficient matrix with one column per y-column, residuals).
    """
    if x.shape[1] == 0:
        return np.zeros((0, y.shape[1])), y.copy()
    gram = x.T @ x
    if np.linalg.cond(gram) > 1.0 / GRAM_RCOND_MIN:
        raise SingularRegressors(
            f"regressor Gram matrix has reciprocal condition below {GRAM_RCOND_MIN:g}"
        )
    beta, *_ = np.linalg.lstsq(x, y, rcond=None)
    return beta, y - x @ beta


def lag_design(
    values: np.ndarray, p: int, intercept: bool, start: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Build (Y, X) for the regression of y_t on [1?, y_{t-1}, ..., y_{t-p}].

    ``start`` is the first response row (defaults to ``p``); passing a
    larger value fits on a common subsample, as lag selection requires.
    """
    t, d = values.shape
    if start is None:
        start = p
    if start < p:
        raise ShapeError(f"start={start} cannot precede lag order {p}")
    n = t - start
    if n <= 0:
        raise InsufficientData(f"no rows left with start={start} and T={t}")
    y = values[start:]
    blocks = []
    if intercept:
        blocks.append(np.ones((n, 1)))
    for j in range(1, p + 1):
        blocks.append(values[start - j : t - j])
    x = np.hstack(blocks) if blocks else np.zeros((n, 0))
    return y, x


def fit_var(ds: TimeSeriesDataset, p: int, intercept: bool = True) -> VarModel:
    """Equation-by-equation least squares for a VAR(p).

    The residual covariance uses divisor T - p (the effective sample
    size), matching the 1/T convention on the effective sample.
    """
    if p < 0:
        raise InvalidOrder(f"lag order must be >= 0, got {p}")
    t, d = ds.values.shape
    k = d * p + (1 if intercept else 0)
    if t - p <= k:
        raise InsufficientData(
            f"T - p = {t - p} rows cannot support {k} regressors per equation"
        )
    y, x = lag_design(ds.values, p, intercept)
    beta, resid = _ols(x, y)
    n = t - p

    nu = beta[0].copy() if intercept else None
    offset = 1 if intercept else 0
    coeffs = tuple(beta[offset + j * d : offset + (j + 1) * d].T.copy() for j in range(p))
    sigma = resid.T @ resid / n

    if p > 0:
        lags = x[:, offset:]
        if intercept:
            lags = lags - lags.mean(axis=0)
        moment = lags.T @ lags / n
    else:
        moment = np.zeros((0, 0))
    return VarModel(
        p=p,
        intercept=nu,
        coeffs=coeffs,
        residuals=resid,
        sigma_u=sigma,
        nobs_effective=n,
        names=ds.names,
        regressor_moment=moment,
    )


def companion(m: VarModel) -> CompanionMatrix:
    """dp-by-dp companion form: lag matrices in the first block row, identity sub-diagonal."""
    if m.p < 1:
        raise InvalidOrder("companion form requires p >= 1")
    d, p = m.neq, m.p
    a = np.zeros((d * p, d * p))
    a[:d, :] = m.coeff_stack()
    if p > 1:
        a[d:, : d * (p - 1)] = np.eye(d * (p - 1))
    eig = np.linalg.eigvals(a)
    return CompanionMatrix(matrix=a, eigenvalues=eig, spectral_radius=float(np.abs(eig).max()))


def check_stability(m: VarModel, tol: float = 1e-8) -> StabilityReport:
    """Classify the fitted process by the companion spectral radius.

    ``boundary`` flags a radius within ``tol`` of one, where the verdict
    is numerically fragile and long-run identification is unreliable.
    """
    comp = companion(m)
    rho = comp.spectral_radius
    return StabilityReport(
        stable=bool(rho <= 1.0 - tol),
        spectral_radius=rho,
        boundary=bool(abs(rho - 1.0) < tol),
        eigenvalues=comp.eigenvalues,
    )


def ma_coefficients(m: VarModel, horizon: int) -> np.ndarray:
    """Moving-average matrices Phi_0..Phi_H of the fitted process.

    Phi_0 = I and Phi_i = sum_{j<=min(i,p)} A_j Phi_{i-j}.
    """
    if horizon < 0:
        raise ShapeError(f"horizon must be >= 0, got {horizon}")
    d = m.neq
    phi = np.empty((horizon + 1, d, d))
    phi[0] = np.eye(d)
    for i in range(1, horizon + 1):
        acc = np.zeros((d, d))
        for j in range(1, min(i, m.p) + 1):
            acc += m.coeffs[j - 1] @ phi[i - j]
        phi[i] = acc
    return phi


def asymptotic_cov(m: VarModel) -> np.ndarray:
    """Asymptotic covariance inv(Gamma) (x) Sigma_u of the stacked lag coefficients.

    Gamma is the sample second-moment matrix of the stacked lag regressor
    with the intercept partialled out. Valid for stable processes; the
    caller is responsible for stability.
    """
    if m.p < 1:
        raise InvalidOrder("asymptotic covariance requires p >= 1")
    if m.regressor_moment is None:
        raise ShapeError("model was built without its regressor moment matrix")
    gamma = m.regressor_moment
    if np.linalg.cond(gamma) > 1.0 / GRAM_RCOND_MIN:
        raise SingularRegressors("stacked-regressor moment matrix is numerically singular")
    cov = np.kron(np.linalg.inv(gamma), m.sigma_u)
    return (cov + cov.T) / 2.0


def forecast_iterated(m: VarModel, last_obs: np.ndarray, horizon: int) -> np.ndarray:
    """Iterated multistep forecasts, feeding each forecast back in as data.

    ``last_obs`` holds the p most recent observations, oldest first.
    """
    if horizon < 1:
        raise ShapeError(f"horizon must be >= 1, got {horizon}")
    d = m.neq
    last_obs = np.asarray(last_obs, dtype=float)
    if last_obs.shape != (m.p, d):
        raise ShapeError(f"last_obs must be {m.p}x{d}, got {last_obs.shape}")
    hist = list(last_obs)
    out = np.empty((horizon, d))
    for h in range(horizon):
        y = m.intercept.copy() if m.intercept is not None else np.zeros(d)
        for j in range(1, m.p + 1):
            y += m.coeffs[j - 1] @ hist[-j]
        hist.append(y)
        out[h] = y
    return out


def granger_wald(m: VarModel, cause, effect) -> TestResult:
    """Wald test that all lag coefficients from ``cause`` variables into
    ``effect`` equations are jointly zero.

    Uses the homoskedastic covariance from :func:`asymptotic_cov`;
    reference distribution is chi-square with |cause|*|effect|*p degrees
    of freedom.
    """
    cause = tuple(int(i) for i in cause)
    effect = tuple(int(i) for i in effect)
    if not cause or not effect:
        raise EmptySelection("cause and effect sets must be non-empty")
    if set(cause) & set(effect):
        raise ValueError("cause and effect sets must be disjoint")
    d = m.neq
    for i in cause + effect:
        if not 0 <= i < d:
            raise EmptySelection(f"variable index {i} out of range for d={d}")
    if m.p < 1:
        raise InvalidOrder("Granger test requires p >= 1")

    cov = asymptotic_cov(m)
    beta = m.coeff_vector()
    idx = [
        ((lag * d + c) * d + e)
        for lag in range(m.p)
        for c in cause
        for e in effect
    ]
    b = beta[idx]
    v = cov[np.ix_(idx, idx)]
    if np.linalg.cond(v) > 1.0 / GRAM_RCOND_MIN:
        raise SingularRegressors("restricted covariance block is numerically singular")
    stat = float(m.nobs_effective * b @ np.linalg.solve(v, b))
    df = len(idx)
    return TestResult(statistic=max(stat, 0.0), df=df, p_value=float(stats.chi2.sf(max(stat, 0.0), df)))
