"""Structural impulse responses, variance decompositions, historical
decomposition, and the generalized-FEVD connectedness table."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .datamodel import TimeSeriesDataset
from .errors import (
    DegenerateVariance,
    NotPositiveDefinite,
    ShapeError,
    SingularImpact,
)
from .ident import StructuralModel
from .var import VarModel, ma_coefficients


@dataclass(frozen=True)
class ImpulseResponseSet:
    """Responses theta[h, variable, shock] for horizons 0..H, optionally banded."""

    theta: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    var_names: tuple[str, ...] | None = None
    shock_names: tuple[str, ...] | None = None

    @property
    def horizon(self) -> int:
        return self.theta.shape[0] - 1


@dataclass(frozen=True)
class FevdTable:
    """shares[h-1, variable, shock] for horizons 1..H; each row sums to one."""

    shares: np.ndarray
    var_names: tuple[str, ...] | None = None
    shock_names: tuple[str, ...] | None = None

    @property
    def horizon(self) -> int:
        return self.shares.shape[0]


@dataclass(frozen=True)
class HistoricalDecomposition:
    """contributions[t, variable, shock] over the effective sample plus the
    initial-condition remainder; offset is the number of pre-sample rows."""

    contributions: np.ndarray
    remainder: np.ndarray
    offset: int


@dataclass(frozen=True)
class ConnectednessTable:
    """Generalized-FEVD spillovers: raw and row-normalized shares plus
    directional sums and the total connectedness scalar."""

    raw: np.ndarray
    normalized: np.ndarray
    from_others: np.ndarray
    to_others: np.ndarray
    net: np.ndarray
    total: float
    var_names: tuple[str, ...] | None = None


def irf(sm: StructuralModel, horizon: int) -> ImpulseResponseSet:
    """Structural responses Theta_h = Phi_h @ impact for h = 0..H."""
    if horizon < 0:
        raise ShapeError("horizon must be >= 0")
    phi = ma_coefficients(sm.base, horizon)
    theta = phi @ sm.impact
    names = sm.base.names
    return ImpulseResponseSet(theta=theta, var_names=names, shock_names=sm.shock_names)


def fevd(sm: StructuralModel, horizon: int) -> FevdTable:
    """Forecast-error variance shares under unit-variance structural shocks.

    share[j, k] at horizon h is the cumulated squared response of
    variable j to shock k divided by the total over shocks.
    """
    if horizon < 1:
        raise ShapeError("horizon must be >= 1")
    if sm.scheme == "proxy-column":
        raise DegenerateVariance(
            "proxy identification pins a single impact column; the other shocks'"
            " contributions are unidentified, so variance shares are undefined"
        )
    theta = irf(sm, horizon - 1).theta
    cum = np.cumsum(theta**2, axis=0)
    totals = cum.sum(axis=2)
    if np.any(totals <= 0.0):
        j = int(np.argwhere(totals <= 0.0)[0, 1])
        raise DegenerateVariance(f"variable {j} has zero forecast-error variance")
    shares = cum / totals[:, :, None]
    return FevdTable(shares=shares, var_names=sm.base.names, shock_names=sm.shock_names)


def historical_decomposition(sm: StructuralModel, ds: TimeSeriesDataset) -> HistoricalDecomposition:
    """Attribute each observation to past structural shocks.

    Shocks are recovered over the effective sample as impact^{-1} u_t;
    the remainder collects initial conditions and deterministic terms, so
    contributions plus remainder reproduce the data exactly.
    """
    m = sm.base
    if ds.values.shape[1] != m.neq:
        raise ShapeError("dataset dimension does not match the model")
    if np.linalg.cond(sm.impact) > 1e12:
        raise SingularImpact("impact matrix is numerically singular")
    resid = m.residuals
    n, d = resid.shape
    if ds.values.shape[0] - m.p != n:
        raise ShapeError("dataset rows do not match the model's effective sample")
    shocks = np.linalg.solve(sm.impact, resid.T).T
    theta = ma_coefficients(m, n - 1) @ sm.impact

    contributions = np.empty((n, d, d))
    for k in range(d):
        for j in range(d):
            contributions[:, j, k] = signal.fftconvolve(shocks[:, k], theta[:, j, k])[:n]
    remainder = ds.values[m.p :] - contributions.sum(axis=2)
    return HistoricalDecomposition(contributions=contributions, remainder=remainder, offset=m.p)


def gfevd_connectedness(m: VarModel, horizon: int) -> ConnectednessTable:
    """Generalized (ordering-free) FEVD shares at horizon H and the
    connectedness summary built from the row-normalized table.

    The raw share of shock j in variable i scales by the j-th diagonal
    element of the residual covariance; raw rows need not sum to one, so
    the normalized table divides each row by its sum.
    """
    if horizon < 1:
        raise ShapeError("horizon must be >= 1")
    sigma = m.sigma_u
    eig = np.linalg.eigvalsh((sigma + sigma.T) / 2.0)
    if eig[0] <= 1e-10 * max(eig[-1], 0.0) or eig[-1] <= 0.0:
        raise NotPositiveDefinite("residual covariance is not positive definite")
    d = m.neq
    phi = ma_coefficients(m, horizon - 1)
    num = np.zeros((d, d))
    den = np.zeros(d)
    for h in range(horizon):
        ps = phi[h] @ sigma
        num += ps**2
        den += np.einsum("ij,ij->i", ps, phi[h])
    raw = num / np.diag(sigma)[None, :] / den[:, None]
    normalized = raw / raw.sum(axis=1, keepdims=True)
    off = normalized - np.diag(np.diag(normalized))
    from_others = off.sum(axis=1)
    to_others = off.sum(axis=0)
    return ConnectednessTable(
        raw=raw,
        normalized=normalized,
        from_others=from_others,
        to_others=to_others,
        net=to_others - from_others,
        total=float(from_others.mean()),
        var_names=m.names,
    )
