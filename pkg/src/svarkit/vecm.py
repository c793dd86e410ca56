"""VAR <-> error-correction re-parametrization and the permanent-transitory
decomposition under a user-supplied cointegration pair.

Sign convention fixed here: Delta y_t = Pi y_{t-1} + sum_i Gamma_i
Delta y_{t-i} + u_t with Pi = sum_j A_j - I and Gamma_i = -sum_{j>i} A_j.
The pair (alpha, beta) with Pi = alpha beta' is supplied by the caller;
cointegration-rank estimation is out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datamodel import TimeSeriesDataset
from .errors import InvalidOrder, NonInvertibleLoading, RankDeficient, ShapeError
from .var import VarModel


@dataclass(frozen=True)
class VecmModel:
    """Error-correction form: long-run matrix, short-run matrices, optional factors."""

    pi: np.ndarray
    gammas: tuple[np.ndarray, ...]
    intercept: np.ndarray | None = None
    alpha: np.ndarray | None = None
    beta: np.ndarray | None = None

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "gammas", tuple(np.asarray(g, dtype=float) for g in self.gammas))
        d = pi.shape[0]
        if pi.shape != (d, d):
            raise ShapeError(f"Pi must be square, got {pi.shape}")
        for g in self.gammas:
            if g.shape != (d, d):
                raise ShapeError(f"Gamma matrices must be {d}x{d}, got {g.shape}")
        if (self.alpha is None) != (self.beta is None):
            raise ShapeError("alpha and beta must be supplied together")
        if self.alpha is not None:
            a = np.asarray(self.alpha, dtype=float)
            b = np.asarray(self.beta, dtype=float)
            object.__setattr__(self, "alpha", a)
            object.__setattr__(self, "beta", b)
            r = a.shape[1]
            if not 0 < r < d:
                raise RankDeficient(f"rank must satisfy 0 < r < d, got r={r}, d={d}")
            if np.linalg.matrix_rank(a) < r or np.linalg.matrix_rank(b) < r:
                raise RankDeficient("alpha and beta must have full column rank")
            if np.linalg.norm(pi - a @ b.T) >= 1e-10 * max(np.linalg.norm(pi), 1.0):
                raise ShapeError("Pi does not equal alpha @ beta.T")


@dataclass(frozen=True)
class PermanentTransitory:
    """Additive split of a series into common-trend and error-correcting parts."""

    permanent: np.ndarray
    transitory: np.ndarray


def var_to_vecm(m: VarModel) -> VecmModel:
    """Re-parametrize level coefficients into error-correction form."""
    if m.p < 1:
        raise InvalidOrder("error-correction form requires p >= 1")
    d = m.neq
    pi = sum(m.coeffs, start=np.zeros((d, d))) - np.eye(d)
    gammas = []
    for i in range(1, m.p):
        gammas.append(-sum(m.coeffs[i:], start=np.zeros((d, d))))
    return VecmModel(pi=pi, gammas=tuple(gammas), intercept=m.intercept)


def vecm_to_var(v: VecmModel) -> VarModel:
    """Exact inverse of :func:`var_to_vecm`.

    Returns a coefficients-only model (no residuals were estimated), with
    empty residuals and a zero covariance.
    """
    d = v.pi.shape[0]
    p = len(v.gammas) + 1
    coeffs = []
    if p == 1:
        coeffs.append(np.eye(d) + v.pi)
    else:
        coeffs.append(np.eye(d) + v.pi + v.gammas[0])
        for i in range(2, p):
            coeffs.append(v.gammas[i - 1] - v.gammas[i - 2])
        coeffs.append(-v.gammas[p - 2])
    return VarModel(
        p=p,
        intercept=v.intercept,
        coeffs=tuple(coeffs),
        residuals=np.zeros((0, d)),
        sigma_u=np.zeros((d, d)),
        nobs_effective=0,
    )


def orthogonal_complement(mat: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of a full-column-rank matrix.

    Deterministic sign convention: the first entry of each column with
    magnitude above tolerance is made positive.
    """
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    d, r = mat.shape
    if r >= d:
        raise RankDeficient(f"no complement: matrix is {d}x{r}")
    if np.linalg.matrix_rank(mat) < r:
        raise RankDeficient("matrix does not have full column rank")
    u, _, _ = np.linalg.svd(mat, full_matrices=True)
    comp = u[:, r:]
    for j in range(comp.shape[1]):
        nz = np.flatnonzero(np.abs(comp[:, j]) > 1e-12)
        if nz.size and comp[nz[0], j] < 0:
            comp[:, j] = -comp[:, j]
    return comp


def _loadings(alpha: np.ndarray, beta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Permanent and transitory loading matrices for a supplied (alpha, beta)."""
    alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
    beta = np.atleast_2d(np.asarray(beta, dtype=float))
    if alpha.shape != beta.shape:
        raise ShapeError(f"alpha {alpha.shape} and beta {beta.shape} must agree")
    alpha_c = orthogonal_complement(alpha)
    beta_c = orthogonal_complement(beta)
    cross_perm = alpha_c.T @ beta_c
    cross_trans = beta.T @ alpha
    for name, mat in (("alpha_perp' beta_perp", cross_perm), ("beta' alpha", cross_trans)):
        if np.linalg.cond(mat) > 1e10:
            raise NonInvertibleLoading(f"{name} is numerically singular")
    perm = beta_c @ np.linalg.solve(cross_perm, alpha_c.T)
    trans = alpha @ np.linalg.solve(cross_trans, beta.T)
    return perm, trans


def longrun_C(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Common-trends loading beta_perp (alpha_perp' beta_perp)^{-1} alpha_perp'.

    Annihilates alpha on the right and beta' on the left.
    """
    perm, _ = _loadings(alpha, beta)
    return perm


def gg_decompose(alpha: np.ndarray, beta: np.ndarray, ds: TimeSeriesDataset) -> PermanentTransitory:
    """Split observations into permanent and transitory components.

    The two loading matrices resolve the identity, so the parts add back
    to the data exactly; beta' annihilates the permanent path and
    alpha_perp' the transitory path.
    """
    perm, trans = _loadings(alpha, beta)
    if perm.shape[0] != ds.nvar:
        raise ShapeError("loading dimension does not match the dataset")
    return PermanentTransitory(
        permanent=ds.values @ perm.T,
        transitory=ds.values @ trans.T,
    )
