"""Structural identification of fitted VARs.

Implements recursive (Cholesky) and long-run lower-triangular exact
identification, single-column identification through an external
instrument, the GMM-style J-test for over-identifying restrictions, and
set-identified impulse-response bounds under equality and sign
restrictions with delta-method intervals.

The impact matrix maps unit-variance structural shocks into reduced-form
errors: u_t = impact @ w_t.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, stats

from .errors import (
    InfeasibleRestrictions,
    NearUnitRoot,
    NegativeDf,
    NotPositiveDefinite,
    ShapeError,
    SingularRegressors,
    TooManyRestrictions,
    WeakInstrument,
)
from .var import TestResult, VarModel, asymptotic_cov

#: relative Frobenius tolerance for impact @ impact.T == Sigma_u in full schemes
RECONSTRUCTION_TOL = 1e-10
#: minimum first-stage F statistic before an instrument counts as relevant
RELEVANCE_F_MIN = 10.0
#: hard cap on sign restrictions (active-set enumeration is 2**m_s)
MAX_SIGN_RESTRICTIONS = 20

_FULL_SCHEMES = ("recursive", "longrun")


@dataclass(frozen=True)
class StructuralModel:
    """A reduced-form model plus an impact matrix and how it was identified."""

    base: VarModel
    impact: np.ndarray
    scheme: str
    shock_names: tuple[str, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        impact = np.asarray(self.impact, dtype=float)
        object.__setattr__(self, "impact", impact)
        d = self.base.neq
        if impact.shape != (d, d):
            raise ShapeError(f"impact must be {d}x{d}, got {impact.shape}")
        if self.scheme in _FULL_SCHEMES:
            sigma = self.base.sigma_u
            err = np.linalg.norm(impact @ impact.T - sigma) / max(np.linalg.norm(sigma), 1e-300)
            if err > RECONSTRUCTION_TOL:
                raise NotPositiveDefinite(
                    f"impact fails to reconstruct the residual covariance (rel err {err:.2e})"
                )


def _check_spd(sigma: np.ndarray, rel_tol: float = 1e-10) -> None:
    eig = np.linalg.eigvalsh((sigma + sigma.T) / 2.0)
    if eig[0] <= rel_tol * max(eig[-1], 0.0) or eig[-1] <= 0.0:
        raise NotPositiveDefinite(
            f"covariance has relative minimum eigenvalue {eig[0] / max(eig[-1], 1e-300):.2e}"
        )


def identify_recursive(m: VarModel, order=None) -> StructuralModel:
    """Lower-triangular Cholesky identification under a causal ordering.

    ``order`` permutes the variables before factorization; the impact is
    mapped back to the original ordering, so shock j is the structural
    shock of variable ``order[j]``.
    """
    d = m.neq
    order = tuple(range(d)) if order is None else tuple(int(i) for i in order)
    if sorted(order) != list(range(d)):
        raise ShapeError(f"order must be a permutation of 0..{d - 1}, got {order}")
    sigma = m.sigma_u
    _check_spd(sigma)
    perm = np.asarray(order)
    chol = np.linalg.cholesky(sigma[np.ix_(perm, perm)])
    impact = np.zeros_like(chol)
    impact[perm, :] = chol
    names = m.names if m.names is not None else tuple(f"y{i + 1}" for i in range(d))
    return StructuralModel(
        base=m,
        impact=impact,
        scheme="recursive",
        shock_names=tuple(names[i] for i in order),
        meta={"order": order},
    )


def identify_longrun(m: VarModel) -> StructuralModel:
    """Identification through a lower-triangular long-run impact matrix.

    The long-run matrix is the Cholesky factor of C(1) Sigma C(1)' with
    C(1) the inverse of I - sum_j A_j; the contemporaneous impact is
    recovered as C(1)^{-1} times that factor.
    """
    d = m.neq
    a_one = np.eye(d) - sum(m.coeffs, start=np.zeros((d, d)))
    if np.linalg.cond(a_one) > 1e10:
        raise NearUnitRoot(
            "I - sum(A_j) is ill-conditioned; long-run identification is unreliable near unit roots"
        )
    c_one = np.linalg.inv(a_one)
    lr_cov = c_one @ m.sigma_u @ c_one.T
    lr_cov = (lr_cov + lr_cov.T) / 2.0
    _check_spd(lr_cov)
    theta_one = np.linalg.cholesky(lr_cov)
    impact = a_one @ theta_one
    names = m.names if m.names is not None else tuple(f"y{i + 1}" for i in range(d))
    return StructuralModel(
        base=m,
        impact=impact,
        scheme="longrun",
        shock_names=names,
        meta={"longrun_matrix": theta_one},
    )


def instrument_relevance(m: VarModel, z: np.ndarray) -> float:
    """First-stage F statistic from regressing the instrument on the residuals."""
    resid = m.residuals
    n, d = resid.shape
    z = np.asarray(z, dtype=float).ravel()
    x = np.hstack([np.ones((n, 1)), resid])
    beta, *_ = np.linalg.lstsq(x, z, rcond=None)
    fitted = x @ beta
    rss = float(np.sum((z - fitted) ** 2))
    tss = float(np.sum((z - z.mean()) ** 2))
    if tss <= 0.0 or rss <= 0.0:
        return np.inf
    r2 = 1.0 - rss / tss
    return (r2 / d) / ((1.0 - r2) / (n - d - 1))


def identify_proxy(m: VarModel, z: np.ndarray, k: int, allow_weak: bool = False) -> StructuralModel:
    """One impact column from an external instrument for shock k.

    The raw column is the residual-instrument cross moment; it is scaled
    so the implied structural shock has unit variance (b' Sigma^{-1} b = 1),
    which leaves the instrument's sign information intact. Columns of
    shocks the instrument says nothing about are left at zero.
    """
    resid = m.residuals
    n, d = resid.shape
    z = np.asarray(z, dtype=float).ravel()
    if z.shape[0] != n:
        raise ShapeError(f"instrument has {z.shape[0]} rows, residuals have {n}")
    if not np.all(np.isfinite(z)):
        raise ShapeError("instrument contains non-finite values")
    if not 0 <= k < d:
        raise ShapeError(f"target shock index {k} out of range for d={d}")

    fstat = instrument_relevance(m, z)
    if fstat < RELEVANCE_F_MIN:
        msg = f"first-stage F = {fstat:.2f} < {RELEVANCE_F_MIN:g}"
        if not allow_weak:
            raise WeakInstrument(msg)
        warnings.warn(msg, stacklevel=2)

    cov_vec = resid.T @ z / n
    sigma = m.sigma_u
    _check_spd(sigma)
    denom = float(cov_vec @ np.linalg.solve(sigma, cov_vec))
    if denom <= 0.0:
        raise WeakInstrument("residual-instrument covariance is numerically zero")
    column = cov_vec / np.sqrt(denom)

    impact = np.zeros((d, d))
    impact[:, k] = column
    names = m.names if m.names is not None else tuple(f"y{i + 1}" for i in range(d))
    shock_names = tuple(f"proxy:{names[k]}" if j == k else f"w{j + 1}" for j in range(d))
    return StructuralModel(
        base=m,
        impact=impact,
        scheme="proxy-column",
        shock_names=shock_names,
        meta={"target": k, "raw_covariance": cov_vec, "first_stage_F": fstat},
    )


def vech(a: np.ndarray) -> np.ndarray:
    """Stack the on-and-below-diagonal entries of a square matrix."""
    i, j = np.tril_indices(a.shape[0])
    return a[i, j]


def residual_moment_cov(resid: np.ndarray) -> np.ndarray:
    """Sample covariance of vech(u_t u_t'), the iid-case covariance of vech(Sigma_hat)."""
    n, d = resid.shape
    i, j = np.tril_indices(d)
    moments = resid[:, i] * resid[:, j]
    centered = moments - moments.mean(axis=0)
    return centered.T @ centered / n


def j_test(m: VarModel, impact_candidate: np.ndarray, n_restrictions: int) -> TestResult:
    """J statistic for over-identifying restrictions on an impact candidate.

    T times the weighted vech distance between the residual covariance
    and the candidate's implied covariance, weighted by the inverse
    sample covariance of vech(u_t u_t'). Degrees of freedom follow the
    (#moment conditions - #free parameters) convention, so an exactly
    identified candidate with d(d-1)/2 restrictions has df = 0.
    """
    d = m.neq
    b = np.asarray(impact_candidate, dtype=float)
    if b.shape != (d, d):
        raise ShapeError(f"impact candidate must be {d}x{d}, got {b.shape}")
    if not np.all(np.isfinite(b)):
        raise ShapeError("impact candidate contains non-finite values")
    df = int(n_restrictions) - d * (d - 1) // 2
    if df < 0:
        raise NegativeDf(
            f"{n_restrictions} restrictions under-identify a {d}-variable system"
        )
    s = residual_moment_cov(m.residuals)
    if np.linalg.cond(s) > 1e12:
        raise SingularRegressors("covariance of vech(u u') is numerically singular")
    g = vech(m.sigma_u) - vech(b @ b.T)
    stat = float(m.nobs_effective * g @ np.linalg.solve(s, g))
    stat = max(stat, 0.0)
    if df == 0:
        p_value = 1.0 if stat < 1e-6 else 0.0
    else:
        p_value = float(stats.chi2.sf(stat, df))
    return TestResult(statistic=stat, df=df, p_value=p_value)


# -- sign-restriction bounds ---------------------------------------------------


@dataclass(frozen=True)
class SignRestrictionSet:
    """Equality columns Z and inequality columns S constraining one impact column."""

    equality: np.ndarray
    sign: np.ndarray
    shock: int = 0

    def __post_init__(self):
        z = np.atleast_2d(np.asarray(self.equality, dtype=float))
        s = np.atleast_2d(np.asarray(self.sign, dtype=float))
        object.__setattr__(self, "equality", z)
        object.__setattr__(self, "sign", s)
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(s))):
            raise ShapeError("restriction matrices must be finite")
        d = z.shape[0] if z.size else s.shape[0]
        if z.size and s.size and z.shape[0] != s.shape[0]:
            raise ShapeError("equality and sign restrictions disagree on dimension")
        if z.shape[1] > max(d - 1, 0):
            raise ShapeError(f"at most d-1 = {d - 1} equality restrictions are allowed")

    @classmethod
    def empty(cls, d: int, shock: int = 0) -> "SignRestrictionSet":
        return cls(np.zeros((d, 0)), np.zeros((d, 0)), shock)


@dataclass(frozen=True)
class IrfBoundInterval:
    """Identified-set bounds for one impulse response plus a delta-method interval."""

    horizon: int
    response: int
    shock: int
    lower: float
    upper: float
    ci_lower: float
    ci_upper: float
    sigma_hat: float
    detail: dict = field(default_factory=dict)


def _phi_horizon(coeffs, d: int, horizon: int) -> np.ndarray:
    """MA coefficient Phi_k from raw coefficient matrices."""
    phi = [np.eye(d)]
    p = len(coeffs)
    for i in range(1, horizon + 1):
        acc = np.zeros((d, d))
        for j in range(1, min(i, p) + 1):
            acc += coeffs[j - 1] @ phi[i - j]
        phi.append(acc)
    return phi[horizon]


def _active_set_value(c, sigma_inv, basis):
    """Maximum of c'b over the ellipsoid b'Sigma^-1 b = 1 within a subspace.

    Returns (value, maximizer); value 0 with a valid on-ellipsoid witness
    when c is orthogonal to the subspace.
    """
    m_mat = basis.T @ sigma_inv @ basis
    c_sub = basis.T @ c
    if np.linalg.norm(c_sub) < 1e-14 * max(np.linalg.norm(c), 1.0):
        w = np.linalg.eigvalsh(m_mat)
        u = np.zeros(basis.shape[1])
        u[0] = 1.0
        u = u / np.sqrt(u @ m_mat @ u)
        return 0.0, basis @ u
    sol = np.linalg.solve(m_mat, c_sub)
    value = float(np.sqrt(c_sub @ sol))
    return value, basis @ (sol / value)


def _bound_candidates(coeffs, sigma, restr: SignRestrictionSet, horizon: int, response: int):
    """All feasible active-set candidates as (active set, value, point).

    Every subset of inequality rows is treated as binding; the face
    optimum has a closed form, and both the maximizer and its negative
    (the face minimizer) are kept when they satisfy the inactive rows.
    """
    d = sigma.shape[0]
    sigma_inv = np.linalg.inv(sigma)
    c = _phi_horizon(coeffs, d, horizon)[response]
    z, s = restr.equality, restr.sign
    m_s = s.shape[1]
    sign_scale = np.maximum(np.linalg.norm(s, axis=0), 1.0) if m_s else np.zeros(0)

    out = []
    for size in range(m_s + 1):
        for active in itertools.combinations(range(m_s), size):
            cols = [z] if z.size else []
            if active:
                cols.append(s[:, list(active)])
            e_mat = np.hstack(cols) if cols else np.zeros((d, 0))
            basis = linalg.null_space(e_mat.T) if e_mat.size else np.eye(d)
            if basis.shape[1] == 0:
                continue
            value, b_max = _active_set_value(c, sigma_inv, basis)
            inactive = [r for r in range(m_s) if r not in active]
            for v, b in ((value, b_max), (-value, -b_max)):
                if inactive and np.any(s[:, inactive].T @ b < -1e-9 * sign_scale[inactive]):
                    continue
                out.append((active, v, b))
    return out


def _value_for_theta(theta, d, p, restr, horizon, response, active, sign_flip):
    """Closed-form active-set value as a function of (vec A, vech Sigma)."""
    n_a = d * d * p
    coeffs = _theta_to_coeffs(theta[:n_a], d, p)
    sigma = _vech_to_mat(theta[n_a:], d)
    c = _phi_horizon(coeffs, d, horizon)[response]
    z, s = restr.equality, restr.sign
    cols = [z] if z.size else []
    if active:
        cols.append(s[:, list(active)])
    e_mat = np.hstack(cols) if cols else np.zeros((d, 0))
    basis = linalg.null_space(e_mat.T) if e_mat.size else np.eye(d)
    m_mat = basis.T @ np.linalg.solve(sigma, basis)
    c_sub = basis.T @ (sign_flip * c)
    val = float(np.sqrt(max(c_sub @ np.linalg.solve(m_mat, c_sub), 0.0)))
    return sign_flip * val


def _theta_to_coeffs(beta_vec, d, p):
    if p == 0:
        return []
    stacked = beta_vec.reshape(d * p, d).T
    return [stacked[:, j * d : (j + 1) * d] for j in range(p)]


def _vech_to_mat(v, d):
    out = np.zeros((d, d))
    i, j = np.tril_indices(d)
    out[i, j] = v
    out[j, i] = v
    return out


def sign_restriction_bounds(
    m: VarModel,
    restr: SignRestrictionSet,
    horizon: int,
    response: int,
    level: float = 0.95,
) -> IrfBoundInterval:
    """Identified-set bounds for one impulse response under restrictions.

    The bound is the exact optimum of the response over the unit-shock
    ellipsoid intersected with the restriction set, found by enumerating
    active subsets of the inequality rows; each subset yields a
    closed-form equality-constrained optimum and infeasible candidates
    are discarded. The confidence interval widens each bound by a
    delta-method scale built from the maximal directional-derivative
    quadratic form over the active sets attaining the bound.
    """
    d = m.neq
    if restr.equality.shape[0] not in (0, d) or restr.sign.shape[0] not in (0, d):
        raise ShapeError("restriction matrices do not match the model dimension")
    if restr.sign.shape[1] > MAX_SIGN_RESTRICTIONS:
        raise TooManyRestrictions(
            f"{restr.sign.shape[1]} sign restrictions exceed the cap of {MAX_SIGN_RESTRICTIONS}"
        )
    if horizon < 0:
        raise ShapeError("horizon must be >= 0")
    sigma = m.sigma_u
    _check_spd(sigma)

    candidates = _bound_candidates(m.coeffs, sigma, restr, horizon, response)
    if not candidates:
        raise InfeasibleRestrictions("no impact column satisfies all restrictions")

    upper = max(v for _, v, _ in candidates)
    lower = min(v for _, v, _ in candidates)

    # delta-method scale: asymptotic covariance of (vec A, vech Sigma), the
    # coefficient block from the OLS asymptotics and the vech block from the
    # residual outer-product moments, treated as asymptotically independent.
    n_a = d * d * m.p
    n_s = d * (d + 1) // 2
    omega = np.zeros((n_a + n_s, n_a + n_s))
    if m.p > 0:
        omega[:n_a, :n_a] = asymptotic_cov(m)
    omega[n_a:, n_a:] = residual_moment_cov(m.residuals)
    theta = np.concatenate([m.coeff_vector(), vech(sigma)])

    def delta_scale(target, flip):
        tol = 1e-7 * (1.0 + abs(target))
        best = 0.0
        for active, value, _ in candidates:
            if abs(value - target) > tol:
                continue
            grad = np.zeros_like(theta)
            for idx in range(theta.size):
                h = 1e-5 * (1.0 + abs(theta[idx]))
                up = theta.copy()
                dn = theta.copy()
                up[idx] += h
                dn[idx] -= h
                grad[idx] = (
                    _value_for_theta(up, d, m.p, restr, horizon, response, active, flip)
                    - _value_for_theta(dn, d, m.p, restr, horizon, response, active, flip)
                ) / (2.0 * h)
            best = max(best, float(np.sqrt(max(grad @ omega @ grad, 0.0))))
        return best

    sigma_up = delta_scale(upper, 1.0)
    sigma_lo = delta_scale(lower, -1.0)
    sigma_hat = max(sigma_up, sigma_lo)
    z_crit = float(stats.norm.ppf(0.5 + level / 2.0))
    spread = z_crit * sigma_hat / np.sqrt(m.nobs_effective)
    return IrfBoundInterval(
        horizon=horizon,
        response=response,
        shock=restr.shock,
        lower=float(lower),
        upper=float(upper),
        ci_lower=float(lower - spread),
        ci_upper=float(upper + spread),
        sigma_hat=float(sigma_hat),
        detail={"n_candidates": len(candidates), "level": level},
    )
