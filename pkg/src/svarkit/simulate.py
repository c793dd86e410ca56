"""Deterministic data-generating processes for experiments and oracle tests.

Every generator takes an explicit ``numpy.random.Generator`` (or a seed)
so runs are reproducible; replicate streams for Monte Carlo work come
from :func:`replicate_rng`.
"""

from __future__ import annotations

import numpy as np
from scipy import signal

from .datamodel import TimeSeriesDataset
from .errors import ShapeError, UnstableDgp


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    """An independent stream that is a pure function of (seed, replicate index)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _spectral_radius(coeffs: list[np.ndarray]) -> float:
    d = coeffs[0].shape[0] if coeffs else 0
    p = len(coeffs)
    if p == 0 or d == 0:
        return 0.0
    a = np.zeros((d * p, d * p))
    a[:d, :] = np.hstack(coeffs)
    if p > 1:
        a[d:, : d * (p - 1)] = np.eye(d * (p - 1))
    return float(np.abs(np.linalg.eigvals(a)).max())


def var_recursion(coeffs, errors: np.ndarray, intercept=None, initial=None) -> np.ndarray:
    """Run y_t = nu + sum_j A_j y_{t-j} + u_t over the rows of ``errors``.

    ``initial`` supplies the p pre-sample rows (oldest first); omitted
    pre-sample values are zero. Scalar systems run through a C-speed
    linear filter; multivariate ones diagonalize the companion state and
    filter each mode, falling back to a direct loop when the eigenbasis
    is ill-conditioned.
    """
    errors = np.asarray(errors, dtype=float)
    t, d = errors.shape
    coeffs = [np.asarray(a, dtype=float) for a in coeffs]
    p = len(coeffs)
    drive = errors if intercept is None else errors + np.asarray(intercept, dtype=float)

    if p == 0:
        return drive.copy()
    if initial is not None:
        initial = [np.asarray(r, dtype=float) for r in initial]
        if len(initial) != p:
            raise ShapeError(f"initial must supply {p} rows")

    if d == 1:
        den = np.r_[1.0, [-a[0, 0] for a in coeffs]]
        past = np.zeros(p) if initial is None else np.concatenate(initial)[::-1]
        zi = signal.lfiltic([1.0], den, y=past)
        out, _ = signal.lfilter([1.0], den, drive[:, 0], zi=zi)
        return out.reshape(-1, 1)

    fast = _modal_recursion(coeffs, drive, initial)
    if fast is not None:
        return fast

    hist = [np.zeros(d)] * p if initial is None else list(initial)
    out = np.empty((t, d))
    for s in range(t):
        y = drive[s].copy()
        for j in range(1, p + 1):
            y += coeffs[j - 1] @ hist[-j]
        hist.append(y)
        hist = hist[-p:]
        out[s] = y
    return out


_MODAL_CACHE: dict = {}


def _modal_decomposition(coeffs, d):
    key = (d, tuple(a.tobytes() for a in coeffs))
    hit = _MODAL_CACHE.get(key)
    if hit is not None:
        return hit
    p = len(coeffs)
    dp = d * p
    comp = np.zeros((dp, dp))
    comp[:d, :] = np.hstack(coeffs)
    if p > 1:
        comp[d:, : d * (p - 1)] = np.eye(d * (p - 1))
    lam, basis = np.linalg.eig(comp)
    if not np.all(np.isfinite(basis)) or np.linalg.cond(basis) > 1e8:
        result = None
    else:
        result = (lam, basis, np.linalg.inv(basis))
    if len(_MODAL_CACHE) > 64:
        _MODAL_CACHE.clear()
    _MODAL_CACHE[key] = result
    return result


def _modal_recursion(coeffs, drive, initial):
    """Companion-state recursion via eigen-decomposition, one scalar filter
    per mode; returns None when the eigenbasis is too ill-conditioned."""
    t, d = drive.shape
    p = len(coeffs)
    dp = d * p
    decomp = _modal_decomposition(coeffs, d)
    if decomp is None:
        return None
    lam, basis, basis_inv = decomp
    modal_drive = drive @ basis_inv[:, :d].T
    if initial is None:
        z0 = np.zeros(dp, dtype=complex)
    else:
        state0 = np.concatenate(initial[::-1])
        z0 = basis_inv @ state0
    z = np.empty((t, dp), dtype=complex)
    for j in range(dp):
        zi = signal.lfiltic([1.0], [1.0, -lam[j]], y=[z0[j]])
        z[:, j], _ = signal.lfilter([1.0], [1.0, -lam[j]], modal_drive[:, j], zi=zi)
    return (z @ basis[:d, :].T).real


def simulate_var(
    coeffs,
    nobs: int,
    rng,
    intercept=None,
    noise_scale=1.0,
    burnin: int = 100,
    allow_unstable: bool = False,
    names=None,
) -> TimeSeriesDataset:
    """Gaussian VAR(p) sample of length ``nobs`` after a zero-start burn-in.

    ``noise_scale`` is either a scalar standard deviation or a d-by-d
    matrix S with errors S @ eps, eps standard normal.
    """
    rng = _as_rng(rng)
    coeffs = [np.atleast_2d(np.asarray(a, dtype=float)) for a in coeffs]
    d = coeffs[0].shape[0] if coeffs else (np.atleast_1d(noise_scale).shape[0] if np.ndim(noise_scale) else 1)
    if not allow_unstable and _spectral_radius(coeffs) >= 1.0:
        raise UnstableDgp("coefficient matrices have spectral radius >= 1")
    eps = rng.standard_normal((nobs + burnin, d))
    if np.ndim(noise_scale) == 0:
        errors = float(noise_scale) * eps
    else:
        errors = eps @ np.asarray(noise_scale, dtype=float).T
    y = var_recursion(coeffs, errors, intercept=intercept)[burnin:]
    names = tuple(names) if names is not None else tuple(f"y{i + 1}" for i in range(d))
    return TimeSeriesDataset(y, names)


def simulate_recursive_svar(
    impact: np.ndarray,
    coeffs,
    nobs: int,
    rng,
    burnin: int = 100,
) -> tuple[TimeSeriesDataset, np.ndarray]:
    """VAR driven by unit-variance structural shocks through an impact matrix.

    Returns the dataset and the post-burn-in shock matrix, so tests can
    use the true shocks as oracle instruments.
    """
    rng = _as_rng(rng)
    impact = np.asarray(impact, dtype=float)
    d = impact.shape[0]
    shocks = rng.standard_normal((nobs + burnin, d))
    y = var_recursion(coeffs, shocks @ impact.T)[burnin:]
    names = tuple(f"y{i + 1}" for i in range(d))
    return TimeSeriesDataset(y, names), shocks[burnin:]


def simulate_arch_var(
    coeffs,
    nobs: int,
    rng,
    arch_const: float = 0.2,
    arch_slope: float = 0.7,
    burnin: int = 200,
) -> TimeSeriesDataset:
    """VAR whose innovations follow coordinate-wise ARCH(1):
    u_t = s_t * eps_t with s_t^2 = arch_const + arch_slope * u_{t-1}^2."""
    rng = _as_rng(rng)
    coeffs = [np.atleast_2d(np.asarray(a, dtype=float)) for a in coeffs]
    d = coeffs[0].shape[0]
    total = nobs + burnin
    eps = rng.standard_normal((total, d))
    u = np.empty((total, d))
    prev = np.zeros(d)
    for s in range(total):
        sig2 = arch_const + arch_slope * prev**2
        u[s] = np.sqrt(sig2) * eps[s]
        prev = u[s]
    y = var_recursion(coeffs, u)[burnin:]
    return TimeSeriesDataset(y, tuple(f"y{i + 1}" for i in range(d)))


def simulate_break_var(
    coeffs_pre,
    coeffs_post,
    break_at: int,
    nobs: int,
    rng,
    noise_scale=1.0,
    burnin: int = 100,
) -> TimeSeriesDataset:
    """Piecewise-stationary VAR: pre-break dynamics up to row ``break_at``
    (0-based, exclusive), post-break dynamics after."""
    rng = _as_rng(rng)
    coeffs_pre = [np.atleast_2d(np.asarray(a, dtype=float)) for a in coeffs_pre]
    coeffs_post = [np.atleast_2d(np.asarray(a, dtype=float)) for a in coeffs_post]
    if not 0 < break_at < nobs:
        raise ShapeError(f"break_at must lie inside (0, {nobs})")
    d = coeffs_pre[0].shape[0]
    p = len(coeffs_pre)
    eps = float(noise_scale) * rng.standard_normal((nobs + burnin, d)) if np.ndim(noise_scale) == 0 else rng.standard_normal((nobs + burnin, d)) @ np.asarray(noise_scale).T
    pre = var_recursion(coeffs_pre, eps[: burnin + break_at])
    post = var_recursion(coeffs_post, eps[burnin + break_at :], initial=pre[-p:] if p else None)
    y = np.vstack([pre[burnin:], post])
    return TimeSeriesDataset(y, tuple(f"y{i + 1}" for i in range(d)))


def simulate_proxy_svar(
    impact: np.ndarray,
    coeffs,
    nobs: int,
    rng,
    shock_index: int = 0,
    relevance: float = 1.0,
    instrument_noise: float = 0.5,
    burnin: int = 100,
) -> tuple[TimeSeriesDataset, np.ndarray, np.ndarray]:
    """Recursive SVAR plus an external instrument for one shock.

    z_t = relevance * w_{k,t} + instrument_noise * eta_t, uncorrelated
    with every other shock. Returns (dataset, instrument, shocks).
    """
    rng = _as_rng(rng)
    ds, shocks = simulate_recursive_svar(impact, coeffs, nobs, rng, burnin=burnin)
    eta = rng.standard_normal(nobs)
    z = relevance * shocks[:, shock_index] + instrument_noise * eta
    return ds, z, shocks
