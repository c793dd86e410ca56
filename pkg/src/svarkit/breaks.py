"""Structural-break diagnostics.

Two families live here: CUSUM tests for a change in the observation
covariance, built on partial sums of outer products with Brownian-bridge
limit laws, and a block-segmentation detector that parametrizes blockwise
coefficient jumps, shrinks them with a fused pair of l1 penalties, and
screens the surviving jump locations with a localized information
criterion.

Critical values for the bridge functionals have no closed form and are
simulated once, cached as package data, and interpolated at run time.
"""

from __future__ import annotations

import importlib.resources
import math
from dataclasses import dataclass, field

import numpy as np

from ._chainprox import chain_prox
from .datamodel import TimeSeriesDataset
from .errors import (
    DegenerateSeries,
    InsufficientData,
    NonConvergence,
    ShapeError,
)
from .var import VarModel, _ols, fit_var, lag_design

_CRITICAL_LEVELS = (0.90, 0.95, 0.99)
_QUANTILE_PROBS = np.linspace(0.0005, 0.9995, 1999)


# -- Brownian-bridge critical values ------------------------------------------


def simulate_bridge_quantiles(
    n_paths: int = 100_000, grid: int = 1000, seed: int = 20240517, chunk: int = 2000
) -> dict:
    """Simulate sup|B(s)| and sup-range of a Brownian bridge on a grid.

    Returns probability / quantile arrays for both functionals plus the
    simulation settings, ready to be written with
    :func:`write_bridge_table`.
    """
    rng = np.random.default_rng(seed)
    sup_abs = np.empty(n_paths)
    sup_range = np.empty(n_paths)
    done = 0
    while done < n_paths:
        m = min(chunk, n_paths - done)
        increments = rng.standard_normal((m, grid)) / math.sqrt(grid)
        w = np.cumsum(increments, axis=1)
        t = np.arange(1, grid + 1) / grid
        bridge = w - t[None, :] * w[:, -1:]
        sup_abs[done : done + m] = np.abs(bridge).max(axis=1)
        hi = np.maximum(bridge.max(axis=1), 0.0)
        lo = np.minimum(bridge.min(axis=1), 0.0)
        sup_range[done : done + m] = hi - lo
        done += m
    return {
        "probs": _QUANTILE_PROBS,
        "sup_abs": np.quantile(sup_abs, _QUANTILE_PROBS),
        "range": np.quantile(sup_range, _QUANTILE_PROBS),
        "seed": seed,
        "n_paths": n_paths,
        "grid": grid,
    }


def write_bridge_table(table: dict, path: str) -> None:
    header = (
        f"# simulated Brownian-bridge functional quantiles\n"
        f"# seed={table['seed']} n_paths={table['n_paths']} grid={table['grid']}\n"
        "prob,sup_abs,range\n"
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header)
        for p, qa, qr in zip(table["probs"], table["sup_abs"], table["range"]):
            fh.write(f"{float(p)!r},{float(qa)!r},{float(qr)!r}\n")


_BRIDGE_CACHE: dict | None = None


def load_bridge_table(path: str | None = None) -> dict:
    """Cached quantile table; reads the shipped package data by default."""
    global _BRIDGE_CACHE
    if path is None and _BRIDGE_CACHE is not None:
        return _BRIDGE_CACHE
    if path is None:
        source = importlib.resources.files("svarkit").joinpath("data/bridge_quantiles.csv")
        text = source.read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    rows = [line for line in text.splitlines() if line and not line.startswith("#")]
    body = np.array([[float(c) for c in line.split(",")] for line in rows[1:]])
    table = {"probs": body[:, 0], "sup_abs": body[:, 1], "range": body[:, 2]}
    if path is None:
        _BRIDGE_CACHE = table
    return table


def _bridge_lookup(statistic: float, functional: str, table: dict):
    quantiles = table[functional]
    probs = table["probs"]
    cdf = float(np.interp(statistic, quantiles, probs, left=0.0, right=1.0))
    critical = {lvl: float(np.interp(lvl, probs, quantiles)) for lvl in _CRITICAL_LEVELS}
    return 1.0 - cdf, critical


# -- CUSUM covariance tests ----------------------------------------------------


@dataclass(frozen=True)
class CusumResult:
    variant: str
    statistic: float
    max_location: tuple
    p_value: float
    critical_values: dict
    reject: dict
    alpha_hat: float


def bartlett_lrv(x: np.ndarray, bandwidth: int | None = None) -> float:
    """Bartlett-kernel long-run variance of a scalar series."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    xc = x - x.mean()
    if bandwidth is None:
        bandwidth = math.ceil(n ** (1.0 / 3.0))
    gamma0 = float(xc @ xc) / n
    lrv = gamma0
    for lag in range(1, min(bandwidth, n - 1) + 1):
        cov = float(xc[lag:] @ xc[:-lag]) / n
        lrv += 2.0 * (1.0 - lag / (bandwidth + 1.0)) * cov
    return lrv


def cusum_covariance_test(
    ds: TimeSeriesDataset,
    v: np.ndarray | None = None,
    w: np.ndarray | None = None,
    variant: str = "endpoint",
) -> CusumResult:
    """Covariance-break test from partial sums of outer products.

    The series is demeaned first (mandatory; otherwise a level shift
    masquerades as a covariance change). The scalar trace v'(y y')w is
    cumulated and bridged; the endpoint variant maximizes the bridge's
    absolute value, the max-deviation variant its range over all
    sub-intervals. Both are normalized by a Bartlett long-run standard
    deviation and referred to simulated Brownian-bridge laws.
    """
    if variant not in ("endpoint", "max-deviation"):
        raise ShapeError(f"unknown variant {variant!r}")
    n, d = ds.values.shape
    if n < 20:
        raise InsufficientData(f"need at least 20 rows, got {n}")
    v = np.ones(d) if v is None else np.asarray(v, dtype=float).ravel()
    w = np.ones(d) if w is None else np.asarray(w, dtype=float).ravel()
    if v.shape != (d,) or w.shape != (d,):
        raise ShapeError("weight vectors must have one entry per variable")
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(w))):
        raise ShapeError("weight vectors must be finite")
    if not (np.any(v != 0.0) and np.any(w != 0.0)):
        raise ShapeError("weight vectors must be nonzero")

    centered = ds.values - ds.values.mean(axis=0)
    x = (centered @ v) * (centered @ w)
    lrv = bartlett_lrv(x)
    if lrv <= 0.0:
        raise DegenerateSeries("long-run variance of the outer-product series is non-positive")
    alpha_hat = math.sqrt(lrv)

    s = np.cumsum(x)
    k = np.arange(1, n + 1)
    bridge = (s - k / n * s[-1]) / math.sqrt(n)

    table = load_bridge_table()
    if variant == "endpoint":
        stat = float(np.abs(bridge).max()) / alpha_hat
        loc = int(np.argmax(np.abs(bridge)))
        p_value, critical = _bridge_lookup(stat, "sup_abs", table)
        location = (loc,)
    else:
        padded = np.concatenate([[0.0], bridge])
        hi = int(np.argmax(padded))
        lo = int(np.argmin(padded))
        stat = float(padded[hi] - padded[lo]) / alpha_hat
        p_value, critical = _bridge_lookup(stat, "range", table)
        location = tuple(sorted((max(lo - 1, 0), max(hi - 1, 0))))
    return CusumResult(
        variant=variant,
        statistic=stat,
        max_location=location,
        p_value=p_value,
        critical_values=critical,
        reject={lvl: stat > critical[lvl] for lvl in critical},
        alpha_hat=alpha_hat,
    )


# -- block segmentation scheme ---------------------------------------------------


@dataclass(frozen=True)
class BssResult:
    """Candidate break locations with the blockwise solution behind them."""

    candidates: tuple[int, ...]
    jump_norms: tuple[float, ...]
    gamma: np.ndarray
    objective: float
    converged: bool
    n_iter: int
    block_length: int
    block_starts: tuple[int, ...]
    lam1: float
    lam2: float


@dataclass(frozen=True)
class ScreenResult:
    final_breaks: tuple[int, ...]
    lic_value: float
    segment_models: tuple[VarModel, ...]


@dataclass(frozen=True)
class BreakReport:
    candidate_blocks: tuple
    final_breaks: tuple[int, ...]
    segment_models: tuple[VarModel, ...]
    tuning: dict = field(default_factory=dict)
    lic_value: float = math.nan


def _bss_objective(gamma, grams, crosses, sse_const, n, lam1, lam2):
    fitted_cost = sse_const
    for i in range(gamma.shape[0]):
        gi = gamma[i]
        fitted_cost += float(np.sum(gi * (grams[i] @ gi))) - 2.0 * float(np.sum(crosses[i] * gi))
    theta = np.diff(np.concatenate([np.zeros((1,) + gamma.shape[1:]), gamma]), axis=0)
    return fitted_cost / n + lam1 * float(np.abs(theta).sum()) + lam2 * float(np.abs(gamma).sum())


def bss_detect(
    ds: TimeSeriesDataset,
    p: int,
    block_length: int,
    lam1: float,
    lam2: float,
    max_iter: int = 10_000,
    tol: float = 1e-6,
    warm_start: np.ndarray | None = None,
) -> BssResult:
    """Candidate break points from the fused blockwise-jump program.

    The effective sample is split into blocks of ``block_length`` rows;
    block coefficients are cumulative sums of jump parameters, the
    objective is mean squared error plus l1 penalties on the jumps and
    on the cumulated coefficients, and candidates are the starts of
    blocks with a nonzero jump. Solved by monotone FISTA whose proximal
    step is the exact anchored fused-chain operator; the objective never
    increases across iterations.
    """
    t, d = ds.values.shape
    if p < 1:
        raise ShapeError("block segmentation requires p >= 1")
    q = d * p
    if block_length < q + 2:
        raise InsufficientData(f"block length {block_length} below d*p + 2 = {q + 2}")
    n = t - p
    k_n = -(-n // block_length)
    if k_n < 2:
        raise InsufficientData("need at least two blocks")
    if lam1 < 0 or lam2 < 0:
        raise ShapeError("penalties must be non-negative")

    y, x = lag_design(ds.values, p, intercept=False)
    starts = tuple(i * block_length for i in range(k_n))
    grams, crosses, lips = [], [], []
    sse_const = float(np.sum(y * y))
    for i, s in enumerate(starts):
        e = min(s + block_length, n)
        xi, yi = x[s:e], y[s:e]
        g = xi.T @ xi
        grams.append(g)
        crosses.append(xi.T @ yi)
        lips.append(float(np.linalg.eigvalsh(g)[-1]))
    step = n / (2.0 * max(max(lips), 1e-12))

    gamma = np.zeros((k_n, q, d)) if warm_start is None else warm_start.copy()
    obj = _bss_objective(gamma, grams, crosses, sse_const, n, lam1, lam2)

    def grad(g_arr):
        out = np.empty_like(g_arr)
        for i in range(k_n):
            out[i] = (2.0 / n) * (grams[i] @ g_arr[i] - crosses[i])
        return out

    def prox(point):
        a, b = step * lam1, step * lam2
        out = np.empty_like(point)
        for r in range(q):
            for e in range(d):
                out[:, r, e] = chain_prox(point[:, r, e], a, b)
        return out

    momentum = gamma.copy()
    t_acc = 1.0
    converged = False
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        candidate = prox(momentum - step * grad(momentum))
        new_obj = _bss_objective(candidate, grams, crosses, sse_const, n, lam1, lam2)
        if new_obj > obj:
            candidate = prox(gamma - step * grad(gamma))
            new_obj = _bss_objective(candidate, grams, crosses, sse_const, n, lam1, lam2)
            t_acc = 1.0
        if new_obj > obj * (1.0 + 1e-12) + 1e-15:
            raise RuntimeError("proximal step increased the objective")
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_acc * t_acc))
        momentum = candidate + ((t_acc - 1.0) / t_next) * (candidate - gamma)
        gamma_prev_obj = obj
        gamma = candidate
        obj = new_obj
        t_acc = t_next
        if abs(gamma_prev_obj - obj) <= tol * max(1.0, abs(gamma_prev_obj)):
            converged = True
            break

    theta = np.diff(np.concatenate([np.zeros((1, q, d)), gamma]), axis=0)
    jumps = np.sqrt(np.sum(theta**2, axis=(1, 2)))
    scale = max(float(np.abs(gamma).max()), 1.0)
    cands, norms = [], []
    for i in range(1, k_n):
        if jumps[i] > 1e-10 * scale:
            cands.append(p + starts[i])
            norms.append(float(jumps[i]))
    result = BssResult(
        candidates=tuple(cands),
        jump_norms=tuple(norms),
        gamma=gamma,
        objective=obj,
        converged=converged,
        n_iter=n_iter,
        block_length=block_length,
        block_starts=starts,
        lam1=lam1,
        lam2=lam2,
    )
    if not converged:
        err = NonConvergence(f"no convergence after {max_iter} iterations", best=result)
        raise err
    return result


# -- localized information criterion screening ----------------------------------


def _window_sse(values: np.ndarray, p: int, lo: int, hi: int) -> float:
    """Sum of squared VAR(p) residuals for response rows lo..hi-1."""
    t, d = values.shape
    lo = max(lo, p)
    hi = min(hi, t)
    if hi - lo <= d * p + 1:
        raise InsufficientData(f"window [{lo}, {hi}) too short for a VAR({p}) fit")
    y = values[lo:hi]
    blocks = [np.ones((hi - lo, 1))]
    for j in range(1, p + 1):
        blocks.append(values[lo - j : hi - j])
    _, resid = _ols(np.hstack(blocks), y)
    return float(np.sum(resid * resid))


def _lic_value(values, p, candidates, kept, a_n, omega):
    """Local SSE of a subset: split fits at kept points, pooled elsewhere.

    Windows are truncated at neighbouring kept points so rows are not
    double counted when candidates sit close together.
    """
    total = omega * len(kept)
    kept_sorted = sorted(kept)
    t = values.shape[0]
    for c in candidates:
        others = [k for k in kept_sorted if k != c]
        lo_bound = max([0] + [k for k in others if k < c])
        hi_bound = min([t] + [k for k in others if k > c])
        lo = max(c - a_n, lo_bound)
        hi = min(c + a_n, hi_bound)
        if c in kept_sorted:
            total += _window_sse(values, p, lo, c) + _window_sse(values, p, c, hi)
        else:
            total += _window_sse(values, p, lo, hi)
    return total


def lic_screen(
    ds: TimeSeriesDataset,
    candidates,
    p: int,
    a_n: int,
    omega: float,
) -> ScreenResult:
    """Keep the candidate subset minimizing local SSE plus omega per break.

    Subsets are enumerated exactly up to 12 candidates and reduced by
    greedy backward elimination beyond that. Splitting at a kept point
    replaces one pooled neighbourhood fit with separate left and right
    fits; a true break makes the pooled fit markedly worse.
    """
    candidates = tuple(sorted(int(c) for c in candidates))
    t, d = ds.values.shape
    if a_n < d * p + 2:
        raise InsufficientData(f"neighbourhood {a_n} below d*p + 2 = {d * p + 2}")
    for c in candidates:
        if not p < c < t:
            raise ShapeError(f"candidate {c} outside the sample")

    values = ds.values
    if not candidates:
        best_subset: tuple[int, ...] = ()
        best_value = 0.0
    elif len(candidates) <= 12:
        best_subset, best_value = (), math.inf
        for mask in range(1 << len(candidates)):
            kept = tuple(c for j, c in enumerate(candidates) if mask >> j & 1)
            value = _lic_value(values, p, candidates, kept, a_n, omega)
            if value < best_value - 1e-12 or (
                abs(value - best_value) <= 1e-12 and kept < best_subset
            ):
                best_subset, best_value = kept, value
    else:
        kept = list(candidates)
        best_value = _lic_value(values, p, candidates, kept, a_n, omega)
        improved = True
        while improved and kept:
            improved = False
            for c in list(kept):
                trial = [k for k in kept if k != c]
                value = _lic_value(values, p, candidates, trial, a_n, omega)
                if value < best_value:
                    kept, best_value = trial, value
                    improved = True
                    break
        best_subset = tuple(kept)

    bounds = [0, *best_subset, t]
    segments = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        seg = TimeSeriesDataset(values[lo:hi], ds.names)
        segments.append(fit_var(seg, p))
    return ScreenResult(
        final_breaks=best_subset,
        lic_value=float(best_value),
        segment_models=tuple(segments),
    )


# -- end-to-end driver -----------------------------------------------------------


def default_lambda_grid(ds: TimeSeriesDataset, p: int, block_length: int, size: int = 10):
    """Log-spaced grid below the smallest penalty that kills every jump."""
    y, x = lag_design(ds.values, p, intercept=False)
    n = y.shape[0]
    lam_max = 2.0 * float(np.abs(x.T @ y).max()) / n
    return np.geomspace(lam_max, lam_max / 1000.0, size)


def detect_breaks(
    ds: TimeSeriesDataset,
    p: int,
    block_length: int | None = None,
    a_n: int | None = None,
    omega: float | None = None,
    lambda_grid=None,
    lambda_ratio: float = 0.1,
    max_iter: int = 10_000,
    tol: float = 1e-6,
) -> BreakReport:
    """Full pipeline: fused blockwise detection over a penalty grid, LIC
    screening of each candidate set, and selection of the grid point whose
    screened model minimizes full-sample segment SSE plus the break penalty.
    """
    t, d = ds.values.shape
    n = t - p
    if block_length is None:
        block_length = math.ceil(math.sqrt(n))
    if a_n is None:
        a_n = block_length
    if omega is None:
        omega = d * d * p * math.log(n)
    if lambda_grid is None:
        lambda_grid = default_lambda_grid(ds, p, block_length)

    best = None
    warm = None
    for lam1 in lambda_grid:
        try:
            res = bss_detect(
                ds, p, block_length, float(lam1), float(lam1) * lambda_ratio,
                max_iter=max_iter, tol=tol, warm_start=warm,
            )
        except NonConvergence as err:
            res = err.best
        warm = res.gamma
        screened = lic_screen(ds, res.candidates, p, a_n, omega)
        global_cost = omega * len(screened.final_breaks)
        bounds = [0, *screened.final_breaks, t]
        usable = True
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            try:
                global_cost += _window_sse(ds.values, p, lo, hi)
            except InsufficientData:
                usable = False
                break
        if not usable:
            continue
        entry = (global_cost, res, screened)
        if best is None or global_cost < best[0]:
            best = entry
    if best is None:
        raise InsufficientData("no penalty-grid point produced a screenable model")
    _, res, screened = best
    return BreakReport(
        candidate_blocks=tuple(zip(res.candidates, res.jump_norms)),
        final_breaks=screened.final_breaks,
        segment_models=screened.segment_models,
        tuning={
            "block_length": res.block_length,
            "lam1": res.lam1,
            "lam2": res.lam2,
            "a_n": a_n,
            "omega": omega,
        },
        lic_value=screened.lic_value,
    )
