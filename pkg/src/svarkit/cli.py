"""Command-line front end.

Every command reads a CSV dataset (except ``simulate`` and ``critvals``),
runs one pipeline, and writes a JSON result envelope plus flat CSV tables
into the output directory. All randomness flows from ``--seed``, which is
mandatory on stochastic commands; results are bit-identical across runs
with the same configuration, including under SVARKIT_THREADS parallelism,
so wall-clock timing is printed to stderr rather than written to files.

Config files are INI-style with one section per command; command-line
flags override file values, and unknown keys in a section are usage
errors. Exit codes: 0 success, 1 computation error (machine-readable
JSON on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .bootstrap import BootstrapConfig, coefficient_intervals, irf_ci, mbb_distribution
from .breaks import (
    cusum_covariance_test,
    detect_breaks,
    simulate_bridge_quantiles,
    write_bridge_table,
)
from .datamodel import TimeSeriesDataset, TransformSpec, load_csv, transform
from .dynamics import fevd, gfevd_connectedness, historical_decomposition, irf
from .errors import IoError, ShapeError, SvarError
from .ident import (
    SignRestrictionSet,
    identify_longrun,
    identify_recursive,
    sign_restriction_bounds,
)
from .lagselect import ic_table, sequential_wald
from .localproj import fit_lp, lp_irf
from .robust import fit_mlts, reweight_rmlts, robust_order_select
from .simulate import (
    simulate_arch_var,
    simulate_break_var,
    simulate_proxy_svar,
    simulate_var,
)
from .var import check_stability, fit_var
from .vecm import gg_decompose, var_to_vecm

STOCHASTIC_COMMANDS = {"boot", "robust", "simulate", "critvals"}


# -- small serialization helpers -----------------------------------------------


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [_jsonable(x) for x in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):  # before int: bool subclasses int
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    return obj


def _write_envelope(outdir, command, config, seed, payload):
    envelope = {
        "command": command,
        "config": _jsonable(config),
        "version": __version__,
        "seed": seed,
        "payload": _jsonable(payload),
    }
    path = os.path.join(outdir, f"{command}.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(envelope, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return path


def _write_csv(outdir, name, header, rows):
    path = os.path.join(outdir, name)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(
                ",".join(
                    repr(float(c)) if isinstance(c, (float, np.floating)) else str(c)
                    for c in row
                )
                + "\n"
            )
    return path


def _parse_matrix(text: str) -> np.ndarray:
    """Rows split by ';', cells by ','. Example: '0.5,0;0.3,0.4'."""
    rows = [[float(c) for c in row.split(",")] for row in text.split(";") if row.strip()]
    return np.array(rows)


def _parse_coeffs(text: str) -> list[np.ndarray]:
    """Lag matrices split by '|'. Example: '0.5,0;0,0.4|0.1,0;0,0.1'."""
    return [_parse_matrix(block) for block in text.split("|") if block.strip()]


def _load_dataset(args) -> TimeSeriesDataset:
    ds = load_csv(args.input, has_header=args.has_header, index_col=0 if args.index_col else None)
    if args.transform:
        ds = transform(ds, TransformSpec.parse(args.transform))
    return ds


def _identify(model, scheme, order):
    if scheme == "recursive":
        perm = [int(i) for i in order.split(",")] if order else None
        return identify_recursive(model, order=perm)
    if scheme == "longrun":
        return identify_longrun(model)
    raise SvarError(f"unsupported identification scheme {scheme!r}")


def parse_restriction_file(path: str, d: int, shock: int) -> SignRestrictionSet:
    """Read impact restrictions: one line per restriction.

    ``eq <var_index> <horizon_scope=0>`` zeroes the impact response of a
    variable; ``sign <var_index> <+|->`` signs it. Indices are 0-based;
    only impact-horizon (scope 0) restrictions are supported. Blank lines
    and '#' comments are ignored.
    """
    if not os.path.isfile(path):
        raise IoError(f"no such restriction file: {path}")
    eq_cols = []
    sign_cols = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            kind = parts[0]
            if kind == "eq":
                if len(parts) not in (2, 3):
                    raise ShapeError(f"line {lineno}: expected 'eq <var_index> [scope]'")
                idx = int(parts[1])
                scope = int(parts[2]) if len(parts) == 3 else 0
                if scope != 0:
                    raise ShapeError(f"line {lineno}: only horizon scope 0 is supported")
                col = np.zeros(d)
                col[idx] = 1.0
                eq_cols.append(col)
            elif kind == "sign":
                if len(parts) != 3 or parts[2] not in ("+", "-"):
                    raise ShapeError(f"line {lineno}: expected 'sign <var_index> <+|->'")
                idx = int(parts[1])
                col = np.zeros(d)
                col[idx] = 1.0 if parts[2] == "+" else -1.0
                sign_cols.append(col)
            else:
                raise ShapeError(f"line {lineno}: unknown restriction kind {kind!r}")
    z = np.column_stack(eq_cols) if eq_cols else np.zeros((d, 0))
    s = np.column_stack(sign_cols) if sign_cols else np.zeros((d, 0))
    return SignRestrictionSet(z, s, shock)


def _matrix_payload(mat) -> list:
    return _jsonable(np.asarray(mat))


# -- command implementations -----------------------------------------------------


def _cmd_fit(args, outdir, config):
    ds = _load_dataset(args)
    m = fit_var(ds, args.p, intercept=not args.no_intercept)
    report = check_stability(m)
    payload = {
        "names": list(ds.names),
        "p": m.p,
        "intercept": _matrix_payload(m.intercept) if m.intercept is not None else None,
        "coefficients": [_matrix_payload(a) for a in m.coeffs],
        "sigma_u": _matrix_payload(m.sigma_u),
        "nobs_effective": m.nobs_effective,
        "stability": {
            "stable": report.stable,
            "spectral_radius": report.spectral_radius,
            "boundary": report.boundary,
        },
    }
    rows = [
        (lag + 1, ds.names[i], ds.names[j], float(m.coeffs[lag][i, j]))
        for lag in range(m.p)
        for i in range(ds.nvar)
        for j in range(ds.nvar)
    ]
    _write_csv(outdir, "coefficients.csv", ("lag", "equation", "variable", "value"), rows)
    return payload


def _cmd_select_lag(args, outdir, config):
    ds = _load_dataset(args)
    table = ic_table(ds, args.pmax, intercept=not args.no_intercept)
    wald = sequential_wald(ds, max(args.pmax, 1), alpha=args.alpha)
    payload = {
        "ic": {
            "logdet": _matrix_payload(table.logdet),
            "aic": _matrix_payload(table.aic),
            "bic": _matrix_payload(table.bic),
            "hqc": _matrix_payload(table.hqc),
            "p_aic": table.p_aic,
            "p_bic": table.p_bic,
            "p_hqc": table.p_hqc,
        },
        "sequential_wald": {
            "p_hat": wald.p_hat,
            "trace": [
                {
                    "p": s.p,
                    "statistic": s.statistic,
                    "critical_value": s.critical_value,
                    "significant": s.significant,
                }
                for s in wald.trace
            ],
        },
    }
    if args.robust:
        sel = robust_order_select(
            ds, args.pmax, alpha_trim=args.alpha_trim, delta=args.delta, seed=args.seed
        )
        payload["robust"] = {
            "p_hat": sel.p_hat,
            "trace": [
                {"p": r.p, "aic": r.aic, "bic": r.bic, "hqc": r.hqc, "n_retained": r.n_retained}
                for r in sel.trace
            ],
        }
    rows = [
        (p, float(table.logdet[p]), float(table.aic[p]), float(table.bic[p]), float(table.hqc[p]))
        for p in range(args.pmax + 1)
    ]
    _write_csv(outdir, "lag_criteria.csv", ("p", "logdet", "aic", "bic", "hqc"), rows)
    return payload


def _cmd_irf(args, outdir, config):
    ds = _load_dataset(args)
    m = fit_var(ds, args.p, intercept=not args.no_intercept)
    if args.scheme == "sign-set":
        if not args.restrictions:
            raise ShapeError("--restrictions is required with --scheme sign-set")
        restr = parse_restriction_file(args.restrictions, ds.nvar, args.shock)
        rows = []
        cells = []
        for h in range(args.horizon + 1):
            for i in range(ds.nvar):
                res = sign_restriction_bounds(m, restr, horizon=h, response=i, level=args.level)
                rows.append((h, ds.names[i], f"w{args.shock + 1}", "",
                             float(res.lower), float(res.upper)))
                cells.append({
                    "horizon": h, "response": i, "shock": args.shock,
                    "lower": res.lower, "upper": res.upper,
                    "ci_lower": res.ci_lower, "ci_upper": res.ci_upper,
                    "sigma_hat": res.sigma_hat,
                })
        _write_csv(outdir, "irf.csv",
                   ("horizon", "response", "shock", "value", "lower", "upper"), rows)
        return {"scheme": "sign-set", "bounds": cells}
    if args.boot > 0:
        block = None if args.block == "auto" else int(args.block)
        cfg = BootstrapConfig(
            replicates=args.boot, block_length=block, seed=args.seed, level=args.level
        )
        order = args.order if args.scheme == "recursive" else None
        rs = irf_ci(m, args.scheme, args.horizon, cfg,
                    order=[int(i) for i in order.split(",")] if order else None)
    else:
        sm = _identify(m, args.scheme, args.order)
        rs = irf(sm, args.horizon)
    shock_names = rs.shock_names or tuple(f"w{j + 1}" for j in range(ds.nvar))
    rows = []
    for h in range(rs.theta.shape[0]):
        for i in range(rs.theta.shape[1]):
            for j in range(rs.theta.shape[2]):
                rows.append(
                    (
                        h,
                        ds.names[i],
                        shock_names[j],
                        float(rs.theta[h, i, j]),
                        float(rs.lower[h, i, j]) if rs.lower is not None else "",
                        float(rs.upper[h, i, j]) if rs.upper is not None else "",
                    )
                )
    _write_csv(outdir, "irf.csv", ("horizon", "response", "shock", "value", "lower", "upper"), rows)
    return {
        "shock_names": list(shock_names),
        "theta": _matrix_payload(rs.theta),
        "lower": _matrix_payload(rs.lower) if rs.lower is not None else None,
        "upper": _matrix_payload(rs.upper) if rs.upper is not None else None,
    }


def _cmd_fevd(args, outdir, config):
    ds = _load_dataset(args)
    m = fit_var(ds, args.p, intercept=not args.no_intercept)
    sm = _identify(m, args.scheme, args.order)
    table = fevd(sm, args.horizon)
    rows = [
        (h + 1, ds.names[i], sm.shock_names[j], float(table.shares[h, i, j]))
        for h in range(table.shares.shape[0])
        for i in range(ds.nvar)
        for j in range(ds.nvar)
    ]
    _write_csv(outdir, "fevd.csv", ("horizon", "variable", "shock", "share"), rows)
    return {"shares": _matrix_payload(table.shares), "shock_names": list(sm.shock_names)}


def _cmd_hd(args, outdir, config):
    ds = _load_dataset(args)
    m = fit_var(ds, args.p, intercept=not args.no_intercept)
    sm = _identify(m, args.scheme, args.order)
    hd = historical_decomposition(sm, ds)
    rows = [
        (t + hd.offset, ds.names[i], sm.shock_names[j], float(hd.contributions[t, i, j]))
        for t in range(hd.contributions.shape[0])
        for i in range(ds.nvar)
        for j in range(ds.nvar)
    ]
    _write_csv(outdir, "hd.csv", ("t", "variable", "shock", "contribution"), rows)
    rrows = [
        (t + hd.offset, ds.names[i], float(hd.remainder[t, i]))
        for t in range(hd.remainder.shape[0])
        for i in range(ds.nvar)
    ]
    _write_csv(outdir, "hd_remainder.csv", ("t", "variable", "remainder"), rrows)
    return {
        "offset": hd.offset,
        "contributions": _matrix_payload(hd.contributions),
        "remainder": _matrix_payload(hd.remainder),
    }


def _cmd_connect(args, outdir, config):
    ds = _load_dataset(args)
    m = fit_var(ds, args.p, intercept=not args.no_intercept)
    table = gfevd_connectedness(m, args.horizon)
    rows = [
        (ds.names[i], ds.names[j], float(table.raw[i, j]), float(table.normalized[i, j]))
        for i in range(ds.nvar)
        for j in range(ds.nvar)
    ]
    _write_csv(outdir, "connect.csv", ("variable", "shock", "raw", "normalized"), rows)
    srows = [
        (ds.names[i], float(table.from_others[i]), float(table.to_others[i]), float(table.net[i]))
        for i in range(ds.nvar)
    ]
    _write_csv(outdir, "connect_summary.csv", ("variable", "from_others", "to_others", "net"), srows)
    return {
        "raw": _matrix_payload(table.raw),
        "normalized": _matrix_payload(table.normalized),
        "from_others": _matrix_payload(table.from_others),
        "to_others": _matrix_payload(table.to_others),
        "net": _matrix_payload(table.net),
        "total": table.total,
    }


def _cmd_lp(args, outdir, config):
    ds = _load_dataset(args)
    if args.shock_file:
        shock_ds = load_csv(args.shock_file, has_header=args.has_header)
        shock = shock_ds.values[:, 0]
        rs = lp_irf(ds, args.horizon, args.controls, shock)
        rows = [
            (
                h,
                ds.names[i],
                float(rs.theta[h, i, 0]),
                float(rs.lower[h, i, 0]),
                float(rs.upper[h, i, 0]),
            )
            for h in range(rs.theta.shape[0])
            for i in range(ds.nvar)
        ]
        _write_csv(outdir, "lp.csv", ("horizon", "response", "value", "lower", "upper"), rows)
        return {
            "mode": "shock-series",
            "theta": _matrix_payload(rs.theta),
            "lower": _matrix_payload(rs.lower),
            "upper": _matrix_payload(rs.upper),
        }
    rows = []
    betas = []
    for h in range(args.horizon + 1):
        est = fit_lp(ds, h, args.controls, response=args.response, impulse=args.impulse)
        betas.append({"horizon": h, "beta": _matrix_payload(est.beta), "se": _matrix_payload(est.se)})
        for j in range(est.beta.shape[1]):
            rows.append((h, ds.names[args.response], ds.names[j],
                         float(est.beta[0, j]), float(est.se[0, j])))
    _write_csv(outdir, "lp.csv", ("horizon", "response", "impulse", "value", "se"), rows)
    return {"mode": "levels", "estimates": betas}


def _cmd_boot(args, outdir, config):
    ds = _load_dataset(args)
    m = fit_var(ds, args.p, intercept=not args.no_intercept)
    block = None if args.block == "auto" else int(args.block)
    cfg = BootstrapConfig(replicates=args.bsize, block_length=block, seed=args.seed, level=args.level)
    draws = mbb_distribution(m, cfg)
    bands = coefficient_intervals(draws)
    d = ds.nvar
    rows = []
    idx = 0
    for lag in range(args.p):
        for v in range(d):
            for e in range(d):
                rows.append(
                    (
                        lag + 1,
                        ds.names[e],
                        ds.names[v],
                        float(draws.beta_hat[idx]),
                        float(bands[idx, 0]),
                        float(bands[idx, 1]),
                    )
                )
                idx += 1
    _write_csv(
        outdir, "boot.csv", ("lag", "equation", "variable", "estimate", "lower", "upper"), rows
    )
    payload = {
        "block_length": draws.block_length,
        "replicates": cfg.replicates,
        "failed": int(draws.failed.sum()),
        "estimate": _matrix_payload(draws.beta_hat),
        "lower": _matrix_payload(bands[:, 0]),
        "upper": _matrix_payload(bands[:, 1]),
    }
    if args.keep_draws:
        _write_csv(
            outdir,
            "draws.csv",
            ("replicate",) + tuple(f"beta{i}" for i in range(draws.betas.shape[1])),
            [(b, *[float(x) for x in draws.betas[b]]) for b in range(draws.betas.shape[0])],
        )
    return payload


def _cmd_vecm(args, outdir, config):
    ds = _load_dataset(args)
    m = fit_var(ds, args.p, intercept=not args.no_intercept)
    v = var_to_vecm(m)
    rows = [
        (ds.names[i], ds.names[j], float(v.pi[i, j]))
        for i in range(ds.nvar)
        for j in range(ds.nvar)
    ]
    _write_csv(outdir, "vecm_pi.csv", ("equation", "variable", "value"), rows)
    return {
        "pi": _matrix_payload(v.pi),
        "gammas": [_matrix_payload(g) for g in v.gammas],
        "intercept": _matrix_payload(v.intercept) if v.intercept is not None else None,
    }


def _cmd_pt_decompose(args, outdir, config):
    ds = _load_dataset(args)
    alpha = load_csv(args.alpha_file, has_header=False).values
    beta = load_csv(args.beta_file, has_header=False).values
    pt = gg_decompose(alpha, beta, ds)
    rows = [
        (t, ds.names[i], float(pt.permanent[t, i]), float(pt.transitory[t, i]))
        for t in range(ds.nobs)
        for i in range(ds.nvar)
    ]
    _write_csv(outdir, "pt.csv", ("t", "variable", "permanent", "transitory"), rows)
    return {"permanent": _matrix_payload(pt.permanent), "transitory": _matrix_payload(pt.transitory)}


def _cmd_robust(args, outdir, config):
    ds = _load_dataset(args)
    mlts = fit_mlts(ds, args.p, alpha_trim=args.alpha_trim, seed=args.seed)
    rmlts = reweight_rmlts(mlts, delta=args.delta)
    rows = [
        (lag + 1, ds.names[i], ds.names[j], float(rmlts.coeffs[lag][i, j]))
        for lag in range(args.p)
        for i in range(ds.nvar)
        for j in range(ds.nvar)
    ]
    _write_csv(outdir, "robust_coefficients.csv", ("lag", "equation", "variable", "value"), rows)
    _write_csv(
        outdir,
        "outliers.csv",
        ("row", "distance"),
        [(int(i), float(rmlts.distances[i])) for i in rmlts.flagged_outliers],
    )
    return {
        "alpha_trim": args.alpha_trim,
        "delta": args.delta,
        "subset_size_mlts": mlts.h,
        "subset_size_rmlts": rmlts.h,
        "c_factor": rmlts.c_factor,
        "coefficients": [_matrix_payload(a) for a in rmlts.coeffs],
        "sigma_u": _matrix_payload(rmlts.sigma_u),
        "flagged_outliers": [int(i) for i in rmlts.flagged_outliers],
    }


def _cmd_breaks(args, outdir, config):
    ds = _load_dataset(args)
    grid = None
    if args.lambda1 is not None:
        grid = [args.lambda1]
    report = detect_breaks(
        ds,
        args.p,
        block_length=args.block,
        a_n=args.a_n,
        omega=args.omega,
        lambda_grid=grid,
        lambda_ratio=args.lambda_ratio,
    )
    rows = [("candidate", int(t), float(normval)) for t, normval in report.candidate_blocks]
    rows += [("final", int(t), "") for t in report.final_breaks]
    _write_csv(outdir, "breaks.csv", ("kind", "time", "jump_norm"), rows)
    return {
        "candidates": [int(t) for t, _ in report.candidate_blocks],
        "final_breaks": [int(t) for t in report.final_breaks],
        "lic_value": report.lic_value,
        "tuning": _jsonable(report.tuning),
        "n_segments": len(report.segment_models),
    }


def _cmd_cusum(args, outdir, config):
    ds = _load_dataset(args)
    v = np.array([float(c) for c in args.v.split(",")]) if args.v else None
    w = np.array([float(c) for c in args.w.split(",")]) if args.w else None
    res = cusum_covariance_test(ds, v, w, variant=args.variant)
    _write_csv(
        outdir,
        "cusum.csv",
        ("variant", "statistic", "p_value", "cv90", "cv95", "cv99"),
        [
            (
                res.variant,
                float(res.statistic),
                float(res.p_value),
                float(res.critical_values[0.90]),
                float(res.critical_values[0.95]),
                float(res.critical_values[0.99]),
            )
        ],
    )
    return {
        "variant": res.variant,
        "statistic": res.statistic,
        "p_value": res.p_value,
        "max_location": list(res.max_location),
        "critical_values": {str(k): v for k, v in res.critical_values.items()},
        "reject": {str(k): bool(v) for k, v in res.reject.items()},
        "alpha_hat": res.alpha_hat,
    }


def _cmd_simulate(args, outdir, config):
    rng = np.random.default_rng(args.seed)
    meta = {"dgp": args.dgp, "seed": args.seed, "t": args.t}
    if args.dgp == "var":
        coeffs = _parse_coeffs(args.coeffs)
        if args.sigma and ("," in args.sigma or ";" in args.sigma):
            sigma = _parse_matrix(args.sigma)
        else:
            sigma = float(args.sigma) if args.sigma else 1.0
        ds = simulate_var(coeffs, args.t, rng, noise_scale=sigma,
                          allow_unstable=args.allow_unstable)
        meta["coeffs"] = [_matrix_payload(a) for a in coeffs]
    elif args.dgp == "arch":
        coeffs = _parse_coeffs(args.coeffs)
        ds = simulate_arch_var(coeffs, args.t, rng)
        meta["coeffs"] = [_matrix_payload(a) for a in coeffs]
    elif args.dgp == "break":
        pre = _parse_coeffs(args.coeffs)
        post = _parse_coeffs(args.coeffs_post)
        ds = simulate_break_var(pre, post, args.break_at, args.t, rng)
        meta["coeffs_pre"] = [_matrix_payload(a) for a in pre]
        meta["coeffs_post"] = [_matrix_payload(a) for a in post]
        meta["break_at"] = args.break_at
    elif args.dgp == "proxy":
        impact = _parse_matrix(args.impact)
        coeffs = _parse_coeffs(args.coeffs)
        ds, z, _ = simulate_proxy_svar(impact, coeffs, args.t, rng,
                                       shock_index=args.shock_index)
        meta["impact"] = _matrix_payload(impact)
        meta["shock_index"] = args.shock_index
        _write_csv(outdir, "instrument.csv", ("z",), [(float(x),) for x in z])
    else:
        raise SvarError(f"unknown dgp {args.dgp!r}")
    _write_csv(outdir, args.out, ds.names, [tuple(float(x) for x in row) for row in ds.values])
    return meta


def _cmd_critvals(args, outdir, config):
    table = simulate_bridge_quantiles(n_paths=args.paths, grid=args.grid, seed=args.seed)
    path = os.path.join(outdir, args.out)
    write_bridge_table(table, path)
    return {"path": args.out, "n_paths": args.paths, "grid": args.grid}


_HANDLERS = {
    "fit": _cmd_fit,
    "select-lag": _cmd_select_lag,
    "irf": _cmd_irf,
    "fevd": _cmd_fevd,
    "hd": _cmd_hd,
    "connect": _cmd_connect,
    "lp": _cmd_lp,
    "boot": _cmd_boot,
    "vecm": _cmd_vecm,
    "pt-decompose": _cmd_pt_decompose,
    "robust": _cmd_robust,
    "breaks": _cmd_breaks,
    "cusum": _cmd_cusum,
    "simulate": _cmd_simulate,
    "critvals": _cmd_critvals,
}


def _add_io_flags(sp, needs_input=True):
    if needs_input:
        sp.add_argument("--input", required=False, help="input CSV path")
        sp.add_argument("--no-header", dest="has_header", action="store_false")
        sp.add_argument("--index-col", action="store_true", help="leftmost column is an index")
        sp.add_argument("--transform", default="", help="per-column spec, e.g. 'log,diff,none'")
    sp.add_argument("--output-dir", default=".")
    sp.add_argument("--config", default="", help="INI config file with a section per command")
    sp.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="svarkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("fit", help="estimate a reduced-form VAR")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--no-intercept", action="store_true")
    _add_io_flags(sp)

    sp = sub.add_parser("select-lag", help="information criteria and sequential Wald")
    sp.add_argument("--pmax", type=int, required=True)
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--no-intercept", action="store_true")
    sp.add_argument("--robust", action="store_true", help="also run robust order selection")
    sp.add_argument("--alpha-trim", type=float, default=0.25)
    sp.add_argument("--delta", type=float, default=0.01)
    _add_io_flags(sp)

    for name in ("irf", "fevd", "hd"):
        sp = sub.add_parser(name)
        sp.add_argument("--p", type=int, required=True)
        schemes = ("recursive", "longrun", "sign-set") if name == "irf" else ("recursive", "longrun")
        sp.add_argument("--scheme", choices=schemes, default="recursive")
        sp.add_argument("--order", default="", help="comma permutation for recursive ordering")
        sp.add_argument("--no-intercept", action="store_true")
        if name in ("irf", "fevd"):
            sp.add_argument("--horizon", type=int, required=True)
        if name == "irf":
            sp.add_argument("--boot", type=int, default=0)
            sp.add_argument("--block", default="auto")
            sp.add_argument("--level", type=float, default=0.9)
            sp.add_argument("--restrictions", default="",
                            help="restriction file for sign-set: 'eq <var> [0]' / 'sign <var> <+|->'")
            sp.add_argument("--shock", type=int, default=0,
                            help="target shock index for sign-set bounds")
        _add_io_flags(sp)

    sp = sub.add_parser("connect", help="generalized-FEVD connectedness")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--horizon", type=int, required=True)
    sp.add_argument("--no-intercept", action="store_true")
    _add_io_flags(sp)

    sp = sub.add_parser("lp", help="local projections")
    sp.add_argument("--horizon", type=int, required=True)
    sp.add_argument("--controls", type=int, required=True)
    sp.add_argument("--response", type=int, default=0)
    sp.add_argument("--impulse", type=int, default=0)
    sp.add_argument("--shock-file", default="")
    _add_io_flags(sp)

    sp = sub.add_parser("boot", help="moving block bootstrap for coefficients")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--bsize", type=int, required=True, help="number of replicates")
    sp.add_argument("--block", default="auto")
    sp.add_argument("--level", type=float, default=0.9)
    sp.add_argument("--no-intercept", action="store_true")
    sp.add_argument("--keep-draws", action="store_true")
    _add_io_flags(sp)

    sp = sub.add_parser("vecm", help="VAR in error-correction form")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--no-intercept", action="store_true")
    _add_io_flags(sp)

    sp = sub.add_parser("pt-decompose", help="permanent-transitory decomposition")
    sp.add_argument("--alpha-file", required=True)
    sp.add_argument("--beta-file", required=True)
    _add_io_flags(sp)

    sp = sub.add_parser("robust", help="trimmed and reweighted VAR estimation")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--alpha-trim", type=float, default=0.25)
    sp.add_argument("--delta", type=float, default=0.01)
    _add_io_flags(sp)

    sp = sub.add_parser("breaks", help="block-segmentation break detection")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--block", type=int, default=None)
    sp.add_argument("--a-n", type=int, default=None)
    sp.add_argument("--omega", type=float, default=None)
    sp.add_argument("--lambda1", type=float, default=None)
    sp.add_argument("--lambda-ratio", type=float, default=0.1)
    _add_io_flags(sp)

    sp = sub.add_parser("cusum", help="covariance-break CUSUM test")
    sp.add_argument("--variant", choices=("endpoint", "max-deviation"), default="endpoint")
    sp.add_argument("--v", default="")
    sp.add_argument("--w", default="")
    _add_io_flags(sp)

    sp = sub.add_parser("simulate", help="write a synthetic dataset and its true parameters")
    sp.add_argument("--dgp", choices=("var", "arch", "break", "proxy"), required=True)
    sp.add_argument("--t", type=int, required=True)
    sp.add_argument("--coeffs", default="", help="lag matrices: rows ';', cells ',', lags '|'")
    sp.add_argument("--coeffs-post", default="")
    sp.add_argument("--sigma", default="",
                    help="noise scale: scalar sd or a matrix factor S with u = S @ eps")
    sp.add_argument("--impact", default="")
    sp.add_argument("--break-at", type=int, default=0)
    sp.add_argument("--shock-index", type=int, default=0)
    sp.add_argument("--allow-unstable", action="store_true")
    sp.add_argument("--out", default="data.csv")
    _add_io_flags(sp, needs_input=False)

    sp = sub.add_parser("critvals", help="re-simulate bridge critical values")
    sp.add_argument("--paths", type=int, default=100_000)
    sp.add_argument("--grid", type=int, default=1000)
    sp.add_argument("--out", default="bridge_quantiles.csv")
    _add_io_flags(sp, needs_input=False)

    return parser


def _coerce_config_value(raw: str, current):
    """Parse an INI value using the flag's current type, or infer int/float/bool."""
    if isinstance(current, bool) or raw.lower() in ("true", "false"):
        return raw.lower() == "true"
    if isinstance(current, int) and not isinstance(current, bool):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if current is None:
        for cast in (int, float):
            try:
                return cast(raw)
            except ValueError:
                pass
    return raw


def _apply_config(args, parser) -> None:
    """Fill unset flags from the command's INI section; unknown keys are usage errors."""
    if not args.config:
        return
    cp = configparser.ConfigParser()
    if not cp.read(args.config):
        parser.error(f"config file {args.config!r} not found")
    if not cp.has_section(args.command):
        return
    known = {k for k in vars(args)}
    for key, raw in cp.items(args.command):
        dest = key.replace("-", "_")
        if dest not in known:
            parser.error(f"unknown config key {key!r} for command {args.command!r}")
        current = getattr(args, dest)
        default = parser.get_default(dest) if hasattr(parser, "get_default") else None
        # flags given on the command line win; detect by comparing to defaults
        if current is None or current == default or current in ("", False):
            setattr(args, dest, _coerce_config_value(raw, current))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_config(args, parser)

    if args.command in STOCHASTIC_COMMANDS and args.seed is None:
        parser.error(f"--seed is required for the stochastic command {args.command!r}")
    if args.command == "irf" and getattr(args, "boot", 0) > 0 and args.seed is None:
        parser.error("--seed is required when irf runs with --boot > 0")
    if args.command == "select-lag" and args.robust and args.seed is None:
        parser.error("--seed is required with select-lag --robust")
    if hasattr(args, "input") and not args.input:
        parser.error(f"--input is required for command {args.command!r}")

    outdir = args.output_dir
    os.makedirs(outdir, exist_ok=True)
    config_echo = {
        k: v for k, v in sorted(vars(args).items()) if k not in ("command",) and v is not None
    }

    started = time.perf_counter()
    try:
        payload = _HANDLERS[args.command](args, outdir, config_echo)
    except SvarError as err:
        error_obj = {"error": type(err).__name__, "message": str(err), "command": args.command}
        sys.stderr.write(json.dumps(error_obj, sort_keys=True) + "\n")
        return 1
    except ValueError as err:
        # malformed flag values (matrix specs, weight lists) are usage errors
        parser.error(str(err))
    path = _write_envelope(outdir, args.command, config_echo, args.seed, payload)
    elapsed = time.perf_counter() - started
    # timing goes to stderr only: output files must be bit-identical across runs
    sys.stderr.write(f"{args.command}: wrote {path} in {elapsed:.3f}s\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
