import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svarkit._chainprox import chain_prox
from svarkit.breaks import (
    bartlett_lrv,
    bss_detect,
    cusum_covariance_test,
    detect_breaks,
    lic_screen,
    load_bridge_table,
    simulate_bridge_quantiles,
)
from svarkit.datamodel import TimeSeriesDataset
from svarkit.errors import DegenerateSeries, InsufficientData, ShapeError
from svarkit.simulate import replicate_rng, simulate_break_var, simulate_var


class TestChainProx:
    """The DP must agree with a convex solver; cvxpy is the oracle."""

    @staticmethod
    def objective(x, z, a, b):
        tv = abs(x[0]) + np.sum(np.abs(np.diff(x))) if len(x) > 1 else abs(x[0])
        return 0.5 * np.sum((np.asarray(x) - z) ** 2) + a * tv + b * np.sum(np.abs(x))

    @given(
        st.integers(1, 18),
        st.integers(0, 10_000),
        st.sampled_from([0.0, 0.1, 0.7, 2.5]),
        st.sampled_from([0.0, 0.05, 0.4, 1.5]),
    )
    @settings(max_examples=60, deadline=None)
    def test_matches_cvxpy_objective(self, k, seed, a, b):
        cp = pytest.importorskip("cvxpy")
        rng = np.random.default_rng(seed)
        z = rng.normal(0, 2.5, size=k)
        if seed % 3 == 0:
            z = np.round(z)  # exercise exact ties
        x = cp.Variable(k)
        expr = 0.5 * cp.sum_squares(x - z) + a * cp.abs(x[0]) + b * cp.sum(cp.abs(x))
        if k > 1:
            expr = expr + a * cp.sum(cp.abs(cp.diff(x)))
        cp.Problem(cp.Minimize(expr)).solve(solver=cp.CLARABEL)
        ours = np.array(chain_prox(z, a, b))
        assert self.objective(ours, z, a, b) <= self.objective(x.value, z, a, b) + 1e-8

    def test_zero_penalties_identity(self):
        z = np.array([1.0, -2.0, 3.0])
        assert np.allclose(chain_prox(z, 0.0, 0.0), z)

    def test_pure_soft_threshold_when_uncoupled(self):
        z = np.array([2.0, -0.5, 1.5])
        out = chain_prox(z, 0.0, 1.0)
        assert np.allclose(out, [1.0, 0.0, 0.5])

    def test_huge_fusion_weight_flattens_to_zero(self):
        # anchored at zero: a huge TV weight pulls the whole chain to 0
        z = np.array([1.0, 2.0, 1.5])
        out = chain_prox(z, 100.0, 0.0)
        assert np.allclose(out, 0.0)


class TestCusum:
    def test_size_under_null(self):
        rejections = 0
        reps = 1000
        for r in range(reps):
            vals = replicate_rng(1000, r).standard_normal((500, 2))
            res = cusum_covariance_test(TimeSeriesDataset(vals, ("a", "b")))
            rejections += res.reject[0.95]
        assert 0.03 <= rejections / reps <= 0.08

    def test_power_variance_doubling(self):
        rejections = 0
        reps = 300
        for r in range(reps):
            vals = replicate_rng(2000, r).standard_normal((500, 2))
            vals[250:] *= np.sqrt(2.0)
            res = cusum_covariance_test(TimeSeriesDataset(vals, ("a", "b")))
            rejections += res.reject[0.95]
        assert rejections / reps >= 0.9

    def test_constant_zero_series_degenerate(self):
        vals = np.zeros((100, 2))
        with pytest.raises(DegenerateSeries):
            cusum_covariance_test(TimeSeriesDataset(vals + 1.0, ("a", "b")))

    def test_level_shift_invariance_after_demeaning(self, rng):
        vals = rng.standard_normal((200, 2))
        r1 = cusum_covariance_test(TimeSeriesDataset(vals, ("a", "b")))
        r2 = cusum_covariance_test(TimeSeriesDataset(vals + 100.0, ("a", "b")))
        assert r1.statistic == pytest.approx(r2.statistic, rel=1e-8)

    def test_max_deviation_variant_detects_midsample_burst(self, rng):
        vals = rng.standard_normal((400, 1))
        vals[150:250] *= 3.0
        res = cusum_covariance_test(TimeSeriesDataset(vals, ("a",)), variant="max-deviation")
        assert res.reject[0.95]
        lo, hi = res.max_location
        assert 100 <= lo <= 300 and 100 <= hi <= 300

    def test_small_sample_rejected(self, rng):
        with pytest.raises(InsufficientData):
            cusum_covariance_test(TimeSeriesDataset(rng.standard_normal((10, 1)), ("a",)))

    def test_weight_vector_validation(self, rng):
        ds = TimeSeriesDataset(rng.standard_normal((100, 2)), ("a", "b"))
        with pytest.raises(ShapeError):
            cusum_covariance_test(ds, v=np.zeros(2))
        with pytest.raises(ShapeError):
            cusum_covariance_test(ds, v=np.ones(3))

    def test_bridge_table_matches_closed_forms(self):
        # sup|bridge| is the Kolmogorov law; range is the Kuiper law.
        table = load_bridge_table()
        q95_sup = float(np.interp(0.95, table["probs"], table["sup_abs"]))
        q95_range = float(np.interp(0.95, table["probs"], table["range"]))
        # grid discretization biases the simulated sup down by ~0.6/sqrt(grid)
        assert abs(q95_sup - 1.3581) < 0.03
        assert abs(q95_range - 1.7473) < 0.05

    def test_regeneration_is_seeded(self):
        t1 = simulate_bridge_quantiles(n_paths=2_000, grid=200, seed=7)
        t2 = simulate_bridge_quantiles(n_paths=2_000, grid=200, seed=7)
        assert np.array_equal(t1["sup_abs"], t2["sup_abs"])


class TestBartlettLrv:
    def test_iid_matches_variance(self, rng):
        x = rng.standard_normal(20_000)
        assert bartlett_lrv(x) == pytest.approx(1.0, abs=0.08)


class TestBssDetect:
    def test_huge_penalty_kills_all_jumps(self, rng):
        ds = simulate_var([np.array([[0.5, 0.0], [0.1, 0.4]])], 400, rng=rng)
        res = bss_detect(ds, 1, block_length=40, lam1=1e6, lam2=1e6)
        assert res.candidates == ()

    def test_zero_penalty_reproduces_blockwise_ols(self, rng):
        ds = simulate_var([np.array([[0.5, 0.0], [0.1, 0.4]])], 300, rng=rng)
        res = bss_detect(ds, 1, block_length=60, lam1=0.0, lam2=0.0, tol=1e-14)
        from svarkit.var import _ols, lag_design

        y, x = lag_design(ds.values, 1, intercept=False)
        for i, s in enumerate(res.block_starts):
            e = min(s + 60, y.shape[0])
            beta, _ = _ols(x[s:e], y[s:e])
            assert np.abs(res.gamma[i] - beta).max() < 1e-6

    def test_detects_coefficient_flip(self):
        hits = 0
        reps = 20
        for r in range(reps):
            ds = simulate_break_var(
                [np.diag([0.6, 0.6])], [np.diag([-0.6, -0.6])], 1000, 2000,
                rng=replicate_rng(3100, r),
            )
            b_n = math.ceil(math.sqrt(2000))
            rep = detect_breaks(ds, 1, block_length=b_n)
            hits += any(abs(t - 1000) <= b_n for t in rep.final_breaks)
        assert hits / reps >= 0.85

    def test_no_break_false_positives_bounded(self):
        false = 0
        reps = 20
        for r in range(reps):
            ds = simulate_var([np.diag([0.6, 0.6])], 2000, rng=replicate_rng(3200, r))
            rep = detect_breaks(ds, 1)
            false += len(rep.final_breaks) > 0
        assert false / reps <= 0.10

    def test_objective_never_increases(self, rng, monkeypatch):
        # the solver asserts internally; run a moderately hard instance
        ds = simulate_break_var(
            [np.diag([0.5, 0.5])], [np.diag([-0.5, -0.5])], 300, 600, rng=rng
        )
        res = bss_detect(ds, 1, block_length=30, lam1=0.05, lam2=0.005)
        assert res.converged


class TestLicScreen:
    def test_empty_candidates(self, rng):
        ds = simulate_var([np.diag([0.5, 0.5])], 400, rng=rng)
        res = lic_screen(ds, (), 1, a_n=40, omega=10.0)
        assert res.final_breaks == ()
        assert len(res.segment_models) == 1

    def test_final_breaks_subset_of_candidates(self, rng):
        ds = simulate_break_var(
            [np.diag([0.6, 0.6])], [np.diag([-0.6, -0.6])], 500, 1000, rng=rng
        )
        cands = (300, 500, 700)
        res = lic_screen(ds, cands, 1, a_n=60, omega=8.0)
        assert set(res.final_breaks) <= set(cands)

    def test_adjacent_candidates_one_survives(self):
        # adjacent block boundaries on the sqrt-T grid straddle the true
        # break; the redundant one must be screened out
        hits = 0
        reps = 20
        for r in range(reps):
            ds = simulate_break_var(
                [np.diag([0.6, 0.6])], [np.diag([-0.6, -0.6])], 500, 1000,
                rng=replicate_rng(3300, r),
            )
            omega = 2 * 2 * 1 * math.log(999)
            res = lic_screen(ds, (496, 541), 1, a_n=45, omega=omega)
            hits += len(res.final_breaks) == 1
        assert hits / reps >= 0.90

    def test_spurious_removed_true_kept(self):
        hits = 0
        reps = 20
        for r in range(reps):
            ds = simulate_break_var(
                [np.diag([0.6, 0.6])], [np.diag([-0.6, -0.6])], 700, 1400,
                rng=replicate_rng(3400, r),
            )
            omega = 2 * 2 * 1 * math.log(1399)
            res = lic_screen(ds, (300, 700), 1, a_n=45, omega=omega)
            hits += (700 in res.final_breaks) and (300 not in res.final_breaks)
        assert hits / reps >= 0.85

    def test_segments_fitted_between_breaks(self, rng):
        ds = simulate_break_var(
            [np.diag([0.6, 0.6])], [np.diag([-0.6, -0.6])], 500, 1000, rng=rng
        )
        res = lic_screen(ds, (500,), 1, a_n=60, omega=1.0)
        if res.final_breaks == (500,):
            assert len(res.segment_models) == 2
            a_pre = res.segment_models[0].coeffs[0][0, 0]
            a_post = res.segment_models[1].coeffs[0][0, 0]
            assert a_pre > 0.3 and a_post < -0.3
