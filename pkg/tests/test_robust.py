import numpy as np
import pytest
from scipy import stats

from svarkit.datamodel import TimeSeriesDataset
from svarkit.errors import InsufficientData
from svarkit.robust import (
    MltsSearchConfig,
    consistency_factor,
    fit_mlts,
    reweight_rmlts,
    robust_order_select,
)
from svarkit.simulate import replicate_rng, simulate_var
from svarkit.var import fit_var

FAST = MltsSearchConfig(n_starts=120, n_finalists=5)


def contaminate(values, fraction, magnitude, rng):
    out = values.copy()
    n = out.shape[0]
    rows = rng.choice(n, size=int(fraction * n), replace=False)
    out[rows] += magnitude * values.std(axis=0) * rng.standard_normal((rows.size, out.shape[1]))
    return out, rows


class TestConsistencyFactor:
    def test_zero_trim_is_one(self):
        assert consistency_factor(0.0, 3) == 1.0

    def test_matches_definition(self):
        alpha, d = 0.25, 2
        q = stats.chi2.ppf(1 - alpha, d)
        expected = (1 - alpha) / stats.chi2.cdf(q, d + 2)
        assert consistency_factor(alpha, d) == pytest.approx(expected, rel=1e-12)
        assert expected > 1.0  # trimming shrinks the scatter; correction inflates


class TestFitMlts:
    def test_zero_trim_equals_ols_exactly(self, rng):
        ds = simulate_var([np.array([[0.5, 0.1], [0.0, 0.4]])], 400, rng=rng)
        m = fit_var(ds, 1)
        r = fit_mlts(ds, 1, alpha_trim=0.0)
        assert np.array_equal(r.coeffs[0], m.coeffs[0])
        assert np.array_equal(r.sigma_u, m.sigma_u)
        assert np.array_equal(r.intercept, m.intercept)
        assert r.subset == tuple(range(m.nobs_effective))

    def test_clean_data_close_to_ols(self):
        hits = 0
        reps = 60
        for r in range(reps):
            ds = simulate_var(
                [np.array([[0.5, 0.1], [0.0, 0.4]])], 1_000, rng=replicate_rng(91, r)
            )
            ols = fit_var(ds, 1)
            rob = fit_mlts(ds, 1, alpha_trim=0.25, cfg=FAST, seed=r)
            hits += np.abs(rob.coeffs[0] - ols.coeffs[0]).max() < 0.1
        assert hits / reps >= 0.95

    def test_outliers_hurt_ols_more(self):
        a = np.array([[0.5, 0.1], [0.0, 0.4]])
        ols_errs, rob_errs = [], []
        for r in range(40):
            rng = replicate_rng(92, r)
            ds = simulate_var([a], 1_000, rng=rng)
            vals, _ = contaminate(ds.values, 0.10, 10.0, rng)
            dirty = TimeSeriesDataset(vals, ds.names)
            ols_errs.append(np.abs(fit_var(dirty, 1).coeffs[0] - a).max())
            rob = reweight_rmlts(fit_mlts(dirty, 1, alpha_trim=0.25, cfg=FAST, seed=r))
            rob_errs.append(np.abs(rob.coeffs[0] - a).max())
        assert np.median(rob_errs) < np.median(ols_errs)

    def test_subset_size(self, rng):
        ds = simulate_var([np.array([[0.5]])], 200, rng=rng)
        r = fit_mlts(ds, 1, alpha_trim=0.25, cfg=FAST)
        assert r.h == int(np.ceil(0.75 * 199))
        assert len(r.subset) == r.h

    def test_insufficient_data(self, rng):
        ds = TimeSeriesDataset(rng.standard_normal((12, 2)), ("a", "b"))
        with pytest.raises(InsufficientData):
            fit_mlts(ds, 2, alpha_trim=0.5)

    def test_affine_equivariance_orthogonal_map(self, rng):
        # orthogonal maps preserve the elemental-start rankings, so the
        # same subset is selected and coefficients transform exactly
        ds = simulate_var([np.array([[0.5, 0.1], [0.0, 0.4]])], 500, rng=rng)
        theta = 0.7
        q = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        ds2 = TimeSeriesDataset(ds.values @ q.T, ds.names)
        r1 = fit_mlts(ds, 1, alpha_trim=0.25, cfg=FAST, seed=77)
        r2 = fit_mlts(ds2, 1, alpha_trim=0.25, cfg=FAST, seed=77)
        assert r1.subset == r2.subset
        assert np.allclose(r2.coeffs[0], q @ r1.coeffs[0] @ q.T, atol=1e-8)
        assert np.allclose(r2.sigma_u, q @ r1.sigma_u @ q.T, atol=1e-8)


class TestReweight:
    def test_clean_data_flags_about_delta(self):
        counts = []
        n = None
        for r in range(30):
            ds = simulate_var([np.array([[0.4]])], 1_000, rng=replicate_rng(93, r))
            rob = reweight_rmlts(fit_mlts(ds, 1, alpha_trim=0.25, cfg=FAST, seed=r), delta=0.01)
            counts.append(len(rob.flagged_outliers))
            n = rob.residuals.shape[0]
        expected = 0.01 * n
        assert abs(np.mean(counts) - expected) <= 3.0 * np.sqrt(0.01 * 0.99 * n / len(counts)) + 2.0

    def test_gross_outlier_always_flagged(self):
        hits = 0
        reps = 40
        for r in range(reps):
            rng = replicate_rng(94, r)
            ds = simulate_var([np.array([[0.5, 0.0], [0.2, 0.3]])], 500, rng=rng)
            vals = ds.values.copy()
            vals[250] += 50.0
            rob = reweight_rmlts(
                fit_mlts(TimeSeriesDataset(vals, ds.names), 1, alpha_trim=0.25, cfg=FAST, seed=r)
            )
            # row 250 of the data is row 249 of the effective sample
            hits += 249 in rob.flagged_outliers
        assert hits / reps >= 0.99

    def test_no_flags_means_full_sample_ols(self, rng):
        ds = simulate_var([np.array([[0.4]])], 300, rng=rng)
        rob = fit_mlts(ds, 1, alpha_trim=0.25, cfg=FAST, seed=1)
        relaxed = reweight_rmlts(rob, delta=1e-12)  # threshold so large nothing is flagged
        assert relaxed.flagged_outliers == ()
        ols = fit_var(ds, 1)
        assert np.allclose(relaxed.coeffs[0], ols.coeffs[0], atol=1e-12)


class TestRobustOrderSelect:
    def test_pmax_zero_trivial(self, rng):
        ds = simulate_var([np.array([[0.4]])], 300, rng=rng)
        sel = robust_order_select(ds, 0, cfg=FAST)
        assert sel.p_hat == 0

    def test_clean_ar2_agrees_with_classical(self):
        from svarkit.lagselect import ic_table

        robust_hits = 0
        classical_hits = 0
        reps = 30
        for r in range(reps):
            ds = simulate_var(
                [np.array([[0.9]]), np.array([[-0.18]])], 2_000, rng=replicate_rng(95, r)
            )
            robust_hits += robust_order_select(ds, 4, cfg=FAST, seed=r).p_hat == 2
            classical_hits += ic_table(ds, 4).p_bic == 2
        assert abs(robust_hits - classical_hits) / reps <= 0.10

    def test_contaminated_ar1_robust_beats_classical(self):
        from svarkit.lagselect import ic_table

        robust_hits = 0
        classical_hits = 0
        reps = 30
        for r in range(reps):
            rng = replicate_rng(96, r)
            ds = simulate_var([np.array([[0.6]])], 1_000, rng=rng)
            vals, _ = contaminate(ds.values, 0.10, 10.0, rng)
            dirty = TimeSeriesDataset(vals, ds.names)
            robust_hits += robust_order_select(dirty, 4, cfg=FAST, seed=r).p_hat == 1
            classical_hits += ic_table(dirty, 4).p_bic == 1
        assert robust_hits >= classical_hits
