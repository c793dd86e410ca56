import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svarkit.datamodel import TimeSeriesDataset
from svarkit.errors import (
    NegativeDf,
    NotPositiveDefinite,
    TooManyRestrictions,
    WeakInstrument,
)
from svarkit.ident import (
    SignRestrictionSet,
    identify_longrun,
    identify_proxy,
    identify_recursive,
    j_test,
    sign_restriction_bounds,
    vech,
)
from svarkit.simulate import replicate_rng, simulate_proxy_svar, simulate_var
from svarkit.var import VarModel, fit_var, ma_coefficients

from conftest import random_spd, random_stable_coeffs


def model_with_sigma(sigma, coeffs=None, n=500, seed=0):
    d = sigma.shape[0]
    coeffs = coeffs if coeffs is not None else [np.zeros((d, d))]
    rng = np.random.default_rng(seed)
    try:
        resid = rng.standard_normal((n, d)) @ np.linalg.cholesky(sigma).T
    except np.linalg.LinAlgError:
        resid = rng.standard_normal((n, d))
    return VarModel(
        p=len(coeffs),
        intercept=None,
        coeffs=tuple(np.asarray(a, dtype=float) for a in coeffs),
        residuals=resid,
        sigma_u=np.asarray(sigma, dtype=float),
        nobs_effective=n,
        regressor_moment=np.eye(d * len(coeffs)),
    )


class TestRecursive:
    def test_identity_covariance(self):
        sm = identify_recursive(model_with_sigma(np.eye(3)))
        assert np.array_equal(sm.impact, np.eye(3))

    def test_hand_cholesky(self):
        sigma = np.array([[1.0, 0.5], [0.5, 1.0]])
        sm = identify_recursive(model_with_sigma(sigma))
        expected = np.array([[1.0, 0.0], [0.5, np.sqrt(0.75)]])
        assert np.allclose(sm.impact, expected, atol=1e-6)

    @given(st.integers(1, 6), st.integers(0, 10_000))
    @settings(max_examples=40)
    def test_reconstruction_random_spd(self, d, seed):
        sigma = random_spd(np.random.default_rng(seed), d)
        sm = identify_recursive(model_with_sigma(sigma))
        assert np.abs(sm.impact @ sm.impact.T - sigma).max() < 1e-12 * max(1, np.abs(sigma).max())

    def test_permutation_maps_back(self, rng):
        sigma = random_spd(rng, 3)
        sm = identify_recursive(model_with_sigma(sigma), order=[2, 0, 1])
        assert np.allclose(sm.impact @ sm.impact.T, sigma, atol=1e-12)
        # shock 0 is variable 2's own shock: variables before it in the
        # ordering (none) respond at impact; rows 0 and 1 see zero weight
        # only in the permuted frame
        perm = [2, 0, 1]
        lower = sm.impact[np.ix_(perm, range(3))]
        assert np.allclose(np.triu(lower, 1), 0.0, atol=1e-12)

    def test_not_positive_definite(self):
        sigma = np.array([[1.0, 1.0], [1.0, 1.0]])
        with pytest.raises(NotPositiveDefinite):
            identify_recursive(model_with_sigma(np.eye(2) * 0 + sigma))


class TestLongRun:
    def test_zero_coefficients_match_recursive(self, rng):
        sigma = random_spd(rng, 3)
        m = model_with_sigma(sigma)
        assert np.allclose(
            identify_longrun(m).impact, identify_recursive(m).impact, atol=1e-12
        )

    @given(st.integers(1, 4), st.integers(0, 10_000))
    @settings(max_examples=30)
    def test_reconstruction(self, d, seed):
        rng = np.random.default_rng(seed)
        sigma = random_spd(rng, d)
        coeffs = random_stable_coeffs(rng, d, 1)
        sm = identify_longrun(model_with_sigma(sigma, coeffs))
        err = np.linalg.norm(sm.impact @ sm.impact.T - sigma) / np.linalg.norm(sigma)
        assert err < 1e-10

    def test_longrun_matrix_lower_triangular(self, rng):
        sigma = random_spd(rng, 3)
        coeffs = random_stable_coeffs(rng, 3, 2)
        sm = identify_longrun(model_with_sigma(sigma, coeffs))
        theta1 = sm.meta["longrun_matrix"]
        assert np.allclose(np.triu(theta1, 1), 0.0, atol=1e-12)

    def test_blanchard_quah_style_recovery(self):
        # simulate from a known lower-triangular long-run structure and
        # check the recovered long-run matrix against the truth
        a1 = np.array([[0.4, 0.1], [0.0, 0.3]])
        d = 2
        theta1_true = np.array([[1.0, 0.0], [0.4, 0.8]])
        a_one = np.eye(d) - a1
        impact_true = a_one @ theta1_true
        sigma_true = impact_true @ impact_true.T
        errs = []
        for r in range(100):
            ds = simulate_var(
                [a1], 20_000, rng=replicate_rng(99, r), noise_scale=np.linalg.cholesky(sigma_true)
            )
            sm = identify_longrun(fit_var(ds, 1))
            errs.append(np.abs(sm.meta["longrun_matrix"] - theta1_true).max())
        assert np.median(errs) < 0.1


class TestProxy:
    def test_true_shock_recovers_column(self):
        impact = np.array([[1.0, 0.0, 0.0], [0.5, 0.8, 0.0], [-0.3, 0.2, 0.9]])
        a1 = np.array([[0.4, 0.0, 0.0], [0.1, 0.3, 0.0], [0.0, 0.1, 0.2]])
        hits = 0
        reps = 100
        for r in range(reps):
            ds, z, _ = simulate_proxy_svar(
                impact, [a1], 20_000, replicate_rng(123, r), shock_index=0, instrument_noise=0.0
            )
            m = fit_var(ds, 1)
            sm = identify_proxy(m, z[m.p :], 0)
            hits += np.abs(sm.impact[:, 0] - impact[:, 0]).max() < 0.05
        assert hits / reps >= 0.95

    def test_scale_invariance(self, rng):
        impact = np.array([[1.0, 0.0], [0.5, 0.8]])
        ds, z, _ = simulate_proxy_svar(impact, [np.zeros((2, 2))], 2_000, rng)
        m = fit_var(ds, 1)
        z = z[m.p :]
        col1 = identify_proxy(m, z, 0).impact[:, 0]
        col2 = identify_proxy(m, 2.0 * z, 0).impact[:, 0]
        assert np.allclose(col1, col2, atol=1e-12)

    def test_sign_flip_flips_column(self, rng):
        impact = np.array([[1.0, 0.0], [0.5, 0.8]])
        ds, z, _ = simulate_proxy_svar(impact, [np.zeros((2, 2))], 2_000, rng)
        m = fit_var(ds, 1)
        z = z[m.p :]
        col = identify_proxy(m, z, 0).impact[:, 0]
        flipped = identify_proxy(m, -z, 0).impact[:, 0]
        assert np.allclose(flipped, -col, atol=1e-12)

    def test_weak_instrument_raises(self, rng):
        impact = np.array([[1.0, 0.0], [0.5, 0.8]])
        ds, _, _ = simulate_proxy_svar(impact, [np.zeros((2, 2))], 1_000, rng)
        noise = rng.standard_normal(ds.nobs - 1)
        with pytest.raises(WeakInstrument):
            identify_proxy(fit_var(ds, 1), noise, 0)

    def test_weak_instrument_override_warns(self, rng):
        impact = np.array([[1.0, 0.0], [0.5, 0.8]])
        ds, _, _ = simulate_proxy_svar(impact, [np.zeros((2, 2))], 1_000, rng)
        noise = rng.standard_normal(ds.nobs - 1)
        with pytest.warns(UserWarning):
            sm = identify_proxy(fit_var(ds, 1), noise, 0, allow_weak=True)
        assert sm.scheme == "proxy-column"


class TestJTest:
    def test_exactly_identified_cholesky(self, rng):
        sigma = random_spd(rng, 3)
        m = model_with_sigma(sigma, seed=5)
        candidate = np.linalg.cholesky(m.sigma_u)
        res = j_test(m, candidate, n_restrictions=3)
        assert res.df == 0
        assert res.statistic < 1e-10
        assert res.p_value == 1.0

    def test_negative_df(self, rng):
        m = model_with_sigma(random_spd(rng, 3))
        with pytest.raises(NegativeDf):
            j_test(m, np.eye(3), n_restrictions=2)

    def test_size_with_one_true_overidentifying_restriction(self):
        # impact with an extra true zero: strictly lower triangular with
        # impact[2, 0] = 0 as well; candidate built from the truth
        impact = np.array([[1.0, 0.0, 0.0], [0.5, 0.8, 0.0], [0.0, 0.2, 0.9]])
        rejections = 0
        reps = 500
        for r in range(reps):
            rng = replicate_rng(777, r)
            shocks = rng.standard_normal((2_000, 3))
            resid = shocks @ impact.T
            m = VarModel(
                p=1,
                intercept=None,
                coeffs=(np.zeros((3, 3)),),
                residuals=resid,
                sigma_u=resid.T @ resid / resid.shape[0],
                nobs_effective=resid.shape[0],
                regressor_moment=np.eye(3),
            )
            # candidate: re-estimate the constrained factor from sigma_hat by a
            # Cholesky and zeroing the restricted cell keeps the null true
            cand = np.linalg.cholesky(m.sigma_u)
            cand[2, 0] = 0.0
            res = j_test(m, cand, n_restrictions=4)
            assert res.df == 1
            rejections += res.p_value < 0.05
        assert 0.02 <= rejections / reps <= 0.10

    def test_power_with_false_restriction(self):
        impact = np.array([[1.0, 0.0, 0.0], [0.5, 0.8, 0.0], [0.5, 0.2, 0.9]])
        rejections = 0
        reps = 100
        for r in range(reps):
            rng = replicate_rng(778, r)
            shocks = rng.standard_normal((2_000, 3))
            resid = shocks @ impact.T
            m = VarModel(
                p=1,
                intercept=None,
                coeffs=(np.zeros((3, 3)),),
                residuals=resid,
                sigma_u=resid.T @ resid / resid.shape[0],
                nobs_effective=resid.shape[0],
                regressor_moment=np.eye(3),
            )
            cand = np.linalg.cholesky(m.sigma_u)
            cand[2, 0] = 0.0  # false restriction: the truth is 0.5
            res = j_test(m, cand, n_restrictions=4)
            rejections += res.p_value < 0.05
        assert rejections / reps >= 0.9


def grid_search_bound(m, restr, horizon, response, n_grid=1_000_000):
    """Brute-force ellipsoid scan for a bivariate model (oracle)."""
    sigma = m.sigma_u
    chol = np.linalg.cholesky(sigma)
    angles = np.linspace(0.0, 2.0 * np.pi, n_grid, endpoint=False)
    b = chol @ np.vstack([np.cos(angles), np.sin(angles)])
    feasible = np.ones(n_grid, dtype=bool)
    if restr.equality.size:
        feasible &= np.all(np.abs(restr.equality.T @ b) < 1e-3, axis=0)
    if restr.sign.size:
        feasible &= np.all(restr.sign.T @ b >= -1e-12, axis=0)
    c = ma_coefficients(m, horizon)[horizon][response]
    values = c @ b
    values = values[feasible]
    return values.min(), values.max()


class TestSignRestrictionBounds:
    def test_no_restrictions_closed_form(self, rng):
        sigma = random_spd(rng, 3)
        coeffs = random_stable_coeffs(rng, 3, 1)
        m = model_with_sigma(sigma, coeffs)
        res = sign_restriction_bounds(m, SignRestrictionSet.empty(3), horizon=3, response=1)
        phi = ma_coefficients(m, 3)[3]
        oracle = np.sqrt(phi[1] @ sigma @ phi[1])
        assert res.upper == pytest.approx(oracle, rel=1e-10)
        assert res.lower == pytest.approx(-oracle, rel=1e-10)
        assert res.ci_lower <= res.lower and res.ci_upper >= res.upper

    def test_point_identification_with_equalities_and_sign(self, rng):
        sigma = random_spd(rng, 2)
        m = model_with_sigma(sigma)
        # one equality pins the direction (d-1 = 1), one sign pins the sign
        restr = SignRestrictionSet(
            equality=np.array([[1.0], [0.0]]), sign=np.array([[0.0], [1.0]])
        )
        res = sign_restriction_bounds(m, restr, horizon=0, response=1)
        assert res.upper == pytest.approx(res.lower, abs=1e-10)

    def test_one_sign_restriction_matches_grid(self, rng):
        for trial in range(5):
            sigma = random_spd(rng, 2)
            coeffs = random_stable_coeffs(rng, 2, 1)
            m = model_with_sigma(sigma, coeffs)
            restr = SignRestrictionSet(
                equality=np.zeros((2, 0)), sign=rng.standard_normal((2, 1))
            )
            res = sign_restriction_bounds(m, restr, horizon=1, response=0)
            lo, hi = grid_search_bound(m, restr, 1, 0)
            assert res.upper == pytest.approx(hi, abs=1e-3)
            assert res.lower == pytest.approx(lo, abs=1e-3)

    def test_adding_restrictions_never_widens(self, rng):
        sigma = random_spd(rng, 3)
        m = model_with_sigma(sigma, random_stable_coeffs(rng, 3, 1))
        s1 = rng.standard_normal((3, 1))
        s2 = np.hstack([s1, rng.standard_normal((3, 1))])
        r1 = SignRestrictionSet(np.zeros((3, 0)), s1)
        r2 = SignRestrictionSet(np.zeros((3, 0)), s2)
        b1 = sign_restriction_bounds(m, r1, horizon=2, response=0)
        b2 = sign_restriction_bounds(m, r2, horizon=2, response=0)
        assert b2.upper <= b1.upper + 1e-10
        assert b2.lower >= b1.lower - 1e-10

    def test_scaling_sign_columns_is_irrelevant(self, rng):
        sigma = random_spd(rng, 2)
        m = model_with_sigma(sigma)
        s = rng.standard_normal((2, 1))
        r1 = SignRestrictionSet(np.zeros((2, 0)), s)
        r2 = SignRestrictionSet(np.zeros((2, 0)), 7.5 * s)
        b1 = sign_restriction_bounds(m, r1, horizon=0, response=0)
        b2 = sign_restriction_bounds(m, r2, horizon=0, response=0)
        assert b1.upper == pytest.approx(b2.upper, rel=1e-12)
        assert b1.lower == pytest.approx(b2.lower, rel=1e-12)

    def test_too_many_restrictions(self, rng):
        m = model_with_sigma(random_spd(rng, 2))
        restr = SignRestrictionSet(np.zeros((2, 0)), rng.standard_normal((2, 21)))
        with pytest.raises(TooManyRestrictions):
            sign_restriction_bounds(m, restr, horizon=0, response=0)


class TestVech:
    def test_round_trip_order(self):
        a = np.array([[1.0, 2.0], [2.0, 3.0]])
        assert np.array_equal(vech(a), [1.0, 2.0, 3.0])
