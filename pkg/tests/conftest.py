"""Shared fixtures and hypothesis profiles."""

import os
from datetime import timedelta

import numpy as np
import pytest
from hypothesis import HealthCheck, Verbosity, settings

settings.register_profile(
    "ci", deadline=timedelta(milliseconds=4000), suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("dev", max_examples=20)
settings.register_profile("debug", max_examples=10, verbosity=Verbosity.verbose)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "ci"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_stable_coeffs(rng, d, p, rho_target=0.7):
    """Random VAR coefficient matrices rescaled to a target spectral radius."""
    coeffs = [rng.normal(0, 0.5 / (j + 1), size=(d, d)) for j in range(p)]
    comp = np.zeros((d * p, d * p))
    comp[:d, :] = np.hstack(coeffs)
    if p > 1:
        comp[d:, : d * (p - 1)] = np.eye(d * (p - 1))
    rho = max(np.abs(np.linalg.eigvals(comp)).max(), 1e-6)
    scale = rho_target / rho
    return [a * scale ** (j + 1) for j, a in enumerate(coeffs)]


def random_spd(rng, d):
    """Random symmetric positive-definite matrix with controlled conditioning."""
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    eig = rng.uniform(0.3, 3.0, size=d)
    return q @ np.diag(eig) @ q.T
