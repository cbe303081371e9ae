import numpy as np
import pytest

from evomarket.errors import DegenerateInputError, InsufficientDataError, ParameterError
from evomarket.noise import (CORRELATED, WHITE, NoiseSpec, autocorrelation, block_means,
                             derive_seed, estimate_autocorr_exponent, generate, generate_correlated,
                             generate_white)


def white(D=0.5, n=10**6, seed=7, dt=1.0):
    return generate_white(NoiseSpec(WHITE, D, seed=seed, length=n, dt=dt))


def corr(nu, n=2**20, seed=0):
    return generate_correlated(NoiseSpec(CORRELATED, 1.0, nu, seed=seed, length=n))


def test_white_moments():
    x = white()
    n = x.size
    assert abs(x.mean()) < 4 * x.std() / np.sqrt(n)
    assert abs(x.var() / 1.0 - 1.0) < 0.01  # 2 D dt with D = 0.5, dt = 1
    assert abs(autocorrelation(x, 1)[1]) < 4 / np.sqrt(n)


def test_white_variance_scales_with_dt():
    x = white(D=0.01, dt=0.1, n=400_000)
    assert abs(x.var() / (2 * 0.01 * 0.1) - 1.0) < 0.01


def test_empty_length():
    assert generate_white(NoiseSpec(WHITE, 1.0, length=0)).size == 0
    assert generate_correlated(NoiseSpec(CORRELATED, 1.0, 0.5, length=0)).size == 0


def test_seed_determinism():
    assert np.array_equal(white(seed=3, n=1000), white(seed=3, n=1000))
    assert not np.array_equal(white(seed=3, n=1000), white(seed=4, n=1000))
    assert np.array_equal(corr(0.4, n=4096, seed=9), corr(0.4, n=4096, seed=9))


def test_spec_validation():
    with pytest.raises(ParameterError):
        NoiseSpec(CORRELATED, 1.0, 1.2)
    with pytest.raises(ParameterError):
        NoiseSpec(CORRELATED, 1.0, 0.0)
    with pytest.raises(ParameterError):
        NoiseSpec(WHITE, 0.0)
    with pytest.raises(ParameterError):
        NoiseSpec("pink", 1.0)


def test_correlated_variance_normalised():
    spec = NoiseSpec(CORRELATED, 0.3, 0.4, seed=1, length=2**16, dt=0.5)
    x = generate(spec)
    assert x.var() == pytest.approx(2 * 0.3 * 0.5, rel=1e-10)


def test_near_white_limit():
    x = corr(0.99, n=2**18)
    assert autocorrelation(x, 10)[10] < 0.05


def test_white_input_has_no_power_law():
    fit = estimate_autocorr_exponent(white(n=2**20, seed=11))
    assert not fit.power_law
    assert np.isnan(fit.exponent)


def test_raw_loglog_slope_nu_04():
    # plain log-log regression of the sample ACF over lags 10..1000, averaged
    # over seeds; single-seed slopes scatter by about 0.035
    lags = np.unique(np.round(np.geomspace(10, 1000, 30)).astype(int))
    slopes = []
    for seed in range(10):
        c = autocorrelation(corr(0.4, seed=seed), 1000)[lags]
        slopes.append(-np.polyfit(np.log(lags), np.log(c), 1)[0])
    assert abs(np.mean(slopes) - 0.4) < 0.05


@pytest.mark.parametrize("nu,tol", [(0.4, 0.05), (0.8, 0.08)])
def test_estimator_round_trip(nu, tol):
    fit = estimate_autocorr_exponent(corr(nu, seed=2))
    assert fit.power_law
    assert abs(fit.exponent - nu) < tol
    assert np.isfinite(fit.stderr) and fit.stderr > 0


def test_estimator_input_checks():
    with pytest.raises(InsufficientDataError):
        estimate_autocorr_exponent(np.random.default_rng(0).standard_normal(1000))
    with pytest.raises(DegenerateInputError):
        estimate_autocorr_exponent(np.ones(2**14))


@pytest.mark.slow
@pytest.mark.parametrize("nu,n", [(0.2, 2**20), (0.4, 2**20), (0.6, 2**20), (0.8, 2**22)])
def test_ci_coverage(nu, n):
    hits = 0
    for seed in range(20):
        fit = estimate_autocorr_exponent(corr(nu, n=n, seed=seed))
        lo, hi = fit.ci
        hits += bool(fit.power_law and lo <= nu <= hi)
    assert hits >= 18


def test_block_means_and_seeds():
    assert np.array_equal(block_means(np.arange(7.0), 3), [1.0, 4.0])
    a, b = derive_seed(5, 1), derive_seed(5, 2)
    assert a != b and a == derive_seed(5, 1)
    assert 0 <= a < 2**64
