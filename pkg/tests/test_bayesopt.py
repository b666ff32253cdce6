import math

import numpy as np
import pytest
from scipy.special import gamma as gamma_fn
from scipy.special import kv

from qaoa_cluster.bayesopt import (
    GpModel,
    Kernel,
    OptimizationAborted,
    OptimizerConfig,
    dense_grid_argmax,
    matern25,
    optimize,
    pairwise_distance,
    posterior,
    propose_next,
    ucb,
)


def bessel_matern(r, nu=2.5, length=1.0, var=1.0):
    """General Matern covariance through the modified Bessel function."""
    if r == 0:
        return var
    z = math.sqrt(2 * nu) * r / length
    return var * 2 ** (1 - nu) / gamma_fn(nu) * z**nu * kv(nu, z)


def textbook_posterior(x, y, xs, kern, noise, mean=0.0):
    def k(a, b):
        return np.array([[bessel_matern(np.linalg.norm(p - q), 2.5, kern.lengthscale, kern.variance) for q in b] for p in a])

    kinv = np.linalg.inv(k(x, x) + noise * np.eye(len(x)))
    ks = k(xs, x)
    mu = mean + ks @ kinv @ (y - mean)
    var = np.diag(k(xs, xs) - ks @ kinv @ ks.T)
    return mu, np.sqrt(np.clip(var, 0, None))


def test_matern_matches_bessel_form():
    for r in (0.0, 0.1, 1.0, 2.7):
        for length in (0.5, 1.0, 2.0):
            got = matern25([0.0], [r], Kernel(1.3, length))
            assert got == pytest.approx(bessel_matern(r, 2.5, length, 1.3), rel=1e-12)


def test_matern_spot_value():
    assert matern25([0.0, 0.0], [1.0, 0.0]) == pytest.approx(0.52399, abs=5e-6)


def test_wrapped_distance_is_periodic():
    a = np.array([[0.1, 0.2]])
    b = a + 2 * np.pi
    assert pairwise_distance(a, b, wrapped=True)[0, 0] == pytest.approx(0.0, abs=1e-12)
    assert pairwise_distance(a, b)[0, 0] > 8


def test_posterior_matches_textbook(rng):
    kern = Kernel(0.8, 1.4)
    for _ in range(5):
        x = rng.uniform(0, 2 * np.pi, (5, 2))
        y = rng.normal(size=5)
        m = GpModel(2, kern, noise=0.05, prior_mean=0.3)
        for p, v in zip(x, y):
            m.add(p, v)
        xs = rng.uniform(0, 2 * np.pi, (7, 2))
        mu, sd = m.predict(xs)
        mu_ref, sd_ref = textbook_posterior(x, y, xs, kern, 0.05, 0.3)
        assert np.allclose(mu, mu_ref, atol=1e-9)
        assert np.allclose(sd, sd_ref, atol=1e-9)


def test_noiseless_interpolation(rng):
    x = rng.uniform(0, 2 * np.pi, (6, 2))
    y = np.sin(x[:, 0]) + np.cos(x[:, 1])
    m = GpModel(2, noise=0.0)
    for p, v in zip(x, y):
        m.add(p, v)
    mu, sd = m.predict(x)
    assert np.allclose(mu, y, atol=1e-8)
    assert np.all(sd < 1e-4)


def test_variance_never_grows_when_conditioning(rng):
    probe = rng.uniform(0, 2 * np.pi, (50, 2))
    m = GpModel(2, noise=0.01)
    prev = m.predict(probe)[1]
    for _ in range(10):
        m.add(rng.uniform(0, 2 * np.pi, 2), rng.normal())
        sd = m.predict(probe)[1]
        assert np.all(sd <= prev + 1e-12)
        prev = sd


def test_prior_before_data():
    m = GpModel(2, Kernel(4.0, 1.0), prior_mean=1.5)
    assert posterior(m, [1.0, 1.0]) == pytest.approx((1.5, 2.0))
    assert ucb(m, [1.0, 1.0], OptimizerConfig(kappa=2.0)) == pytest.approx(5.5)


def test_duplicate_points_without_noise_fall_back_to_jitter(caplog):
    m = GpModel(1, noise=0.0)
    for v in (0.5, 0.5, 0.7):
        m.add([1.0], v)
    mu, sd = m.predict([[1.0]])
    assert np.isfinite(mu[0]) and 0.5 <= mu[0] <= 0.7
    assert "jitter" in caplog.text


def test_propose_stays_in_domain_and_is_seeded():
    m = GpModel(2)
    m.add([1.0, 1.0], 1.0)
    cfg = OptimizerConfig()
    a = propose_next(m, cfg, 3)
    assert np.array_equal(a, propose_next(m, cfg, 3))
    assert np.all((a >= 0) & (a < 2 * np.pi))


def test_optimize_finds_peak_of_smooth_function():
    peak = np.array([2.0, 4.0])

    def f(theta):
        return math.exp(-np.sum((theta - peak) ** 2))

    trace = optimize(f, 40, OptimizerConfig(lengthscale=0.8), seed=1)
    assert trace.best_value > 0.95
    assert trace.historic_best == sorted(trace.historic_best)
    best, value = dense_grid_argmax(lambda g: np.exp(-np.sum((g - peak) ** 2, axis=1)), 2, 100)
    assert value == pytest.approx(1.0, abs=1e-2)


def test_optimize_early_stop_and_abort():
    trace = optimize(lambda t: 1.0, 10, OptimizerConfig(), seed=0, target=1.0)
    assert len(trace) == 1 and trace.reached_target
    calls = []

    def flaky(theta):
        calls.append(1)
        if len(calls) == 3:
            raise RuntimeError("backend down")
        return 0.0

    with pytest.raises(OptimizationAborted) as info:
        optimize(flaky, 10, OptimizerConfig(), seed=0)
    assert len(info.value.trace) == 2


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(lengthscale=0)
    with pytest.raises(ValueError):
        OptimizerConfig(noise=-1)
