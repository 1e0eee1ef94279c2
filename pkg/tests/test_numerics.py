import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ferlab.errors import NumericError, ShapeError
from ferlab.numerics import (
    EPS_NUM,
    cross_entropy,
    entropy,
    finite_diff_check,
    kl_divergence,
    log_softmax_temp,
    softmax_temp,
)

logit_vectors = arrays(
    np.float64,
    st.integers(2, 8),
    elements=st.floats(-50, 50, allow_nan=False, allow_infinity=False),
)
taus = st.sampled_from([0.1, 1.0, 5.0, 10.0])


def test_softmax_examples():
    np.testing.assert_allclose(softmax_temp([0.0, 0.0], 5.0), [0.5, 0.5], atol=1e-15)
    np.testing.assert_allclose(softmax_temp([math.log(2), 0.0], 1.0), [2 / 3, 1 / 3], atol=1e-15)
    np.testing.assert_allclose(softmax_temp([10.0, -10.0], 1e6), [0.5, 0.5], atol=1e-5)


@pytest.mark.parametrize("tau", [0.0, -1.0])
def test_softmax_rejects_bad_temperature(tau):
    with pytest.raises(ValueError):
        softmax_temp([1.0, 2.0], tau)


def test_softmax_rejects_nonfinite():
    with pytest.raises(ValueError):
        softmax_temp([1.0, np.inf], 1.0)
    with pytest.raises(ValueError):
        log_softmax_temp([np.nan, 0.0], 1.0)


def test_log_softmax_examples():
    np.testing.assert_allclose(log_softmax_temp([0.0, 0.0]), [-math.log(2)] * 2, atol=1e-15)
    np.testing.assert_allclose(
        log_softmax_temp([math.log(2), 0.0]), [math.log(2 / 3), math.log(1 / 3)], atol=1e-15
    )
    out = log_softmax_temp([1000.0, 0.0])
    assert np.all(np.isfinite(out))
    assert out[0] == pytest.approx(0.0, abs=1e-12)
    assert out[1] == pytest.approx(-1000.0)


def test_cross_entropy_examples():
    assert cross_entropy([0.0, 1.0, 0.0], 1) == 0.0
    assert cross_entropy([0.5, 0.5], 0) == pytest.approx(0.693147, abs=1e-6)
    assert cross_entropy([2 / 3, 1 / 3], 1) == pytest.approx(1.098612, abs=1e-6)
    # floor keeps the log finite
    assert cross_entropy([1.0, 0.0], 1) == pytest.approx(-math.log(EPS_NUM))


def test_cross_entropy_index_errors():
    with pytest.raises(IndexError):
        cross_entropy([0.5, 0.5], 2)
    with pytest.raises(IndexError):
        cross_entropy([0.5, 0.5], -1)


def test_cross_entropy_batch():
    p = np.array([[0.5, 0.5], [0.25, 0.75]])
    np.testing.assert_allclose(cross_entropy(p, np.array([0, 1])), [math.log(2), -math.log(0.75)])


def test_kl_examples():
    p = np.array([0.1, 0.2, 0.7])
    assert kl_divergence(p, p) == 0.0
    assert kl_divergence([0.75, 0.25], [0.5, 0.5]) == pytest.approx(0.130812, abs=1e-5)
    assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-15)


def test_kl_shape_mismatch():
    with pytest.raises(ShapeError):
        kl_divergence([0.5, 0.5], [0.2, 0.3, 0.5])


def test_entropy_examples():
    assert entropy([0.0, 1.0, 0.0]) == 0.0
    assert entropy([0.25] * 4) == pytest.approx(1.386294, abs=1e-6)
    assert entropy([0.75, 0.25]) == pytest.approx(0.562335, abs=1e-5)


def test_finite_diff_check_examples():
    err = finite_diff_check(lambda x: float(x[0] ** 2), np.array([6.0]), np.array([3.0]), 1e-5)
    assert err < 1e-8

    rng = np.random.default_rng(3)
    z = rng.normal(size=5)
    fn = lambda x: cross_entropy(softmax_temp(x), 2)
    grad = softmax_temp(z)
    grad[2] -= 1.0
    assert finite_diff_check(fn, grad, z, 1e-5) < 1e-5
    # injected 1% fault is detected at the 1e-2 level
    bad = finite_diff_check(fn, 1.01 * grad, z, 1e-5)
    assert 1e-3 < bad < 2e-2


def test_finite_diff_check_nonfinite():
    with pytest.raises(NumericError):
        finite_diff_check(lambda x: float("nan"), np.zeros(2), np.zeros(2))


@settings(max_examples=200, deadline=None)
@given(logit_vectors, taus)
def test_softmax_is_distribution(z, tau):
    p = softmax_temp(z, tau)
    assert abs(p.sum() - 1.0) < 1e-9
    assert np.all(p >= 0)


@settings(max_examples=200, deadline=None)
@given(logit_vectors, taus)
def test_softmax_temperature_is_rescaling(z, tau):
    np.testing.assert_allclose(softmax_temp(z, tau), softmax_temp(z / tau, 1.0), rtol=0, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(logit_vectors, taus, st.floats(-100, 100))
def test_softmax_shift_invariance(z, tau, c):
    np.testing.assert_allclose(softmax_temp(z + c, tau), softmax_temp(z, tau), rtol=0, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.integers(2, 8), elements=st.floats(-10, 10)), taus)
def test_exp_log_softmax_matches_softmax(z, tau):
    np.testing.assert_allclose(np.exp(log_softmax_temp(z, tau)), softmax_temp(z, tau), rtol=0, atol=1e-12)


distributions = arrays(np.float64, st.integers(2, 6), elements=st.floats(0, 1)).filter(
    lambda a: a.sum() > 1e-3
).map(lambda a: a / a.sum())


@settings(max_examples=300, deadline=None)
@given(distributions, st.data())
def test_gibbs_inequality(p, data):
    q = data.draw(arrays(np.float64, p.shape, elements=st.floats(1e-6, 1)).map(lambda a: a / a.sum()))
    kl = kl_divergence(p, q)
    assert kl >= -1e-12
    if np.allclose(p, q, atol=1e-12):
        assert kl < 1e-9


@settings(max_examples=100, deadline=None)
@given(distributions)
def test_kl_zero_iff_equal(p):
    assert abs(kl_divergence(p, p)) < 1e-12


def _ce_softmax_grad(z, y, tau):
    # d/dz of -log softmax(z / tau)[y]
    g = softmax_temp(z, tau)
    g[y] -= 1.0
    return g / tau


def _kl_softmax_grad(t, z, tau):
    return (softmax_temp(z, tau) - t) / tau


def test_composite_gradients_at_random_points():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(100):
        K = int(rng.integers(2, 7))
        z = rng.uniform(-5, 5, size=K)
        y = int(rng.integers(K))
        tau = float(rng.choice([0.5, 1.0, 5.0, 10.0]))
        t = rng.dirichlet(np.ones(K))
        worst = max(
            worst,
            finite_diff_check(lambda x: cross_entropy(softmax_temp(x, tau), y), _ce_softmax_grad(z, y, tau), z),
            finite_diff_check(lambda x: kl_divergence(t, softmax_temp(x, tau)), _kl_softmax_grad(t, z, tau), z),
        )
    assert worst <= 1e-5
