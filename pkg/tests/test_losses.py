import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ferlab import gradcheck
from ferlab.errors import ConfigError, InvariantError, ScheduleError
from ferlab.losses import (
    LossSpec,
    alpha_beta,
    fer_batch,
    fer_loss,
    lsr_loss,
    lsr_target,
    maxent_loss,
    std_batch,
    std_loss,
)
from ferlab.numerics import finite_diff_check


def test_alpha_beta_schedule():
    assert alpha_beta(0, 100) == (1.0, 0.0)
    a, b = alpha_beta(100, 100)
    assert a == pytest.approx(0.1) and b == pytest.approx(0.9)
    a, b = alpha_beta(50, 100)
    assert a == pytest.approx(0.55) and b == pytest.approx(0.45)


def test_alpha_beta_errors():
    with pytest.raises(ScheduleError):
        alpha_beta(11, 10)
    with pytest.raises(ScheduleError):
        alpha_beta(0, 0)


@given(st.integers(1, 500), st.floats(0, 1), st.data())
def test_alpha_beta_properties(M, rho, data):
    k = data.draw(st.integers(0, M))
    a, b = alpha_beta(k, M, rho)
    assert a + b == pytest.approx(1.0, abs=1e-15)
    assert 1 - rho - 1e-15 <= a <= 1.0
    if k < M:
        assert alpha_beta(k + 1, M, rho)[1] >= b


def test_std_examples():
    assert std_loss([50.0, -50.0, 0.0], 0).value < 1e-20
    r = std_loss([0.0, 0.0], 0)
    assert r.value == pytest.approx(math.log(2), abs=1e-15)
    np.testing.assert_allclose(r.grad, [-0.5, 0.5], atol=1e-15)
    with pytest.raises(IndexError):
        std_loss([0.0, 0.0], 2)


def test_fer_without_target_is_std_bitwise():
    spec = LossSpec("fer", total_epochs=10)
    z = np.array([0.3, -1.2, 2.2])
    a, b = fer_loss(z, 1, None, 7, spec), std_loss(z, 1)
    assert a.value == b.value and np.array_equal(a.grad, b.grad)


def test_fer_at_epoch_zero_equals_std_value():
    spec = LossSpec("fer", total_epochs=10)
    z = np.array([0.3, -1.2, 2.2])
    r = fer_loss(z, 1, np.array([0.2, 0.5, 0.3]), 0, spec)
    assert r.value == std_loss(z, 1).value


def test_fer_worked_example():
    spec = LossSpec("fer", tau=1.0, total_epochs=10)
    r = fer_loss([0.0, 0.0], 0, [0.75, 0.25], 0, spec, weights=(0.5, 0.5))
    expected = 0.5 * math.log(2) + 0.5 * (0.75 * math.log(1.5) + 0.25 * math.log(0.5))
    assert r.value == pytest.approx(expected, abs=1e-12)
    assert r.value == pytest.approx(0.411980, abs=1e-5)
    # alpha = beta = 0.5 also comes out of the schedule with rho = 1, k / M = 1/2
    spec_half = LossSpec("fer", tau=1.0, total_epochs=10, rho=1.0)
    assert fer_loss([0.0, 0.0], 0, [0.75, 0.25], 5, spec_half).value == pytest.approx(r.value, abs=1e-15)


def test_fer_rejects_invalid_target():
    spec = LossSpec("fer", total_epochs=10)
    with pytest.raises(InvariantError):
        fer_loss([0.0, 1.0], 0, [0.7, 0.7], 3, spec)
    with pytest.raises(InvariantError):
        fer_loss([0.0, 1.0], 0, [1.5, -0.5], 3, spec)


def test_fer_one_hot_target_is_finite():
    spec = LossSpec("fer", tau=5.0, total_epochs=10)
    r = fer_loss([30.0, -30.0, 0.0], 1, [0.0, 1.0, 0.0], 9, spec)
    assert np.isfinite(r.value) and np.all(np.isfinite(r.grad))


def test_fer_target_is_not_modified():
    spec = LossSpec("fer", total_epochs=10)
    t = np.array([0.2, 0.3, 0.5])
    keep = t.copy()
    fer_loss([1.0, 2.0, 3.0], 0, t, 5, spec)
    assert np.array_equal(t, keep)


def test_lsr_examples():
    z = np.array([0.4, -0.3, 1.1])
    a, b = lsr_loss(z, 2, 0.0), std_loss(z, 2)
    assert a.value == pytest.approx(b.value, abs=1e-15)
    np.testing.assert_allclose(a.grad, b.grad, atol=1e-15)
    np.testing.assert_allclose(lsr_target(2, 0.1, 4), [0.025, 0.025, 0.925, 0.025], atol=1e-15)


def test_maxent_examples():
    z = np.array([0.4, -0.3, 1.1])
    assert maxent_loss(z, 0, 0.0).value == std_loss(z, 0).value
    assert maxent_loss([0.0, 0.0], 0, 0.5).value == pytest.approx(0.346574, abs=1e-6)


def test_loss_spec_validation():
    with pytest.raises(ConfigError):
        LossSpec("mixup")
    with pytest.raises(ConfigError):
        LossSpec("lsr", epsilon=1.0)
    with pytest.raises(ConfigError):
        LossSpec("fer", tau=0.0)
    with pytest.raises(ConfigError):
        LossSpec("fer", rho=1.5)


def test_all_loss_gradients_match_finite_differences():
    worst = gradcheck.check_loss_gradients(n_points=50, seed=2)
    assert max(worst.values()) <= 1e-5


@pytest.mark.parametrize("model_first", [False, True])
@pytest.mark.parametrize("tau_sq", [False, True])
def test_fer_variants_gradients(model_first, tau_sq):
    rng = np.random.default_rng(9)
    spec = LossSpec("fer", tau=5.0, total_epochs=10, kl_model_first=model_first, kl_tau_squared=tau_sq)
    for _ in range(20):
        z = rng.normal(size=4) * 3
        t = rng.dirichlet(np.ones(4))
        r = fer_loss(z, 2, t, 7, spec)
        assert finite_diff_check(lambda x: fer_loss(x, 2, t, 7, spec).value, r.grad, z) <= 1e-5


def test_kl_orientation_flag_changes_the_loss():
    z, t = np.array([2.0, 0.0, -1.0]), np.array([0.1, 0.6, 0.3])
    a = fer_loss(z, 0, t, 5, LossSpec("fer", tau=1.0, total_epochs=10))
    b = fer_loss(z, 0, t, 5, LossSpec("fer", tau=1.0, total_epochs=10, kl_model_first=True))
    assert a.kl != pytest.approx(b.kl)


logit_rows = arrays(np.float64, st.integers(2, 6), elements=st.floats(-8, 8))


@settings(max_examples=200, deadline=None)
@given(logit_rows, st.data(), st.integers(0, 10))
def test_gate_identity_for_never_correct(z, data, k):
    y = data.draw(st.integers(0, z.size - 1))
    spec = LossSpec("fer", tau=5.0, total_epochs=10)
    v, g, _, _ = fer_batch(z[None, :], [y], np.full((1, z.size), np.nan), [False], k, spec)
    sv, sg = std_batch(z[None, :], [y])
    assert v[0] == sv[0] and np.array_equal(g, sg)


@settings(max_examples=200, deadline=None)
@given(logit_rows, st.data(), st.floats(0.0, 0.9))
def test_lsr_equivalence(z, data, eps):
    # uniform target, no gate, tau = 1, (alpha, beta) = (1 - eps, eps)  ->  LSR
    K = z.size
    y = data.draw(st.integers(0, K - 1))
    spec = LossSpec("fer", tau=1.0, total_epochs=10, no_gate=True)
    fer = fer_loss(z, y, np.full(K, 1.0 / K), 3, spec, weights=(1.0 - eps, eps))
    lsr = lsr_loss(z, y, eps)
    np.testing.assert_allclose(fer.grad, lsr.grad, rtol=0, atol=1e-10)


def test_lsr_equivalence_constant_offset():
    # the values differ by a logit-independent constant (eps * entropy of the uniform target)
    rng = np.random.default_rng(0)
    K, eps = 5, 0.1
    spec = LossSpec("fer", tau=1.0, total_epochs=10, no_gate=True)
    offsets = []
    for _ in range(10):
        z = rng.normal(size=K) * 3
        fer = fer_loss(z, 1, np.full(K, 1 / K), 3, spec, weights=(1 - eps, eps))
        offsets.append(lsr_loss(z, 1, eps).value - fer.value)
    np.testing.assert_allclose(offsets, eps * math.log(K), atol=1e-12)
