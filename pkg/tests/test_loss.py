import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sphsgd.loss import (
    KINDS,
    InvalidLabelError,
    LossDomainError,
    derivative,
    derivative_scalar,
    make_loss,
    scalar_derivative_fn,
    value,
)

H = 1e-5


def sample_labels(kind, B, rng, n):
    if kind == "logistic":
        return rng.choice([-1.0, 1.0], n)
    if kind == "poisson":
        return rng.integers(0, 20, n).astype(float)
    return rng.uniform(-B, B, n)


def test_examples():
    assert value(make_loss("l2"), 1.0, 3.0) == 4.0
    assert value(make_loss("welsch"), 0.2, 0.2) == 0.0
    assert value(make_loss("huber_sqrt"), 0.0, 1.0) == pytest.approx(math.sqrt(2) - 1, abs=1e-15)
    assert derivative(make_loss("logistic"), 0.0, 1.0) == pytest.approx(-0.5, abs=1e-15)
    assert derivative(make_loss("l2"), 0.7, 0.7) == 0.0
    assert derivative(make_loss("cauchy", B=0.5), 0.5, -0.5) == pytest.approx(1 / 1.5, abs=1e-15)


def test_more_values():
    assert value(make_loss("cauchy"), 0.5, -0.5) == pytest.approx(math.log(1.5), abs=1e-15)
    assert value(make_loss("huber_logcosh"), 1.0, 0.0) == pytest.approx(math.log(math.cosh(1.0)), abs=1e-15)
    assert value(make_loss("welsch"), 0.0, 1.0) == pytest.approx(1 - math.exp(-0.5), abs=1e-15)
    assert value(make_loss("logistic"), 0.0, -1.0) == pytest.approx(math.log(2.0), abs=1e-15)
    # shifted so that the minimum over u is zero
    assert value(make_loss("poisson"), math.log(3.0), 3.0) == pytest.approx(0.0, abs=1e-14)


def test_defaults():
    assert make_loss("cauchy").B == 0.5
    assert make_loss("welsch").B == pytest.approx(1 / 3)
    assert make_loss("huber_sqrt").B == 10.0
    assert make_loss("l2").mu == 2.0
    assert make_loss("logistic").M == 1.0
    assert make_loss("l2", B=2.0, label_bound=3.0).M == 10.0


@pytest.mark.parametrize("kind", KINDS)
def test_gradient_check(kind):
    spec = make_loss(kind)
    rng = np.random.default_rng(KINDS.index(kind))
    U = rng.uniform(-spec.B + H, spec.B - H, 200)
    V = sample_labels(kind, spec.B, rng, 200)
    for u, v in zip(U, V):
        d = derivative(spec, u, v)
        fd = (value(spec, u + H, v) - value(spec, u - H, v)) / (2 * H)
        assert abs(d - fd) <= 1e-6 * (1 + abs(d))
        assert derivative_scalar(spec, u, v) == pytest.approx(d, rel=1e-14, abs=1e-15)
        assert scalar_derivative_fn(spec)(u, v) == pytest.approx(d, rel=1e-14, abs=1e-15)


@pytest.mark.parametrize("kind", KINDS)
def test_derivative_bound(kind):
    spec = make_loss(kind, label_bound=None if kind != "poisson" else 19.0)
    rng = np.random.default_rng(1)
    U = np.linspace(-spec.B, spec.B, 801)
    for v in sample_labels(kind, spec.label_bound if kind != "poisson" else spec.B, rng, 25):
        assert np.all(np.abs(derivative(spec, U, np.full_like(U, v))) <= spec.M * (1 + 1e-12))


@pytest.mark.parametrize("kind", KINDS)
def test_nonnegative(kind):
    spec = make_loss(kind)
    rng = np.random.default_rng(2)
    U = rng.uniform(-spec.B, spec.B, 500)
    V = sample_labels(kind, spec.B, rng, 500)
    assert np.all(value(spec, U, V) >= 0)


def test_logistic_curvature():
    B = 10.0
    spec = make_loss("logistic", B=B)
    h = 1e-3
    bound = math.exp(-B) / (1 + math.exp(B)) ** 2
    for v in (-1.0, 1.0):
        for u in np.linspace(-B + h, B - h, 401):
            second = (value(spec, u + h, v) - 2 * value(spec, u, v) + value(spec, u - h, v)) / h**2
            assert second >= bound - 1e-6
    assert spec.mu >= bound


def test_l2_strong_convexity_exact():
    spec = make_loss("l2")
    for u1, u2, v in [(0.3, -1.2, 0.5), (4.0, 1.0, -2.0)]:
        lhs = value(spec, u1, v) - value(spec, u2, v) - derivative(spec, u2, v) * (u1 - u2)
        assert lhs == pytest.approx(spec.mu / 2 * (u1 - u2) ** 2, abs=1e-12)


@pytest.mark.parametrize("kind", ["cauchy", "welsch"])
def test_restricted_local_convexity(kind):
    spec = make_loss(kind)
    assert spec.mu > 0
    h = 1e-4
    for v in np.linspace(-spec.B, spec.B, 21):
        for u in np.linspace(-spec.B + h, spec.B - h, 41):
            second = (value(spec, u + h, v) - 2 * value(spec, u, v) + value(spec, u - h, v)) / h**2
            assert second >= spec.mu - 1e-6


@pytest.mark.parametrize("kind", ["cauchy", "welsch"])
def test_domain_enforced(kind):
    spec = make_loss(kind)
    for u in (spec.B + 1e-9, -spec.B - 0.1):
        with pytest.raises(LossDomainError):
            value(spec, u, 0.0)
        with pytest.raises(LossDomainError):
            derivative(spec, u, 0.0)
        with pytest.raises(LossDomainError):
            derivative_scalar(spec, u, 0.0)
        with pytest.raises(LossDomainError):
            scalar_derivative_fn(spec)(u, 0.0)
    with pytest.raises(ValueError):
        make_loss(kind, B=1.0)


def test_invalid_labels():
    with pytest.raises(InvalidLabelError):
        value(make_loss("logistic"), 0.0, 0.5)
    with pytest.raises(InvalidLabelError):
        derivative_scalar(make_loss("logistic"), 0.0, 0.0)
    with pytest.raises(InvalidLabelError):
        value(make_loss("poisson"), 0.0, 1.5)
    with pytest.raises(InvalidLabelError):
        value(make_loss("poisson"), 0.0, -1.0)
    with pytest.raises(InvalidLabelError):
        derivative(make_loss("l2"), 0.0, math.nan)
    with pytest.raises(LossDomainError):
        value(make_loss("l2"), math.nan, 0.0)


def test_unknown_kind():
    with pytest.raises(ValueError):
        make_loss("hinge")
    with pytest.raises(ValueError):
        make_loss("l2", B=0.0)


def test_logistic_stable_extremes():
    spec = make_loss("logistic", B=800.0)
    assert derivative(spec, 800.0, 1.0) == pytest.approx(0.0, abs=1e-300)
    assert derivative(spec, -800.0, 1.0) == -1.0
    assert derivative_scalar(spec, 800.0, -1.0) == 1.0
    assert value(spec, -800.0, 1.0) == pytest.approx(800.0)


@given(st.sampled_from(KINDS), st.floats(-1, 1), st.floats(-1, 1))
def test_vector_scalar_agree(kind, a, b):
    spec = make_loss(kind)
    u = a * spec.B
    if kind == "logistic":
        v = 1.0 if b >= 0 else -1.0
    elif kind == "poisson":
        v = float(round(abs(b) * 10))
    else:
        v = b * spec.B
    vec = derivative(spec, np.array([u, u]), np.array([v, v]))
    assert vec[0] == pytest.approx(derivative_scalar(spec, u, v), rel=1e-13, abs=1e-15)
    assert value(spec, u, v) >= 0
