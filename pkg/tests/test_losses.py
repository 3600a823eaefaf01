import numpy as np
import pytest

from performa.losses import (
    ClassificationLoss,
    PricingLoss,
    Surrogate,
    pricing_grad_theta,
    pricing_grad_z,
    pricing_loss,
)

ALL_KINDS = ["quadratic", "logistic", "hinge", "exponential"]


def _central_diff(f, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def test_surrogate_values():
    assert Surrogate("quadratic").value(0.0) == pytest.approx(1.0)
    assert Surrogate("logistic").value(0.0) == pytest.approx(np.log(2.0))
    assert Surrogate("hinge").value(2.0) == pytest.approx(0.0)
    assert Surrogate("exponential").value(0.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        Surrogate("huber")


def test_loss_value_examples():
    logistic = ClassificationLoss(Surrogate("logistic"))
    x = np.array([0.7, -1.3])
    assert logistic.loss_value(x, 1, np.zeros(2)) == pytest.approx(np.log(2.0))
    assert logistic.loss_value(x, 0, np.zeros(2)) == pytest.approx(np.log(2.0))

    quad = ClassificationLoss(Surrogate("quadratic"))
    # margin exactly at the target
    assert quad.loss_value(np.array([1.0, 0.0]), 1, np.array([1.0, 0.0])) == pytest.approx(0.0)

    hinge = ClassificationLoss(Surrogate("hinge"))
    # class 0 with margin -2: phi(2) = 0
    assert hinge.loss_value(np.array([-2.0, 0.0]), 0, np.array([1.0, 0.0])) == pytest.approx(0.0)


def test_grad_z_examples():
    quad = ClassificationLoss(Surrogate("quadratic"))
    x = np.array([0.0, 3.0])
    theta = np.array([1.0, 0.0])
    assert np.allclose(quad.grad_z(x, 0, theta), np.array([2.0, 0.0]))

    logistic = ClassificationLoss(Surrogate("logistic"))
    assert np.allclose(logistic.grad_z(x, 1, theta), -0.5 * theta)
    assert np.allclose(logistic.grad_z(x, 1, np.zeros(2)), np.zeros(2))


def test_grad_theta_mirrors_grad_z():
    quad = ClassificationLoss(Surrogate("quadratic"))
    theta = np.array([0.0, 3.0])
    x = np.array([1.0, 0.0])
    assert np.allclose(quad.grad_theta(x, 0, theta), np.array([2.0, 0.0]))
    logistic = ClassificationLoss(Surrogate("logistic"))
    assert np.allclose(logistic.grad_theta(x, 1, theta), -0.5 * x)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_gradients_match_finite_differences(kind):
    loss = ClassificationLoss(Surrogate(kind))
    rng = np.random.default_rng(17)
    checked = 0
    while checked < 100:
        x = rng.normal(size=3)
        theta = rng.normal(size=3)
        y = int(rng.random() < 0.5)
        margin = float(np.dot(x, theta))
        if kind == "hinge" and abs(1 - abs(margin)) < 1e-3:
            continue
        gz = loss.grad_z(x, y, theta)
        gt = loss.grad_theta(x, y, theta)
        fz = _central_diff(lambda v: loss.loss_value(v, y, theta), x)
        ft = _central_diff(lambda v: loss.loss_value(x, y, v), theta)
        scale = max(np.linalg.norm(fz), np.linalg.norm(ft), 1e-8)
        assert np.linalg.norm(gz - fz) / scale < 1e-5
        assert np.linalg.norm(gt - ft) / scale < 1e-5
        checked += 1


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_convexity_of_surrogates(kind):
    phi = Surrogate(kind)
    rng = np.random.default_rng(5)
    v1 = rng.uniform(-6, 6, size=1000)
    v2 = rng.uniform(-6, 6, size=1000)
    t = rng.uniform(0, 1, size=1000)
    lhs = phi.value(t * v1 + (1 - t) * v2)
    rhs = t * phi.value(v1) + (1 - t) * phi.value(v2)
    assert np.all(lhs <= rhs + 1e-12)


@pytest.mark.parametrize("kind", ["logistic", "hinge", "exponential"])
def test_non_increasing_surrogates(kind):
    phi = Surrogate(kind)
    assert phi.non_increasing
    rng = np.random.default_rng(6)
    v = np.sort(rng.uniform(-6, 6, size=500))
    vals = phi.value(v)
    assert np.all(np.diff(vals) <= 1e-12)
    assert np.all(phi.deriv(rng.uniform(-6, 6, size=500)) <= 1e-12)


def test_quadratic_not_non_increasing():
    assert not Surrogate("quadratic").non_increasing


def test_pricing_loss_and_grads():
    assert pricing_loss(np.zeros(2), np.zeros(2)) == 0.0
    z = np.array([1.0, 2.0])
    theta = np.array([3.0, 4.0])
    assert pricing_loss(z, theta) == pytest.approx(-11.0)
    assert np.allclose(pricing_grad_theta(z, theta), [-1.0, -2.0])
    assert np.allclose(pricing_grad_z(z, theta), [-3.0, -4.0])

    batch_loss = PricingLoss()
    zs = np.array([[1.0, 2.0], [3.0, 0.0]])
    assert np.allclose(batch_loss.values(zs, None, theta), [-11.0, -9.0])
    assert np.allclose(batch_loss.grad_theta_mean(zs, None, theta), [-2.0, -1.0])


def test_batch_values_match_scalar():
    loss = ClassificationLoss(Surrogate("logistic"))
    rng = np.random.default_rng(2)
    x = rng.normal(size=(50, 2))
    y = (rng.random(50) < 0.5).astype(int)
    theta = rng.normal(size=2)
    batch = loss.values(x, y, theta)
    singles = [loss.loss_value(x[i], y[i], theta) for i in range(50)]
    assert np.allclose(batch, singles)
    g = loss.grad_theta_mean(x, y, theta)
    singles_g = np.mean([loss.grad_theta(x[i], y[i], theta) for i in range(50)], axis=0)
    assert np.allclose(g, singles_g)


def test_step_terms_class0_coefficient():
    loss = ClassificationLoss(Surrogate("logistic"))
    rng = np.random.default_rng(8)
    x = rng.normal(size=(80, 2))
    y = (rng.random(80) < 0.5).astype(int)
    theta = rng.normal(size=2)
    g, c0 = loss.step_terms(x, y, theta)
    assert np.allclose(g, loss.grad_theta_mean(x, y, theta))
    grads = np.sum([loss.grad_z(x[i], 0, theta) for i in range(80) if y[i] == 0], axis=0) / 80
    assert np.allclose(c0 * theta, grads)
