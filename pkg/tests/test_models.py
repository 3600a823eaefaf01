import numpy as np
import pytest

from performa.models import (
    GaussianClassModel,
    PerformativeModel,
    PricingModel,
    ShiftOperator,
    relocalize,
    sample_base,
    sample_deployed,
    shift_jacobian,
    zero_shift,
)


def _gauss_model(mu0, mu1, pi, rho=0.5, sigma=1.0):
    return PerformativeModel(
        classes=GaussianClassModel(mu0=np.asarray(mu0, float), mu1=np.asarray(mu1, float), rho=rho, sigma=sigma),
        shift=ShiftOperator(np.asarray(pi, float)),
    )


def test_shift_operator_flags():
    op = ShiftOperator(np.diag([1.0, 2.0]))
    assert op.is_symmetric and op.is_psd and op.is_pd
    op = ShiftOperator(np.diag([1.0, 0.0]))
    assert op.is_psd and not op.is_pd
    op = ShiftOperator(np.diag([1.0, -1.0]))
    assert not op.is_psd
    op = ShiftOperator(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    assert not op.is_symmetric


def test_shift_operator_validation():
    with pytest.raises(ValueError):
        ShiftOperator(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        ShiftOperator(np.array([[np.inf, 0.0], [0.0, 1.0]]))


def test_shift_jacobian_constant_and_fd():
    pi = np.diag([0.5, 1.0])
    op = ShiftOperator(pi)
    assert np.array_equal(shift_jacobian(op, np.array([3.0, -2.0])), pi)
    assert np.array_equal(shift_jacobian(zero_shift(2)), np.zeros((2, 2)))
    assert np.array_equal(shift_jacobian(ShiftOperator(np.eye(2))), np.eye(2))
    # finite difference of theta -> pi theta, step 1e-6
    theta = np.array([0.3, 0.7])
    h = 1e-6
    fd = np.zeros((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        fd[:, j] = (pi @ (theta + e) - pi @ (theta - e)) / (2 * h)
    assert np.max(np.abs(fd - shift_jacobian(op, theta))) < 1e-6


def test_sample_zero_theta_reproduces_base_mean():
    model = _gauss_model([2.0, -1.0], [0.0, 0.0], np.eye(2), sigma=1.0)
    batch = sample_deployed(model, np.zeros(2), 20000, 0)
    x0 = batch.x[batch.y == 0]
    se = 1.0 / np.sqrt(x0.shape[0])
    assert np.all(np.abs(x0.mean(axis=0) - [2.0, -1.0]) < 3 * se * 1.5)


def test_sample_shifted_mean_identity_shift():
    model = _gauss_model([0.0, 0.0], [5.0, 5.0], np.eye(2), sigma=1.0)
    batch = sample_deployed(model, np.array([1.0, 1.0]), 40000, 1)
    x0 = batch.x[batch.y == 0]
    se = 1.0 / np.sqrt(x0.shape[0])
    assert np.all(np.abs(x0.mean(axis=0) - [1.0, 1.0]) < 5 * se)


def test_sample_shifted_mean_7d_table_case():
    pi = np.diag([0.1, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    mu0 = np.array([1.0, 2.0, 0.5, 0.5, 0.0, 0.0, 0.0])
    model = _gauss_model(mu0, np.zeros(7), pi, sigma=0.5)
    theta = np.zeros(7)
    theta[1] = 1.0  # second basis vector
    batch = sample_deployed(model, theta, 60000, 2)
    x0 = batch.x[batch.y == 0]
    expected = np.array([1.0, 5.0, 0.5, 0.5, 0.0, 0.0, 0.0])
    se = 0.5 / np.sqrt(x0.shape[0])
    assert np.all(np.abs(x0.mean(axis=0) - expected) < 5 * se)


def test_sampling_deterministic_and_class1_immune():
    model = _gauss_model([-1.0, -1.0], [0.0, 0.0], np.diag([0.1, 0.9]), sigma=0.5)
    b1 = sample_deployed(model, np.array([0.0, 0.0]), 500, 42)
    b2 = sample_deployed(model, np.array([0.0, 0.0]), 500, 42)
    assert np.array_equal(b1.x, b2.x) and np.array_equal(b1.y, b2.y)
    # same seed, different theta: labels and class-1 rows are identical
    b3 = sample_deployed(model, np.array([3.0, -2.0]), 500, 42)
    assert np.array_equal(b1.y, b3.y)
    assert np.array_equal(b1.x[b1.y == 1], b3.x[b3.y == 1])
    assert not np.array_equal(b1.x[b1.y == 0], b3.x[b3.y == 0])


def test_zero_shift_identity_for_every_theta():
    model = _gauss_model([1.0, 2.0], [-1.0, 0.0], np.zeros((2, 2)), sigma=0.7)
    base = sample_deployed(model, np.zeros(2), 1000, 5)
    for theta in (np.array([1.0, 1.0]), np.array([-3.0, 10.0])):
        b = sample_deployed(model, theta, 1000, 5)
        assert np.array_equal(base.x, b.x)


def test_labels_bernoulli_rho():
    model = _gauss_model([0.0], [1.0], np.zeros((1, 1)), rho=0.3)
    batch = sample_deployed(model, np.zeros(1), 50000, 9)
    frac = batch.y.mean()
    assert abs(frac - 0.3) < 4 * np.sqrt(0.3 * 0.7 / 50000)


def test_class0_mean_linearity_random_pairs():
    rng = np.random.default_rng(11)
    for k in range(20):
        d = int(rng.integers(1, 4))
        pi = rng.normal(size=(d, d))
        mu0 = rng.normal(size=d)
        theta = rng.normal(size=d)
        model = _gauss_model(mu0, np.zeros(d), pi, sigma=1.0)
        batch = sample_deployed(model, theta, 20000, 100 + k)
        x0 = batch.x[batch.y == 0]
        se = 1.0 / np.sqrt(x0.shape[0])
        assert np.all(np.abs(x0.mean(axis=0) - (mu0 + pi @ theta)) < 5 * se)


def test_relocalize_identity_at_zero():
    model = _gauss_model([1.0, 0.0], [0.0, 0.0], np.eye(2))
    re = relocalize(model, np.zeros(2))
    b1 = sample_deployed(model, np.array([0.5, 0.5]), 300, 3)
    b2 = sample_deployed(re, np.array([0.5, 0.5]), 300, 3)
    assert np.allclose(b1.x, b2.x)


def test_relocalize_matches_original_distribution():
    model = _gauss_model([0.0, 0.0], [4.0, 4.0], np.eye(2), sigma=1.0)
    theta_bar = np.array([1.0, 0.0])
    re = relocalize(model, theta_bar)
    assert np.allclose(re.classes.mu0, [1.0, 0.0])
    n = 100000
    theta = np.array([1.0, 0.0])
    a = sample_deployed(model, theta, n, 21)
    b = sample_deployed(re, theta, n, 22)
    m_a = a.x[a.y == 0].mean(axis=0)
    m_b = b.x[b.y == 0].mean(axis=0)
    se = 1.0 / np.sqrt(min((a.y == 0).sum(), (b.y == 0).sum()))
    assert np.all(np.abs(m_a - m_b) < 5 * se)


def test_relocalize_exact_algebra_case():
    # both parameterizations place the class-0 mean at mu0 + (4, 0)
    mu0 = np.array([0.3, -0.2])
    model = _gauss_model(mu0, [5.0, 5.0], np.diag([2.0, 0.0]))
    re = relocalize(model, np.array([1.0, 1.0]))
    theta = np.array([2.0, 1.0])
    original_mean = mu0 + model.shift.matrix @ theta
    relocal_mean = re.classes.mu0 + re.shift.matrix @ theta + re.offset0
    assert np.allclose(original_mean, mu0 + np.array([4.0, 0.0]))
    assert np.allclose(relocal_mean, original_mean)


def test_relocalize_rejects_unsupported_models():
    model = _gauss_model([0.0], [1.0], np.eye(1))
    pricing = PricingModel(mu=np.array([1.0]), elasticity=np.array([1.0]))
    with pytest.raises(TypeError):
        relocalize(pricing, np.zeros(1))
    both = PerformativeModel(classes=model.classes, shift=model.shift, shift1=zero_shift(1))
    with pytest.raises(TypeError):
        relocalize(both, np.zeros(1))


def test_sample_errors():
    model = _gauss_model([0.0, 0.0], [1.0, 1.0], np.eye(2))
    with pytest.raises(ValueError):
        sample_deployed(model, np.zeros(3), 10, 0)
    with pytest.raises(ValueError):
        sample_deployed(model, np.array([np.nan, 0.0]), 10, 0)
    with pytest.raises(ValueError):
        sample_deployed(model, np.zeros(2), 0, 0)


def test_pricing_sampler_shift_direction():
    model = PricingModel(mu=np.array([1.0, 2.0]), elasticity=np.array([0.5, 1.0]), sigma=0.5)
    theta = np.array([1.0, 1.0])
    y, u = sample_base(model, 50000, 4)
    assert y is None
    batch = sample_deployed(model, theta, 50000, 4)
    # deployment at positive prices lowers demand: mean mu - diag(e) theta
    se = 0.5 / np.sqrt(50000)
    assert np.all(np.abs(batch.x.mean(axis=0) - [0.5, 1.0]) < 5 * se)
    assert np.allclose(batch.x, u - model.elasticity * theta)


def test_gaussian_full_covariance_sampling():
    cov = np.array([[2.0, 0.6], [0.6, 1.0]])
    classes = GaussianClassModel(mu0=np.zeros(2), mu1=np.ones(2), rho=0.5, cov0=cov)
    model = PerformativeModel(classes=classes, shift=zero_shift(2))
    batch = sample_deployed(model, np.zeros(2), 200000, 8)
    emp = np.cov(batch.x[batch.y == 0], rowvar=False)
    assert np.max(np.abs(emp - cov)) < 0.05


def test_invalid_class_model():
    with pytest.raises(ValueError):
        GaussianClassModel(mu0=np.zeros(2), mu1=np.zeros(2), rho=1.5, sigma=1.0)
    with pytest.raises(ValueError):
        GaussianClassModel(mu0=np.zeros(2), mu1=np.zeros(3), rho=0.5, sigma=1.0)
    with pytest.raises(ValueError):
        GaussianClassModel(mu0=np.zeros(2), mu1=np.zeros(2), rho=0.5)
    with pytest.raises(ValueError):
        GaussianClassModel(mu0=np.zeros(2), mu1=np.zeros(2), rho=0.5, cov0=np.diag([1.0, -1.0]))
