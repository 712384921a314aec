import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glharmonic import jets
from glharmonic.chart import MetricField
from glharmonic.errors import DegenerateMetricError, DomainError
from glharmonic.riemannian import (
    ChristoffelField,
    CurvatureField,
    christoffel,
    covariant_derivative_2form,
    curvature,
    riemann_geodesic,
    second_fundamental_form_residual,
)

SPHERE = MetricField.sphere()


def random_conformal(rng, dim=2):
    """``exp(2u) delta`` with a random quadratic ``u``."""
    c = rng.uniform(-0.5, 0.5, size=dim)
    q = rng.uniform(-0.3, 0.3, size=(dim, dim))

    def u(x):
        total = jets.dot(c.tolist(), x)
        for i in range(dim):
            for j in range(dim):
                total = total + q[i, j] * x[i] * x[j]
        return total

    return MetricField.conformal(u, MetricField.euclidean(dim))


def random_polynomial_metric(rng, dim=3):
    """``P(x)^T P(x) + I`` with entries of ``P`` affine in ``x``."""
    base = rng.uniform(-1, 1, size=(dim, dim))
    slope = rng.uniform(-1, 1, size=(dim, dim, dim))

    def ev(x):
        P = [[base[i, j] + jets.dot(slope[i, j].tolist(), x) for j in range(dim)] for i in range(dim)]
        return [
            [sum((P[k][i] * P[k][j] for k in range(dim)), 1.0 if i == j else 0.0) for j in range(dim)]
            for i in range(dim)
        ]

    return MetricField(ev, dim, "polynomial")


def test_euclidean_christoffel_zero():
    assert not np.any(christoffel(MetricField.euclidean(3), [0.1, 0.2, 0.3]))


def test_sphere_christoffel_closed_form():
    th = np.pi / 3
    gam = christoffel(SPHERE, [th, 0.4])
    expected = np.zeros((2, 2, 2))
    expected[0, 1, 1] = -np.sin(th) * np.cos(th)
    expected[1, 0, 1] = expected[1, 1, 0] = 1.0 / np.tan(th)
    np.testing.assert_allclose(gam, expected, atol=1e-15)
    assert expected[0, 1, 1] == pytest.approx(-(np.sqrt(3) / 2) * 0.5)


def test_conformal_linear_christoffel():
    c = np.array([0.3, -0.7, 0.2])
    metric = MetricField.conformal(lambda x: jets.dot(c.tolist(), x), MetricField.euclidean(3))
    gam = christoffel(metric, [0.5, 0.1, -0.2])
    eye = np.eye(3)
    expected = (
        np.einsum("ij,k->ijk", eye, c) + np.einsum("ik,j->ijk", eye, c) - np.einsum("jk,i->ijk", eye, c)
    )
    np.testing.assert_allclose(gam, expected, atol=1e-14)


def test_lower_index_symmetry_exact_for_polynomial_metrics():
    rng = np.random.default_rng(0)
    for _ in range(5):
        metric = random_polynomial_metric(rng)
        for x in rng.uniform(-1, 1, size=(20, 3)):
            gam = christoffel(metric, x)
            assert np.array_equal(gam, np.swapaxes(gam, 1, 2))


def test_flat_curvature_is_zero():
    c = curvature(MetricField.euclidean(2), [0.3, 0.4])
    assert not np.any(c.riemann) and c.scalar == 0.0


def test_unit_sphere_ricci_and_scalar():
    c = curvature(SPHERE, [np.pi / 2, 0.0])
    np.testing.assert_allclose(c.ricci, np.eye(2), atol=1e-12)
    assert c.scalar == pytest.approx(2.0, abs=1e-12)


def test_sphere_radius_scaling():
    c = curvature(MetricField.sphere(2.0), [1.0, 0.0])
    assert c.scalar == pytest.approx(0.5, abs=1e-12)


def test_product_with_line_keeps_sphere_scalar():
    metric = MetricField.diagonal(lambda x: [1.0, 1.0, jets.sin(x[1]) ** 2], 3, "line x sphere")
    assert curvature(metric, [0.2, 1.1, 0.3]).scalar == pytest.approx(2.0, abs=1e-12)


def test_curvature_field_wrappers_agree():
    x = [1.0, 0.3]
    assert CurvatureField(SPHERE).scalar(x) == curvature(SPHERE, x).scalar
    np.testing.assert_array_equal(ChristoffelField(SPHERE)(x), christoffel(SPHERE, x))


@pytest.mark.parametrize("seed", range(4))
def test_antisymmetry_bianchi_and_ricci_symmetry(seed):
    rng = np.random.default_rng(seed)
    metric = random_conformal(rng)
    for x in rng.uniform(-0.7, 0.7, size=(25, 2)):
        r = curvature(metric, x)
        R = r.riemann
        np.testing.assert_allclose(R, -np.swapaxes(R, 2, 3), atol=1e-8)
        bianchi = R + np.transpose(R, (0, 2, 3, 1)) + np.transpose(R, (0, 3, 1, 2))
        assert np.max(np.abs(bianchi)) < 1e-8
        np.testing.assert_allclose(r.ricci, r.ricci.T, atol=1e-8)


def test_conformal_2d_scalar_curvature_formula():
    # for exp(2u) delta in 2-d the scalar curvature is -2 exp(-2u) Laplacian(u)
    u = lambda x: 0.3 * x[0] ** 2 + 0.1 * x[0] * x[1] - 0.2 * x[1] ** 2 + 0.4 * x[0]
    metric = MetricField.conformal(u, MetricField.euclidean(2))
    x = [0.2, -0.5]
    lap = 2 * 0.3 - 2 * 0.2
    assert curvature(metric, x).scalar == pytest.approx(-2 * np.exp(-2 * u(x)) * lap, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 2.9), st.floats(-3, 3))
def test_metricity(theta, phi):
    assert np.max(np.abs(covariant_derivative_2form(SPHERE, SPHERE, [theta, phi]))) < 1e-9


def test_covariant_derivative_of_constant_form_is_zero():
    omega = [[1.0, 2.0], [-2.0, 0.5]]
    out = covariant_derivative_2form(MetricField.euclidean(2), lambda x: omega, [0.1, 0.2])
    assert not np.any(out)


def test_covariant_derivative_of_linear_form():
    out = covariant_derivative_2form(
        MetricField.euclidean(2), lambda x: [[x[0], 0.0], [0.0, x[0]]], [0.3, 0.9]
    )
    np.testing.assert_array_equal(out[:, :, 0], np.eye(2))
    np.testing.assert_array_equal(out[:, :, 1], np.zeros((2, 2)))


def test_degenerate_metric_raises():
    metric = MetricField.diagonal(lambda x: [1.0, x[0]], 2, "degenerate")
    with pytest.raises(DegenerateMetricError):
        christoffel(metric, [0.0, 1.0])


def test_flat_geodesic_is_straight():
    traj = riemann_geodesic(MetricField.euclidean(2), [0.0, 0.0], [1.0, 2.0], (0.0, 1.0), 10)
    np.testing.assert_allclose(traj.states[-1], [1.0, 2.0], atol=1e-14)


def test_sphere_equator_is_geodesic():
    traj = riemann_geodesic(SPHERE, [np.pi / 2, 0.0], [0.0, 1.0], (0.0, 1.0), 1000)
    assert np.max(np.abs(traj.states[:, 0] - np.pi / 2)) < 1e-6
    np.testing.assert_allclose(traj.states[:, 1], traj.times, atol=1e-12)


def test_zero_velocity_stays_put():
    traj = riemann_geodesic(SPHERE, [1.0, 0.5], [0.0, 0.0], (0.0, 1.0), 20)
    assert np.all(traj.states == traj.states[0])


def test_sphere_kinetic_energy_conserved():
    traj = riemann_geodesic(SPHERE, [1.0, 0.2], [0.3, 0.8], (0.0, 1.0), 1000)
    kinetic = np.array([v @ SPHERE(x) @ v for x, v in zip(traj.states, traj.velocities)])
    assert np.max(np.abs(kinetic - kinetic[0])) < 1e-7


def test_sff_exponential_pseudolinear():
    f = lambda a: jets.exp(a[0] + 2.0 * a[1])
    assert second_fundamental_form_residual(f, MetricField.euclidean(2), [0.3, -0.1]) < 1e-9


def test_sff_affine_is_exactly_zero():
    f = lambda a: 1.0 * a[0] + 2.0 * a[1]
    assert second_fundamental_form_residual(f, MetricField.euclidean(2), [0.3, -0.1]) == 0.0


def test_sff_circle_level_set():
    f = lambda a: a[0] * a[0] + a[1] * a[1]
    assert second_fundamental_form_residual(f, MetricField.euclidean(2), [1.0, 0.0]) == pytest.approx(1.0)


def test_sff_vanishing_gradient_raises():
    f = lambda a: a[0] * a[0] + a[1] * a[1]
    with pytest.raises(DomainError):
        second_fundamental_form_residual(f, MetricField.euclidean(2), [0.0, 0.0])
