"""Shape functions, quadrature and the isoparametric maps."""

import numpy as np
import pytest

from vibrofem import shape


def random_distorted_quad(rng):
    """A mildly distorted but convex 9-node quad built by perturbing the
    unit square corners and placing the other nodes isoparametrically."""
    corners = np.array([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    corners = corners + rng.uniform(-0.15, 0.15, size=(4, 2))
    coords = np.empty((9, 2))
    coords[:4] = corners
    coords[4] = 0.5 * (corners[0] + corners[1])
    coords[5] = 0.5 * (corners[1] + corners[2])
    coords[6] = 0.5 * (corners[2] + corners[3])
    coords[7] = 0.5 * (corners[3] + corners[0])
    coords[8] = corners.mean(axis=0)
    return coords


def test_partition_of_unity():
    rng = np.random.default_rng(0)
    for _ in range(20):
        xi, eta = rng.uniform(-1, 1, 2)
        assert shape.shape(xi, eta).sum() == pytest.approx(1.0, abs=1e-14)
        np.testing.assert_allclose(shape.dshape(xi, eta).sum(axis=0), 0.0,
                                   atol=1e-13)


def test_kronecker_delta_at_nodes():
    for i, (a, b) in enumerate(shape.LOCAL_NODES):
        N = shape.shape(a, b)
        want = np.zeros(9)
        want[i] = 1.0
        np.testing.assert_allclose(N, want, atol=1e-14)


def test_shape1d_partition_and_delta():
    assert shape.shape1d(0.37).sum() == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(shape.shape1d(-1.0), [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(shape.shape1d(0.0), [0, 1, 0], atol=1e-15)


def test_gauss_rules_integrate_polynomials():
    x, w = shape.gauss1d(3)
    assert w.sum() == pytest.approx(2.0)
    assert (w * x ** 4).sum() == pytest.approx(2.0 / 5.0, abs=1e-14)
    pts, wts = shape.gauss2d(3)
    assert wts.sum() == pytest.approx(4.0)
    assert (wts * pts[:, 0] ** 2 * pts[:, 1] ** 4).sum() \
        == pytest.approx((2.0 / 3.0) * (2.0 / 5.0), abs=1e-14)


def test_forward_map_reproduces_nodes():
    rng = np.random.default_rng(1)
    coords = random_distorted_quad(rng)
    for i, (a, b) in enumerate(shape.LOCAL_NODES):
        np.testing.assert_allclose(shape.forward_map(coords, a, b),
                                   coords[i], atol=1e-13)


def test_inverse_map_round_trip_distorted():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(1000):
        coords = random_distorted_quad(rng)
        xi0 = rng.uniform(-0.98, 0.98, 2)
        pt = shape.forward_map(coords, xi0[0], xi0[1])
        xi = shape.inverse_map(coords, pt)
        worst = max(worst, float(np.abs(xi - xi0).max()))
    assert worst <= 1e-10


def test_inverse_map_rejects_far_points():
    coords = np.array(shape.LOCAL_NODES, dtype=float)
    with pytest.raises(ValueError):
        shape.inverse_map(coords, (50.0, 0.0))


def test_jacobian_affine_element():
    coords = np.array(shape.LOCAL_NODES, dtype=float) * [2.0, 3.0]
    J = shape.jacobian(coords, 0.3, -0.7)
    np.testing.assert_allclose(J, [[2.0, 0.0], [0.0, 3.0]], atol=1e-13)
