import math

import numpy as np
import pytest

from hadamard.exceptions import GeometryDomainError
from hadamard.linalg import spd_expm, spd_logm, spd_sqrtm, spd_sym_eig, sym
from hadamard.manifolds import SPD, Euclidean, Hyperbolic, PowerManifold, ProductManifold, manifold_from_spec, minkowski

from conftest import near_points


def test_curvature_bounds():
    assert Euclidean(2).curvature == (0.0, 0.0) or Euclidean(2).kmin == 0.0
    assert Hyperbolic(2).kmin == -1.0
    assert SPD(3).kmin == -0.5 and SPD(3).curvature.kmax == 0.0
    assert SPD(3).dim == 6 and Hyperbolic(4).point_shape == (5,)


def test_random_points_are_valid_and_seeded(manifold):
    a = manifold.random_point(np.random.default_rng(3))
    b = manifold.random_point(np.random.default_rng(3))
    assert np.array_equal(a, b)
    assert manifold.check_point(a)


def test_hyperbolic_random_point_membership(rng):
    H = Hyperbolic(5)
    for _ in range(20):
        x = H.random_point(rng)
        assert minkowski(x, x) == pytest.approx(-1.0, abs=1e-10) and x[0] > 0


def test_spd_random_point_positive(rng):
    S = SPD(4)
    for _ in range(20):
        assert np.all(np.linalg.eigvalsh(S.random_point(rng)) > 0)


def test_random_unit_tangent(manifold, rng):
    x = manifold.random_point(rng)
    v = manifold.random_unit_tangent(x, rng)
    assert manifold.norm(x, v) == pytest.approx(1.0, abs=1e-10)
    assert manifold.check_tangent(x, v)


def test_hyperbolic_unit_tangent_orthogonal(rng):
    H = Hyperbolic(4)
    x = H.random_point(rng)
    assert abs(minkowski(x, H.random_unit_tangent(x, rng))) <= 1e-10


def test_linalg_examples():
    assert np.allclose(spd_logm(np.eye(3)), 0.0)
    assert np.allclose(spd_expm(np.diag([1.0, 2.0])), np.diag([math.e, math.e**2]))
    assert np.allclose(spd_sqrtm(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))


def test_linalg_reconstruction(rng):
    for _ in range(10):
        a = sym(rng.standard_normal((5, 5)))
        w, q = spd_sym_eig(a)
        assert np.linalg.norm(q @ np.diag(w) @ q.T - a) <= 1e-9 * np.linalg.norm(a)
        x = spd_expm(a / np.linalg.norm(a, 2))
        assert np.allclose(spd_expm(spd_logm(x)), x, atol=1e-8)


def test_logm_rejects_non_pd():
    with pytest.raises(GeometryDomainError, match="eigenvalue"):
        spd_logm(np.diag([1.0, -2.0]))


def test_spd_affine_invariance(rng):
    S = SPD(3)
    for _ in range(10):
        x, y = S.random_point(rng), S.random_point(rng)
        A = rng.standard_normal((3, 3)) + 3 * np.eye(3)
        assert S.dist(A @ x @ A.T, A @ y @ A.T) == pytest.approx(S.dist(x, y), abs=1e-7)


def test_hyperbolic_geodesic_line():
    H = Hyperbolic(3)

    def pt(a):
        return np.array([math.cosh(a), math.sinh(a), 0.0, 0.0])

    for a, b in [(0.0, 1.0), (-2.0, 3.0), (5.0, 5.5)]:
        assert H.dist(pt(a), pt(b)) == pytest.approx(abs(a - b), abs=1e-9)


def test_product_distance(rng):
    P = ProductManifold(Hyperbolic(2), SPD(2))
    a, b = P.random_point(rng), P.random_point(rng)
    d1, d2 = P.first.dist(a[0], b[0]), P.second.dist(a[1], b[1])
    assert P.dist(a, b) ** 2 == pytest.approx(d1**2 + d2**2, rel=1e-14)
    assert P.kmin == -1.0


def test_power_manifold_matches_components(manifold, rng):
    P = PowerManifold(manifold, 4)
    x = np.stack(near_points(manifold, rng, 4))
    y = np.stack(near_points(manifold, rng, 4))
    v = P.log(x, y)
    for i in range(4):
        assert np.allclose(v[i], manifold.log(x[i], y[i]), atol=1e-10)
    assert P.dist(x, y) == pytest.approx(math.sqrt(sum(manifold.dist(x[i], y[i]) ** 2 for i in range(4))))
    assert np.allclose(P.exp(x, v), y, atol=1e-8)


def test_log_adjoint_matches_finite_differences(manifold, rng):
    for _ in range(5):
        x, y = near_points(manifold, rng, 2)
        w = manifold.random_tangent(x, rng)
        g = manifold.log_adjoint(x, y, w)
        u = manifold.random_unit_tangent(y, rng)
        h = 1e-6

        def phi(z):
            return manifold.inner(x, w, manifold.log(x, z))

        fd = (phi(manifold.exp(y, h * u)) - phi(manifold.exp(y, -h * u))) / (2 * h)
        assert fd == pytest.approx(manifold.inner(y, g, u), abs=1e-6 * max(1.0, manifold.norm(x, w)))


@pytest.mark.parametrize("spec,cls,dim", [("spd:5", SPD, 15), ("hyperbolic:50", Hyperbolic, 50), ("euclidean:3", Euclidean, 3)])
def test_manifold_from_spec(spec, cls, dim):
    M = manifold_from_spec(spec)
    assert isinstance(M, cls) and M.dim == dim and M.spec == spec


@pytest.mark.parametrize("spec", ["sphere:2", "spd", "hyperbolic:x", "spd:0"])
def test_manifold_from_spec_errors(spec):
    with pytest.raises(GeometryDomainError):
        manifold_from_spec(spec)


def test_drift_repair_keeps_membership(rng):
    H = Hyperbolic(3)
    x = H.random_point(rng)
    for _ in range(2000):
        x = H.exp(x, 0.01 * H.random_unit_tangent(x, rng))
    assert H.check_point(x)
