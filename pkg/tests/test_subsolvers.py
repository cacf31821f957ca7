import math

import numpy as np
import pytest

from hadamard.constraints import GeodesicBall, WholeManifold
from hadamard.exceptions import NumericError, SubsolverBudgetError
from hadamard.geometry import finite_diff_directional, zeta
from hadamard.manifolds import SPD, Euclidean, Hyperbolic
from hadamard.objectives import BusemannFunction, FunctionObjective, SquaredDistance, ZeroObjective
from hadamard.subsolvers import (
    ProxSubproblem,
    StoppingRule,
    crgd,
    crgd_step,
    prgd,
    rgd,
    solve_prox_certified,
    solve_prox_fixed,
)

from conftest import near_points


def half_norm(E):
    return SquaredDistance(E, np.zeros(E.dim), 1.0)


def test_stopping_rule_validation():
    with pytest.raises(ValueError):
        StoppingRule("sometimes")
    with pytest.raises(ValueError):
        StoppingRule.certificate(0.0)
    assert StoppingRule.fixed(3).budget == 3


def test_rgd_single_exact_step():
    E = Euclidean(2)
    x, rep = rgd(half_norm(E), np.array([2.0, 0.0]), StoppingRule.fixed(1), L=1.0)
    assert np.allclose(x, 0.0) and rep.gradient_calls == 1 and rep.iterations == 1


def test_rgd_stationary_start():
    E = Euclidean(2)
    x0 = np.zeros(2)
    x, rep = rgd(half_norm(E), x0, StoppingRule.grad_norm(1e-12), L=1.0)
    assert rep.iterations == 0 and np.array_equal(x, x0)


def test_rgd_monotone_on_hyperbolic(rng):
    H = Hyperbolic(3)
    p = H.random_point(rng)
    x0 = H.exp(p, 4.0 * H.random_unit_tangent(p, rng))
    f = SquaredDistance(H, p, 1.0, radius=4.0)
    _, rep = rgd(f, x0, StoppingRule.fixed(30), L=f.L)
    xs = [x0]
    x = x0
    for _ in range(30):
        x = H.exp(x, -f.grad(x) / f.L)
        xs.append(x)
    vals = [f.value(z) for z in xs]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


def test_gap_to_grad_along_rgd(rng):
    H = Hyperbolic(3)
    p = H.random_point(rng)
    x = H.exp(p, 2.0 * H.random_unit_tangent(p, rng))
    f = SquaredDistance(H, p, 1.0, radius=2.0)
    for _ in range(20):
        g = f.grad(x)
        xn = H.exp(x, -g / f.L)
        assert H.inner(x, g, g) / (2 * f.L) <= f.value(x) - f.value(xn) + 1e-12
        x = xn


def test_prgd_constrained_example():
    E = Euclidean(2)
    ball = GeodesicBall(E, np.array([3.0, 0.0]), 1.0)
    x, rep = prgd(half_norm(E), ball, np.array([3.0, 0.0]), StoppingRule.certificate(1e-12), L=1.0)
    assert np.allclose(x, [2.0, 0.0], atol=1e-10) and rep.converged


def test_prgd_interior_minimizer_matches_rgd(rng):
    H = Hyperbolic(2)
    p = H.random_point(rng)
    f = SquaredDistance(H, p, 1.0, radius=2.0)
    x0 = H.exp(p, 0.5 * H.random_unit_tangent(p, rng))
    ball = GeodesicBall(H, p, 1.0)
    a, _ = prgd(f, ball, x0, StoppingRule.fixed(5), L=f.L)
    b, _ = rgd(f, x0, StoppingRule.fixed(5), L=f.L)
    assert np.allclose(a, b)


def test_prgd_iterates_feasible(rng):
    H = Hyperbolic(2)
    c = H.random_point(rng)
    far = H.exp(c, 3.0 * H.random_unit_tangent(c, rng))
    f = SquaredDistance(H, far, 1.0, radius=4.0)
    ball = GeodesicBall(H, c, 1.0)
    x = c
    for _ in range(20):
        x, _ = prgd(f, ball, x, StoppingRule.fixed(1), L=f.L)
        assert ball.contains(x)


def test_nonfinite_gradient_raises():
    E = Euclidean(1)
    bad = FunctionObjective(E, lambda x: 0.0, lambda x: np.array([np.nan]), L=1.0)
    with pytest.raises(NumericError):
        rgd(bad, np.zeros(1), StoppingRule.fixed(2), L=1.0)


def test_crgd_step_euclidean_closed_form_and_iterative_agree(rng):
    E = Euclidean(3)
    x, c = rng.standard_normal(3), rng.standard_normal(3)
    eta, Lbar = 0.7, 2.0
    f = SquaredDistance(E, rng.standard_normal(3), 1.0)
    g = SquaredDistance(E, c, 1.0 / eta)
    closed = (Lbar * x + c / eta - f.grad(x)) / (Lbar + 1.0 / eta)
    assert np.allclose(crgd_step(f, g, WholeManifold(E), x, Lbar), closed, atol=1e-12)
    g_opaque = FunctionObjective(E, g.value, g.grad, L=1.0 / eta, mu=1.0 / eta)
    it = crgd_step(f, g_opaque, WholeManifold(E), x, Lbar)
    assert np.allclose(it, closed, atol=1e-8)


def test_crgd_step_zero_gradient_zero_g(manifold, rng):
    x = manifold.random_point(rng)
    zero = ZeroObjective(manifold)
    assert np.allclose(crgd_step(zero, zero, WholeManifold(manifold), x, 1.0), x)


def test_crgd_step_hyperbolic_matches_dense_sampling(rng):
    H = Hyperbolic(2)
    x = H.random_point(rng)
    c = H.exp(x, 0.8 * H.random_unit_tangent(x, rng))
    f = BusemannFunction(H, rng.standard_normal(2), 1.0)
    g = SquaredDistance(H, c, 2.0)
    Lbar = 1.5
    y = crgd_step(f, g, WholeManifold(H), x, Lbar)
    w = f.grad(x)

    def model(z):
        v = H.log(x, z)
        return H.inner(x, w, v) + 0.5 * Lbar * H.dist(x, z) ** 2 + g.value(z)

    e1, e2 = H.random_unit_tangent(x, rng), None
    b = H.random_tangent(x, rng)
    e2 = b - H.inner(x, b, e1) * e1
    e2 = e2 / H.norm(x, e2)
    best = math.inf
    for r in np.linspace(0.0, 2.0, 201):
        for th in np.linspace(0.0, 2 * math.pi, 360, endpoint=False):
            z = H.exp(x, r * (math.cos(th) * e1 + math.sin(th) * e2))
            best = min(best, model(z))
    assert model(y) <= best + 1e-10
    assert model(y) >= best - 1e-3


def test_crgd_linear_rate_euclidean(rng):
    E = Euclidean(4)
    A = np.diag([1.0, 2.0, 3.0, 4.0])
    f = FunctionObjective(E, lambda x: 0.5 * x @ A @ x, lambda x: A @ x, L=4.0, mu=1.0)
    g = SquaredDistance(E, np.ones(4), 0.5)
    xstar = np.linalg.solve(A + 0.5 * np.eye(4), 0.5 * np.ones(4))
    Fstar = f.value(xstar) + g.value(xstar)
    _, rep = crgd(f, g, WholeManifold(E), 5 * rng.standard_normal(4), StoppingRule.fixed(25), Lbar=4.0, track=True)
    gaps = np.array(rep.values) - Fstar
    gaps = gaps[gaps > 1e-13]
    slope = np.polyfit(np.arange(len(gaps)), np.log(gaps), 1)[0]
    assert slope <= math.log(1 - min(1.5 / 16.0, 0.5)) + 0.05


def test_crgd_warm_start_bound(rng):
    H = Hyperbolic(2)
    c = H.random_point(rng)
    f = SquaredDistance(H, H.exp(c, H.random_unit_tangent(c, rng)), 1.0, radius=3.0)
    g = SquaredDistance(H, c, 1.0)
    ball = GeodesicBall(H, c, 1.5)
    x0 = c
    x1, _ = crgd(f, g, ball, x0, StoppingRule.fixed(1), Lbar=f.L)
    F = lambda z: f.value(z) + g.value(z)
    for z in near_points(H, rng, 30, spread=1.0):
        z = ball.project(z)
        assert F(x1) - F(z) <= 0.5 * f.L * H.dist(x0, z) ** 2 + 1e-10


def _true_prox(sub):
    x, _ = prgd(_Composite(sub), sub.set, sub.center, StoppingRule.grad_norm(1e-13, budget=100_000), L=sub.loss.L + 1 / sub.eta * 2)
    return x


class _Composite:
    def __init__(self, sub):
        self.sub = sub
        self.manifold = sub.manifold
        self.mu = 1.0 / sub.eta

    def value(self, x):
        return self.sub.value(x)

    def grad(self, x):
        return self.sub.grads(x)[1]


@pytest.mark.parametrize("method", ["prgd", "crgd", "rgd"])
def test_certified_prox_meets_guarantee(method, rng):
    H = Hyperbolic(3)
    c = H.random_point(rng)
    loss = SquaredDistance(H, H.exp(c, 1.5 * H.random_unit_tangent(c, rng)), 1.0, radius=3.0)
    sub = ProxSubproblem(loss, c, 0.5)
    eps = 1e-4
    x, rep = solve_prox_certified(sub, eps, method)
    xs = _true_prox(sub)
    d0 = H.dist(c, xs) ** 2
    assert sub.value(x) - sub.value(xs) <= eps * d0 + 1e-12
    assert H.dist(x, xs) ** 2 / (2 * sub.eta) <= eps * d0 + 1e-12
    assert rep.converged


def test_certified_prox_euclidean_closed_form():
    E = Euclidean(2)
    target = np.array([1.0, 2.0])
    loss = SquaredDistance(E, target, 2.0)
    c = np.zeros(2)
    eta = 0.5
    sub = ProxSubproblem(loss, c, eta)
    xs = (2.0 * target + c / eta) / (2.0 + 1 / eta)
    for method in ("prgd", "crgd", "rgd"):
        x, _ = solve_prox_certified(sub, 1e-6, method)
        assert np.sum((x - xs) ** 2) / (2 * eta) <= 1e-6 * np.sum((c - xs) ** 2)


def test_crgd_certificate_iteration_count():
    E = Euclidean(2)
    L, eps = 0.5, 1e-3
    loss = SquaredDistance(E, np.array([1.0, 0.0]), L)
    _, rep = solve_prox_certified(ProxSubproblem(loss, np.zeros(2), 1.0), eps, "crgd")
    assert rep.iterations == 1 + math.ceil(2 * math.log(L / (2 * eps)))


def test_huge_eps_takes_one_step_and_stationary_center_none():
    E = Euclidean(2)
    loss = SquaredDistance(E, np.array([1.0, 0.0]), 1.0)
    _, rep = solve_prox_certified(ProxSubproblem(loss, np.zeros(2), 1.0), 1e6, "prgd")
    assert rep.iterations == 1
    x, rep = solve_prox_certified(ProxSubproblem(ZeroObjective(E), np.ones(2), 1.0), 1e6, "prgd")
    assert rep.iterations == 0 and np.array_equal(x, np.ones(2))


def test_budget_error_carries_best_point():
    H = Hyperbolic(2)
    loss = SquaredDistance(H, H.exp(H.apex(), np.array([0.0, 2.0, 0.0])), 1.0, radius=3.0)
    with pytest.raises(SubsolverBudgetError) as info:
        solve_prox_certified(ProxSubproblem(loss, H.apex(), 1.0), 1e-12, "prgd", budget=3)
    assert info.value.point is not None and info.value.report.iterations == 3


def test_callable_eps_receives_local_quantities():
    E = Euclidean(2)
    seen = []
    loss = SquaredDistance(E, np.array([1.0, 0.0]), 1.0)

    def eps(gnorm, dist):
        seen.append((gnorm, dist))
        return 1e-3

    solve_prox_certified(ProxSubproblem(loss, np.zeros(2), 1.0), eps, "prgd")
    assert seen and all(g >= 0 and d >= 0 for g, d in seen)


def test_fixed_prox_counts_gradient_calls(rng):
    S = SPD(3)
    c = S.random_point(rng)
    loss = SquaredDistance(S, S.random_point(rng), 1.0)
    _, rep = solve_prox_fixed(ProxSubproblem(loss, c, 0.1, GeodesicBall(S, c, 1.0)), 3, 0.05)
    assert rep.gradient_calls == 3 and rep.iterations == 3


@pytest.mark.parametrize("M", [Euclidean(3), Hyperbolic(3), SPD(3)], ids=lambda m: m.spec)
def test_oracle_gradients_match_finite_differences(M, rng):
    p, c, x = near_points(M, rng, 3)
    oracles = [SquaredDistance(M, p, 1.3)]
    if isinstance(M, Hyperbolic):
        oracles.append(BusemannFunction(M, rng.standard_normal(3), 0.7))
    sub = ProxSubproblem(oracles[0], c, 0.4)
    oracles.append(_Composite(sub))
    for f in oracles:
        for _ in range(10):
            v = M.random_unit_tangent(x, rng)
            fd = finite_diff_directional(f, M, x, v, h=1e-6, central=True)
            assert fd == pytest.approx(M.inner(x, f.grad(x), v), abs=1e-5)


def test_strong_convexity_gradient_gap(manifold, rng):
    p = manifold.random_point(rng)
    f = SquaredDistance(manifold, p, 2.0)
    for _ in range(20):
        x, y = near_points(manifold, rng, 2)
        diff = f.grad(x) - manifold.transport(y, x, f.grad(y))
        assert f.mu * manifold.dist(x, y) <= manifold.norm(x, diff) + 1e-8


def test_zeta_radius_used_by_squared_distance():
    H = Hyperbolic(2)
    f = SquaredDistance(H, H.apex(), 2.0, radius=1.0)
    assert f.L == pytest.approx(2.0 * zeta(1.0, -1.0))
