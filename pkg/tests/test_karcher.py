import csv

import numpy as np
import pytest

from hadamard.exceptions import GeometryDomainError
from hadamard.geometry import finite_diff_directional, zeta
from hadamard.karcher import (
    ExperimentConfig,
    KarcherInstance,
    RobustKarcherSaddle,
    generate_instance,
    karcher_mean,
    karcher_sets,
    load_instance,
    monotone_within_slack,
    run_experiment,
    save_instance,
    solve_robust_karcher,
)
from hadamard.manifolds import SPD, Euclidean, Hyperbolic


@pytest.mark.parametrize("M", [Euclidean(4), Hyperbolic(6), SPD(3)], ids=lambda m: m.spec)
def test_generated_anchors_at_unit_distance(M):
    inst = generate_instance(M, 12, seed=5)
    d = M.dist(np.repeat(inst.base[None], 12, axis=0), inst.anchors)
    assert np.max(np.abs(d - 1.0)) <= 1e-10
    assert inst.Dbar == pytest.approx(1.01)
    assert inst.gamma == zeta(1.01, M.kmin)
    assert inst.gamma - inst.zeta_bar >= 0.0


def test_euclidean_default_gamma_is_one():
    assert generate_instance(Euclidean(3), 4).gamma == 1.0


def test_generation_is_deterministic():
    a = generate_instance(Hyperbolic(5), 3, seed=9)
    b = generate_instance(Hyperbolic(5), 3, seed=9)
    assert np.array_equal(a.anchors, b.anchors) and np.array_equal(a.base, b.base)
    with pytest.raises(ValueError):
        generate_instance(Hyperbolic(5), 0)


def test_instance_rejects_small_gamma():
    H = Hyperbolic(2)
    inst = generate_instance(H, 2)
    with pytest.raises(GeometryDomainError):
        KarcherInstance(H, 2, inst.anchors, inst.base, 0.01, 0.5)


def test_two_point_value_example():
    E = Euclidean(2)
    Y = np.array([[0.0, 0.0], [2.0, 0.0]])
    inst = KarcherInstance(E, 2, Y, np.array([1.0, 0.0]), 0.01, 1.0)
    oracle = RobustKarcherSaddle(inst)
    assert oracle.value(np.array([1.0, 0.0]), Y) == 1.0
    assert oracle.L == 2.0 and oracle.mu_x == 1.0 and oracle.mu_y == 0.0


@pytest.mark.parametrize("M", [Euclidean(3), Hyperbolic(3), SPD(2)], ids=lambda m: m.spec)
def test_grad_x_vanishes_at_mean(M):
    inst = generate_instance(M, 6, seed=1)
    m = karcher_mean(M, inst.anchors, tol=1e-12)
    g = RobustKarcherSaddle(inst).grad_x(m, inst.anchors)
    assert M.norm(m, g) <= 1e-10


@pytest.mark.parametrize("M", [Euclidean(3), Hyperbolic(3), SPD(2)], ids=lambda m: m.spec)
def test_block_gradients_match_finite_differences(M, rng):
    inst = generate_instance(M, 4, Rbar=0.1, seed=2)
    oracle = RobustKarcherSaddle(inst)
    P = inst.power
    x = M.exp(inst.base, M.scale(M.random_unit_tangent(inst.base, rng), 0.5))
    Y = P.exp(inst.anchors, P.scale(P.random_unit_tangent(inst.anchors, rng), 0.1))
    fy = oracle.neg_y_slice(x)
    fx = oracle.x_slice(Y)
    for _ in range(5):
        v = M.random_unit_tangent(x, rng)
        fd = finite_diff_directional(fx, M, x, v, h=1e-6, central=True)
        assert fd == pytest.approx(M.inner(x, oracle.grad_x(x, Y), v), abs=1e-5)
        w = P.random_unit_tangent(Y, rng)
        fd = finite_diff_directional(fy, P, Y, w, h=1e-6, central=True)
        assert -fd == pytest.approx(P.inner(Y, oracle.grad_y(x, Y), w), abs=1e-5)


def test_karcher_mean_examples(rng):
    H = Hyperbolic(3)
    p = H.random_point(rng)
    assert H.dist(karcher_mean(H, p[None]), p) <= 1e-12
    E = Euclidean(3)
    pts = rng.standard_normal((7, 3))
    assert np.allclose(karcher_mean(E, pts, tol=1e-12), pts.mean(axis=0), atol=1e-12)
    w = rng.uniform(0.1, 1.0, 7)
    assert np.allclose(karcher_mean(E, pts, w, tol=1e-12), w @ pts / w.sum(), atol=1e-12)


def _mpow(A, p):
    w, V = np.linalg.eigh(A)
    return (V * w**p) @ V.T


def test_spd_two_point_midpoint(rng):
    S = SPD(3)
    X, Y = S.random_point(rng), S.random_point(rng)
    r, ri = _mpow(X, 0.5), _mpow(X, -0.5)
    mid = r @ _mpow(ri @ Y @ ri, 0.5) @ r
    got = karcher_mean(S, np.stack([X, Y]))
    assert np.max(np.abs(got - mid)) <= 1e-7


def test_sets_and_constraint_respect():
    H = Hyperbolic(4)
    inst = generate_instance(H, 5, Rbar=0.05, seed=4)
    X, Y = karcher_sets(inst)
    assert X.radius == pytest.approx(1.05) and X.bounded and Y.bounded
    _, Yr = karcher_sets(inst, regularized=True)
    assert not Yr.bounded
    cfg = ExperimentConfig(iterations=20, lam=0.1, eta=0.1, gap_cadence=10)
    res = run_experiment(inst, cfg, _tmp(), plot=False)
    d = H.dist(inst.anchors, res.output[1])
    assert np.all(d <= inst.Rbar + 1e-9)
    assert X.contains(res.output[0])


def _tmp():
    import tempfile

    return tempfile.mkdtemp(prefix="karcher-test-")


def test_run_experiment_call_accounting_and_files(tmp_path):
    inst = generate_instance(Euclidean(2), 3, seed=0)
    cfg = ExperimentConfig(iterations=1000, lam=0.1, eta=0.1, gap_cadence=100)
    res = run_experiment(inst, cfg, tmp_path)
    assert res.gradient_calls == 12_000
    with open(res.files["trace"]) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1000
    assert rows[-1]["cumulative_gradient_calls"] == "12000"
    measured = res.trace.measured()
    assert [r for r, _, _ in measured] == [1] + list(range(100, 1001, 100))
    for _, g, s in measured:
        assert np.isfinite(g) and g >= -s - 1e-12
    assert (tmp_path / "karcher_gap.svg").exists()
    assert load_instance(res.files["instance"]).n == 3


def test_grid_search_picks_a_grid_cell(tmp_path):
    inst = generate_instance(Euclidean(2), 3, seed=1)
    cfg = ExperimentConfig(iterations=20, search_iterations=10, gap_cadence=10)
    res = run_experiment(inst, cfg, tmp_path, plot=False)
    assert len(res.grid) == 6
    assert (res.lam, res.eta) in {(a, b) for a, b, _ in res.grid}
    best = min(g for _, _, g in res.grid)
    assert [g for a, b, g in res.grid if (a, b) == (res.lam, res.eta)] == [best]


def test_experiment_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(iterations=0)
    with pytest.raises(ValueError):
        ExperimentConfig(lambda_grid=())
    with pytest.raises(ValueError):
        ExperimentConfig(eta_grid=(0.1, -1.0))


@pytest.mark.parametrize("M", [Euclidean(3), Hyperbolic(4), SPD(2)], ids=lambda m: m.spec)
def test_instance_round_trip_bit_exact(M, tmp_path):
    inst = generate_instance(M, 4, Rbar=0.03, seed=11)
    path = save_instance(inst, tmp_path / "inst.txt")
    back = load_instance(path)
    assert back.manifold.spec == M.spec and back.n == 4 and back.seed == 11
    assert back.Rbar == inst.Rbar and back.gamma == inst.gamma and back.spread == inst.spread
    assert np.array_equal(back.base, inst.base) and np.array_equal(back.anchors, inst.anchors)


def test_load_instance_reports_missing_field(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("manifold = euclidean:2\nn = 1\n")
    with pytest.raises(ValueError, match="missing field"):
        load_instance(p)


def test_monotone_within_slack():
    assert monotone_within_slack([(1, 1.0, 0.0), (2, 0.5, 0.0), (3, 0.5 + 1e-3, 1e-3)])
    assert not monotone_within_slack([(1, 1.0, 0.0), (2, 1.1, 0.01)])


@pytest.mark.parametrize("M,gamma", [(Euclidean(2), 2.0), (Hyperbolic(3), 4.0)], ids=["euclidean", "hyperbolic"])
def test_constrained_approaches_regularized_as_radius_grows(M, gamma):
    diffs = []
    for Rbar in (0.01, 0.1, 1.0):
        inst = generate_instance(M, 5, Rbar, seed=3, gamma=gamma)
        oracle = RobustKarcherSaddle(inst)
        xc, yc = solve_robust_karcher(inst)
        xr, yr = solve_robust_karcher(inst, regularized=True)
        diffs.append(abs(oracle.value(xc, yc) - oracle.value(xr, yr)))
    assert diffs[0] > diffs[1] > diffs[2]
