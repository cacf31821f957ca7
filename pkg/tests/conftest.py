import numpy as np
import pytest

from hadamard.manifolds import SPD, Euclidean, Hyperbolic


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


MANIFOLDS = [Euclidean(3), Hyperbolic(3), SPD(3)]


@pytest.fixture(params=MANIFOLDS, ids=lambda m: m.spec)
def manifold(request):
    return request.param


def near_points(M, rng, k, spread=1.5):
    o = M.random_point(rng)
    return [M.exp(o, M.scale(M.random_unit_tangent(o, rng), spread * rng.uniform())) for _ in range(k)]


# (criterion, passed, detail) lines collected by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
