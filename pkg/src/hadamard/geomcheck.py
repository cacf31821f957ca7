"""Randomized invariant checks for a manifold implementation."""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import zeta
from .seeding import rng_for

__all__ = ["CheckCount", "SuiteResult", "geometry_suite", "format_suite"]


@dataclass
class CheckCount:
    passed: int = 0
    total: int = 0
    worst: float = 0.0

    def add(self, excess):
        # excess <= 0 means the check holds
        self.total += 1
        self.passed += excess <= 0.0
        self.worst = max(self.worst, excess)

    @property
    def ok(self):
        return self.passed == self.total


@dataclass
class SuiteResult:
    manifold: str
    checks: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(c.ok for c in self.checks.values())


def _spread_point(M, center, rng, max_dist):
    u = M.random_unit_tangent(center, rng)
    return M.exp(center, M.scale(u, max_dist * rng.uniform()))


def geometry_suite(M, trials=1000, seed=0, max_dist=2.0, tol=1e-8):
    """Run roundtrip, transport isometry and cosine-law checks on random triangles.

    Triangle vertices are drawn within ``max_dist`` of a random point.
    """
    rng = rng_for(seed, f"geomtest:{M.spec}")
    names = ("exp_log_roundtrip", "log_exp_roundtrip", "transport_isometry", "cosine_law_lower", "cosine_law_upper")
    res = SuiteResult(M.spec, {k: CheckCount() for k in names})
    c = res.checks
    kmin = M.kmin
    for _ in range(trials):
        o = M.random_point(rng)
        x, y, p = (_spread_point(M, o, rng, max_dist) for _ in range(3))
        v = M.scale(M.random_unit_tangent(x, rng), max_dist * rng.uniform())
        w = M.random_tangent(x, rng)

        back = M.log(x, M.exp(x, v))
        diff = M.add(back, M.scale(v, -1.0))
        c["exp_log_roundtrip"].add(M.norm(x, diff) - tol * max(1.0, M.norm(x, v)))
        dxy = float(M.dist(x, y))
        c["log_exp_roundtrip"].add(float(M.dist(M.exp(x, M.log(x, y)), y)) - tol * max(1.0, dxy))

        tv, tw = M.transport(x, y, v), M.transport(x, y, w)
        scale = max(1.0, M.norm(x, v) * M.norm(x, w))
        e1 = abs(M.norm(y, tv) - M.norm(x, v)) - tol * max(1.0, M.norm(x, v))
        e2 = abs(float(M.inner(y, tv, tw)) - float(M.inner(x, v, w))) - tol * scale
        c["transport_isometry"].add(max(e1, e2))

        dpx, dpy = float(M.dist(p, x)), float(M.dist(p, y))
        D = max(dxy, dpx, dpy)
        lhs = float(M.inner(x, M.log(x, y), M.log(x, p)))
        common = 0.5 * dpx * dpx - 0.5 * dpy * dpy
        slack = 1e-9 * max(1.0, D * D)
        # delta = 1 on Hadamard manifolds
        c["cosine_law_lower"].add((0.5 * dxy * dxy + common) - lhs - slack)
        c["cosine_law_upper"].add(lhs - (0.5 * zeta(D, kmin) * dxy * dxy + common) - slack)
    return res


def format_suite(res):
    lines = []
    for name, cnt in res.checks.items():
        worst = "" if cnt.ok else f" (worst excess {cnt.worst:.3e})"
        lines.append(f"{res.manifold:<16} {name:<20} {cnt.passed}/{cnt.total}{worst}")
    return lines
