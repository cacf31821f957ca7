"""Geodesically convex constraint sets: balls, their products, and the whole space."""

from __future__ import annotations

import math

import numpy as np

from .exceptions import GeometryDomainError
from .manifolds import PowerManifold, ProductManifold

__all__ = [
    "ConstraintSet",
    "WholeManifold",
    "GeodesicBall",
    "PowerBall",
    "ProductSet",
    "UNBOUNDED",
]

# diameter of an unbounded set
UNBOUNDED = math.inf


class ConstraintSet:
    """Base class. Subclasses define ``manifold``, membership and projection.

    ``optimality_slack(x, grad, mu)`` bounds ``phi(x) - min_set phi`` for a
    g-convex ``phi`` whose Riemannian gradient at the feasible point ``x`` is
    ``grad``.  It is used to certify duality gaps.
    """

    manifold = None

    @property
    def diameter(self):
        raise NotImplementedError

    @property
    def bounded(self):
        return math.isfinite(self.diameter)

    def contains(self, x, tol=1e-9):
        raise NotImplementedError

    def project(self, x):
        raise NotImplementedError

    def optimality_slack(self, x, grad, mu=0.0):
        raise NotImplementedError


def _strong_convexity_slack(manifold, x, grad, mu):
    if mu > 0.0:
        g2 = float(manifold.inner(x, grad, grad))
        return g2 / (2.0 * mu)
    return math.inf


class WholeManifold(ConstraintSet):
    """The unconstrained domain: ``project`` is the identity."""

    def __init__(self, manifold):
        self.manifold = manifold

    @property
    def diameter(self):
        return UNBOUNDED

    def contains(self, x, tol=1e-9):
        return True

    def project(self, x):
        return x

    def optimality_slack(self, x, grad, mu=0.0):
        return _strong_convexity_slack(self.manifold, x, grad, mu)

    def __repr__(self):
        return f"WholeManifold({self.manifold!r})"


def _ball_slack(manifold, center, radius, x, grad):
    """Per-component upper bound on ``max_{z in ball} <-grad, log_x z>``.

    Splits ``v = -grad`` along the outward radial direction at ``x``.  The
    radial part is bounded with the CAT(0) comparison inequality
    ``<log_x c, log_x z> >= (d(x,c)^2 + d(x,z)^2 - d(c,z)^2) / 2`` and the
    rest by Cauchy-Schwarz with ``d(x, z) <= s + r``.
    """
    v = -grad
    vv = np.maximum(manifold.inner(x, v, v), 0.0)
    vn = np.sqrt(vv)
    s = manifold.dist(center, x)
    tiny = s < 1e-12
    s_safe = np.where(tiny, 1.0, s)
    out_dir = -manifold.log(x, center)
    beta = manifold.inner(x, v, out_dir) / s_safe
    shape = np.shape(beta) + (1,) * (np.ndim(v) - np.ndim(beta))
    perp = v - np.reshape(beta / s_safe, shape) * out_dir
    rho = np.sqrt(np.maximum(manifold.inner(x, perp, perp), 0.0))
    s_in = np.minimum(s, radius)
    radial = beta * (radius * radius - s_in * s_in) / (2.0 * s_safe) + rho * (s + radius)
    crude = vn * (s + radius)
    best = np.where(beta >= 0.0, np.minimum(radial, crude), crude)
    return np.where(tiny, vn * radius, best)


class GeodesicBall(ConstraintSet):
    """Closed geodesic ball ``B(center, radius)``."""

    def __init__(self, manifold, center, radius):
        if not radius > 0:
            raise GeometryDomainError(f"ball radius must be positive, got {radius}")
        self.manifold = manifold
        self.center = center
        self.radius = float(radius)

    @property
    def diameter(self):
        return 2.0 * self.radius

    def contains(self, x, tol=1e-9):
        return bool(self.manifold.dist(self.center, x) <= self.radius + tol)

    def project(self, x):
        d = float(self.manifold.dist(self.center, x))
        if d <= self.radius:
            return x
        v = self.manifold.log(self.center, x)
        return self.manifold.exp(self.center, self.manifold.scale(v, self.radius / d))

    def optimality_slack(self, x, grad, mu=0.0):
        b = float(_ball_slack(self.manifold, self.center, self.radius, x, grad))
        return min(b, _strong_convexity_slack(self.manifold, x, grad, mu))

    def __repr__(self):
        return f"GeodesicBall(radius={self.radius}, manifold={self.manifold!r})"


class PowerBall(ConstraintSet):
    """Product of balls ``B(c_i, r)`` on a :class:`PowerManifold`, vectorized."""

    def __init__(self, manifold, centers, radius):
        if not isinstance(manifold, PowerManifold):
            raise GeometryDomainError("PowerBall requires a PowerManifold")
        if not radius > 0:
            raise GeometryDomainError(f"ball radius must be positive, got {radius}")
        self.manifold = manifold
        self.center = np.asarray(centers, dtype=float)
        self.radius = float(radius)

    @property
    def diameter(self):
        return 2.0 * self.radius * self.manifold.n

    def contains(self, x, tol=1e-9):
        d = self.manifold.component_dist(self.center, x)
        return bool(np.all(d <= self.radius + tol))

    def project(self, x):
        base = self.manifold.base
        d = base.dist(self.center, x)
        if np.all(d <= self.radius):
            return x
        shape = (-1,) + (1,) * (np.ndim(x) - 1)
        scale = np.where(d > self.radius, self.radius / np.maximum(d, 1e-300), 1.0)
        v = base.log(self.center, x) * scale.reshape(shape)
        y = base.exp(self.center, v)
        keep = (d <= self.radius).reshape(shape)
        return np.where(keep, x, y)

    def optimality_slack(self, x, grad, mu=0.0):
        per = _ball_slack(self.manifold.base, self.center, self.radius, x, grad)
        return min(float(np.sum(per)), _strong_convexity_slack(self.manifold, x, grad, mu))

    def __repr__(self):
        return f"PowerBall(n={self.manifold.n}, radius={self.radius})"


class ProductSet(ConstraintSet):
    """Cartesian product of two sets; projection acts componentwise."""

    def __init__(self, first, second):
        self.first = first
        self.second = second
        self.manifold = ProductManifold(first.manifold, second.manifold)

    @property
    def diameter(self):
        return self.first.diameter + self.second.diameter

    def contains(self, x, tol=1e-9):
        return self.first.contains(x[0], tol) and self.second.contains(x[1], tol)

    def project(self, x):
        return (self.first.project(x[0]), self.second.project(x[1]))

    def optimality_slack(self, x, grad, mu=0.0):
        a = self.first.optimality_slack(x[0], grad[0])
        b = self.second.optimality_slack(x[1], grad[1])
        return min(a + b, _strong_convexity_slack(self.manifold, x, grad, mu))

    def __repr__(self):
        return f"ProductSet({self.first!r}, {self.second!r})"
