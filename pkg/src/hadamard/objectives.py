"""Value/gradient oracles for minimization and saddle problems.

Gradients are Riemannian gradients expressed in the manifold's tangent
representation.  Every oracle declares a smoothness constant ``L`` and a
strong convexity modulus ``mu`` valid on the region it is used on.
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import GeometryDomainError
from .geometry import zeta
from .manifolds import Euclidean, Hyperbolic, minkowski

__all__ = [
    "Objective",
    "FunctionObjective",
    "ZeroObjective",
    "SquaredDistance",
    "BusemannFunction",
    "SumObjective",
    "ScaledObjective",
    "SaddleOracle",
    "FunctionSaddle",
    "BilinearSaddle",
    "SeparableSaddle",
]


class Objective:
    """Base oracle. ``L`` smoothness, ``mu`` strong convexity, optional ``lipschitz``."""

    manifold = None
    L = 0.0
    mu = 0.0
    lipschitz = None

    def value(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.value(x)

    def grad_norm(self, x):
        return self.manifold.norm(x, self.grad(x))

    def __add__(self, other):
        return SumObjective(self, other)


class FunctionObjective(Objective):
    """Wrap a pair of callables as an oracle."""

    def __init__(self, manifold, value, grad, L, mu=0.0, lipschitz=None):
        self.manifold = manifold
        self._value = value
        self._grad = grad
        self.L = float(L)
        self.mu = float(mu)
        self.lipschitz = lipschitz

    def value(self, x):
        return float(self._value(x))

    def grad(self, x):
        return self._grad(x)


class ZeroObjective(Objective):
    def __init__(self, manifold):
        self.manifold = manifold
        self.L = 0.0
        self.mu = 0.0
        self.lipschitz = 0.0

    def value(self, x):
        return 0.0

    def grad(self, x):
        return self.manifold.zero_vector(x)


class SquaredDistance(Objective):
    """``(weight/2) d(x, target)^2``.

    Smooth with constant ``weight * zeta(radius, kmin)`` on the ball of the
    given radius around ``target`` and ``weight``-strongly g-convex.
    """

    def __init__(self, manifold, target, weight=1.0, radius=0.0):
        if weight < 0:
            raise GeometryDomainError("weight must be nonnegative")
        self.manifold = manifold
        self.target = target
        self.weight = float(weight)
        self.radius = float(radius)
        self.L = self.weight * zeta(self.radius, manifold.kmin)
        self.mu = self.weight
        self.lipschitz = self.weight * self.radius if self.radius > 0 else None

    def value(self, x):
        return 0.5 * self.weight * float(np.sum(self.manifold.dist(x, self.target) ** 2))

    def grad(self, x):
        return self.manifold.scale(self.manifold.log(x, self.target), -self.weight)


class BusemannFunction(Objective):
    """``scale * log(-<x, xi>)`` on the hyperboloid, with ``xi`` a null vector.

    Convex with unit-norm gradient (times ``scale``) and Hessian bounded by
    the metric, hence ``L = lipschitz = scale``.
    """

    def __init__(self, manifold, direction, scale=1.0):
        if not isinstance(manifold, Hyperbolic):
            raise GeometryDomainError("Busemann functions are defined here for Hyperbolic only")
        u = np.asarray(direction, dtype=float)
        if u.shape != (manifold.dim,):
            raise GeometryDomainError(f"direction must have shape ({manifold.dim},)")
        u = u / np.linalg.norm(u)
        self.manifold = manifold
        self.xi = np.concatenate([[1.0], u])
        self.scale = float(scale)
        self.L = self.scale
        self.mu = 0.0
        self.lipschitz = self.scale

    def value(self, x):
        return self.scale * float(np.log(-minkowski(x, self.xi)))

    def grad(self, x):
        return self.scale * (self.xi / minkowski(x, self.xi) + x)


class SumObjective(Objective):
    def __init__(self, *terms):
        if not terms:
            raise ValueError("need at least one term")
        self.terms = terms
        self.manifold = terms[0].manifold
        self.L = sum(t.L for t in terms)
        self.mu = sum(t.mu for t in terms)
        lips = [t.lipschitz for t in terms]
        self.lipschitz = None if any(v is None for v in lips) else sum(lips)

    def value(self, x):
        return sum(t.value(x) for t in self.terms)

    def grad(self, x):
        g = self.terms[0].grad(x)
        for t in self.terms[1:]:
            g = self.manifold.add(g, t.grad(x))
        return g


class ScaledObjective(Objective):
    def __init__(self, base, factor):
        if factor < 0:
            raise ValueError("factor must be nonnegative")
        self.base = base
        self.factor = float(factor)
        self.manifold = base.manifold
        self.L = self.factor * base.L
        self.mu = self.factor * base.mu
        self.lipschitz = None if base.lipschitz is None else self.factor * base.lipschitz

    def value(self, x):
        return self.factor * self.base.value(x)

    def grad(self, x):
        return self.manifold.scale(self.base.grad(x), self.factor)


class _SliceX(Objective):
    # x -> f(x, y)
    def __init__(self, oracle, y):
        self.oracle = oracle
        self.y = y
        self.manifold = oracle.manifold_x
        self.L = oracle.L
        self.mu = oracle.mu_x
        self.lipschitz = None

    def value(self, x):
        return self.oracle.value(x, self.y)

    def grad(self, x):
        return self.oracle.grad_x(x, self.y)


class _NegSliceY(Objective):
    # y -> -f(x, y)
    def __init__(self, oracle, x):
        self.oracle = oracle
        self.x = x
        self.manifold = oracle.manifold_y
        self.L = oracle.L
        self.mu = oracle.mu_y
        self.lipschitz = None

    def value(self, y):
        return -self.oracle.value(self.x, y)

    def grad(self, y):
        return self.manifold.scale(self.oracle.grad_y(self.x, y), -1.0)


class SaddleOracle:
    """``f(x, y)``, g-convex in ``x`` and g-concave in ``y``.

    ``grad_y`` is the ascent gradient of ``f`` in ``y``.  ``mu`` is the common
    modulus ``min(mu_x, mu_y)``.
    """

    manifold_x = None
    manifold_y = None
    L = 0.0
    mu_x = 0.0
    mu_y = 0.0

    @property
    def mu(self):
        return min(self.mu_x, self.mu_y)

    def value(self, x, y):
        raise NotImplementedError

    def grad_x(self, x, y):
        raise NotImplementedError

    def grad_y(self, x, y):
        raise NotImplementedError

    def x_slice(self, y):
        """Oracle for ``x -> f(x, y)``."""
        return _SliceX(self, y)

    def neg_y_slice(self, x):
        """Oracle for ``y -> -f(x, y)`` (minimized to maximize ``f``)."""
        return _NegSliceY(self, x)

    # optional; problems with a known solution override this
    saddle = None


class FunctionSaddle(SaddleOracle):
    def __init__(self, manifold_x, manifold_y, value, grad_x, grad_y, L, mu_x=0.0, mu_y=0.0):
        self.manifold_x = manifold_x
        self.manifold_y = manifold_y
        self._value = value
        self._gx = grad_x
        self._gy = grad_y
        self.L = float(L)
        self.mu_x = float(mu_x)
        self.mu_y = float(mu_y)

    def value(self, x, y):
        return float(self._value(x, y))

    def grad_x(self, x, y):
        return self._gx(x, y)

    def grad_y(self, x, y):
        return self._gy(x, y)


class BilinearSaddle(SaddleOracle):
    """Euclidean ``(mu/2)|x-a|^2 + x^T B y - (mu/2)|y-b|^2 + c^T x - e^T y``.

    The unconstrained saddle solves a linear system and is exposed as
    ``saddle`` (``None`` when the system is singular).
    """

    def __init__(self, B, mu=0.0, a=None, b=None, c=None, e=None):
        B = np.atleast_2d(np.asarray(B, dtype=float))
        m, n = B.shape
        self.B = B
        self.a = np.zeros(m) if a is None else np.asarray(a, dtype=float)
        self.b = np.zeros(n) if b is None else np.asarray(b, dtype=float)
        self.c = np.zeros(m) if c is None else np.asarray(c, dtype=float)
        self.e = np.zeros(n) if e is None else np.asarray(e, dtype=float)
        self.manifold_x = Euclidean(m)
        self.manifold_y = Euclidean(n)
        self.mu_x = self.mu_y = float(mu)
        self.L = math.hypot(float(mu), float(np.linalg.norm(B, 2)))
        self.saddle = self._solve()

    def _solve(self):
        m, n = self.B.shape
        mu = self.mu_x
        K = np.block([[mu * np.eye(m), self.B], [self.B.T, -mu * np.eye(n)]])
        rhs = np.concatenate([mu * self.a - self.c, self.e - mu * self.b])
        try:
            z = np.linalg.solve(K, rhs)
        except np.linalg.LinAlgError:
            return None
        return z[:m], z[m:]

    def value(self, x, y):
        mu = self.mu_x
        return float(
            0.5 * mu * np.sum((x - self.a) ** 2)
            + x @ self.B @ y
            - 0.5 * mu * np.sum((y - self.b) ** 2)
            + self.c @ x
            - self.e @ y
        )

    def grad_x(self, x, y):
        return self.mu_x * (x - self.a) + self.B @ y + self.c

    def grad_y(self, x, y):
        return self.B.T @ x - self.mu_y * (y - self.b) - self.e


class SeparableSaddle(SaddleOracle):
    """``phi_x(x) - phi_y(y)`` for g-convex ``phi_x``, ``phi_y``.

    The saddle is the pair of minimizers, supplied by the caller when known.
    """

    def __init__(self, phi_x, phi_y, saddle=None):
        self.phi_x = phi_x
        self.phi_y = phi_y
        self.manifold_x = phi_x.manifold
        self.manifold_y = phi_y.manifold
        self.L = max(phi_x.L, phi_y.L)
        self.mu_x = phi_x.mu
        self.mu_y = phi_y.mu
        self.saddle = saddle

    def value(self, x, y):
        return self.phi_x.value(x) - self.phi_y.value(y)

    def grad_x(self, x, y):
        return self.phi_x.grad(x)

    def grad_y(self, x, y):
        return self.manifold_y.scale(self.phi_y.grad(y), -1.0)
