"""Manifold abstraction and curvature constants for Hadamard manifolds.

Points and tangent vectors are plain numpy arrays in the ambient
representation of the owning manifold (product manifolds use tuples).
A tangent vector carries no reference to its base point; every operation
takes the base point explicitly, as in most Riemannian optimization
libraries.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

from .exceptions import GeometryDomainError, UnsupportedGeometryError

__all__ = [
    "CurvatureBounds",
    "GeometricConstants",
    "Manifold",
    "zeta",
    "delta",
    "geometric_constants",
    "finite_diff_directional",
]

# below this value of r*sqrt|k|, x*coth(x) is evaluated by its Taylor series
_ZETA_TAYLOR_CUTOFF = 1e-4


def zeta(r, kmin):
    r"""Curvature distortion constant :math:`\zeta_r`.

    .. math::
        \zeta_r = r\sqrt{|\kappa|}\coth(r\sqrt{|\kappa|}) \quad (\kappa < 0),
        \qquad \zeta_r = 1 \quad (\kappa \ge 0)

    Parameters
    ----------
    r : float
        Nonnegative radius.
    kmin : float
        Lower bound on the sectional curvature.

    Returns
    -------
    float
        A value ``>= 1``.
    """
    r = float(r)
    if not r >= 0.0:
        raise GeometryDomainError(f"zeta requires r >= 0, got {r!r}")
    if kmin >= 0.0:
        return 1.0
    x = r * math.sqrt(-kmin)
    if x < _ZETA_TAYLOR_CUTOFF:
        x2 = x * x
        return 1.0 + x2 / 3.0 - x2 * x2 / 45.0
    if x > 20.0:
        # coth(x) == 1 to double precision
        return x
    return x / math.tanh(x)


def delta(r, kmax):
    """Lower curvature distortion constant, identically 1 for ``kmax <= 0``."""
    r = float(r)
    if not r >= 0.0:
        raise GeometryDomainError(f"delta requires r >= 0, got {r!r}")
    if kmax > 0.0:
        raise UnsupportedGeometryError(
            f"positive curvature upper bound {kmax} is not supported"
        )
    return 1.0


@dataclass(frozen=True)
class CurvatureBounds:
    """Sectional curvature bounds ``kmin <= kmax <= 0``."""

    kmin: float
    kmax: float

    def __post_init__(self):
        if not (self.kmin <= self.kmax):
            raise GeometryDomainError(f"kmin={self.kmin} exceeds kmax={self.kmax}")
        if self.kmax > 0.0:
            raise UnsupportedGeometryError(f"kmax={self.kmax} > 0 is not Hadamard")


@dataclass(frozen=True)
class GeometricConstants:
    zeta: float
    delta: float
    radius: float


def geometric_constants(r, bounds):
    return GeometricConstants(zeta(r, bounds.kmin), delta(r, bounds.kmax), float(r))


class Manifold(ABC):
    """Abstract Hadamard manifold with exact exponential and logarithmic maps.

    Subclasses implement the primitives; ``norm``, ``geodesic_point`` and the
    distance-squared helpers are derived from them.
    """

    name = "manifold"

    @property
    @abstractmethod
    def curvature(self) -> CurvatureBounds:
        """Sectional curvature bounds."""

    @property
    def kmin(self):
        return self.curvature.kmin

    @property
    @abstractmethod
    def dim(self) -> int:
        """Intrinsic dimension."""

    @abstractmethod
    def exp(self, x, v):
        """Follow the geodesic from ``x`` with initial velocity ``v`` for unit time."""

    @abstractmethod
    def log(self, x, y):
        """Inverse of :meth:`exp`: the tangent vector at ``x`` pointing to ``y``."""

    @abstractmethod
    def dist(self, x, y):
        """Geodesic distance."""

    @abstractmethod
    def inner(self, x, u, v):
        """Riemannian inner product of tangent vectors at ``x``."""

    @abstractmethod
    def transport(self, x, y, v):
        """Parallel transport of ``v`` from ``x`` to ``y`` along the geodesic."""

    @abstractmethod
    def random_point(self, rng):
        """Draw a point; deterministic given the generator state."""

    @abstractmethod
    def random_tangent(self, x, rng):
        """Draw a tangent vector at ``x``."""

    @abstractmethod
    def zero_vector(self, x):
        """Zero tangent vector at ``x``."""

    @abstractmethod
    def check_point(self, x, atol=1e-10) -> bool:
        """Whether ``x`` satisfies the membership equation to ``atol``."""

    @abstractmethod
    def check_tangent(self, x, v, atol=1e-10) -> bool:
        """Whether ``v`` lies in the tangent space at ``x`` to ``atol``."""

    @abstractmethod
    def log_adjoint(self, x, y, w):
        r"""Riemannian gradient at ``y`` of :math:`y \mapsto \langle w, \log_x y\rangle_x`.

        Needed by the composite gradient step, whose model contains a
        linearization of the smooth part in the tangent space at ``x``.
        """

    def norm(self, x, v):
        return math.sqrt(max(float(self.inner(x, v, v)), 0.0))

    def random_unit_tangent(self, x, rng):
        v = self.random_tangent(x, rng)
        n = self.norm(x, v)
        while n == 0.0:
            v = self.random_tangent(x, rng)
            n = self.norm(x, v)
        return self.scale(v, 1.0 / n)

    # tangent arithmetic; product manifolds override these for tuples
    def scale(self, v, a):
        return a * v

    def add(self, u, v):
        return u + v

    def geodesic_point(self, x, y, t):
        """Point at fraction ``t`` of the way from ``x`` to ``y``."""
        if not 0.0 <= t <= 1.0:
            raise GeometryDomainError(f"geodesic parameter t={t} outside [0, 1]")
        if t == 0.0:
            return x
        if t == 1.0:
            return y
        return self.exp(x, self.scale(self.log(x, y), t))

    def dist_squared(self, x, y):
        return self.dist(x, y) ** 2

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


def finite_diff_directional(f, manifold, x, v, h=1e-6, central=False):
    """Difference quotient of ``f`` along the geodesic through ``x`` with velocity ``v``.

    ``f`` is either a callable on points or an object with a ``value``
    method.  The forward quotient ``(f(exp(x, h v)) - f(x)) / h`` is returned
    unless ``central`` is set.
    """
    if h <= 0:
        raise GeometryDomainError("step h must be positive")
    fun = f.value if hasattr(f, "value") else f
    xp = manifold.exp(x, manifold.scale(v, h))
    if central:
        xm = manifold.exp(x, manifold.scale(v, -h))
        return (float(fun(xp)) - float(fun(xm))) / (2.0 * h)
    return (float(fun(xp)) - float(fun(x))) / h

