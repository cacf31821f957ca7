"""Concrete Hadamard manifolds.

``Euclidean``, ``Hyperbolic`` (hyperboloid model, curvature -1) and ``SPD``
(affine-invariant metric) vectorize over leading batch axes, which is what
``PowerManifold`` relies on to treat ``n`` copies of a manifold as a single
product space without Python loops.  ``ProductManifold`` joins two
manifolds with tuple-valued points.
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import GeometryDomainError
from .geometry import CurvatureBounds, Manifold
from .linalg import (
    logm_frechet_adjoint,
    spd_expm,
    spd_sqrt_pair,
    spd_sqrtm,
    spd_sym_eig,
    sym,
)

__all__ = [
    "Euclidean",
    "Hyperbolic",
    "SPD",
    "ProductManifold",
    "PowerManifold",
    "manifold_from_spec",
]

# membership drift above this is repaired after exp/transport
_DRIFT_TOL = 1e-12
# log of nearly coincident points returns the exact zero vector
_COINCIDENT = 1e-12


class Euclidean(Manifold):
    """Flat space R^d."""

    name = "euclidean"
    point_ndim = 1

    def __init__(self, dim):
        if int(dim) < 1:
            raise GeometryDomainError("dimension must be positive")
        self._dim = int(dim)

    @property
    def dim(self):
        return self._dim

    @property
    def point_shape(self):
        return (self._dim,)

    @property
    def spec(self):
        return f"euclidean:{self._dim}"

    @property
    def curvature(self):
        return CurvatureBounds(0.0, 0.0)

    def exp(self, x, v):
        return x + v

    def log(self, x, y):
        return y - x

    def dist(self, x, y):
        w = y - x
        if w.ndim == 1:
            return math.sqrt(float(w @ w))
        return np.sqrt(np.einsum("...i,...i->...", w, w))

    def inner(self, x, u, v):
        if u.ndim == 1 and v.ndim == 1:
            return float(u @ v)
        return np.einsum("...i,...i->...", u, v)

    def transport(self, x, y, v):
        return v

    def log_adjoint(self, x, y, w):
        return np.broadcast_to(w, np.shape(y)).copy()

    def random_point(self, rng):
        return rng.standard_normal(self._dim)

    def random_tangent(self, x, rng):
        return rng.standard_normal(np.shape(x))

    def zero_vector(self, x):
        return np.zeros_like(x, dtype=float)

    def check_point(self, x, atol=1e-10):
        return np.shape(x)[-1:] == (self._dim,) and bool(np.all(np.isfinite(x)))

    def check_tangent(self, x, v, atol=1e-10):
        return np.shape(v) == np.shape(x)


def minkowski(u, v):
    """Minkowski bilinear form ``-u0 v0 + sum_i ui vi`` over the last axis."""
    if u.ndim == 1 and v.ndim == 1:
        return float(u @ v) - 2.0 * float(u[0]) * float(v[0])
    return np.einsum("...i,...i->...", u, v) - 2.0 * u[..., 0] * v[..., 0]


def _dsinh_scalar(d):
    if d < 1e-4:
        d2 = d * d
        return 1.0 - d2 / 6.0 + 7.0 * d2 * d2 / 360.0
    return d / math.sinh(d)


def _sinhc(n):
    # sinh(n)/n, accurate near zero
    n = np.asarray(n, dtype=float)
    small = n < 1e-4
    safe = np.where(small, 1.0, n)
    return np.where(small, 1.0 + n * n / 6.0, np.sinh(safe) / safe)


def _dsinh(d):
    # d / sinh(d)
    d = np.asarray(d, dtype=float)
    small = d < 1e-4
    safe = np.where(small, 1.0, d)
    d2 = d * d
    return np.where(small, 1.0 - d2 / 6.0 + 7.0 * d2 * d2 / 360.0, safe / np.sinh(safe))


def _dsinh_prime(d):
    # derivative of d/sinh(d) with respect to c = cosh(d)
    d = np.asarray(d, dtype=float)
    small = d < 1e-3
    safe = np.where(small, 1.0, d)
    d2 = d * d
    series = -1.0 / 3.0 + 2.0 * d2 / 15.0 - 2.0 * d2 * d2 / 63.0
    s = np.sinh(safe)
    exact = (1.0 - np.cosh(safe) * safe / s) / (s * s)
    return np.where(small, series, exact)


class Hyperbolic(Manifold):
    """Hyperbolic space of curvature -1 in the hyperboloid model.

    Points live in R^{d+1} with Minkowski norm -1 and positive first
    coordinate.
    """

    name = "hyperbolic"
    point_ndim = 1

    def __init__(self, dim):
        if int(dim) < 1:
            raise GeometryDomainError("dimension must be positive")
        self._dim = int(dim)

    @property
    def dim(self):
        return self._dim

    @property
    def point_shape(self):
        return (self._dim + 1,)

    @property
    def spec(self):
        return f"hyperbolic:{self._dim}"

    @property
    def curvature(self):
        return CurvatureBounds(-1.0, -1.0)

    def apex(self):
        x = np.zeros(self._dim + 1)
        x[0] = 1.0
        return x

    def _repair(self, x):
        m = minkowski(x, x)
        if x.ndim == 1:
            return x if abs(m + 1.0) <= _DRIFT_TOL else x / math.sqrt(-m)
        if np.all(np.abs(m + 1.0) <= _DRIFT_TOL):
            return x
        return x / np.sqrt(-m)[..., None]

    def proj_tangent(self, x, u):
        if x.ndim == 1 and u.ndim == 1:
            return u + minkowski(x, u) * x
        return u + np.asarray(minkowski(x, u))[..., None] * x

    def inner(self, x, u, v):
        return minkowski(u, v)

    def dist(self, x, y):
        w = y - x
        if w.ndim == 1:
            return 2.0 * math.asinh(0.5 * math.sqrt(max(minkowski(w, w), 0.0)))
        q = np.maximum(minkowski(w, w), 0.0)
        return 2.0 * np.arcsinh(0.5 * np.sqrt(q))

    def exp(self, x, v):
        if x.ndim == 1 and v.ndim == 1:
            n = math.sqrt(max(minkowski(v, v), 0.0))
            sc = 1.0 + n * n / 6.0 if n < 1e-4 else math.sinh(n) / n
            return self._repair(math.cosh(n) * x + sc * v)
        n = np.sqrt(np.maximum(minkowski(v, v), 0.0))[..., None]
        y = np.cosh(n) * x + _sinhc(n) * v
        return self._repair(y)

    def log(self, x, y):
        d = self.dist(x, y)
        c = -minkowski(x, y)
        if x.ndim == 1 and y.ndim == 1:
            if d < _COINCIDENT:
                return np.zeros_like(x, dtype=float)
            return _dsinh_scalar(d) * self.proj_tangent(x, y - c * x)
        u = y - np.asarray(c)[..., None] * x
        u = self.proj_tangent(x, u)
        v = _dsinh(d)[..., None] * u
        return np.where((d < _COINCIDENT)[..., None], 0.0, v)

    def transport(self, x, y, v):
        c = -minkowski(x, y)
        coef = minkowski(y, v) / (1.0 + c)
        out = v + np.asarray(coef)[..., None] * (x + y)
        return self.proj_tangent(y, out)

    def log_adjoint(self, x, y, w):
        d = self.dist(x, y)
        h = _dsinh(d)
        hp = _dsinh_prime(d)
        wy = minkowski(w, y)
        g = np.asarray(h)[..., None] * w - np.asarray(hp * wy)[..., None] * x
        return self.proj_tangent(y, g)

    def random_point(self, rng):
        v = np.zeros(self._dim + 1)
        v[1:] = rng.standard_normal(self._dim) / math.sqrt(self._dim)
        return self.exp(self.apex(), v)

    def random_tangent(self, x, rng):
        u = rng.standard_normal(np.shape(x))
        return self.proj_tangent(x, u)

    def zero_vector(self, x):
        return np.zeros_like(x, dtype=float)

    def check_point(self, x, atol=1e-10):
        x = np.asarray(x)
        if x.shape[-1:] != (self._dim + 1,):
            return False
        m = minkowski(x, x)
        # relative tolerance: coordinates grow like cosh(distance to apex)
        scale = np.maximum(1.0, np.sum(x * x, axis=-1))
        return bool(np.all(np.abs(m + 1.0) <= atol * scale) and np.all(x[..., 0] > 0))

    def check_tangent(self, x, v, atol=1e-10):
        scale = np.maximum(1.0, np.sqrt(np.sum(x * x, axis=-1) * np.sum(v * v, axis=-1)))
        return bool(np.all(np.abs(minkowski(x, v)) <= atol * scale))


class SPD(Manifold):
    """Symmetric positive definite ``d x d`` matrices with the affine-invariant metric.

    The sectional curvature of this metric lies in ``[-1/2, 0]``.
    """

    name = "spd"
    point_ndim = 2

    def __init__(self, dim):
        if int(dim) < 1:
            raise GeometryDomainError("dimension must be positive")
        self.n = int(dim)

    @property
    def dim(self):
        return self.n * (self.n + 1) // 2

    @property
    def point_shape(self):
        return (self.n, self.n)

    @property
    def spec(self):
        return f"spd:{self.n}"

    @property
    def curvature(self):
        return CurvatureBounds(-0.5, 0.0)

    def _repair(self, x):
        if np.max(np.abs(x - np.swapaxes(x, -1, -2)), initial=0.0) <= _DRIFT_TOL * max(
            1.0, float(np.max(np.abs(x), initial=0.0))
        ):
            return x
        return sym(x)

    def inner(self, x, u, v):
        a = np.linalg.solve(x, u)
        b = np.linalg.solve(x, v)
        return np.einsum("...ij,...ji->...", a, b)

    def exp(self, x, v):
        s, si = spd_sqrt_pair(x)
        return self._repair(s @ spd_expm(sym(si @ v @ si)) @ s)

    def log(self, x, y):
        s, si = spd_sqrt_pair(x)
        w, q = spd_sym_eig(si @ y @ si)
        lw = np.log(np.maximum(w, 1e-300))
        inner_log = (q * lw[..., None, :]) @ np.swapaxes(q, -1, -2)
        out = sym(s @ inner_log @ s)
        d = np.sqrt(np.sum(lw * lw, axis=-1))
        return np.where((d < _COINCIDENT)[..., None, None], 0.0, out)

    def dist(self, x, y):
        _, si = spd_sqrt_pair(x)
        w, _ = spd_sym_eig(si @ y @ si)
        lw = np.log(np.maximum(w, 1e-300))
        return np.sqrt(np.sum(lw * lw, axis=-1))

    def transport(self, x, y, v):
        s, si = spd_sqrt_pair(x)
        e = s @ spd_sqrtm(sym(si @ y @ si)) @ si
        return self._repair(e @ v @ np.swapaxes(e, -1, -2))

    def log_adjoint(self, x, y, w):
        _, si = spd_sqrt_pair(x)
        z = sym(si @ y @ si)
        wt = sym(si @ w @ si)
        d = logm_frechet_adjoint(z, wt)
        g_euc = sym(si @ d @ si)
        return sym(y @ g_euc @ y)

    def random_point(self, rng):
        a = sym(rng.standard_normal((self.n, self.n)))
        nrm = np.linalg.norm(a, 2)
        if nrm > 1.0:
            a = a / nrm
        return spd_expm(a)

    def random_tangent(self, x, rng):
        s = sym(rng.standard_normal(np.shape(x)))
        r = spd_sqrtm(x)
        return sym(r @ s @ r)

    def zero_vector(self, x):
        return np.zeros_like(x, dtype=float)

    def check_point(self, x, atol=1e-10):
        x = np.asarray(x)
        if x.shape[-2:] != (self.n, self.n):
            return False
        scale = max(1.0, float(np.max(np.abs(x))))
        if np.max(np.abs(x - np.swapaxes(x, -1, -2))) > atol * scale:
            return False
        return bool(np.all(np.linalg.eigvalsh(sym(x))[..., 0] > 0))

    def check_tangent(self, x, v, atol=1e-10):
        v = np.asarray(v)
        scale = max(1.0, float(np.max(np.abs(v), initial=0.0)))
        return v.shape == np.shape(x) and bool(
            np.max(np.abs(v - np.swapaxes(v, -1, -2)), initial=0.0) <= atol * scale
        )


class PowerManifold(Manifold):
    """``n`` copies of a base manifold with the product metric.

    Points are arrays of shape ``(n, *base.point_shape)``; the base manifold
    does the work through batch broadcasting.
    """

    def __init__(self, base, n):
        if int(n) < 1:
            raise GeometryDomainError("power must be positive")
        self.base = base
        self.n = int(n)
        self.name = f"{base.name}^{self.n}"

    @property
    def dim(self):
        return self.base.dim * self.n

    @property
    def point_shape(self):
        return (self.n,) + tuple(self.base.point_shape)

    @property
    def curvature(self):
        return self.base.curvature

    def exp(self, x, v):
        return self.base.exp(x, v)

    def log(self, x, y):
        return self.base.log(x, y)

    def component_dist(self, x, y):
        return self.base.dist(x, y)

    def dist(self, x, y):
        return float(np.sqrt(np.sum(self.base.dist(x, y) ** 2)))

    def inner(self, x, u, v):
        return float(np.sum(self.base.inner(x, u, v)))

    def transport(self, x, y, v):
        return self.base.transport(x, y, v)

    def log_adjoint(self, x, y, w):
        return self.base.log_adjoint(x, y, w)

    def random_point(self, rng):
        return np.stack([self.base.random_point(rng) for _ in range(self.n)])

    def random_tangent(self, x, rng):
        return np.stack([self.base.random_tangent(x[i], rng) for i in range(self.n)])

    def zero_vector(self, x):
        return np.zeros_like(x, dtype=float)

    def check_point(self, x, atol=1e-10):
        return np.shape(x)[:1] == (self.n,) and self.base.check_point(x, atol)

    def check_tangent(self, x, v, atol=1e-10):
        return self.base.check_tangent(x, v, atol)

    def __repr__(self):
        return f"PowerManifold({self.base!r}, n={self.n})"


class ProductManifold(Manifold):
    """Product ``M x N`` with tuple-valued points and tangent vectors."""

    def __init__(self, first, second):
        self.first = first
        self.second = second
        self.name = f"{first.name}x{second.name}"

    @property
    def dim(self):
        return self.first.dim + self.second.dim

    @property
    def curvature(self):
        a, b = self.first.curvature, self.second.curvature
        return CurvatureBounds(min(a.kmin, b.kmin), max(a.kmax, b.kmax))

    def scale(self, v, a):
        return (self.first.scale(v[0], a), self.second.scale(v[1], a))

    def add(self, u, v):
        return (self.first.add(u[0], v[0]), self.second.add(u[1], v[1]))

    def exp(self, x, v):
        return (self.first.exp(x[0], v[0]), self.second.exp(x[1], v[1]))

    def log(self, x, y):
        return (self.first.log(x[0], y[0]), self.second.log(x[1], y[1]))

    def dist(self, x, y):
        return math.sqrt(
            float(np.sum(self.first.dist(x[0], y[0]) ** 2))
            + float(np.sum(self.second.dist(x[1], y[1]) ** 2))
        )

    def inner(self, x, u, v):
        return float(np.sum(self.first.inner(x[0], u[0], v[0]))) + float(
            np.sum(self.second.inner(x[1], u[1], v[1]))
        )

    def transport(self, x, y, v):
        return (
            self.first.transport(x[0], y[0], v[0]),
            self.second.transport(x[1], y[1], v[1]),
        )

    def log_adjoint(self, x, y, w):
        return (
            self.first.log_adjoint(x[0], y[0], w[0]),
            self.second.log_adjoint(x[1], y[1], w[1]),
        )

    def random_point(self, rng):
        return (self.first.random_point(rng), self.second.random_point(rng))

    def random_tangent(self, x, rng):
        return (self.first.random_tangent(x[0], rng), self.second.random_tangent(x[1], rng))

    def zero_vector(self, x):
        return (self.first.zero_vector(x[0]), self.second.zero_vector(x[1]))

    def check_point(self, x, atol=1e-10):
        return self.first.check_point(x[0], atol) and self.second.check_point(x[1], atol)

    def check_tangent(self, x, v, atol=1e-10):
        return self.first.check_tangent(x[0], v[0], atol) and self.second.check_tangent(
            x[1], v[1], atol
        )

    def __repr__(self):
        return f"ProductManifold({self.first!r}, {self.second!r})"


_KINDS = {"euclidean": Euclidean, "hyperbolic": Hyperbolic, "spd": SPD}


def manifold_from_spec(spec):
    """Build a manifold from a ``kind:dim`` string such as ``"spd:5"``."""
    try:
        kind, dim = spec.split(":")
        cls = _KINDS[kind.strip().lower()]
        return cls(int(dim))
    except (ValueError, KeyError):
        raise GeometryDomainError(
            f"bad manifold spec {spec!r}; expected one of "
            f"{sorted(_KINDS)} followed by ':<dim>'"
        ) from None
