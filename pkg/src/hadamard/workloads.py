"""Seeded synthetic problems for the online and min-max front ends."""

from __future__ import annotations

import math

import numpy as np

from .constraints import GeodesicBall
from .manifolds import Euclidean, Hyperbolic
from .objectives import (
    BilinearSaddle,
    BusemannFunction,
    SeparableSaddle,
    SquaredDistance,
    SumObjective,
)
from .seeding import rng_for
from .subsolvers import StoppingRule, prgd

__all__ = ["orthonormal_pair", "drifting_stream", "synthetic_saddle"]


def orthonormal_pair(M, x, rng):
    """Two orthonormal tangent vectors at ``x`` (Gram-Schmidt in the metric at ``x``)."""
    e1 = M.random_unit_tangent(x, rng)
    for _ in range(100):
        v = M.random_tangent(x, rng)
        v = M.add(v, M.scale(e1, -float(M.inner(x, v, e1))))
        n = M.norm(x, v)
        if n > 1e-8:
            return e1, M.scale(v, 1.0 / n)
    raise ValueError("could not draw two independent tangent vectors (dimension 1?)")


def drifting_stream(M, T, radius=1.0, drift=0.005, seed=0, orbit=0.8):
    """Squared-distance losses whose targets circle the ball center.

    Returns ``(losses, ball)``.  The target of round ``t`` sits at distance
    ``orbit * radius`` from the center and turns by ``drift`` radians per
    round.  Loss constants hold on the ball (diameter ``2 radius``).
    """
    rng = rng_for(seed, "online-stream")
    c = M.random_point(rng)
    ball = GeodesicBall(M, c, radius)
    if M.dim >= 2:
        e1, e2 = orthonormal_pair(M, c, rng)
    else:
        e1 = M.random_unit_tangent(c, rng)
        e2 = M.scale(e1, 0.0)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    losses = []
    for t in range(1, T + 1):
        a = phase + drift * t
        v = M.add(M.scale(e1, math.cos(a)), M.scale(e2, math.sin(a)))
        target = M.exp(c, M.scale(v, orbit * radius))
        losses.append(SquaredDistance(M, target, 1.0, radius=2.0 * radius))
    return losses, ball


def _minimize(phi, ball, tol=1e-13):
    x, _ = prgd(phi, ball, ball.center, StoppingRule.certificate(tol, budget=200_000), L=phi.L)
    return x


def _extragradient(oracle, sets, tol=1e-14, budget=1_000_000):
    # projected extragradient; its last iterate converges on monotone problems
    X, Y = sets
    x, y = X.center, Y.center
    h = 0.5 / oracle.L
    for _ in range(budget):
        xh = X.project(x - h * oracle.grad_x(x, y))
        yh = Y.project(y + h * oracle.grad_y(x, y))
        xn = X.project(x - h * oracle.grad_x(xh, yh))
        yn = Y.project(y + h * oracle.grad_y(xh, yh))
        step = math.hypot(float(np.linalg.norm(xn - x)), float(np.linalg.norm(yn - y)))
        x, y = xn, yn
        if step <= tol:
            return x, y
    raise ValueError("reference saddle solve did not converge")


def synthetic_saddle(M, mu=0.0, seed=0, radius=1.0):
    """A g-convex-g-concave test problem on ``M x M`` with balls of ``radius``.

    Returns ``(oracle, (X, Y), saddle)``.  Euclidean problems are bilinear,
    with quadratic terms of weight ``mu`` or, for ``mu = 0``, linear tilts.  On other manifolds the problem
    is separable: a squared distance of weight ``mu`` plus, on hyperbolic
    space, a Busemann function (SPD needs ``mu > 0``).
    """
    rng = rng_for(seed, f"minmax:{M.spec}")
    if isinstance(M, Euclidean):
        d = M.dim
        B = rng.standard_normal((d, d))
        B /= np.linalg.norm(B, 2)
        if mu > 0:
            oracle = BilinearSaddle(B, mu, 0.3 * rng.standard_normal(d), 0.3 * rng.standard_normal(d))
            # centers off the saddle so runs do not start at the solution
            cx = 0.3 * radius * rng.uniform(-1.0, 1.0, d) / math.sqrt(d)
            cy = 0.3 * radius * rng.uniform(-1.0, 1.0, d) / math.sqrt(d)
            sets = (GeodesicBall(M, cx, radius), GeodesicBall(M, cy, radius))
            sx, sy = oracle.saddle
            inside = sets[0].contains(sx) and sets[1].contains(sy)
            return oracle, sets, (sx, sy) if inside else None
        # linear tilts dominate the coupling, so the saddle sits on the boundary
        c, e = rng.standard_normal(d), rng.standard_normal(d)
        oracle = BilinearSaddle(B, 0.0, c=2.0 * c / np.linalg.norm(c), e=2.0 * e / np.linalg.norm(e))
        sets = (GeodesicBall(M, np.zeros(d), radius), GeodesicBall(M, np.zeros(d), radius))
        return oracle, sets, _extragradient(oracle, sets)
    terms = []
    for _ in range(2):
        c = M.random_point(rng)
        parts = []
        if mu > 0:
            a = M.exp(c, M.scale(M.random_unit_tangent(c, rng), 0.5 * radius * rng.uniform()))
            parts.append(SquaredDistance(M, a, mu, radius=2.0 * radius))
        if isinstance(M, Hyperbolic):
            parts.append(BusemannFunction(M, rng.standard_normal(M.dim), 0.5))
        if not parts:
            raise ValueError(f"{M.spec} test saddles need mu > 0")
        terms.append((SumObjective(*parts) if len(parts) > 1 else parts[0], GeodesicBall(M, c, radius)))
    (px, X), (py, Y) = terms
    saddle = (_minimize(px, X), _minimize(py, Y))
    return SeparableSaddle(px, py, saddle), (X, Y), saddle
