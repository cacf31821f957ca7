"""scikit-learn style wrappers around the Karcher mean solvers."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .geometry import Manifold, zeta
from .karcher import KarcherInstance, RobustKarcherSaddle, karcher_mean, karcher_sets
from .manifolds import manifold_from_spec
from .rioda import MinMaxConfig, duality_gap, rioda_run

__all__ = ["KarcherMean", "RobustKarcherMean"]


def _manifold(m):
    return m if isinstance(m, Manifold) else manifold_from_spec(m)


def _points(M, X):
    X = np.asarray(X, dtype=float)
    shape = tuple(M.point_shape)
    if X.ndim == len(shape):
        X = X[None]
    if X.shape[1:] != shape:
        raise ValueError(f"expected points of shape {shape}, got array of shape {X.shape}")
    return X


class KarcherMean(TransformerMixin, BaseEstimator):
    """Riemannian center of mass.

    ``fit`` stores the mean in ``mean_``; ``transform`` maps points to
    flattened tangent coordinates at the mean.

    Parameters
    ----------
    manifold : str or Manifold
        For example ``"spd:3"`` or ``"hyperbolic:2"``.
    tol : float
        Gradient norm at which the solver stops.
    max_iter : int
    """

    def __init__(self, manifold="euclidean:2", tol=1e-9, max_iter=100_000):
        self.manifold = manifold
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None, sample_weight=None):
        M = _manifold(self.manifold)
        pts = _points(M, X)
        self.mean_ = karcher_mean(M, pts, sample_weight, tol=self.tol, budget=self.max_iter)
        self.n_features_in_ = int(np.prod(pts.shape[1:]))
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        M = _manifold(self.manifold)
        pts = _points(M, X)
        base = np.repeat(self.mean_[None], pts.shape[0], axis=0)
        return M.log(base, pts).reshape(pts.shape[0], -1)

    def score(self, X, y=None):
        """Negative mean squared distance to the fitted mean."""
        check_is_fitted(self, "mean_")
        M = _manifold(self.manifold)
        pts = _points(M, X)
        d = M.dist(np.repeat(self.mean_[None], pts.shape[0], axis=0), pts)
        return -float(np.mean(d * d))


class RobustKarcherMean(KarcherMean):
    """Karcher mean robust to perturbations of each point within ``Rbar``.

    Solves the constrained min-max problem with the optimistic proximal
    method, starting from the plain mean.  After ``fit``: ``mean_``,
    ``perturbed_`` (worst-case points) and ``gap_`` (duality gap upper
    bound of the returned pair).
    """

    def __init__(
        self,
        manifold="euclidean:2",
        Rbar=0.01,
        gamma=None,
        iterations=300,
        inner_steps=3,
        lam=0.01,
        eta=0.1,
        tol=1e-9,
        max_iter=100_000,
    ):
        super().__init__(manifold=manifold, tol=tol, max_iter=max_iter)
        self.Rbar = Rbar
        self.gamma = gamma
        self.iterations = iterations
        self.inner_steps = inner_steps
        self.lam = lam
        self.eta = eta

    def fit(self, X, y=None):
        M = _manifold(self.manifold)
        pts = _points(M, X)
        n = pts.shape[0]
        base = karcher_mean(M, pts, tol=self.tol, budget=self.max_iter)
        spread = max(float(np.max(M.dist(np.repeat(base[None], n, axis=0), pts))), 1e-12)
        gamma = self.gamma if self.gamma is not None else zeta(spread + self.Rbar, M.kmin)
        inst = KarcherInstance(M, n, pts, base, float(self.Rbar), float(gamma), 0, spread)
        oracle = RobustKarcherSaddle(inst)
        sets = karcher_sets(inst)
        cfg = MinMaxConfig(
            L=oracle.L,
            T=int(self.iterations),
            mu=oracle.mu,
            sets=sets,
            eta=self.eta,
            inner_steps=self.inner_steps,
            step_size=self.lam,
            gap_cadence=0,
            output="last",
        )
        (x, Y), trace = rioda_run(oracle, cfg, base, pts)
        res = duality_gap(oracle, sets, x, Y, 1e-12)
        self.mean_ = x
        self.perturbed_ = Y
        self.gap_ = res.upper
        self.gamma_ = gamma
        self.n_iter_ = int(self.iterations)
        self.n_features_in_ = int(np.prod(pts.shape[1:]))
        return self
