"""Inner minimization routines and the certified inexact proximal solver.

``rgd``, ``prgd`` and ``crgd`` minimize a single oracle (or composite pair)
under a :class:`StoppingRule`.  ``solve_prox_certified`` minimizes

    F(x) = loss(x) + d(x, center)^2 / (2 eta)

and stops as soon as a computable certificate guarantees
``F(x) - min F <= eps * d(center, argmin F)^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constraints import WholeManifold
from .exceptions import NumericError, SubsolverBudgetError
from .geometry import zeta
from .manifolds import Euclidean
from .objectives import SquaredDistance, ZeroObjective

__all__ = [
    "StoppingRule",
    "SubsolverReport",
    "ProxSubproblem",
    "rgd",
    "prgd",
    "crgd_step",
    "crgd",
    "solve_prox_certified",
    "solve_prox_fixed",
    "DEFAULT_BUDGET",
]

DEFAULT_BUDGET = 10_000
_MODES = ("fixed_iterations", "epsilon_certificate", "grad_norm")


@dataclass(frozen=True)
class StoppingRule:
    """When to stop an inner loop.

    ``fixed_iterations`` runs exactly ``budget`` steps.  ``grad_norm`` stops
    once the Riemannian gradient norm is at most ``epsilon``.
    ``epsilon_certificate`` stops once a proven bound on the optimality gap
    is at most ``epsilon``.
    """

    mode: str
    budget: int = DEFAULT_BUDGET
    epsilon: float = 0.0

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"unknown stopping mode {self.mode!r}; expected one of {_MODES}")
        if self.budget < 0:
            raise ValueError("budget must be nonnegative")
        if self.mode != "fixed_iterations" and not self.epsilon > 0:
            raise ValueError(f"mode {self.mode!r} needs epsilon > 0")

    @classmethod
    def fixed(cls, n):
        return cls("fixed_iterations", budget=int(n))

    @classmethod
    def certificate(cls, eps, budget=DEFAULT_BUDGET):
        return cls("epsilon_certificate", budget=budget, epsilon=float(eps))

    @classmethod
    def grad_norm(cls, eps, budget=DEFAULT_BUDGET):
        return cls("grad_norm", budget=budget, epsilon=float(eps))


@dataclass
class SubsolverReport:
    method: str
    iterations: int = 0
    gradient_calls: int = 0
    certificate: float = math.inf
    final_grad_norm: float = math.nan
    converged: bool = False
    values: list = field(default_factory=list)


@dataclass
class ProxSubproblem:
    """``min_{x in set} loss(x) + d(x, center)^2 / (2 eta)``."""

    loss: object
    center: object
    eta: float
    set: object = None

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.set is None:
            self.set = WholeManifold(self.loss.manifold)

    @property
    def manifold(self):
        return self.loss.manifold

    def regularizer(self):
        return SquaredDistance(self.manifold, self.center, weight=1.0 / self.eta)

    def value(self, x):
        d = self.manifold.dist(x, self.center)
        return self.loss.value(x) + float(np.sum(d**2)) / (2.0 * self.eta)

    def grads(self, x):
        """Return ``(grad loss, grad F)`` at ``x``."""
        M = self.manifold
        gl = self.loss.grad(x)
        gf = M.add(gl, M.scale(M.log(x, self.center), -1.0 / self.eta))
        return gl, gf


def _check_finite(g, where):
    arrs = g if isinstance(g, tuple) else (g,)
    for a in arrs:
        if not np.all(np.isfinite(a)):
            raise NumericError(f"non-finite gradient in {where}")


def _norm(M, x, v):
    return M.norm(x, v)


def _single_certificate(oracle, set_, x, g, rule):
    if rule.mode == "grad_norm":
        return _norm(oracle.manifold, x, g)
    return set_.optimality_slack(x, g, oracle.mu)


def _descent_loop(oracle, set_, x0, rule, L, method, project):
    M = oracle.manifold
    if L is None:
        L = oracle.L
    if not L > 0:
        raise ValueError(f"{method} needs a positive smoothness constant, got {L}")
    rep = SubsolverReport(method=method)
    x = x0
    for k in range(rule.budget + 1):
        if rule.mode == "fixed_iterations" and k == rule.budget:
            rep.converged = True
            return x, rep
        g = oracle.grad(x)
        rep.gradient_calls += 1
        _check_finite(g, method)
        gn = _norm(M, x, g)
        rep.final_grad_norm = gn
        if gn == 0.0:
            rep.certificate = 0.0
            rep.converged = True
            return x, rep
        if rule.mode != "fixed_iterations":
            rep.certificate = _single_certificate(oracle, set_, x, g, rule)
            if rep.certificate <= rule.epsilon:
                rep.converged = True
                return x, rep
        if k == rule.budget:
            break
        x = M.exp(x, M.scale(g, -1.0 / L))
        if project:
            x = set_.project(x)
        rep.iterations += 1
    raise SubsolverBudgetError(
        f"{method} exhausted its budget of {rule.budget} iterations "
        f"(certificate {rep.certificate:.3e} > {rule.epsilon:.3e})",
        point=x,
        certificate=rep.certificate,
        report=rep,
    )


def rgd(oracle, x0, rule, L=None):
    """Riemannian gradient descent ``x <- exp(x, -grad f(x) / L)``.

    Parameters
    ----------
    oracle : Objective
    x0 : point
    rule : StoppingRule
    L : float, optional
        Step is ``1/L``; defaults to ``oracle.L``.

    Returns
    -------
    point, SubsolverReport
    """
    return _descent_loop(oracle, WholeManifold(oracle.manifold), x0, rule, L, "rgd", False)


def prgd(oracle, set_, x0, rule, L=None):
    """Projected Riemannian gradient descent ``x <- P(exp(x, -grad f(x) / L))``."""
    if not set_.contains(x0):
        x0 = set_.project(x0)
    return _descent_loop(oracle, set_, x0, rule, L, "prgd", True)


# crgd inner solver

# moves below this (relative to coordinate size) are floating-point noise
_NOISE = 1e-14


def _coord_scale(y):
    arrs = y if isinstance(y, tuple) else (y,)
    return max(float(np.max(np.abs(a))) for a in arrs)


def _model_parts(f_grad_x, g, x, Lbar, M):
    w = f_grad_x

    def value(y):
        return (
            float(np.sum(M.inner(x, w, M.log(x, y))))
            + 0.5 * Lbar * float(np.sum(M.dist(x, y) ** 2))
            + g.value(y)
        )

    def grad(y):
        a = M.log_adjoint(x, y, w)
        b = M.scale(M.log(y, x), -Lbar)
        return M.add(M.add(a, b), g.grad(y))

    return value, grad


def crgd_step(f, g, set_, x, Lbar, tol=1e-10, budget=DEFAULT_BUDGET, fgrad=None):
    r"""One composite step: the minimizer over ``set_`` of

    .. math:: \langle \nabla f(x), \log_x y\rangle + \tfrac{L}{2} d(x,y)^2 + g(y).

    Euclidean problems with a squared-distance ``g`` use the closed form;
    otherwise the model is minimized by projected gradient descent with
    backtracking.  ``fgrad`` may pass a precomputed ``grad f(x)``.
    """
    M = f.manifold
    w = f.grad(x) if fgrad is None else fgrad
    _check_finite(w, "crgd_step")
    if isinstance(g, ZeroObjective) and Lbar > 0 and (isinstance(M, Euclidean) or not set_.bounded):
        return set_.project(M.exp(x, M.scale(w, -1.0 / Lbar)))
    if isinstance(M, Euclidean) and isinstance(g, SquaredDistance):
        c = g.weight
        y = (Lbar * x - w + c * g.target) / (Lbar + c)
        return set_.project(y)
    value, grad = _model_parts(w, g, x, Lbar, M)
    y = x
    my = value(y)
    step = step0 = 1.0 / max(Lbar + g.L, 1e-300)
    scale = None
    for _ in range(budget):
        gy = grad(y)
        gn = M.norm(y, gy)
        if gn == 0.0:
            return y
        while True:
            v = M.scale(gy, -step)
            yn = set_.project(M.exp(y, v))
            mn = value(yn)
            lin = float(np.sum(M.inner(y, gy, M.log(y, yn))))
            dyy = float(np.sum(M.dist(y, yn) ** 2))
            if mn <= my + lin + dyy / (2.0 * step) + 1e-15 * abs(my):
                break
            step *= 0.5
            if step < step0 * 1e-12:
                # no representable decrease left: y is optimal to working precision
                return y
        if mn >= my:
            # accepted only through the rounding allowance: no progress left
            return y
        move = math.sqrt(dyy)
        if scale is None:
            scale = max(move, 1e-300)
        y, my = yn, mn
        floor = _NOISE * max(1.0, _coord_scale(y))
        if move <= max(tol * max(float(np.sqrt(np.sum(M.dist(x, y) ** 2))), scale), floor):
            return y
        step *= 1.25
    raise SubsolverBudgetError(
        f"crgd_step inner solve did not reach tolerance {tol} in {budget} iterations",
        point=y,
    )


def crgd(f, g, set_, x0, rule, Lbar=None, mu=None, track=False):
    """Composite Riemannian gradient descent on ``F = f + g`` over ``set_``.

    Certificates for the ``epsilon_certificate`` rule come from
    ``set_.optimality_slack`` applied to ``grad F``.
    """
    M = f.manifold
    Lbar = f.L if Lbar is None else Lbar
    mu = (f.mu + g.mu) if mu is None else mu
    rep = SubsolverReport(method="crgd")
    x = x0 if set_.contains(x0) else set_.project(x0)

    class _F:
        manifold = M

        @staticmethod
        def value(z):
            return f.value(z) + g.value(z)

    for k in range(rule.budget + 1):
        if rule.mode == "fixed_iterations" and k == rule.budget:
            rep.converged = True
            return x, rep
        gf = f.grad(x)
        rep.gradient_calls += 1
        if track:
            rep.values.append(_F.value(x))
        if rule.mode != "fixed_iterations":
            gF = M.add(gf, g.grad(x))
            rep.final_grad_norm = M.norm(x, gF)
            if rule.mode == "grad_norm":
                rep.certificate = rep.final_grad_norm
            else:
                rep.certificate = set_.optimality_slack(x, gF, mu)
            if rep.certificate <= rule.epsilon:
                rep.converged = True
                return x, rep
        if k == rule.budget:
            break
        x = crgd_step(f, g, set_, x, Lbar, fgrad=gf)
        rep.iterations += 1
    raise SubsolverBudgetError(
        f"crgd exhausted its budget of {rule.budget} iterations",
        point=x,
        certificate=rep.certificate,
        report=rep,
    )


# certified prox solves


def _eps_value(eps, loss_grad_norm, dist_center):
    if callable(eps):
        return float(eps(loss_grad_norm, dist_center))
    return float(eps)


def _diameter_zeta(sub, radius):
    kmin = sub.manifold.kmin
    if sub.set.bounded:
        return zeta(sub.set.diameter, kmin)
    return zeta(radius, kmin)


def _dist(M, x, y):
    return float(np.sqrt(np.sum(M.dist(x, y) ** 2)))


def _budget_error(method, budget, rep, x, eps):
    return SubsolverBudgetError(
        f"{method} prox solve hit the budget of {budget} iterations "
        f"(best certificate {rep.certificate:.3e}, requested {eps:.3e})",
        point=x,
        certificate=rep.certificate,
        report=rep,
    )


def solve_prox_certified(sub, eps, method="prgd", budget=DEFAULT_BUDGET):
    """Approximately solve a proximal subproblem with a proven accuracy guarantee.

    Parameters
    ----------
    sub : ProxSubproblem
    eps : float or callable
        Relative accuracy.  A callable receives the loss gradient norm and
        the distance to the center at the current iterate, which lets
        schedules adapt to local quantities.
    method : {"prgd", "crgd", "rgd"}
    budget : int

    Returns
    -------
    point, SubsolverReport
        ``report.certificate`` bounds ``(F(x) - min F) / d(center, argmin F)^2``.
    """
    if method == "prgd":
        return _prox_prgd(sub, eps, budget)
    if method == "crgd":
        return _prox_crgd(sub, eps, budget)
    if method == "rgd":
        return _prox_rgd(sub, eps, budget)
    raise ValueError(f"unknown method {method!r}")


def _prox_prgd(sub, eps, budget):
    M = sub.manifold
    L, eta, kmin = sub.loss.L, sub.eta, M.kmin
    rep = SubsolverReport(method="prgd")
    x = sub.center
    radius = 0.0
    zD = _diameter_zeta(sub, radius)
    Lbar = L + zD / eta
    gl, gF = sub.grads(x)
    rep.gradient_calls += 1
    _check_finite(gF, "prgd prox")
    gn = M.norm(x, gF)
    rep.final_grad_norm = gn
    if gn == 0.0:
        rep.certificate = 0.0
        rep.converged = True
        return x, rep
    cert = 0.5 * Lbar * zeta(gn / Lbar, kmin)
    eps_now = math.inf
    while rep.iterations < budget:
        xn = sub.set.project(M.exp(x, M.scale(gF, -1.0 / Lbar)))
        if not sub.set.bounded:
            # the regularizer's smoothness depends on how far we travel
            dn = _dist(M, sub.center, xn)
            if dn > radius:
                radius = dn
                zn = _diameter_zeta(sub, radius)
                if zn > zD * (1.0 + 1e-12):
                    zD = zn
                    Lbar = L + zD / eta
                    if rep.iterations == 0:
                        cert = 0.5 * Lbar * zeta(gn / Lbar, kmin)
                    continue
        x = xn
        rep.iterations += 1
        rep.certificate = cert
        gl, gF = sub.grads(x)
        rep.gradient_calls += 1
        _check_finite(gF, "prgd prox")
        gn = M.norm(x, gF)
        rep.final_grad_norm = gn
        eps_now = _eps_value(eps, M.norm(x, gl), _dist(M, sub.center, x))
        if cert <= eps_now:
            rep.converged = True
            return x, rep
        cert *= 1.0 - 1.0 / (4.0 * (L * eta + zD) * zeta(gn / Lbar, kmin))
    raise _budget_error("prgd", budget, rep, x, eps_now)


def _prox_crgd(sub, eps, budget):
    M = sub.manifold
    L, eta = sub.loss.L, sub.eta
    rate = min(1.0 / (4.0 * L * eta), 0.5) if L > 0 else 0.5
    g = sub.regularizer()
    rep = SubsolverReport(method="crgd")
    x = sub.center
    gl = sub.loss.grad(x)
    rep.gradient_calls += 1
    _check_finite(gl, "crgd prox")
    eps_now = math.inf
    while rep.iterations < budget:
        x = crgd_step(sub.loss, g, sub.set, x, L, fgrad=gl)
        rep.iterations += 1
        rep.certificate = 0.5 * L * math.exp(-(rep.iterations - 1) * rate)
        gl = sub.loss.grad(x)
        rep.gradient_calls += 1
        _check_finite(gl, "crgd prox")
        eps_now = _eps_value(eps, M.norm(x, gl), _dist(M, sub.center, x))
        if rep.certificate <= eps_now:
            rep.final_grad_norm = M.norm(x, sub.grads(x)[1])
            rep.converged = True
            return x, rep
    raise _budget_error("crgd", budget, rep, x, eps_now)


def _prox_rgd(sub, eps, budget):
    M = sub.manifold
    L, eta = sub.loss.L, sub.eta
    rep = SubsolverReport(method="rgd")
    x = sub.center
    radius = 0.0
    eps_now = math.inf
    while True:
        gl, gF = sub.grads(x)
        rep.gradient_calls += 1
        _check_finite(gF, "rgd prox")
        gn = M.norm(x, gF)
        rep.final_grad_norm = gn
        d = _dist(M, sub.center, x)
        eps_now = _eps_value(eps, M.norm(x, gl), d)
        if gn == 0.0 or gn * gn <= eps_now * d * d / (eta + 2.0 * eta * eta * eps_now):
            # strong convexity turns the gradient bound into a gap bound
            rep.certificate = 0.0 if gn == 0.0 else eps_now
            rep.converged = True
            return x, rep
        if rep.iterations >= budget:
            rep.certificate = 0.5 * eta * gn * gn / max(d * d, 1e-300)
            raise _budget_error("rgd", budget, rep, x, eps_now)
        radius = max(radius, d)
        while True:
            Lbar = L + zeta(radius, M.kmin) / eta
            xn = M.exp(x, M.scale(gF, -1.0 / Lbar))
            dn = _dist(M, sub.center, xn)
            if dn <= radius * (1.0 + 1e-12) or zeta(dn, M.kmin) <= zeta(radius, M.kmin) * (1 + 1e-12):
                break
            radius = dn
        x = xn
        rep.iterations += 1


def solve_prox_fixed(sub, steps, step_size=None):
    """Run exactly ``steps`` PRGD iterations on the proximal objective.

    The step defaults to ``1 / (L + zeta_D / eta)``.  No accuracy is
    certified; ``gradient_calls == steps``.
    """
    M = sub.manifold
    if step_size is None:
        zD = zeta(sub.set.diameter, M.kmin) if sub.set.bounded else 1.0
        step_size = 1.0 / (sub.loss.L + zD / sub.eta)
    rep = SubsolverReport(method="prgd-fixed")
    x = sub.center
    for _ in range(int(steps)):
        _, gF = sub.grads(x)
        rep.gradient_calls += 1
        _check_finite(gF, "fixed prox")
        x = sub.set.project(M.exp(x, M.scale(gF, -step_size)))
        rep.iterations += 1
    rep.converged = True
    return x, rep
