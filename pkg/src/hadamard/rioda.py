"""Implicit optimistic gradient descent-ascent for Riemannian min-max problems.

Every round solves four proximal problems on

    H_t(x, y) = f(x, y) + d(x, x_t)^2 / (2 eta) - d(y, y_t)^2 / (2 eta)

with ``eta = 1 / (4 L)``: the played pair ``(x~_t, y~_t)`` from the
secondary pair ``(x_t, y_t)``, then the next secondary pair against the
played one.  The x- and y-blocks of each stage are independent.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .constraints import WholeManifold
from .exceptions import GeometryDomainError, SubsolverBudgetError
from .subsolvers import (
    DEFAULT_BUDGET,
    ProxSubproblem,
    StoppingRule,
    _descent_loop,
    solve_prox_certified,
    solve_prox_fixed,
)

__all__ = [
    "CASES",
    "eta_from_smoothness",
    "precision_rioda",
    "iterations_for_accuracy",
    "MinMaxConfig",
    "IterateState",
    "AveragingState",
    "geodesic_average_fold",
    "rioda_round",
    "rioda_run",
    "GapResult",
    "duality_gap",
    "ConvergenceTrace",
    "RadiusAudit",
    "iterate_radius_audit",
    "RIODA_TRACE_COLUMNS",
]

CASES = ("constrained_cvx", "constrained_scsc", "unconstrained_cvx", "unconstrained_scsc")


def eta_from_smoothness(L):
    if not L > 0:
        raise ValueError(f"smoothness L must be positive, got {L}")
    return 1.0 / (4.0 * L)


def precision_rioda(case, t, L, mu=0.0, lips=None, kmin=0.0, eps_target=None, R=None, local_dist=None):
    """Relative prox accuracy ``eps_t`` for round ``t``.

    Constrained cases need ``lips`` (a gradient norm bound, or the local
    gradient norm in adaptive use) and the target accuracy ``eps_target``.
    Unconstrained cases need ``R``; passing ``local_dist`` instead uses the
    distance between the prox center and the current iterate in place of
    ``R``.
    """
    if case not in CASES:
        raise ValueError(f"unknown case {case!r}; expected one of {CASES}")
    if t < 1:
        raise ValueError("rounds are numbered from 1")
    if not L > 0:
        raise ValueError("L must be positive")
    k = abs(kmin)
    if case.startswith("constrained"):
        if lips is None or eps_target is None:
            raise ValueError(f"case {case} needs lips and eps_target")
        if case == "constrained_cvx":
            w = (t + 1) ** 2 * (40.0 + lips**2 / L * (eps_target / 6.0 + 12.0 * k / L))
        else:
            if not mu > 0:
                raise ValueError("strongly convex case needs mu > 0")
            w = max((t + 1) ** 2, 16.0 * L / mu) * (
                40.0 + lips**2 / L * (eps_target / 4.0 + 12.0 * k / L)
            )
        return L * min(0.125, 1.0 / w)
    r = local_dist if local_dist is not None else R
    if r is None:
        raise ValueError(f"case {case} needs R or local_dist")
    g = 37.0 + 2385.0 * r * r * k
    if case == "unconstrained_cvx":
        return L / 8.0 * min(1.0, 1.0 / (2.0 * (t + 1) ** 2 * g))
    if not mu > 0:
        raise ValueError("strongly convex case needs mu > 0")
    return L / 8.0 * min(1.0, mu / (8.0 * L * g))


def iterations_for_accuracy(case, L, mu, R, eps):
    """Rounds after which the restricted gap is at most ``eps``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if case == "constrained_cvx":
        return math.ceil(8.0 * L * R * R / eps)
    if case == "unconstrained_cvx":
        return math.ceil(6.0 * L * R * R / eps)
    c = 4.0 if case == "constrained_scsc" else 2.0
    if case not in CASES:
        raise ValueError(f"unknown case {case!r}")
    return max(1, math.ceil(17.0 * L / mu * math.log(c * L * R * R / eps)))


@dataclass
class MinMaxConfig:
    """Run parameters.

    ``sets=None`` means unconstrained.  ``eta`` defaults to ``1/(4L)``; an
    explicit value is allowed for experiments that tune it, but the
    guarantees assume the default.  ``inner_steps`` switches the prox
    solves from certified to a fixed number of PRGD steps of size
    ``step_size``.
    """

    L: float
    T: int
    mu: float = 0.0
    sets: tuple | None = None
    eta: float | None = None
    eps_target: float | None = None
    kmin: float | None = None
    method: str = "prgd"
    lips: float | None = None
    R: float | None = None
    inner_steps: int | None = None
    step_size: float | None = None
    gap_cadence: int = 10
    gap_tol: float = 1e-10
    budget: int = DEFAULT_BUDGET
    keep_iterates: bool = False
    output: str = "auto"

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("L must be positive")
        if self.eta is None:
            self.eta = eta_from_smoothness(self.L)
        if self.T < 1:
            raise ValueError("T must be at least 1")
        if self.method not in ("prgd", "crgd", "rgd"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.output not in ("auto", "last", "average"):
            raise ValueError(f"unknown output {self.output!r}; expected auto, last or average")
        if self.gap_cadence < 0:
            raise ValueError("gap_cadence must be nonnegative")
        if self.gap_cadence and not self.constrained and not self.mu > 0:
            raise ValueError(
                "the duality gap of an unconstrained problem with mu = 0 cannot be "
                "certified; set gap_cadence=0"
            )

    @property
    def constrained(self):
        return self.sets is not None and self.sets[0].bounded and self.sets[1].bounded

    @property
    def case(self):
        tag = "scsc" if self.mu > 0 else "cvx"
        return f"{'constrained' if self.constrained else 'unconstrained'}_{tag}"

    @property
    def D(self):
        return self.sets[0].diameter + self.sets[1].diameter if self.constrained else math.inf

    def target(self):
        """Target accuracy entering the constrained schedules.

        Without an explicit target it is the accuracy the run length
        guarantees, with the initial distance bounded by ``D``.
        """
        if self.eps_target is not None:
            return self.eps_target
        R2 = self.D**2
        if self.mu > 0:
            return 4.0 * self.L * R2 * math.exp(-self.T * self.mu / (17.0 * self.L))
        return 8.0 * self.L * R2 / self.T


@dataclass
class IterateState:
    x: object
    y: object
    x_tilde: object = None
    y_tilde: object = None


@dataclass
class AveragingState:
    xbar: object
    ybar: object
    count: int = 1


def geodesic_average_fold(avg, new_x, new_y, t, mx, my):
    """Move the running averages a fraction ``1/(t+1)`` towards the new pair."""
    if t < 1 or avg.count != t:
        raise ValueError(f"fold {t} applied to an average of {avg.count} points")
    w = 1.0 / (t + 1)
    xb = mx.exp(avg.xbar, mx.scale(mx.log(avg.xbar, new_x), w))
    yb = my.exp(avg.ybar, my.scale(my.log(avg.ybar, new_y), w))
    return AveragingState(xb, yb, t + 1)


@dataclass
class _RoundInfo:
    eps: float = math.inf
    iters_x: int = 0
    iters_y: int = 0
    calls: int = 0


class _Eps:
    def __init__(self, cfg, t, kmin):
        self.cfg = cfg
        self.t = t
        self.kmin = kmin
        self.seen = math.inf

    def __call__(self, grad_norm, dist_center):
        c = self.cfg
        lips = c.lips if c.lips is not None else grad_norm
        if c.constrained:
            e = precision_rioda(c.case, self.t, c.L, c.mu, lips=lips, kmin=self.kmin, eps_target=c.target())
        elif c.R is not None:
            e = precision_rioda(c.case, self.t, c.L, c.mu, kmin=self.kmin, R=c.R)
        else:
            e = precision_rioda(c.case, self.t, c.L, c.mu, kmin=self.kmin, local_dist=dist_center)
        self.seen = min(self.seen, e)
        return e


def _sets(oracle, cfg):
    if cfg.sets is None:
        return WholeManifold(oracle.manifold_x), WholeManifold(oracle.manifold_y)
    return cfg.sets


def _solve(sub, cfg, eps, label, t):
    try:
        if cfg.inner_steps is not None:
            return solve_prox_fixed(sub, cfg.inner_steps, cfg.step_size)
        return solve_prox_certified(sub, eps, cfg.method, cfg.budget)
    except SubsolverBudgetError as err:
        raise SubsolverBudgetError(
            f"round {t}, {label}-block: {err}",
            point=err.point,
            certificate=err.certificate,
            report=err.report,
        ) from err


def _kmin(oracle, cfg):
    if cfg.kmin is not None:
        return cfg.kmin
    return min(oracle.manifold_x.kmin, oracle.manifold_y.kmin)


def rioda_round(state, oracle, cfg, t):
    """One round; returns ``(IterateState for t+1 with round-t played pair, info)``."""
    X, Y = _sets(oracle, cfg)
    eta = cfg.eta
    eps = _Eps(cfg, t, _kmin(oracle, cfg))
    info = _RoundInfo()
    x, y = state.x, state.y
    # played pair: both blocks read only (x_t, y_t)
    xt, rx1 = _solve(ProxSubproblem(oracle.x_slice(y), x, eta, X), cfg, eps, "x~", t)
    yt, ry1 = _solve(ProxSubproblem(oracle.neg_y_slice(x), y, eta, Y), cfg, eps, "y~", t)
    # secondary pair against the played one
    xn, rx2 = _solve(ProxSubproblem(oracle.x_slice(yt), x, eta, X), cfg, eps, "x", t)
    yn, ry2 = _solve(ProxSubproblem(oracle.neg_y_slice(xt), y, eta, Y), cfg, eps, "y", t)
    info.eps = eps.seen
    info.iters_x = rx1.iterations + rx2.iterations
    info.iters_y = ry1.iterations + ry2.iterations
    info.calls = rx1.gradient_calls + rx2.gradient_calls + ry1.gradient_calls + ry2.gradient_calls
    return IterateState(xn, yn, xt, yt), info


@dataclass
class GapResult:
    """``gap`` is attained by the returned points; the true duality gap lies
    in ``[gap, gap + slack]``."""

    gap: float
    slack: float
    x_best: object = None
    y_best: object = None

    @property
    def upper(self):
        return self.gap + self.slack


def duality_gap(oracle, sets, xh, yh, inner_tol=1e-10, budget=100_000, x0=None, y0=None):
    """``max_y f(xh, y) - min_x f(x, yh)`` by two certified PRGD solves.

    The inner problems must be g-convex (``f(., yh)``) and g-concave
    (``f(xh, .)``).  Each solve stops once the constraint set's optimality
    bound is below ``inner_tol``.
    """
    if sets is None:
        sets = (WholeManifold(oracle.manifold_x), WholeManifold(oracle.manifold_y))
    X, Y = sets
    fy = oracle.neg_y_slice(xh)
    fx = oracle.x_slice(yh)
    L = oracle.L
    y_best, ry = _descent_loop(fy, Y, Y.project(yh if y0 is None else y0), StoppingRule.certificate(inner_tol, budget), L, "prgd", True)
    x_best, rx = _descent_loop(fx, X, X.project(xh if x0 is None else x0), StoppingRule.certificate(inner_tol, budget), L, "prgd", True)
    gap = oracle.value(xh, y_best) - oracle.value(x_best, yh)
    return GapResult(gap=float(gap), slack=float(rx.certificate + ry.certificate), x_best=x_best, y_best=y_best)


RIODA_TRACE_COLUMNS = (
    "round",
    "duality_gap",
    "gap_certificate_slack",
    "dist_to_saddle",
    "eps_t",
    "inner_iterations_x",
    "inner_iterations_y",
    "cumulative_gradient_calls",
)


@dataclass
class ConvergenceTrace:
    rows: list = field(default_factory=list)
    states: list = field(default_factory=list)
    gradient_calls: int = 0
    initial: IterateState | None = None

    def column(self, name):
        return [r[name] for r in self.rows]

    def measured(self):
        """``(round, gap, slack)`` for rounds where the gap was evaluated."""
        return [
            (r["round"], r["duality_gap"], r["gap_certificate_slack"])
            for r in self.rows
            if not math.isnan(r["duality_gap"])
        ]

    def to_csv(self, path, timing=False):
        cols = RIODA_TRACE_COLUMNS + (("wall_time_ms",) if timing else ())
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for r in self.rows:
                out = []
                for c in cols:
                    v = r[c]
                    if isinstance(v, float):
                        out.append("" if math.isnan(v) else repr(v))
                    else:
                        out.append(v)
                w.writerow(out)


def _pair_dist(oracle, a, b):
    return math.sqrt(
        float(np.sum(oracle.manifold_x.dist(a[0], b[0]) ** 2))
        + float(np.sum(oracle.manifold_y.dist(a[1], b[1]) ** 2))
    )


def rioda_run(oracle, cfg, x1=None, y1=None, saddle=None, progress=None):
    """Run ``cfg.T`` rounds.

    Returns the pair selected by ``cfg.output`` (the last played pair or
    the geodesic average of the played pairs), together with a :class:`ConvergenceTrace`.
    The duality gap of the current output is evaluated in the first round,
    every ``cfg.gap_cadence`` rounds and in the final round (never when
    ``gap_cadence`` is 0).
    """
    X, Y = _sets(oracle, cfg)
    mx, my = oracle.manifold_x, oracle.manifold_y
    if x1 is None or y1 is None:
        if not cfg.constrained:
            raise GeometryDomainError("unconstrained runs need explicit starting points")
        x1 = X.center if x1 is None else x1
        y1 = Y.center if y1 is None else y1
    if cfg.constrained and not (X.contains(x1) and Y.contains(y1)):
        raise GeometryDomainError("starting points must be feasible")
    saddle = saddle if saddle is not None else getattr(oracle, "saddle", None)
    state = IterateState(x1, y1)
    trace = ConvergenceTrace(initial=state)
    avg = None
    last = cfg.output == "last" or (cfg.output == "auto" and cfg.mu > 0)
    warm = (None, None)
    t0 = time.perf_counter()
    for t in range(1, cfg.T + 1):
        state, info = rioda_round(state, oracle, cfg, t)
        trace.gradient_calls += info.calls
        if cfg.keep_iterates:
            trace.states.append(state)
        if avg is None:
            avg = AveragingState(state.x_tilde, state.y_tilde, 1)
        else:
            avg = geodesic_average_fold(avg, state.x_tilde, state.y_tilde, t - 1, mx, my)
        out = (state.x_tilde, state.y_tilde) if last else (avg.xbar, avg.ybar)
        gap = slack = math.nan
        if cfg.gap_cadence and (t % cfg.gap_cadence == 0 or t in (1, cfg.T)):
            res = duality_gap(oracle, (X, Y), out[0], out[1], cfg.gap_tol, x0=warm[0], y0=warm[1])
            warm = (res.x_best, res.y_best)
            gap, slack = res.gap, res.slack
        row = {
            "round": t,
            "duality_gap": gap,
            "gap_certificate_slack": slack,
            "dist_to_saddle": _pair_dist(oracle, (state.x, state.y), saddle) if saddle is not None else math.nan,
            "eps_t": info.eps if cfg.inner_steps is None else math.nan,
            "inner_iterations_x": info.iters_x,
            "inner_iterations_y": info.iters_y,
            "cumulative_gradient_calls": trace.gradient_calls,
            "wall_time_ms": round(1000.0 * (time.perf_counter() - t0), 3),
        }
        # unmeasured entries are nan and written as empty cells
        for k in ("duality_gap", "gap_certificate_slack", "dist_to_saddle"):
            if math.isinf(row[k]):
                raise FloatingPointError(f"non-finite {k} in round {t}")
        trace.rows.append(row)
        if progress is not None:
            progress(t, row)
    out = (state.x_tilde, state.y_tilde) if last else (avg.xbar, avg.ybar)
    return out, trace


@dataclass
class RadiusAudit:
    R: float
    violations: list = field(default_factory=list)
    max_secondary: float = 0.0
    max_played: float = 0.0

    @property
    def ok(self):
        return not self.violations


def iterate_radius_audit(trace, saddle, oracle, R=None):
    """Check ``d(x_t,x*) + d(y_t,y*) <= 2R`` and ``d(x~_t,x*) + d(y~_t,y*) <= 7R``.

    ``trace`` must come from a run with ``keep_iterates=True``.
    """
    mx, my = oracle.manifold_x, oracle.manifold_y
    xs, ys = saddle
    first = trace.initial
    if R is None:
        R = float(mx.dist(first.x, xs)) + float(my.dist(first.y, ys))
    audit = RadiusAudit(R=R)
    tol = 1e-9 * max(1.0, R)
    # secondary iterates x_1 .. x_{T+1}, played x~_1 .. x~_T
    secondary = [first] + list(trace.states)
    for t, s in enumerate(secondary, start=1):
        d = float(mx.dist(s.x, xs)) + float(my.dist(s.y, ys))
        audit.max_secondary = max(audit.max_secondary, d)
        if d > 2.0 * R + tol:
            audit.violations.append(("secondary", t, d))
    for t, s in enumerate(trace.states, start=1):
        d = float(mx.dist(s.x_tilde, xs)) + float(my.dist(s.y_tilde, ys))
        audit.max_played = max(audit.max_played, d)
        if d > 7.0 * R + tol:
            audit.violations.append(("played", t, d))
    return audit
