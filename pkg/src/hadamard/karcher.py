"""Robust Karcher mean benchmark.

The saddle problem is

    min_x max_{Y} F(x, Y) = (1/n) sum_i d(x, Y_i)^2 - (gamma/n) sum_i d(y_i, Y_i)^2

over ``x`` in a ball around the base point and ``Y_i`` in the small balls
``B(y_i, Rbar)`` around the anchors.  Without the ``Y`` constraints this
is the regularized variant.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .constraints import GeodesicBall, PowerBall, WholeManifold
from .exceptions import GeometryDomainError, SubsolverBudgetError
from .geometry import zeta
from .manifolds import PowerManifold, manifold_from_spec
from .objectives import FunctionObjective, SaddleOracle
from .plots import plot_gap_csv
from .rioda import MinMaxConfig, duality_gap, rioda_run
from .seeding import rng_for
from .subsolvers import StoppingRule, _descent_loop, rgd

__all__ = [
    "KarcherInstance",
    "ExperimentConfig",
    "ExperimentResult",
    "RobustKarcherSaddle",
    "generate_instance",
    "robust_karcher_oracle",
    "karcher_sets",
    "karcher_mean",
    "measured_convexity_modulus",
    "solve_robust_karcher",
    "run_experiment",
    "save_instance",
    "load_instance",
    "monotone_within_slack",
    "final_gap",
]


@dataclass
class KarcherInstance:
    manifold: object
    n: int
    anchors: np.ndarray
    base: np.ndarray
    Rbar: float = 0.01
    gamma: float = 1.0
    seed: int = 0
    # bound on d(base, y_i); generated instances have exactly 1
    spread: float = 1.0

    def __post_init__(self):
        self.anchors = np.asarray(self.anchors, dtype=float)
        self.base = np.asarray(self.base, dtype=float)
        if self.n < 1 or self.anchors.shape[0] != self.n:
            raise GeometryDomainError(f"expected {self.n} anchors, got {self.anchors.shape[0]}")
        if not self.spread > 0:
            raise GeometryDomainError(f"spread must be positive, got {self.spread}")
        if not self.Rbar > 0:
            raise GeometryDomainError(f"Rbar must be positive, got {self.Rbar}")
        if self.gamma < self.zeta_bar:
            raise GeometryDomainError(
                f"gamma={self.gamma} is below zeta(Dbar)={self.zeta_bar}; "
                "the problem would not be g-concave in Y"
            )

    @property
    def Dbar(self):
        return self.spread + self.Rbar

    @property
    def zeta_bar(self):
        return zeta(self.Dbar, self.manifold.kmin)

    @property
    def power(self):
        return PowerManifold(self.manifold, self.n)


def generate_instance(manifold, n, Rbar=0.01, seed=0, gamma=None):
    """Random base point and ``n`` anchors at distance exactly 1 from it."""
    if int(n) < 1:
        raise ValueError("n must be at least 1")
    rng = rng_for(seed, "karcher-instance")
    base = manifold.random_point(rng)
    anchors = []
    for _ in range(int(n)):
        v = manifold.random_tangent(base, rng)
        anchors.append(manifold.exp(base, manifold.scale(v, 1.0 / manifold.norm(base, v))))
    if gamma is None:
        gamma = zeta(1.0 + Rbar, manifold.kmin)
    return KarcherInstance(manifold, int(n), np.stack(anchors), base, float(Rbar), float(gamma), int(seed))


class RobustKarcherSaddle(SaddleOracle):
    """Saddle oracle on ``M x M^n``; all ``n`` blocks are evaluated in one batch.

    ``L = 2 zeta(Dbar) max(1, gamma)``.  The declared moduli are
    ``mu_x = 1`` and ``mu_y = gamma - zeta(Dbar)``.
    """

    def __init__(self, inst):
        self.inst = inst
        self.manifold_x = inst.manifold
        self.manifold_y = inst.power
        self.anchors = inst.anchors
        self.gamma = inst.gamma
        self.n = inst.n
        zd = inst.zeta_bar
        self.L = 2.0 * zd * max(1.0, inst.gamma)
        self.mu_x = 1.0
        self.mu_y = max(inst.gamma - zd, 0.0)

    def _tile(self, x):
        return np.repeat(np.asarray(x)[None], self.n, axis=0)

    def value(self, x, y):
        M = self.manifold_x
        d1 = M.dist(self._tile(x), y)
        d2 = M.dist(self.anchors, y)
        return float(np.sum(d1 * d1) - self.gamma * np.sum(d2 * d2)) / self.n

    def grad_x(self, x, y):
        v = self.manifold_x.log(self._tile(x), y)
        return -(2.0 / self.n) * np.sum(v, axis=0)

    def grad_y(self, x, y):
        M = self.manifold_x
        return (2.0 / self.n) * (self.gamma * M.log(y, self.anchors) - M.log(y, self._tile(x)))


def robust_karcher_oracle(inst):
    return RobustKarcherSaddle(inst)


def karcher_sets(inst, regularized=False):
    """``(X, Y)``: ``X = B(base, Dbar)`` and ``Y = prod B(y_i, Rbar)`` (whole space if regularized)."""
    X = GeodesicBall(inst.manifold, inst.base, inst.Dbar)
    if regularized:
        return X, WholeManifold(inst.power)
    return X, PowerBall(inst.power, inst.anchors, inst.Rbar)


def karcher_mean(manifold, points, weights=None, tol=1e-9, budget=100_000, x0=None):
    """Weighted Karcher mean by Riemannian gradient descent.

    Minimizes ``(1/2) sum_i w_i d(x, p_i)^2`` with normalized weights until
    the gradient norm is at most ``tol``.
    """
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] == 0:
        raise ValueError("need at least one point")
    k = pts.shape[0]
    w = np.full(k, 1.0 / k) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (k,) or np.any(w < 0) or not w.sum() > 0:
        raise ValueError("weights must be nonnegative, one per point, with positive sum")
    w = w / w.sum()
    wshape = (k,) + (1,) * (pts.ndim - 1)
    M = manifold

    def value(x):
        d = M.dist(np.repeat(x[None], k, axis=0), pts)
        return 0.5 * float(np.sum(w * d * d))

    def grad(x):
        return -np.sum(w.reshape(wshape) * M.log(np.repeat(x[None], k, axis=0), pts), axis=0)

    # weights sum to one, so the smoothness constant is zeta of the spread
    spread = float(np.max(M.dist(np.repeat(pts[:1], k, axis=0), pts)))
    L = zeta(2.0 * spread, M.kmin)
    f = FunctionObjective(M, value, grad, L=L, mu=1.0)
    start = pts[int(np.argmax(w))] if x0 is None else x0
    x, rep = rgd(f, start, StoppingRule.grad_norm(tol, budget), L=L)
    if not rep.converged:
        raise SubsolverBudgetError(
            f"Karcher mean did not reach gradient norm {tol} in {budget} steps "
            f"(last {rep.final_grad_norm:.3e})",
            point=x,
            certificate=rep.final_grad_norm,
            report=rep,
        )
    return x


def measured_convexity_modulus(oracle, x, y, rng, probes=8, h=1e-3):
    """Smallest second difference of ``F(., y)`` along unit geodesics through ``x``."""
    M = oracle.manifold_x
    f0 = oracle.value(x, y)
    best = math.inf
    for _ in range(probes):
        u = M.random_unit_tangent(x, rng)
        fp = oracle.value(M.exp(x, M.scale(u, h)), y)
        fm = oracle.value(M.exp(x, M.scale(u, -h)), y)
        best = min(best, (fp - 2.0 * f0 + fm) / (h * h))
    return best


def solve_robust_karcher(inst, regularized=False, tol=1e-10, budget=20_000, outer_budget=5_000):
    """Reference saddle point by nested solves.

    The inner maximization over ``Y`` is solved for each ``x`` and the
    outer minimization follows ``grad_x F(x, Y*(x))``.  Slow; meant for
    small instances in tests.
    """
    oracle = RobustKarcherSaddle(inst)
    X, Y = karcher_sets(inst, regularized)
    M = inst.manifold
    y = inst.anchors.copy()
    x = inst.base.copy()
    inner_rule = StoppingRule.grad_norm(tol, budget) if regularized else StoppingRule.certificate(tol, budget)
    for _ in range(outer_budget):
        y, _ = _descent_loop(oracle.neg_y_slice(x), Y, y, inner_rule, oracle.L, "prgd", True)
        g = oracle.grad_x(x, y)
        if X.optimality_slack(x, g, oracle.mu_x) <= tol:
            return x, y
        x = X.project(M.exp(x, M.scale(g, -1.0 / oracle.L)))
    raise SubsolverBudgetError(f"nested saddle solve did not converge in {outer_budget} steps", point=(x, y))


@dataclass
class ExperimentConfig:
    """Benchmark parameters.

    ``lam``/``eta`` fix the inner step size and prox parameter; when either
    is ``None`` it is chosen from its grid by the smallest final gap of a
    run of ``search_iterations`` rounds.
    """

    iterations: int = 1000
    inner_steps: int = 3
    lambda_grid: tuple = (1e-1, 1e-2, 1e-3)
    eta_grid: tuple = (1e-1, 1e-2)
    gap_cadence: int = 10
    lam: float | None = None
    eta: float | None = None
    search_iterations: int = 100
    gap_tol: float = 1e-12

    def __post_init__(self):
        for name in ("iterations", "inner_steps", "gap_cadence", "search_iterations"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive count")
        if not self.lambda_grid or not self.eta_grid:
            raise ValueError("grids must be nonempty")
        for v in tuple(self.lambda_grid) + tuple(self.eta_grid):
            if not v > 0:
                raise ValueError(f"grid values must be positive, got {v}")


@dataclass
class ExperimentResult:
    trace: object
    lam: float
    eta: float
    gradient_calls: int
    final_gap: float
    final_slack: float
    convexity_modulus: float
    grid: list = field(default_factory=list)
    files: dict = field(default_factory=dict)
    output: tuple = None


def _config(oracle, sets, T, lam, eta, expcfg, cadence):
    return MinMaxConfig(
        L=oracle.L,
        T=T,
        mu=oracle.mu,
        sets=sets,
        eta=eta,
        inner_steps=expcfg.inner_steps,
        step_size=lam,
        gap_cadence=cadence,
        gap_tol=expcfg.gap_tol,
        output="last",
    )


def _grid_search(oracle, sets, inst, expcfg):
    rows = []
    T = expcfg.search_iterations
    for lam in expcfg.lambda_grid if expcfg.lam is None else (expcfg.lam,):
        for eta in expcfg.eta_grid if expcfg.eta is None else (expcfg.eta,):
            cfg = _config(oracle, sets, T, lam, eta, expcfg, T)
            try:
                _, tr = rioda_run(oracle, cfg, inst.base, inst.anchors)
                g = tr.rows[-1]["duality_gap"] + tr.rows[-1]["gap_certificate_slack"]
            except (FloatingPointError, SubsolverBudgetError, GeometryDomainError):
                g = math.inf
            rows.append((lam, eta, g if math.isfinite(g) else math.inf))
    best = min(rows, key=lambda r: r[2])
    return best[0], best[1], rows


def monotone_within_slack(measured, rtol=0.0):
    """True when every measured gap is at most the previous one plus both certificate slacks."""
    for (_, g0, s0), (_, g1, s1) in zip(measured[:-1], measured[1:]):
        if g1 > g0 + s0 + s1 + rtol * abs(g0):
            return False
    return True


def run_experiment(inst, expcfg, outdir, timing=False, progress=None, plot=True):
    """Run the benchmark and write ``karcher_trace.csv``, ``karcher_gap.svg``,
    ``instance.txt`` and ``grid_search.csv`` into ``outdir``."""
    oracle = RobustKarcherSaddle(inst)
    sets = karcher_sets(inst)
    try:
        os.makedirs(outdir, exist_ok=True)
    except OSError as err:
        raise OSError(f"cannot create output directory {outdir!r}: {err}") from err
    if expcfg.lam is not None and expcfg.eta is not None:
        lam, eta, grid = expcfg.lam, expcfg.eta, []
    else:
        lam, eta, grid = _grid_search(oracle, sets, inst, expcfg)
    cfg = _config(oracle, sets, expcfg.iterations, lam, eta, expcfg, expcfg.gap_cadence)
    out, trace = rioda_run(oracle, cfg, inst.base, inst.anchors, progress=progress)
    files = {
        "trace": os.path.join(outdir, "karcher_trace.csv"),
        "instance": os.path.join(outdir, "instance.txt"),
        "grid": os.path.join(outdir, "grid_search.csv"),
    }
    trace.to_csv(files["trace"], timing=timing)
    save_instance(inst, files["instance"])
    with open(files["grid"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("lambda", "eta", "final_gap_upper"))
        for r in grid:
            w.writerow([repr(float(v)) for v in r])
    if plot:
        files["plot"] = plot_gap_csv(
            files["trace"],
            os.path.join(outdir, "karcher_gap.svg"),
            f"Robust Karcher mean on {inst.manifold.spec}, n={inst.n} (lambda={lam}, eta={eta})",
        )
    modulus = measured_convexity_modulus(oracle, out[0], out[1], rng_for(inst.seed, "modulus"))
    last = trace.rows[-1]
    return ExperimentResult(
        trace=trace,
        lam=lam,
        eta=eta,
        gradient_calls=trace.gradient_calls,
        final_gap=last["duality_gap"],
        final_slack=last["gap_certificate_slack"],
        convexity_modulus=modulus,
        grid=grid,
        files=files,
        output=out,
    )


def final_gap(inst, point, tol=1e-12):
    """Duality gap of a pair ``(x, Y)`` on the constrained problem."""
    return duality_gap(RobustKarcherSaddle(inst), karcher_sets(inst), point[0], point[1], tol)


def _fmt(a):
    return " ".join(repr(float(v)) for v in np.ravel(a))


def save_instance(inst, path):
    """Plain-text ``key = value`` file; floats use shortest round-trip repr."""
    lines = [
        "# robust Karcher instance",
        f"manifold = {inst.manifold.spec}",
        f"n = {inst.n}",
        f"seed = {inst.seed}",
        f"Rbar = {inst.Rbar!r}",
        f"gamma = {inst.gamma!r}",
        f"spread = {inst.spread!r}",
        f"base = {_fmt(inst.base)}",
    ]
    lines += [f"anchor.{i} = {_fmt(a)}" for i, a in enumerate(inst.anchors)]
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as err:
        raise OSError(f"cannot write instance file {path!r}: {err}") from err
    return path


def load_instance(path):
    kv = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            kv[key.strip()] = val.strip()
    try:
        M = manifold_from_spec(kv["manifold"])
        n = int(kv["n"])
        shape = tuple(M.point_shape)
        base = np.array([float(t) for t in kv["base"].split()]).reshape(shape)
        anchors = np.stack(
            [np.array([float(t) for t in kv[f"anchor.{i}"].split()]).reshape(shape) for i in range(n)]
        )
        return KarcherInstance(
            M, n, anchors, base, float(kv["Rbar"]), float(kv["gamma"]), int(kv["seed"]),
            float(kv.get("spread", "1.0")),
        )
    except KeyError as err:
        raise ValueError(f"{path}: missing field {err.args[0]!r}") from None
