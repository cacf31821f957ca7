"""Implicit optimistic online gradient descent on Hadamard manifolds.

Each round first plays ``x~_t``, an inexact proximal step on the hint
``l~_t`` from the secondary iterate ``x_t``; after the loss ``l_t`` is
revealed, ``x_{t+1}`` is an inexact proximal step on ``l_t`` from the same
``x_t``.  Both prox problems are solved to the relative accuracy ``eps_t``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import GeometryDomainError, SubsolverBudgetError
from .objectives import SumObjective, ZeroObjective
from .subsolvers import (
    DEFAULT_BUDGET,
    ProxSubproblem,
    StoppingRule,
    prgd,
    solve_prox_certified,
)

__all__ = [
    "RiodConfig",
    "RegretRecord",
    "precision_riod",
    "riod_run",
    "regret",
    "dynamic_regret",
    "path_length",
    "regret_bound",
    "best_fixed_comparator",
    "write_riod_trace",
    "RIOD_TRACE_COLUMNS",
]


@dataclass
class RiodConfig:
    """Parameters of the online algorithm.

    ``lips=None`` selects the adaptive schedule, which plugs the gradient
    norm of the current prox iterate into the precision formula instead of
    a global Lipschitz bound.
    """

    eta: float
    set: object
    L: float
    T: int
    lips: float | None = None
    kmin: float | None = None

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not self.set.bounded:
            raise GeometryDomainError("the online algorithm needs a compact constraint set")
        if self.T < 1:
            raise ValueError("horizon T must be at least 1")
        if self.kmin is None:
            self.kmin = self.set.manifold.kmin

    @property
    def D(self):
        return self.set.diameter


def precision_riod(t, cfg, grad_norm=None):
    """Relative prox accuracy for round ``t``.

    ``1 / (8 eta max{4, (t+1)^2 (15 + 8 eta^2 L^2 + 2 eta^2 G^2 (D^-2 + 48|kmin|))})``
    with ``G = cfg.lips``, or ``grad_norm`` in adaptive mode.
    """
    if t < 1:
        raise ValueError("rounds are numbered from 1")
    D = cfg.D
    if not D > 0:
        raise GeometryDomainError("diameter must be positive")
    G = cfg.lips if cfg.lips is not None else grad_norm
    if G is None:
        raise ValueError("adaptive precision needs the current gradient norm")
    eta, L = cfg.eta, cfg.L
    inner = 15.0 + 8.0 * eta**2 * L**2 + 2.0 * eta**2 * G**2 * (D**-2 + 48.0 * abs(cfg.kmin))
    return 1.0 / (8.0 * eta * max(4.0, (t + 1) ** 2 * inner))


@dataclass
class RegretRecord:
    played: list = field(default_factory=list)
    secondary: list = field(default_factory=list)
    final_secondary: object = None
    loss_values: list = field(default_factory=list)
    optimism_terms: list = field(default_factory=list)
    oracle_calls: list = field(default_factory=list)
    inner_iterations: list = field(default_factory=list)
    eps: list = field(default_factory=list)
    dist_secondary_played: list = field(default_factory=list)
    set: object = None

    @property
    def T(self):
        return len(self.played)


def _at(seq, t):
    # 1-based access to a list or a callable stream
    return seq(t) if callable(seq) else seq[t - 1]


def _hint(policy, t, stream, manifold):
    if t == 1:
        return ZeroObjective(manifold)
    if policy == "zero":
        return ZeroObjective(manifold)
    if policy == "previous":
        return _at(stream, t - 1)
    if callable(policy):
        h = policy(t)
        return ZeroObjective(manifold) if h is None else h
    raise ValueError(f"unknown hint policy {policy!r}")


class _EpsTracker:
    def __init__(self, t, cfg):
        self.t = t
        self.cfg = cfg
        # an exact solve never queries the schedule; report its zero-gradient value
        self.last = precision_riod(t, cfg, cfg.lips if cfg.lips is not None else 0.0)

    def __call__(self, grad_norm, dist_center):
        self.last = precision_riod(self.t, self.cfg, grad_norm)
        return self.last


def riod_run(stream, hints, cfg, method="prgd", x1=None, budget=DEFAULT_BUDGET):
    """Play ``cfg.T`` rounds against ``stream``.

    Parameters
    ----------
    stream : sequence or callable
        ``stream[t-1]`` (or ``stream(t)``) is the loss oracle of round ``t``.
    hints : {"zero", "previous"} or callable
        A callable maps ``t`` to a hint oracle (``None`` means zero).
    cfg : RiodConfig
    method : {"prgd", "crgd"}
    x1 : point, optional
        Starting point; defaults to the center of the constraint set.

    Returns
    -------
    RegretRecord
    """
    S = cfg.set
    M = S.manifold
    x = S.center if x1 is None else x1
    if not S.contains(x):
        raise GeometryDomainError("starting point must lie in the constraint set")
    rec = RegretRecord(set=S)
    for t in range(1, cfg.T + 1):
        loss = _at(stream, t)
        hint = _hint(hints, t, stream, M)
        try:
            tracker = _EpsTracker(t, cfg)
            xt, rep_h = solve_prox_certified(
                ProxSubproblem(hint, x, cfg.eta, S), tracker, method, budget
            )
            eps_h = tracker.last
            tracker = _EpsTracker(t, cfg)
            xn, rep_l = solve_prox_certified(
                ProxSubproblem(loss, x, cfg.eta, S), tracker, method, budget
            )
        except SubsolverBudgetError as err:
            raise SubsolverBudgetError(
                f"round {t}: {err}", point=err.point, certificate=err.certificate, report=err.report
            ) from err
        diff = M.add(loss.grad(xt), M.scale(hint.grad(xt), -1.0))
        rec.played.append(xt)
        rec.secondary.append(x)
        rec.loss_values.append(loss.value(xt))
        rec.optimism_terms.append(float(M.inner(xt, diff, diff)))
        rec.oracle_calls.append(rep_h.gradient_calls + rep_l.gradient_calls + 2)
        rec.inner_iterations.append(rep_h.iterations + rep_l.iterations)
        rec.eps.append(min(eps_h, tracker.last))
        rec.dist_secondary_played.append(float(M.dist(x, xt)))
        x = xn
    rec.final_secondary = x
    return rec


def _check_comparator(record, u, tol=1e-9):
    if record.set is not None and not record.set.contains(u, tol):
        raise GeometryDomainError("comparator lies outside the constraint set")


def regret(record, stream, u):
    """Static regret ``sum_t l_t(x~_t) - l_t(u)``."""
    _check_comparator(record, u)
    return sum(
        record.loss_values[t - 1] - _at(stream, t).value(u) for t in range(1, record.T + 1)
    )


def path_length(manifold, u_seq):
    return float(sum(manifold.dist(a, b) for a, b in zip(u_seq[:-1], u_seq[1:])))


def dynamic_regret(record, stream, u_seq):
    """Regret against a moving comparator; returns ``(regret, P_T)``.

    ``u_seq`` has ``T`` or ``T + 1`` entries; the path length sums the
    distances between consecutive entries.
    """
    T = record.T
    if len(u_seq) not in (T, T + 1):
        raise ValueError(f"need {T} or {T + 1} comparators, got {len(u_seq)}")
    for u in u_seq:
        _check_comparator(record, u)
    value = sum(record.loss_values[t - 1] - _at(stream, t).value(u_seq[t - 1]) for t in range(1, T + 1))
    return value, path_length(record.set.manifold, list(u_seq))


def regret_bound(record, cfg, u=None, u_seq=None, mu=0.0):
    """Right-hand side of the regret guarantee evaluated on a finished run.

    Static comparator: ``3 D^2 / (2 eta) + eta * sum optimism``.  A moving
    comparator adds ``P_T D / eta`` and, for ``mu > 0``, subtracts
    ``(mu / 4) sum d(x_{t+1}, u_t)^2``.
    """
    D, eta = cfg.D, cfg.eta
    opt = eta * float(np.sum(record.optimism_terms))
    if u_seq is None:
        base = 3.0 * D * D / (2.0 * eta) + opt
        if mu > 0 and u is not None:
            M = record.set.manifold
            nxt = record.secondary[1:] + [record.final_secondary]
            base -= 0.25 * mu * sum(float(M.dist(x, u)) ** 2 for x in nxt)
        return base
    M = record.set.manifold
    P = path_length(M, list(u_seq))
    bound = (2.0 * P * D + 3.0 * D * D) / (2.0 * eta) + opt
    if mu > 0:
        nxt = record.secondary[1:] + [record.final_secondary]
        bound -= 0.25 * mu * sum(float(M.dist(x, v)) ** 2 for x, v in zip(nxt, u_seq))
    return bound


class _MeanLoss:
    def __init__(self, losses):
        self.total = SumObjective(*losses)
        self.n = len(losses)
        self.manifold = self.total.manifold
        self.L = self.total.L / self.n
        self.mu = self.total.mu / self.n

    def value(self, x):
        return self.total.value(x) / self.n

    def grad(self, x):
        return self.manifold.scale(self.total.grad(x), 1.0 / self.n)


def best_fixed_comparator(stream, T, set_, x0=None, tol=1e-10, L=None):
    """Minimize ``sum_t l_t`` over ``set_`` by PRGD to a certified gap ``tol`` (per round)."""
    losses = [_at(stream, t) for t in range(1, T + 1)]
    f = _MeanLoss(losses)
    x0 = set_.center if x0 is None else x0
    u, _ = prgd(f, set_, x0, StoppingRule.certificate(tol, budget=200_000), L=L or f.L)
    return u


RIOD_TRACE_COLUMNS = (
    "t",
    "loss_value",
    "optimism_term",
    "dist_secondary_played",
    "eps_t",
    "inner_iterations",
    "cumulative_regret_vs_fixed_u",
)


def write_riod_trace(path, record, stream, u):
    """One CSV row per round; regret is measured against the fixed comparator ``u``."""
    cum = 0.0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RIOD_TRACE_COLUMNS)
        for t in range(1, record.T + 1):
            cum += record.loss_values[t - 1] - _at(stream, t).value(u)
            row = (
                t,
                record.loss_values[t - 1],
                record.optimism_terms[t - 1],
                record.dist_secondary_played[t - 1],
                record.eps[t - 1],
                record.inner_iterations[t - 1],
                cum,
            )
            for v in row[1:]:
                if not math.isfinite(v):
                    raise FloatingPointError(f"non-finite value in round {t}: {row}")
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
