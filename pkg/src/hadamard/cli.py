"""Command-line entry point: ``hadamard {karcher,online,minmax,geomtest}``."""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time

from .config import SUBCOMMANDS, SUBSOLVERS, ConfigError, emit_config, merge_config, read_config_values
from .exceptions import HadamardError

__all__ = ["main", "build_parser", "run"]

PAPER_SCALE = {"hyperbolic": "hyperbolic:5000", "spd": "spd:100"}


def build_parser():
    p = argparse.ArgumentParser(
        prog="hadamard",
        description="Implicit optimistic online and min-max optimization on Hadamard manifolds.",
    )
    p.add_argument("subcommand", nargs="?", choices=SUBCOMMANDS)
    p.add_argument("--config", help="flat key = value config file; flags override it")
    p.add_argument("--emit-config", action="store_true", help="print the resolved config and exit")
    p.add_argument("--manifold", help="{euclidean|hyperbolic|spd}:<dim>")
    p.add_argument("--n", type=int, help="number of points (karcher)")
    p.add_argument("--iters", type=int, help="rounds / horizon T")
    p.add_argument("--epsilon", type=float, help="target accuracy (minmax picks T from it)")
    p.add_argument("--eta", type=float, help="proximal parameter")
    p.add_argument("--lambda", dest="lam", type=float, help="inner PRGD step size")
    p.add_argument("--mu", type=float, help="strong convexity of the minmax test problem")
    p.add_argument("--rbar", type=float, help="robustness radius (karcher)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--gap-cadence", type=int, help="evaluate the duality gap every k rounds")
    p.add_argument("--subsolver", choices=SUBSOLVERS)
    p.add_argument("--inner-steps", type=int, help="fixed PRGD steps per prox solve")
    p.add_argument("--paper-scale", action="store_true", default=None, help="use H^5000 / S+^100 with n = 50")
    p.add_argument("--timing", action="store_true", default=None, help="add wall_time_ms to the trace")
    p.add_argument("--no-plot", dest="plot", action="store_false", default=None, help="skip the SVG plot")
    return p


def _flags(ns):
    skip = {"config", "emit_config"}
    return {k: v for k, v in vars(ns).items() if k not in skip}


def _outpath(cfg, name):
    try:
        os.makedirs(cfg.out, exist_ok=True)
    except OSError as err:
        raise OSError(f"cannot create output directory {cfg.out!r}: {err.strerror}") from None
    return os.path.join(cfg.out, name)


def _write_partial(path, rows, columns):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow(["" if isinstance(r[c], float) and math.isnan(r[c]) else (repr(r[c]) if isinstance(r[c], float) else r[c]) for c in columns])


def _run_karcher(cfg):
    from .karcher import ExperimentConfig, generate_instance, run_experiment
    from .manifolds import manifold_from_spec
    from .rioda import RIODA_TRACE_COLUMNS

    spec, n = cfg.manifold, cfg.n
    if cfg.paper_scale:
        kind = spec.split(":")[0]
        if kind not in PAPER_SCALE:
            raise ConfigError(f"--paper-scale has no preset for {kind!r}")
        spec, n = PAPER_SCALE[kind], 50
    M = manifold_from_spec(spec)
    inst = generate_instance(M, n, cfg.rbar, cfg.seed)
    expcfg = ExperimentConfig(
        iterations=cfg.iters or 1000,
        inner_steps=cfg.inner_steps or 3,
        gap_cadence=max(cfg.gap_cadence, 1),
        lam=cfg.lam,
        eta=cfg.eta,
    )
    rows = []
    try:
        res = run_experiment(inst, expcfg, cfg.out, timing=cfg.timing, progress=lambda t, r: rows.append(r), plot=cfg.plot)
    except (HadamardError, FloatingPointError):
        if rows:
            cols = RIODA_TRACE_COLUMNS + (("wall_time_ms",) if cfg.timing else ())
            _write_partial(_outpath(cfg, "karcher_trace.partial.csv"), rows, cols)
        raise
    return (
        f"karcher {spec} n={n} rounds={expcfg.iterations} lambda={res.lam} eta={res.eta} "
        f"final_gap={res.final_gap:.6e} slack={res.final_slack:.3e} "
        f"gradient_calls={res.gradient_calls} modulus_x={res.convexity_modulus:.4f}"
    )


def _run_online(cfg):
    from .manifolds import manifold_from_spec
    from .riod import RiodConfig, best_fixed_comparator, regret, regret_bound, riod_run, write_riod_trace
    from .workloads import drifting_stream

    M = manifold_from_spec(cfg.manifold)
    T = cfg.iters or 200
    losses, ball = drifting_stream(M, T, radius=1.0, seed=cfg.seed)
    rcfg = RiodConfig(eta=cfg.eta or 0.1, set=ball, L=losses[0].L, T=T, lips=losses[0].lipschitz)
    rec = riod_run(losses, "previous", rcfg, method=cfg.subsolver)
    u = best_fixed_comparator(losses, T, ball)
    path = _outpath(cfg, "online_trace.csv")
    write_riod_trace(path, rec, losses, u)
    if cfg.plot:
        from .plots import plot_gap_csv

        plot_gap_csv(path, _outpath(cfg, "online_optimism.svg"), f"Optimism terms on {M.spec}", column="optimism_term", xcol="t")
    reg = regret(rec, losses, u)
    bound = regret_bound(rec, rcfg)
    return f"online {M.spec} T={T} eta={rcfg.eta} regret={reg:.6e} bound={bound:.6e} gradient_calls={sum(rec.oracle_calls)}"


def _run_minmax(cfg):
    from .manifolds import manifold_from_spec
    from .plots import plot_gap_csv
    from .rioda import RIODA_TRACE_COLUMNS, MinMaxConfig, iterations_for_accuracy, rioda_run
    from .workloads import synthetic_saddle

    M = manifold_from_spec(cfg.manifold)
    oracle, sets, saddle = synthetic_saddle(M, cfg.mu, cfg.seed)
    mcfg = MinMaxConfig(
        L=oracle.L,
        T=1,
        mu=cfg.mu,
        sets=sets,
        eta=cfg.eta,
        eps_target=cfg.epsilon,
        method=cfg.subsolver,
        inner_steps=cfg.inner_steps,
        step_size=cfg.lam,
        gap_cadence=cfg.gap_cadence,
    )
    if cfg.iters is not None:
        mcfg.T = cfg.iters
    elif cfg.epsilon is not None:
        mcfg.T = iterations_for_accuracy(mcfg.case, oracle.L, cfg.mu, mcfg.D, cfg.epsilon)
    else:
        mcfg.T = 200
    rows = []
    try:
        _, trace = rioda_run(oracle, mcfg, saddle=saddle, progress=lambda t, r: rows.append(r))
    except (HadamardError, FloatingPointError):
        if rows:
            cols = RIODA_TRACE_COLUMNS + (("wall_time_ms",) if cfg.timing else ())
            _write_partial(_outpath(cfg, "minmax_trace.partial.csv"), rows, cols)
        raise
    path = _outpath(cfg, "minmax_trace.csv")
    trace.to_csv(path, timing=cfg.timing)
    if cfg.plot and cfg.gap_cadence:
        plot_gap_csv(path, _outpath(cfg, "minmax_gap.svg"), f"Convergence on {M.spec} (mu={cfg.mu})")
    last = trace.rows[-1]
    return (
        f"minmax {M.spec} mu={cfg.mu} T={mcfg.T} final_gap={last['duality_gap']:.6e} "
        f"slack={last['gap_certificate_slack']:.3e} gradient_calls={trace.gradient_calls}"
    )


def _run_geomtest(cfg):
    from .geomcheck import format_suite, geometry_suite
    from .manifolds import Euclidean, Hyperbolic, SPD, manifold_from_spec

    ms = [manifold_from_spec(cfg.manifold)] if cfg.manifold else [Euclidean(10), Hyperbolic(10), SPD(4)]
    trials = cfg.iters or 1000
    ok = True
    for M in ms:
        res = geometry_suite(M, trials=trials, seed=cfg.seed)
        for line in format_suite(res):
            print(line)
        ok &= res.ok
    if not ok:
        raise HadamardError("geometry invariant suite reported failures")
    return f"geomtest manifolds={len(ms)} trials={trials} all checks passed"


_RUNNERS = {"karcher": _run_karcher, "online": _run_online, "minmax": _run_minmax, "geomtest": _run_geomtest}


def run(cfg):
    """Execute a validated :class:`RunConfig`; returns the process exit code."""
    t0 = time.perf_counter()
    try:
        summary = _RUNNERS[cfg.subcommand](cfg)
    except (HadamardError, ValueError, FloatingPointError, OSError) as err:
        print(f"hadamard {cfg.subcommand}: error: {err}", file=sys.stderr)
        return 1
    print(f"{summary} wall_time_s={time.perf_counter() - t0:.2f}")
    return 0


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        file_values = read_config_values(ns.config) if ns.config else {}
        cfg = merge_config(file_values, _flags(ns), ns.config or "command line")
    except ConfigError as err:
        print(f"hadamard: config error: {err}", file=sys.stderr)
        return 2
    if ns.emit_config:
        sys.stdout.write(emit_config(cfg))
        return 0
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
