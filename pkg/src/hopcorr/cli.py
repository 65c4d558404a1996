"""Command-line entry point.

Exit codes: 0 ok, 1 usage error, 2 solver non-convergence, 3 check failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, checks
from .correlation import build_x, spectrum
from .meanfield import Model, SolverConfig, solve
from .model import ModelParams, PatternSet, SpinSystem
from .montecarlo import McConfig, Rule, run
from .phases import DEFAULT_INITS, PhaseConfig, SweepGrid, classify, default_threads, multi_start, parse_init, sweep
from .report import atomic_write, heatmap_ppm, region_counts, sweep_csv, to_json

EXIT_OK, EXIT_USAGE, EXIT_NONCONV, EXIT_CHECK = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # argparse exits with 2, which the contract reserves for non-convergence
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def parse_range(text: str) -> tuple[float, float, int]:
    """``min:max:steps``; a bare number is a one-point range."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            v = float(parts[0])
            return v, v, 1
        if len(parts) == 3:
            return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        pass
    raise UsageError(f"bad range {text!r}, expected min:max:steps")


def _solver_config(args) -> SolverConfig:
    return SolverConfig(damping=args.damping, tol=args.tol, max_iter=args.max_iter, zero_eps=args.zero_eps)


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--damping", type=float, default=0.5)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=100_000)
    p.add_argument("--zero-eps", type=float, default=1e-6)
    p.add_argument("--sym-eps", type=float, default=1e-4)


def _emit(text: str, out: str | None) -> None:
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def cmd_solve(args) -> int:
    params = ModelParams.from_temperature(args.P, args.a, args.T)
    cfg = _solver_config(args)
    if args.multi_start:
        point = multi_start(params, cfg, PhaseConfig(sym_eps=args.sym_eps))
        res = point.best
        doc = res.to_json()
        doc.update(label=point.label.value, sublabel=point.sublabel,
                   solutions=[r.to_json() for r in point.all_solutions])
    else:
        res = solve(params, parse_init(args.init, args.P), cfg, model=Model(args.model),
                    init_label=args.init)
        doc = res.to_json()
        doc["label"] = classify(res.M, cfg.zero_eps, args.sym_eps, PhaseConfig().support_rel).value
    doc["config"] = {"damping": cfg.damping, "tol": cfg.tol, "max_iter": cfg.max_iter,
                     "zero_eps": cfg.zero_eps, "sym_eps": args.sym_eps, "seed": args.seed}
    _emit(to_json(doc), args.out)
    return EXIT_OK if res.converged else EXIT_NONCONV


def cmd_sweep(args) -> int:
    T_min, T_max, T_steps = parse_range(args.T)
    a_min, a_max, a_steps = parse_range(args.a)
    inits = tuple(DEFAULT_INITS) if args.multi_start else (args.init,)
    for name in inits:
        parse_init(name, args.P)
    grid = SweepGrid(T_min, T_max, T_steps, a_min, a_max, a_steps, args.P, inits)
    cfg = _solver_config(args)
    threads = args.threads or default_threads()
    points = sweep(grid, cfg, PhaseConfig(sym_eps=args.sym_eps, inits=inits), threads=threads)
    meta = {"P": args.P, "T": args.T, "a": args.a, "inits": "|".join(inits),
            "damping": cfg.damping, "tol": cfg.tol, "max_iter": cfg.max_iter,
            "zero_eps": cfg.zero_eps, "sym_eps": args.sym_eps, "seed": args.seed}
    _emit(sweep_csv(points, args.P, meta), args.out)
    if args.heatmap:
        atomic_write(args.heatmap, heatmap_ppm(points, grid))
    summary = {"cells": len(points), "regions": region_counts(points),
               "failed_starts": sum(len(p.failed) for p in points)}
    print(to_json(summary), end="", file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def cmd_check(args) -> int:
    names = list(checks.SUITES) if args.suite == "all" else [args.suite]
    reports = []
    for name in names:
        if name == "topology":
            reports.append(checks.suite_topology(threads=args.threads or default_threads()))
        else:
            reports.append(checks.SUITES[name]())
    doc = {"passed": all(r["passed"] for r in reports), "suites": reports}
    _emit(to_json(doc), args.out)
    return EXIT_OK if doc["passed"] else EXIT_CHECK


def cmd_spectrum(args) -> int:
    _emit(to_json(spectrum(build_x(args.P, args.a)).to_json()), args.out)
    return EXIT_OK


def cmd_mc(args) -> int:
    if args.patterns:
        patterns = PatternSet.from_csv(args.patterns)
        if patterns.N != args.N or patterns.P != args.P:
            raise UsageError(f"pattern file is {patterns.N}x{patterns.P}, flags say {args.N}x{args.P}")
    else:
        patterns = PatternSet.sample(args.N, args.P, args.seed)
    if args.T <= 0:
        raise UsageError("Monte Carlo needs T > 0")
    params = ModelParams.from_temperature(args.P, args.a, args.T)
    if args.init == "pure":
        init = SpinSystem.aligned(patterns)
    elif args.init == "random":
        init = SpinSystem.random(patterns, args.seed + 1)
    else:
        raise UsageError("--init must be pure or random")
    cfg = McConfig(N=args.N, sweeps=args.sweeps, burn_in=args.burn_in, seed=args.seed,
                   rule=Rule(args.rule), measure_every=args.measure_every)
    traj = run(patterns, params, init, cfg)
    if args.trajectory:
        Path(args.trajectory).parent.mkdir(parents=True, exist_ok=True)
        traj.to_csv(args.trajectory)
    doc = {"N": args.N, "P": args.P, "a": args.a, "T": args.T, "rule": cfg.rule.value,
           "sweeps": cfg.sweeps, "burn_in": cfg.burn_in, "measure_every": cfg.measure_every,
           "seed": args.seed, "acceptance": traj.acceptance,
           "mean_abs_m": traj.mean_abs(), "mean_m": traj.m.mean(axis=0),
           "mean_energy_per_neuron": float(np.mean(traj.energy_per_neuron))}
    _emit(to_json(doc), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hopcorr", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="fixed point from one init (or multi-start)")
    s.add_argument("--P", type=int, required=True)
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--T", type=float, required=True)
    s.add_argument("--init", default="pure")
    s.add_argument("--model", choices=[m.value for m in Model], default="rel")
    s.add_argument("--multi-start", action="store_true")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    _add_solver_flags(s)
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("sweep", help="(T, a) phase diagram")
    w.add_argument("--P", type=int, required=True)
    w.add_argument("--a", required=True, help="min:max:steps")
    w.add_argument("--T", required=True, help="min:max:steps")
    w.add_argument("--init", default="pure")
    w.add_argument("--multi-start", action="store_true")
    w.add_argument("--heatmap")
    w.add_argument("--out")
    w.add_argument("--threads", type=int, default=0)
    w.add_argument("--seed", type=int, default=0)
    _add_solver_flags(w)
    w.set_defaults(func=cmd_sweep)

    c = sub.add_parser("check", help="verification suites")
    c.add_argument("--suite", choices=["all", *checks.SUITES], default="all")
    c.add_argument("--out")
    c.add_argument("--threads", type=int, default=0)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_check)

    e = sub.add_parser("spectrum", help="eigenvalues of the correlation matrix")
    e.add_argument("--P", type=int, required=True)
    e.add_argument("--a", type=float, required=True)
    e.add_argument("--out")
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(func=cmd_spectrum)

    m = sub.add_parser("mc", help="finite-N Monte Carlo run")
    m.add_argument("--N", type=int, required=True)
    m.add_argument("--P", type=int, required=True)
    m.add_argument("--a", type=float, required=True)
    m.add_argument("--T", type=float, required=True)
    m.add_argument("--sweeps", type=int, default=400)
    m.add_argument("--burn-in", type=int, default=200)
    m.add_argument("--measure-every", type=int, default=1)
    m.add_argument("--rule", choices=[r.value for r in Rule], default="glauber")
    m.add_argument("--init", default="pure")
    m.add_argument("--patterns", help="pattern CSV; sampled from --seed if absent")
    m.add_argument("--trajectory", help="write the trajectory CSV here")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out")
    m.set_defaults(func=cmd_mc)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError) as exc:
        print(f"hopcorr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
