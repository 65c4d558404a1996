"""Verification suites with fixed seeds.

Every suite returns a JSON-ready dict with at least ``suite`` and
``passed``.  The CLI ``check`` command and the acceptance tests both run these.
"""

from __future__ import annotations

import math
import time

import numpy as np

from .correlation import build_x, char_poly_value, closed_form_eigenvalues, spectrum
from .meanfield import Model, SolverConfig, critical_temperature, pressure_gradient, rhs_cl_corr, rhs_rel_corr, solve
from .model import ModelParams, PatternSet, SpinSystem, gibbs_distribution, make_rng, spawn_seeds
from .montecarlo import (
    McConfig,
    Rule,
    run,
    selfavg_experiment,
    state_histogram,
    subadditivity_check,
    total_variation,
    variance_trend_ok,
)
from .phases import (
    DEFAULT_INITS,
    PhaseLabel,
    SweepGrid,
    canonical,
    classify,
    find_tc,
    multi_start,
    parse_init,
    pure_state,
    sweep,
)

HIERARCHICAL_PROFILE = np.array([77, 51, 13, 3, 1]) / 128


def symmetry_distance(x, y) -> float:
    """``min ||x - g y||_inf`` over cyclic shifts and reflections ``g``."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return min(
        float(np.max(np.abs(x - np.roll(v, k))))
        for v in (y, y[::-1])
        for k in range(len(y))
    )


def suite_tc(P: int = 5, tol: float = 0.02, resolution: float = 0.01) -> dict:
    rows = []
    for a in np.round(np.arange(0.0, 0.51, 0.1), 10):
        tc = find_tc(float(a), P, T_resolution=resolution)
        rows.append({"a": float(a), "T_c": tc, "expected": critical_temperature(float(a)),
                     "error": abs(tc - critical_temperature(float(a)))})
    return {"suite": "tc", "P": P, "tol": tol, "rows": rows,
            "passed": all(r["error"] <= tol for r in rows)}


def suite_spectrum(P_range=range(3, 31), a_values=(0.1, 0.3, 0.49)) -> dict:
    worst_formula = worst_poly = 0.0
    for P in P_range:
        for a in a_values:
            spec = spectrum(build_x(P, a))
            worst_formula = max(worst_formula, float(np.max(np.abs(spec.formula_residuals()))))
            for lam in closed_form_eigenvalues(P, a):
                worst_poly = max(worst_poly, abs(char_poly_value(P, a, float(lam))))
    return {"suite": "spectrum", "P_max": max(P_range), "max_formula_residual": worst_formula,
            "max_char_poly": worst_poly,
            "passed": worst_formula <= 1e-10 and worst_poly <= 1e-9}


def hierarchical_target(P: int) -> np.ndarray:
    """Noiseless hierarchical profile padded with zeros to length ``P >= 10``."""
    v = np.zeros(P)
    v[:5] = HIERARCHICAL_PROFILE
    v[P - 4:] = HIERARCHICAL_PROFILE[1:5][::-1]
    return v


def suite_ansatz(P_values=(10, 11), a: float = 0.6) -> dict:
    rows = []
    for P in P_values:
        res = solve(ModelParams(P, a, math.inf), pure_state(P),
                    SolverConfig(damping=1.0, max_iter=1000), model=Model.CL_CORR)
        dist = symmetry_distance(res.M, hierarchical_target(P))
        rows.append({"P": P, "M_times_128": [float(x) for x in res.M * 128],
                     "converged": res.converged, "distance": dist})
    return {"suite": "ansatz", "a": a, "rows": rows,
            "passed": all(r["converged"] and r["distance"] == 0.0 for r in rows)}


SPOT_POINTS = (
    (0.05, 0.2, PhaseLabel.RETRIEVAL, "R1"),
    (0.8, 0.1, PhaseLabel.CORRELATED, None),
    (0.5, 1.5, PhaseLabel.SYMMETRIC, None),
    (0.5, 2.5, PhaseLabel.ERGODIC, None),
)


def suite_topology(P: int = 5, steps: int = 40, threads: int | None = None) -> dict:
    grid = SweepGrid(0.05, 3.0, steps, 0.0, 1.0, steps, P)
    t0 = time.perf_counter()
    points = sweep(grid, threads=threads)
    elapsed = time.perf_counter() - t0
    labels = sorted({p.label.value for p in points})
    four = {PhaseLabel.ERGODIC, PhaseLabel.SYMMETRIC, PhaseLabel.RETRIEVAL, PhaseLabel.CORRELATED}
    have_four = four <= {p.label for p in points}
    spots = []
    for a, T, label, sub in SPOT_POINTS:
        pp = multi_start(ModelParams.from_temperature(P, a, T))
        ok = pp.label is label and (sub is None or pp.sublabel == sub)
        spots.append({"a": a, "T": T, "expected": label.value + (f"/{sub}" if sub else ""),
                      "got": pp.label.value + (f"/{pp.sublabel}" if pp.sublabel else ""),
                      "M": [float(x) for x in pp.best.M], "passed": ok})
    return {"suite": "topology", "P": P, "grid": f"{steps}x{steps}", "sweep_seconds": elapsed,
            "labels": labels, "all_four_labels": have_four, "spots": spots,
            "passed": have_four and all(s["passed"] for s in spots)}


def suite_stationarity(n_points: int = 100, P: int = 5, seed: int = 11, tol: float = 1e-5) -> dict:
    """Gradient of the pressure at converged non-trivial fixed points drawn at
    random (T, a, init) across the phase-diagram window."""
    rng = make_rng(seed)
    cfg = SolverConfig()
    rows = []
    attempts = 0
    while len(rows) < n_points and attempts < 20 * n_points:
        attempts += 1
        T = float(rng.uniform(0.05, 3.0))
        a = float(rng.uniform(0.0, 1.0))
        init = DEFAULT_INITS[int(rng.integers(len(DEFAULT_INITS)))]
        params = ModelParams.from_temperature(P, a, T)
        res = solve(params, parse_init(init, P), cfg, init_label=init)
        if not res.converged or res.max_abs < cfg.zero_eps:
            continue
        g = float(np.max(np.abs(pressure_gradient(res.M, params))))
        rows.append({"T": T, "a": a, "init": init, "grad_inf": g,
                     "den_violations": res.den_violations})
    worst = max((r["grad_inf"] for r in rows), default=math.nan)
    violations = sum(r["den_violations"] for r in rows)
    return {"suite": "stationarity", "points": len(rows), "max_grad_inf": worst,
            "den_violations": violations, "tol": tol,
            "passed": len(rows) == n_points and worst <= tol and violations == 0}


def suite_mc(P: int = 3, a_values=(0.0, 0.2), T: float = 0.5, N: int = 2000,
             burn_in: int = 200, measured: int = 200, seed: int = 7, tol: float = 0.05) -> dict:
    rows = []
    for a, child in zip(a_values, spawn_seeds(seed, len(a_values))):
        pat_seed, mc_seed = spawn_seeds(child, 2)
        patterns = PatternSet.sample(N, P, pat_seed)
        params = ModelParams.from_temperature(P, a, T)
        traj = run(patterns, params, SpinSystem.aligned(patterns),
                   McConfig(N=N, sweeps=burn_in + measured, burn_in=burn_in, seed=mc_seed))
        mf = solve(params, pure_state(P))
        mc_abs = traj.mean_abs()
        dist = symmetry_distance(mc_abs, np.abs(mf.M))
        rows.append({"a": a, "mc_mean_abs_m": [float(x) for x in mc_abs],
                     "meanfield_M": [float(x) for x in mf.M], "distance": dist})
    return {"suite": "mc", "P": P, "T": T, "N": N, "tol": tol, "rows": rows,
            "passed": all(r["distance"] <= tol for r in rows)}


def suite_gibbs(N: int = 10, P: int = 2, a: float = 0.3, beta: float = 1.0,
                steps: int = 10**7, seed: int = 3, tol: float = 0.02) -> dict:
    pat_seed, init_seed, mc_seed = spawn_seeds(seed, 3)
    patterns = PatternSet.sample(N, P, pat_seed)
    params = ModelParams(P, a, beta)
    counts = state_histogram(patterns, params, SpinSystem.random(patterns, init_seed), steps,
                             mc_seed, Rule.METROPOLIS)
    tv = total_variation(counts / counts.sum(), gibbs_distribution(patterns, params))
    return {"suite": "gibbs", "N": N, "steps": steps, "tv": tv, "tol": tol, "passed": tv <= tol}


def suite_subadd(N: int = 16, split=(8, 8), P: int = 2, a: float = 0.3,
                 betas=(0.5, 1.0, 2.0), draws: int = 50, seed: int = 5) -> dict:
    rows = []
    for beta in betas:
        params = ModelParams(P, a, beta)
        reports = [subadditivity_check(PatternSet.sample(N, P, s), params, tuple(split))
                   for s in spawn_seeds(seed, draws)]
        rows.append({"beta": beta, "violations": sum(not r["holds"] for r in reports),
                     "min_slack": min(r["slack"] for r in reports)})
    return {"suite": "subadd", "N": N, "split": list(split), "draws": draws, "rows": rows,
            "passed": all(r["violations"] == 0 for r in rows)}


def suite_selfavg(N_list=(8, 12, 16, 20), P: int = 2, a: float = 0.3, beta: float = 1.0,
                  draws: int = 200, seed: int = 9) -> dict:
    rows = selfavg_experiment(ModelParams(P, a, beta), N_list, draws, seed)
    ok, inversions = variance_trend_ok(rows)
    return {"suite": "selfavg", "rows": rows, "inversions": inversions, "passed": ok}


def suite_properties(cases: int = 1000, seed: int = 13) -> dict:
    """Randomised symmetry checks of the maps and the classifier."""
    rng = make_rng(seed)
    worst = {"sign": 0.0, "cyclic": 0.0, "reflection": 0.0, "jacobian": 0.0}
    label_failures = 0
    for _ in range(cases):
        P = int(rng.integers(2, 8))
        a = float(rng.uniform(0.0, 1.0))
        T = float(rng.uniform(0.1, 3.0))
        params = ModelParams.from_temperature(P, a, T)
        # keep 1 + M^T X M > 0 by bounding |M| by 1/(1 + 2a)
        M = rng.uniform(-1, 1, P) / (1 + 2 * a) / math.sqrt(P)
        k = int(rng.integers(P))
        for rhs in (rhs_rel_corr, rhs_cl_corr):
            base = rhs(M, params)
            worst["sign"] = max(worst["sign"], float(np.max(np.abs(rhs(-M, params) + base))))
            worst["cyclic"] = max(worst["cyclic"],
                                  float(np.max(np.abs(rhs(np.roll(M, k), params) - np.roll(base, k)))))
            worst["reflection"] = max(worst["reflection"],
                                      float(np.max(np.abs(rhs(M[::-1], params) - base[::-1]))))
        J = _jacobian_at_zero(params)
        worst["jacobian"] = max(worst["jacobian"],
                                float(np.max(np.abs(J - params.beta * build_x(P, a).dense))))
        label = classify(M)
        for v in (-M, np.roll(M, k), M[::-1]):
            if classify(v) is not label:
                label_failures += 1
        if not np.array_equal(canonical(M), canonical(np.roll(-M[::-1], k))):
            label_failures += 1
    passed = (worst["sign"] <= 1e-12 and worst["cyclic"] <= 1e-12 and worst["reflection"] <= 1e-12
              and worst["jacobian"] <= 1e-6 and label_failures == 0)
    return {"suite": "properties", "cases": cases, "max_errors": worst,
            "label_failures": label_failures, "passed": passed}


def _jacobian_at_zero(params: ModelParams, step: float = 1e-6) -> np.ndarray:
    P = params.P
    J = np.empty((P, P))
    for nu in range(P):
        e = np.zeros(P)
        e[nu] = step
        J[:, nu] = (rhs_rel_corr(e, params) - rhs_rel_corr(-e, params)) / (2 * step)
    return J


SUITES = {
    "tc": suite_tc,
    "spectrum": suite_spectrum,
    "ansatz": suite_ansatz,
    "topology": suite_topology,
    "stationarity": suite_stationarity,
    "mc": suite_mc,
    "gibbs": suite_gibbs,
    "subadd": suite_subadd,
    "selfavg": suite_selfavg,
    "properties": suite_properties,
}
