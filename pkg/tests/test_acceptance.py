"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records one PASS/FAIL line, printed in the pytest terminal summary
(and immediately with ``-s``).  Run standalone with
``python tests/test_acceptance.py``.
"""

import time

import pytest

from hopcorr import checks

from conftest import ACCEPTANCE

ACCEPTANCE_EXAMPLES = 1000


def record(n: int, ok: bool, summary: str, seconds: float) -> None:
    line = f"{summary} ({seconds:.1f}s)"
    ACCEPTANCE[n] = (ok, line)
    print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {line}")


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


def test_criterion_01_critical_line():
    rep, dt = timed(checks.suite_tc, P=5, tol=0.02, resolution=0.01)
    worst = max(r["error"] for r in rep["rows"])
    record(1, rep["passed"], f"T_c(a) for a=0..0.5, max |T_c - (1+2a)| = {worst:.4f} (tol 0.02)", dt)
    assert rep["passed"]


def test_criterion_02_spectrum():
    rep, dt = timed(checks.suite_spectrum)
    record(2, rep["passed"], f"P=3..30: max formula residual {rep['max_formula_residual']:.1e} (tol 1e-10), "
                             f"max |D_P(lambda_k)| {rep['max_char_poly']:.1e} (tol 1e-9)", dt)
    assert rep["passed"]


def test_criterion_03_noiseless_hierarchical_state():
    rep, dt = timed(checks.suite_ansatz, P_values=(10, 11), a=0.6)
    dists = ", ".join(f"P={r['P']}: {r['distance']:g}" for r in rep["rows"])
    record(3, rep["passed"], f"zero-T classical iterate vs (77,51,13,3,1,...)/128, exact distance {dists}", dt)
    assert rep["passed"]


def test_criterion_04_phase_topology():
    rep, dt = timed(checks.suite_topology, P=5, steps=40)
    spots = "; ".join(f"({s['a']},{s['T']}) {s['got']} vs {s['expected']}" for s in rep["spots"])
    record(4, rep["passed"], f"labels {rep['labels']}; spots: {spots}", dt)
    assert rep["all_four_labels"], rep["labels"]
    for s in rep["spots"]:
        assert s["passed"], s


def test_criterion_05_stationarity():
    rep, dt = timed(checks.suite_stationarity, n_points=100, tol=1e-5)
    record(5, rep["passed"], f"{rep['points']} fixed points, max grad {rep['max_grad_inf']:.1e} (tol 1e-5), "
                             f"denominator violations {rep['den_violations']}", dt)
    assert rep["passed"]


def test_criterion_06_monte_carlo_vs_meanfield():
    rep, dt = timed(checks.suite_mc, P=3, a_values=(0.0, 0.2), T=0.5, N=2000, burn_in=200, measured=200)
    d = ", ".join(f"a={r['a']}: {r['distance']:.3f}" for r in rep["rows"])
    record(6, rep["passed"], f"N=2000 |m| vs fixed point, max deviation {d} (tol 0.05)", dt)
    assert rep["passed"]


def test_criterion_07_exact_gibbs():
    rep, dt = timed(checks.suite_gibbs, N=10, P=2, a=0.3, beta=1.0, steps=10**7)
    record(7, rep["passed"], f"Metropolis 1e7 steps, TV distance {rep['tv']:.4f} (tol 0.02)", dt)
    assert rep["passed"]


def test_criterion_08_subadditivity():
    rep, dt = timed(checks.suite_subadd, N=16, split=(8, 8), betas=(0.5, 1.0, 2.0), draws=50)
    v = ", ".join(f"beta={r['beta']}: {r['violations']} (min slack {r['min_slack']:.2e})" for r in rep["rows"])
    record(8, rep["passed"], f"50 draws N=16=8+8, violations {v}", dt)
    assert rep["passed"]


def test_criterion_09_self_averaging():
    rep, dt = timed(checks.suite_selfavg, N_list=(8, 12, 16, 20), draws=200)
    v = ", ".join(f"N={r['N']}: {r['var']:.2e}" for r in rep["rows"])
    record(9, rep["passed"], f"var F_N {v}; inversions {rep['inversions']}", dt)
    assert rep["passed"]


def test_criterion_10_property_suites():
    import test_properties

    t0 = time.perf_counter()
    failures = []
    for prop in test_properties.PROPERTIES:
        try:
            test_properties.hypothesis_test(prop, ACCEPTANCE_EXAMPLES)()
        except Exception as exc:  # collect every failing property
            failures.append(f"{prop.__name__}: {type(exc).__name__}")
    names = len(test_properties.PROPERTIES)
    record(10, not failures, f"{names} properties x {ACCEPTANCE_EXAMPLES} cases, failures {failures or 0}",
           time.perf_counter() - t0)
    assert not failures


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
