import math

import numpy as np
import pytest

from hopcorr.meanfield import Model, SolverConfig, solve
from hopcorr.model import ModelParams
from hopcorr.phases import (
    PhaseConfig,
    PhaseLabel,
    SweepGrid,
    canonical,
    classify,
    correlated_ansatz,
    find_tc,
    magnetization_curves,
    multi_start,
    noisy_pure_state,
    parse_init,
    pure_state,
    sweep,
)


def test_classify_examples():
    assert classify(np.zeros(5)) is PhaseLabel.ERGODIC
    assert classify(np.full(5, 0.6)) is PhaseLabel.SYMMETRIC
    assert classify(np.array([77, 51, 13, 3, 1, 0, 1, 3, 13, 51]) / 128) is PhaseLabel.CORRELATED
    assert classify(pure_state(5) * 0.9) is PhaseLabel.RETRIEVAL


def test_classify_unclassified():
    # not monotone in cyclic distance
    assert classify([0.8, 0.1, 0.5, 0.5, 0.1]) is PhaseLabel.UNCLASSIFIED
    # mirror pairs differ
    assert classify([0.8, 0.5, 0.1, 0.1, 0.2]) is PhaseLabel.UNCLASSIFIED


def test_classify_support_threshold():
    M = [0.35, 0.01, 0.0, 0.0, 0.01]
    assert classify(M) is PhaseLabel.CORRELATED
    assert classify(M, support_rel=0.25) is PhaseLabel.RETRIEVAL


def test_classify_invariances():
    M = np.array([0.6, 0.4, 0.1, 0.1, 0.4])
    base = classify(M)
    assert base is PhaseLabel.CORRELATED
    for k in range(5):
        assert classify(np.roll(M, k)) is base
        assert classify(-np.roll(M[::-1], k)) is base


def test_canonical_orbit():
    M = np.array([0.1, -0.5, 0.3, 0.2])
    key = canonical(M)
    for k in range(4):
        assert np.array_equal(canonical(-np.roll(M[::-1], k)), key)


def test_parse_init():
    assert np.array_equal(parse_init("pure", 3), [1, 0, 0])
    assert np.array_equal(parse_init("symmetric", 3), [0.5, 0.5, 0.5])
    assert np.array_equal(parse_init("zero", 3), [0, 0, 0])
    assert np.allclose(parse_init("noisy:0.2", 3), [0.8, 0.2, 0.2])
    assert np.array_equal(parse_init("correlated", 5), np.array([5, 3, 1, 1, 3]) / 8)
    with pytest.raises(ValueError):
        parse_init("bogus", 3)


def test_parse_init_file(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text("0.1, 0.2 0.3\n")
    assert np.allclose(parse_init(f"file:{path}", 3), [0.1, 0.2, 0.3])
    with pytest.raises(ValueError):
        parse_init(f"file:{path}", 4)


def test_noisy_pure():
    assert np.allclose(noisy_pure_state(4, 0.25), [0.75, 0.25, 0.25, 0.25])


@pytest.mark.parametrize("P", [3, 5, 7, 9])
def test_correlated_ansatz_matches_zero_t_iteration(P):
    res = solve(ModelParams(P, 0.6, math.inf), pure_state(P), SolverConfig(damping=1.0, max_iter=100),
                model=Model.CL_CORR)
    assert res.converged
    assert np.array_equal(res.M, correlated_ansatz(P))


def test_correlated_ansatz_other_p():
    v = correlated_ansatz(11)
    assert len(v) == 11 and v[0] == 77 / 128
    assert classify(v) is PhaseLabel.CORRELATED


def test_multi_start_retrieval_r1():
    pp = multi_start(ModelParams.from_temperature(5, 0.05, 0.2))
    assert pp.label is PhaseLabel.RETRIEVAL and pp.sublabel == "R1"
    pure = next(r for r in pp.all_solutions if r.init_label == "pure")
    others = [r for r in pp.all_solutions if r is not pure]
    assert all(pure.pressure > r.pressure + 1e-9 for r in others)


def test_multi_start_ergodic_and_symmetric():
    assert multi_start(ModelParams.from_temperature(5, 0.5, 2.5)).label is PhaseLabel.ERGODIC
    assert multi_start(ModelParams.from_temperature(5, 0.5, 1.5)).label is PhaseLabel.SYMMETRIC


def test_multi_start_selection_sound():
    for a, T in [(0.05, 0.2), (0.3, 0.3), (0.8, 0.1), (0.2, 0.9)]:
        pp = multi_start(ModelParams.from_temperature(5, a, T))
        assert all(pp.best.pressure >= r.pressure for r in pp.all_solutions)


def test_multi_start_dedups():
    pp = multi_start(ModelParams.from_temperature(5, 0.5, 2.5))
    assert len(pp.all_solutions) == 1


def test_large_a_low_t_pure_start_is_hierarchical():
    # the hierarchical profile exists from the pure start but loses the
    # pressure comparison to the symmetric state at P=5
    res = solve(ModelParams.from_temperature(5, 0.8, 0.05), pure_state(5))
    assert res.converged and classify(res.M) is PhaseLabel.CORRELATED
    pp = multi_start(ModelParams.from_temperature(5, 0.8, 0.05))
    assert pp.label is PhaseLabel.SYMMETRIC
    assert pp.best.pressure > res.pressure


def test_sweep_grid_validation():
    with pytest.raises(ValueError):
        SweepGrid(0.5, 0.1, 3, 0, 1, 3, 5)
    with pytest.raises(ValueError):
        SweepGrid(0.1, 1, 3, 0, 1.5, 3, 5)
    with pytest.raises(ValueError):
        SweepGrid(0.0, 1, 3, 0, 1, 3, 5)
    g = SweepGrid(0.2, 0.2, 1, 0.3, 0.3, 1, 5)
    assert list(g.T_values) == [0.2] and list(g.a_values) == [0.3]


def test_sweep_3x3():
    grid = SweepGrid(0.5, 2.5, 3, 0.0, 0.5, 3, 5)
    points = sweep(grid, threads=1)
    assert len(points) == 9
    cell = next(p for p in points if p.a == 0.0 and p.T == 1.5)
    assert cell.label is PhaseLabel.ERGODIC
    assert [(p.T, p.a) for p in points][:3] == [(0.5, 0.0), (0.5, 0.25), (0.5, 0.5)]


def test_sweep_parallel_matches_serial():
    grid = SweepGrid(0.1, 2.0, 4, 0.0, 1.0, 4, 5)
    a = sweep(grid, threads=1)
    b = sweep(grid, threads=2)
    assert [p.label for p in a] == [p.label for p in b]
    assert all(np.array_equal(p.best.M, q.best.M) for p, q in zip(a, b))


def test_pure_init_sweep_topology():
    grid = SweepGrid(0.05, 3.0, 12, 0.0, 1.0, 12, 5, init_set=("pure",))
    labels = {p.label for p in sweep(grid, threads=1)}
    assert {PhaseLabel.ERGODIC, PhaseLabel.SYMMETRIC, PhaseLabel.RETRIEVAL} <= labels


@pytest.mark.parametrize("a, expected", [(0.0, 1.0), (0.4, 1.8), (0.1, 1.2)])
def test_find_tc(a, expected):
    assert abs(find_tc(a, 5, T_resolution=0.01) - expected) <= 0.01


def test_find_tc_monotone():
    values = [find_tc(a, 5, T_resolution=0.01) for a in np.linspace(0, 1, 11)]
    assert all(b >= x - 1e-12 for x, b in zip(values, values[1:]))


def test_find_tc_no_bracket():
    with pytest.raises(ValueError):
        find_tc(0.3, 5, T_lo=2.0, T_hi=3.0)


def test_magnetization_curves():
    a = 0.3
    T = [0.02, 1.55, 1.7]
    rows = magnetization_curves(a, 5, T)
    low, near, high = rows
    assert low[1] > 0.99 and np.max(np.abs(low[2:])) < 0.01
    assert np.ptp(near[1:]) < 1e-6 and near[1] > 1e-3
    assert np.max(np.abs(high[1:])) < 1e-6


def test_phase_config_defaults():
    cfg = PhaseConfig()
    assert cfg.sym_eps == 1e-4 and cfg.tie_tol == 1e-9
