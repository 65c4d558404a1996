import itertools
import math

import numpy as np
import pytest

from hopcorr.correlation import build_x
from hopcorr.model import (
    ModelParams,
    PatternSet,
    SpinSystem,
    all_states,
    exact_pressure,
    gibbs_distribution,
    hamiltonian_cl_corr,
    hamiltonian_rel_corr,
    make_rng,
    mattis,
    spawn_seeds,
    state_index,
)


def brute_quadratic(pats, sigma, a):
    """(1/N^2) sum_ij sum_{mu nu} xi_i^mu X_{mu nu} xi_j^nu sigma_i sigma_j."""
    xi = pats.bits.astype(float)
    X = build_x(pats.P, a).dense
    N = pats.N
    J = xi @ X @ xi.T
    total = 0.0
    for i in range(N):
        for j in range(N):
            total += J[i, j] * sigma[i] * sigma[j]
    return total / N**2


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(0, 0.1, 1.0)
    with pytest.raises(ValueError):
        ModelParams(3, 1.1, 1.0)
    with pytest.raises(ValueError):
        ModelParams(3, 0.1, -1.0)
    assert ModelParams.from_temperature(3, 0.1, 0.0).zero_temperature
    assert ModelParams.from_temperature(3, 0.1, 0.5).beta == 2.0


def test_pattern_set_rejects_non_spin():
    with pytest.raises(ValueError):
        PatternSet(np.array([[1, 0], [1, -1]]))


def test_pattern_sampling_seeded():
    a = PatternSet.sample(100, 4, seed=9)
    b = PatternSet.sample(100, 4, seed=9)
    assert np.array_equal(a.bits, b.bits)
    assert set(np.unique(a.bits)) == {-1, 1}
    assert abs(a.bits.mean()) < 0.1


def test_pattern_csv_roundtrip(tmp_path):
    pats = PatternSet.sample(7, 3, seed=2)
    path = tmp_path / "p.csv"
    pats.to_csv(path)
    assert path.read_text().splitlines()[0] == "# N=7 P=3 seed=2"
    back = PatternSet.from_csv(path)
    assert np.array_equal(back.bits, pats.bits) and back.seed == 2


def test_pattern_csv_bad_header(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("N=1\n1\n")
    with pytest.raises(ValueError):
        PatternSet.from_csv(path)


def test_spawn_seeds_distinct():
    s = spawn_seeds(1, 10)
    assert len(set(s)) == 10 and s == spawn_seeds(1, 10)


def test_mattis_aligned():
    pats = PatternSet.sample(40, 3, seed=1)
    assert mattis(SpinSystem.aligned(pats))[0] == 1.0
    assert mattis(SpinSystem.aligned(pats, sign=-1))[0] == -1.0


def test_mattis_random_concentration():
    N = 10_000
    pats = PatternSet.sample(N, 1, seed=1)
    m = mattis(SpinSystem.random(pats, seed=2))
    assert abs(m[0]) <= 4 / math.sqrt(N)


def test_incremental_cache():
    pats = PatternSet.sample(60, 4, seed=3)
    spins = SpinSystem.random(pats, seed=4)
    rng = make_rng(5)
    for i in rng.integers(0, 60, size=500):
        spins.flip(int(i))
        assert np.max(np.abs(spins.m - spins.recompute())) < 1e-12
    assert np.all(np.abs(spins.m) <= 1)


def test_hamiltonian_trivial_values():
    N = 64
    pats = PatternSet(np.column_stack([np.ones(N), np.tile([1, -1], N // 2)]))
    spins = SpinSystem.aligned(pats)
    # orthogonal patterns, sigma = xi^1 -> m = (1, 0)
    assert hamiltonian_rel_corr(spins, ModelParams(2, 0.0, 1.0)) == pytest.approx(-N * math.sqrt(2))
    assert hamiltonian_cl_corr(spins, ModelParams(2, 0.0, 1.0)) == pytest.approx(-N / 2)
    balanced = SpinSystem(pats, np.tile([1, 1, -1, -1], N // 4))
    assert hamiltonian_rel_corr(balanced, ModelParams(2, 0.4, 1.0)) == pytest.approx(-N)
    assert hamiltonian_cl_corr(balanced, ModelParams(2, 0.4, 1.0)) == pytest.approx(0.0)


def test_hamiltonian_pure_overlap_sees_diagonal_only():
    N = 96
    bits = np.column_stack([np.ones(N), np.tile([1, -1], N // 2), np.tile([1, 1, -1, -1], N // 4)])
    spins = SpinSystem.aligned(PatternSet(bits))
    assert np.array_equal(spins.m, [1.0, 0.0, 0.0])
    # m^T X m = X_11 = 1 whatever a is
    assert hamiltonian_rel_corr(spins, ModelParams(3, 0.3, 1.0)) == pytest.approx(-N * math.sqrt(2))


@pytest.mark.parametrize("P, a", [(2, 0.2), (3, 0.3), (5, 0.7), (1, 0.5)])
def test_hamiltonians_match_double_sum(P, a):
    pats = PatternSet.sample(30, P, seed=P)
    params = ModelParams(P, a, 1.0)
    for seed in range(5):
        spins = SpinSystem.random(pats, seed=seed)
        q = brute_quadratic(pats, spins.sigma, a)
        assert hamiltonian_cl_corr(spins, params) == pytest.approx(-0.5 * 30 * q, abs=1e-10)
        assert hamiltonian_rel_corr(spins, params) == pytest.approx(-30 * math.sqrt(1 + q), abs=1e-10)


def test_p2_off_diagonal_doubles():
    pats = PatternSet.sample(20, 2, seed=8)
    spins = SpinSystem.random(pats, seed=1)
    m1, m2 = spins.m
    expected = -(20 / 2) * (m1**2 + m2**2 + 4 * 0.2 * m1 * m2)
    assert hamiltonian_cl_corr(spins, ModelParams(2, 0.2, 1.0)) == pytest.approx(expected, abs=1e-12)


def test_gauge_symmetry():
    pats = PatternSet.sample(25, 3, seed=2)
    params = ModelParams(3, 0.4, 1.0)
    spins = SpinSystem.random(pats, seed=3)
    flipped = SpinSystem(pats, -spins.sigma)
    assert hamiltonian_rel_corr(spins, params) == pytest.approx(hamiltonian_rel_corr(flipped, params), abs=1e-12)
    assert hamiltonian_cl_corr(spins, params) == pytest.approx(hamiltonian_cl_corr(flipped, params), abs=1e-12)


def test_rel_reduces_at_a0():
    pats = PatternSet.sample(33, 4, seed=5)
    spins = SpinSystem.random(pats, seed=6)
    expected = -33 * math.sqrt(1 + float(spins.m @ spins.m))
    assert hamiltonian_rel_corr(spins, ModelParams(4, 0.0, 1.0)) == expected


def test_exact_pressure_beta_zero():
    pats = PatternSet.sample(12, 3, seed=1)
    assert exact_pressure(pats, ModelParams(3, 0.3, 0.0)) == pytest.approx(math.log(2), abs=1e-14)


def test_exact_pressure_four_states():
    # N=2, P=1, xi=(+1,+1), a=0: aligned states have m=+-1, H=-2 sqrt2; mixed have m=0, H=-2
    pats = PatternSet(np.array([[1], [1]]))
    for beta in (0.3, 1.0, 2.5):
        Z = 2 * math.exp(beta * 2 * math.sqrt(2)) + 2 * math.exp(beta * 2)
        assert exact_pressure(pats, ModelParams(1, 0.0, beta)) == pytest.approx(0.5 * math.log(Z), rel=1e-14)


@pytest.mark.parametrize("N, P, a", [(5, 2, 0.3), (8, 3, 0.6), (9, 1, 0.0)])
def test_exact_pressure_matches_direct_sum(N, P, a):
    pats = PatternSet.sample(N, P, seed=N)
    params = ModelParams(P, a, 0.7)
    xi = pats.bits.astype(float)
    X = build_x(P, a).dense
    logw = []
    for sigma in itertools.product([-1, 1], repeat=N):
        m = xi.T @ np.array(sigma) / N
        logw.append(0.7 * N * math.sqrt(1 + m @ X @ m))
    mx = max(logw)
    direct = (mx + math.log(sum(math.exp(v - mx) for v in logw))) / N
    assert exact_pressure(pats, params) == pytest.approx(direct, abs=1e-12)


def test_exact_pressure_ground_state_dominance():
    N, beta = 10, 200.0
    pats = PatternSet.sample(N, 3, seed=4)
    params = ModelParams(3, 0.3, beta)
    states = all_states(N).astype(float)
    m = states @ pats.bits.astype(float) / N
    e_max = np.sqrt(1 + np.einsum("sp,sp->s", m, m @ build_x(3, 0.3).dense)).max()
    F = exact_pressure(pats, params)
    # log-sum-exp stays finite and the excess is the log-degeneracy / N
    assert math.isfinite(F)
    assert 0.0 <= F - beta * e_max <= math.log(2**N) / N


def test_exact_pressure_cap_and_checks():
    pats = PatternSet.sample(30, 2, seed=1)
    with pytest.raises(ValueError):
        exact_pressure(pats, ModelParams(2, 0.1, 1.0))
    with pytest.raises(ValueError):
        exact_pressure(PatternSet.sample(4, 2, seed=1), ModelParams(3, 0.1, 1.0))
    with pytest.raises(ValueError):
        exact_pressure(PatternSet.sample(8, 2, seed=1), ModelParams(2, 0.1, 1.0), cap=6)


def test_state_indexing():
    states = all_states(5)
    for s in (0, 7, 19, 31):
        assert state_index(states[s]) == s


def test_gibbs_distribution_normalised_and_consistent():
    pats = PatternSet.sample(6, 2, seed=3)
    params = ModelParams(2, 0.3, 1.0)
    p = gibbs_distribution(pats, params)
    assert p.sum() == pytest.approx(1.0)
    # log Z from the distribution's normaliser agrees with exact_pressure
    sigma = all_states(6)[int(np.argmax(p))]
    spins = SpinSystem(pats, sigma)
    logZ = -params.beta * hamiltonian_rel_corr(spins, params) - math.log(p.max())
    assert logZ / 6 == pytest.approx(exact_pressure(pats, params), abs=1e-12)
