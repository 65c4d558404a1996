"""Finite-N stochastic and enumeration oracles.

Single-spin-flip Glauber / Metropolis dynamics under the relativistic
correlated Hamiltonian, plus exact-enumeration experiments on the finite-size
pressure (self-averaging, subadditivity).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numba
import numpy as np

from .correlation import apply_x
from .model import (
    ModelParams,
    PatternSet,
    SpinSystem,
    _rel_energy,
    exact_pressure,
    make_rng,
    spawn_seeds,
)

#: proposals drawn from the generator per batch
_BATCH = 1 << 18


class Rule(str, Enum):
    GLAUBER = "glauber"
    METROPOLIS = "metropolis"


@dataclass(frozen=True)
class McConfig:
    N: int
    sweeps: int
    burn_in: int = 0
    seed: int = 0
    rule: Rule = Rule.GLAUBER
    measure_every: int = 1

    def __post_init__(self):
        if not 0 <= self.burn_in < self.sweeps:
            raise ValueError(f"need 0 <= burn_in < sweeps, got {self.burn_in}, {self.sweeps}")
        if self.measure_every < 1:
            raise ValueError("measure_every must be >= 1")
        object.__setattr__(self, "rule", Rule(self.rule))


def delta_energy(spins: SpinSystem, i: int, params: ModelParams) -> float:
    """``H(sigma with spin i flipped) - H(sigma)`` in O(P)."""
    m_new = spins.m + spins.flip_delta(i)
    return _rel_energy(spins.N, m_new, params.a) - _rel_energy(spins.N, spins.m, params.a)


@numba.njit(cache=True)
def _quad(m, a):
    P = m.shape[0]
    q = 0.0
    for mu in range(P):
        q += m[mu] * (m[mu] + a * (m[(mu + 1) % P] + m[(mu - 1) % P]))
    return q


@numba.njit(cache=True)
def _accept(dH, beta, metropolis, u):
    x = beta * dH
    if metropolis:
        return x <= 0.0 or u < np.exp(-x)
    # Glauber 1 / (1 + e^x), evaluated without overflow
    if x > 0.0:
        e = np.exp(-x)
        return u < e / (1.0 + e)
    return u < 1.0 / (1.0 + np.exp(x))


@numba.njit(cache=True)
def _steps(xi, sigma, m, a, beta, metropolis, sites, uniforms, state, counts):
    # One proposal per (site, uniform) pair. ``state``/``counts`` track the
    # visited configuration index when counts.size > 0.
    N, P = xi.shape
    m_new = np.empty(P)
    e_old = -N * np.sqrt(1.0 + _quad(m, a))
    accepted = 0
    track = counts.shape[0] > 0
    for k in range(sites.shape[0]):
        i = sites[k]
        for mu in range(P):
            m_new[mu] = m[mu] - 2.0 * sigma[i] * xi[i, mu] / N
        e_new = -N * np.sqrt(1.0 + _quad(m_new, a))
        if _accept(e_new - e_old, beta, metropolis, uniforms[k]):
            sigma[i] = -sigma[i]
            m[:] = m_new
            e_old = e_new
            accepted += 1
            if track:
                state ^= 1 << i
        if track:
            counts[state] += 1
    return accepted, state


@dataclass
class Trajectory:
    sweep_index: np.ndarray
    m: np.ndarray
    energy_per_neuron: np.ndarray
    final: SpinSystem
    acceptance: float

    def mean_abs(self) -> np.ndarray:
        return np.abs(self.m).mean(axis=0)

    def to_csv(self, path) -> None:
        P = self.m.shape[1]
        header = "sweep_index," + ",".join(f"m_{k + 1}" for k in range(P)) + ",energy_per_neuron"
        rows = [header]
        for s, m, e in zip(self.sweep_index, self.m, self.energy_per_neuron):
            rows.append(",".join([str(int(s))] + [f"{v:.17g}" for v in m] + [f"{e:.17g}"]))
        with open(path, "w") as fh:
            fh.write("\n".join(rows) + "\n")


def run(patterns: PatternSet, params: ModelParams, init: SpinSystem, cfg: McConfig) -> Trajectory:
    """Random-sequential single-spin-flip dynamics; ``cfg.sweeps x N`` proposals.

    Overlaps are recorded after every ``measure_every``-th sweep once the
    ``burn_in`` sweeps are done.  ``init`` is not modified.
    """
    N = patterns.N
    if cfg.N != N:
        raise ValueError(f"config N={cfg.N} but patterns have N={N}")
    if init.patterns is not patterns and not np.array_equal(init.patterns.bits, patterns.bits):
        raise ValueError("init spins were built on different patterns")
    if math.isinf(params.beta):
        raise ValueError("Monte Carlo needs a finite beta")
    rng = make_rng(cfg.seed)
    xi = np.ascontiguousarray(patterns.bits, dtype=np.float64)
    sigma = init.sigma.astype(np.float64)
    m = xi.T @ sigma / N
    metropolis = cfg.rule is Rule.METROPOLIS
    no_counts = np.zeros(0, dtype=np.int64)
    idx, ms, es = [], [], []
    accepted = 0
    for s in range(cfg.sweeps):
        sites = rng.integers(0, N, size=N)
        uniforms = rng.random(N)
        acc, _ = _steps(xi, sigma, m, float(params.a), float(params.beta), metropolis,
                        sites, uniforms, 0, no_counts)
        accepted += acc
        if s >= cfg.burn_in and (s - cfg.burn_in) % cfg.measure_every == 0:
            idx.append(s)
            ms.append(m.copy())
            es.append(-math.sqrt(1.0 + float(m @ apply_x(m, params.a))))
    final = SpinSystem(patterns, sigma.astype(np.int8))
    return Trajectory(
        sweep_index=np.array(idx),
        m=np.array(ms).reshape(-1, patterns.P),
        energy_per_neuron=np.array(es),
        final=final,
        acceptance=accepted / (cfg.sweeps * N),
    )


def state_histogram(patterns: PatternSet, params: ModelParams, init: SpinSystem, steps: int,
                    seed: int, rule: Rule = Rule.METROPOLIS) -> np.ndarray:
    """Visit counts of every configuration over ``steps`` proposals, indexed
    as in :func:`hopcorr.model.all_states`.  Small ``N`` only."""
    N = patterns.N
    if N > 20:
        raise ValueError("state histogram needs N <= 20")
    rng = make_rng(seed)
    xi = np.ascontiguousarray(patterns.bits, dtype=np.float64)
    sigma = init.sigma.astype(np.float64)
    m = xi.T @ sigma / N
    state = int(np.sum((sigma > 0).astype(np.int64) << np.arange(N)))
    counts = np.zeros(1 << N, dtype=np.int64)
    done = 0
    while done < steps:
        n = min(_BATCH, steps - done)
        sites = rng.integers(0, N, size=n)
        uniforms = rng.random(n)
        _, state = _steps(xi, sigma, m, float(params.a), float(params.beta),
                          Rule(rule) is Rule.METROPOLIS, sites, uniforms, state, counts)
        done += n
    return counts


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def profile_by_distance(M) -> np.ndarray:
    """Mirror-averaged ``|M|`` at cyclic distance ``0..P//2`` from the largest
    component."""
    mag = np.abs(np.asarray(M, dtype=float))
    P = len(mag)
    c = int(np.argmax(mag))
    return np.array([0.5 * (mag[(c + d) % P] + mag[(c - d) % P]) for d in range(P // 2 + 1)])


def _variance_se(x: np.ndarray) -> float:
    n = len(x)
    if n < 4:
        return math.nan
    c = x - x.mean()
    s2 = float(c @ c) / (n - 1)
    m4 = float(np.mean(c**4))
    return math.sqrt(max(m4 - s2 * s2 * (n - 3) / (n - 1), 0.0) / n)


def selfavg_experiment(params: ModelParams, N_list, draws: int, seed: int) -> list[dict]:
    """Mean and sample variance of the exact finite-N pressure over ``draws``
    independent pattern sets for every ``N`` in ``N_list``."""
    out = []
    for N, child in zip(N_list, spawn_seeds(seed, len(N_list))):
        seeds = spawn_seeds(child, draws)
        F = np.array([exact_pressure(PatternSet.sample(N, params.P, s), params) for s in seeds])
        out.append({
            "N": int(N),
            "draws": int(draws),
            "mean": float(F.mean()),
            "var": float(F.var(ddof=1)) if draws > 1 else 0.0,
            "var_se": _variance_se(F),
        })
    return out


def variance_trend_ok(rows: list[dict], max_inversions: int = 1, n_se: float = 2.0) -> tuple[bool, int]:
    """Non-increasing variance with at most ``max_inversions`` increases, each
    within ``n_se`` combined standard errors."""
    inversions = 0
    for prev, cur in zip(rows, rows[1:]):
        if cur["var"] <= prev["var"]:
            continue
        inversions += 1
        se = math.hypot(prev["var_se"], cur["var_se"])
        if cur["var"] - prev["var"] > n_se * se:
            return False, inversions
    return inversions <= max_inversions, inversions


def subadditivity_check(patterns: PatternSet, params: ModelParams, split: tuple[int, int]) -> dict:
    """Compare ``N F_N`` with ``N1 F_N1 + N2 F_N2`` where the subsystems take
    the first ``N1`` and the remaining ``N2`` pattern rows."""
    N1, N2 = split
    N = patterns.N
    if N1 + N2 != N or N1 < 1 or N2 < 1:
        raise ValueError(f"split {split} does not partition N={N}")
    F = exact_pressure(patterns, params)
    F1 = exact_pressure(patterns.rows(0, N1), params)
    F2 = exact_pressure(patterns.rows(N1, N), params)
    lhs, rhs = N * F, N1 * F1 + N2 * F2
    slack = rhs - lhs
    return {
        "N": N, "N1": N1, "N2": N2,
        "F_N": F, "F_N1": F1, "F_N2": F2,
        "lhs": lhs, "rhs": rhs, "slack": slack,
        # round-off in the three log-sums is ~1e-13
        "holds": bool(slack >= -1e-10),
    }
