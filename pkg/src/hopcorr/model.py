"""Finite-size model: patterns, spin configurations, Hamiltonians and the exact
pressure of small systems by exhaustive enumeration."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from .correlation import apply_x

#: default cap on N for 2^N enumeration
ENUMERATION_CAP = 24


def make_rng(seed: int | None) -> np.random.Generator:
    """Counter-based (Philox) generator; identical seeds give identical streams."""
    return np.random.Generator(np.random.Philox(seed))


def spawn_seeds(seed: int, n: int) -> list[int]:
    """Independent child seeds for ``n`` parallel tasks."""
    ss = np.random.SeedSequence(seed)
    return [int(s.generate_state(1, np.uint64)[0]) for s in ss.spawn(n)]


@dataclass(frozen=True)
class ModelParams:
    """One thermodynamic point: pattern count, correlation strength, inverse
    temperature.  ``beta = inf`` selects the zero-temperature (sign) limit."""

    P: int
    a: float
    beta: float

    def __post_init__(self):
        if self.P < 1:
            raise ValueError(f"P must be >= 1, got {self.P}")
        if not 0.0 <= self.a <= 1.0:
            raise ValueError(f"a must lie in [0, 1], got {self.a}")
        if not self.beta >= 0.0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")

    @classmethod
    def from_temperature(cls, P: int, a: float, T: float) -> "ModelParams":
        if T < 0:
            raise ValueError(f"T must be >= 0, got {T}")
        return cls(P=P, a=a, beta=math.inf if T == 0 else 1.0 / T)

    @property
    def T(self) -> float:
        if self.beta == 0:
            return math.inf
        return 0.0 if math.isinf(self.beta) else 1.0 / self.beta

    @property
    def zero_temperature(self) -> bool:
        return math.isinf(self.beta)


@dataclass(frozen=True)
class PatternSet:
    """``N x P`` array of +-1 pattern entries (rows are neurons)."""

    bits: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.int8)
        if bits.ndim != 2:
            raise ValueError("pattern bits must be a 2-d N x P array")
        if not np.all(np.abs(bits) == 1):
            raise ValueError("pattern entries must be exactly +1 or -1")
        bits = bits.copy()
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def N(self) -> int:
        return self.bits.shape[0]

    @property
    def P(self) -> int:
        return self.bits.shape[1]

    @classmethod
    def sample(cls, N: int, P: int, seed: int) -> "PatternSet":
        rng = make_rng(seed)
        bits = rng.integers(0, 2, size=(N, P), dtype=np.int8) * 2 - 1
        return cls(bits=bits, seed=seed)

    def rows(self, start: int, stop: int) -> "PatternSet":
        return PatternSet(bits=self.bits[start:stop], seed=self.seed)

    def to_csv(self, path) -> None:
        seed = "none" if self.seed is None else str(self.seed)
        lines = [f"# N={self.N} P={self.P} seed={seed}"]
        lines += [",".join(str(int(v)) for v in row) for row in self.bits]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "PatternSet":
        text = Path(path).read_text().splitlines()
        m = re.fullmatch(r"#\s*N=(\d+)\s+P=(\d+)\s+seed=(\S+)\s*", text[0])
        if m is None:
            raise ValueError(f"bad pattern header: {text[0]!r}")
        N, P, seed = int(m.group(1)), int(m.group(2)), m.group(3)
        rows = [[int(v) for v in line.split(",")] for line in text[1:] if line.strip()]
        bits = np.array(rows, dtype=np.int8).reshape(-1, P) if rows else np.zeros((0, P))
        if bits.shape != (N, P):
            raise ValueError(f"header says {N}x{P}, body is {bits.shape[0]}x{bits.shape[1]}")
        return cls(bits=bits, seed=None if seed == "none" else int(seed))


class SpinSystem:
    """Spin configuration with an incrementally maintained overlap vector.

    Single writer: mutate only through :meth:`flip` or :meth:`set_state`.
    """

    def __init__(self, patterns: PatternSet, sigma):
        self.patterns = patterns
        self._xi = patterns.bits.astype(float)
        self.sigma = np.array(sigma, dtype=np.int8)
        if self.sigma.shape != (patterns.N,) or not np.all(np.abs(self.sigma) == 1):
            raise ValueError("sigma must be a length-N vector of +-1")
        self.m = self.recompute()

    @classmethod
    def aligned(cls, patterns: PatternSet, mu: int = 0, sign: int = 1) -> "SpinSystem":
        return cls(patterns, sign * patterns.bits[:, mu])

    @classmethod
    def random(cls, patterns: PatternSet, seed: int) -> "SpinSystem":
        rng = make_rng(seed)
        return cls(patterns, rng.integers(0, 2, size=patterns.N) * 2 - 1)

    @property
    def N(self) -> int:
        return self.patterns.N

    def recompute(self) -> np.ndarray:
        return self._xi.T @ self.sigma / self.N

    def flip_delta(self, i: int) -> np.ndarray:
        """Change of the overlap vector if spin ``i`` were flipped."""
        return -2.0 * self.sigma[i] * self._xi[i] / self.N

    def flip(self, i: int) -> None:
        self.m = self.m + self.flip_delta(i)
        self.sigma[i] = -self.sigma[i]

    def set_state(self, sigma) -> None:
        self.sigma = np.array(sigma, dtype=np.int8)
        self.m = self.recompute()


def mattis(spins: SpinSystem) -> np.ndarray:
    """Exact overlap vector ``m_mu = (1/N) sum_i xi_i^mu sigma_i``, refreshing
    the cache of ``spins``."""
    spins.m = spins.recompute()
    return spins.m.copy()


def _rel_energy(N: int, m, a: float) -> float:
    q = float(np.dot(m, apply_x(m, a)))
    if not 1.0 + q > 0.0:
        # reachable only for a > 1/2 with strongly anti-aligned overlaps
        raise ValueError(f"1 + m^T X m = {1.0 + q} is not positive")
    return -N * math.sqrt(1.0 + q)


def hamiltonian_rel_corr(spins: SpinSystem, params: ModelParams) -> float:
    """``-N sqrt(1 + m^T X m)``."""
    return _rel_energy(spins.N, spins.m, params.a)


def hamiltonian_cl_corr(spins: SpinSystem, params: ModelParams) -> float:
    """``-(N/2) m^T X m``."""
    m = spins.m
    return -0.5 * spins.N * float(np.dot(m, apply_x(m, params.a)))


@numba.njit(cache=True)
def _gray_logsumexp(xi, beta, a):
    # Walk all 2^N states in Gray-code order starting from sigma = (-1,...,-1);
    # every step flips exactly one spin so the overlaps update in O(P).
    N, P = xi.shape
    m = np.empty(P)
    for mu in range(P):
        s = 0.0
        for i in range(N):
            s -= xi[i, mu]
        m[mu] = s / N
    sigma = -np.ones(N)
    mx = -np.inf
    acc = 0.0
    total = 1 << N
    for k in range(total):
        if k > 0:
            i = 0
            kk = k
            while (kk & 1) == 0:
                kk >>= 1
                i += 1
            sigma[i] = -sigma[i]
            for mu in range(P):
                m[mu] += 2.0 * sigma[i] * xi[i, mu] / N
        q = 0.0
        for mu in range(P):
            xm = m[mu] + a * (m[(mu + 1) % P] + m[(mu - 1) % P])
            q += m[mu] * xm
        v = beta * N * np.sqrt(1.0 + q)
        if v > mx:
            acc = acc * np.exp(mx - v) + 1.0
            mx = v
        else:
            acc += np.exp(v - mx)
    return mx + np.log(acc)


def _check_cap(N: int, cap: int) -> None:
    if N > cap:
        raise ValueError(f"N={N} exceeds the enumeration cap {cap}")
    if N < 1:
        raise ValueError("N must be >= 1")


def exact_pressure(patterns: PatternSet, params: ModelParams, cap: int = ENUMERATION_CAP) -> float:
    """``(1/N) log sum_sigma exp(-beta H_rel_corr(sigma))`` by enumeration."""
    _check_cap(patterns.N, cap)
    if patterns.P != params.P:
        raise ValueError(f"patterns have P={patterns.P}, params have P={params.P}")
    if math.isinf(params.beta):
        raise ValueError("exact_pressure needs a finite beta")
    xi = np.ascontiguousarray(patterns.bits, dtype=float)
    return _gray_logsumexp(xi, float(params.beta), float(params.a)) / patterns.N


def all_states(N: int) -> np.ndarray:
    """All ``2^N`` configurations; row ``s`` has ``sigma_i = +1`` iff bit ``i``
    of ``s`` is set."""
    s = np.arange(1 << N)[:, None]
    return ((s >> np.arange(N)) & 1).astype(np.int8) * 2 - 1


def state_index(sigma) -> int:
    sigma = np.asarray(sigma)
    return int(np.sum((sigma > 0).astype(np.int64) << np.arange(len(sigma))))


def gibbs_distribution(patterns: PatternSet, params: ModelParams, cap: int = 16) -> np.ndarray:
    """Exact Boltzmann weights of every state, indexed as in :func:`all_states`."""
    _check_cap(patterns.N, cap)
    states = all_states(patterns.N).astype(float)
    m = states @ patterns.bits.astype(float) / patterns.N
    q = np.einsum("sp,sp->s", m, apply_x(m, params.a))
    logw = params.beta * patterns.N * np.sqrt(1.0 + q)
    w = np.exp(logw - logw.max())
    return w / w.sum()
