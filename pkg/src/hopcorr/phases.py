"""Phase classification, multi-start selection, (T, a) sweeps and the
ergodicity line."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from .meanfield import FixedPointResult, Model, SolverConfig, solve
from .model import ModelParams

log = logging.getLogger(__name__)


class PhaseLabel(str, Enum):
    ERGODIC = "Ergodic"
    SYMMETRIC = "Symmetric"
    RETRIEVAL = "Retrieval"
    CORRELATED = "Correlated"
    UNCLASSIFIED = "Unclassified"


# Hierarchical initial states for the correlated region.
_CORRELATED_ANSATZ = {
    3: np.array([1, 1, 1]) / 2,
    5: np.array([5, 3, 1, 1, 3]) / 8,
    7: np.array([19, 13, 3, 1, 1, 3, 13]) / 32,
    9: np.array([77, 51, 13, 3, 1, 1, 3, 13, 51]) / 128,
}


def pure_state(P: int, mu: int = 0) -> np.ndarray:
    M = np.zeros(P)
    M[mu] = 1.0
    return M


def symmetric_state(P: int, m: float = 0.5) -> np.ndarray:
    return np.full(P, m)


def noisy_pure_state(P: int, delta: float) -> np.ndarray:
    """``(1 - delta, delta, ..., delta)``."""
    M = np.full(P, float(delta))
    M[0] = 1.0 - delta
    return M


@lru_cache(maxsize=None)
def _zero_t_classical(P: int) -> tuple:
    params = ModelParams(P=P, a=0.6, beta=math.inf)
    res = solve(params, pure_state(P), SolverConfig(damping=1.0, max_iter=64), model=Model.CL_CORR)
    return tuple(res.M)


def correlated_ansatz(P: int) -> np.ndarray:
    """Hierarchical state peaked on pattern 1 and decaying symmetrically.

    Tabulated for ``P`` in {3, 5, 7, 9}; otherwise the zero-temperature
    classical iteration from the pure state at ``a = 0.6`` (which reproduces
    the tabulated vectors).  For even ``P <= 8`` that iteration ends in a
    2-cycle and the last iterate is used.
    """
    if P in _CORRELATED_ANSATZ:
        return _CORRELATED_ANSATZ[P].copy()
    return np.array(_zero_t_classical(P))


def parse_init(spec: str, P: int) -> np.ndarray:
    """Named initial magnetisation: ``pure``, ``symmetric``, ``correlated``,
    ``zero``, ``noisy:<delta>`` or ``file:<path>`` (whitespace/comma separated)."""
    if spec == "pure":
        return pure_state(P)
    if spec == "symmetric":
        return symmetric_state(P)
    if spec == "correlated":
        return correlated_ansatz(P)
    if spec == "zero":
        return np.zeros(P)
    if spec.startswith("noisy:"):
        return noisy_pure_state(P, float(spec.split(":", 1)[1]))
    if spec.startswith("file:"):
        with open(spec.split(":", 1)[1]) as fh:
            vals = np.array(fh.read().replace(",", " ").split(), dtype=float)
        if vals.shape != (P,):
            raise ValueError(f"init file has {vals.size} values, expected {P}")
        return vals
    raise ValueError(f"unknown init {spec!r}")


DEFAULT_INITS = ("pure", "symmetric", "correlated", "noisy:0.15", "noisy:0.2", "noisy:0.25", "zero")


@dataclass(frozen=True)
class PhaseConfig:
    """Thresholds for classification and selection.

    ``support_rel``: components below this fraction of ``max|M|`` count as
    vanishing when telling retrieval from correlated states (finite-T retrieval
    states carry small neighbour overlaps).  ``dedup_tol``: sup-norm distance
    below which two solutions are merged; defaults to ``max(10 tol, 1e-7)``.
    """

    sym_eps: float = 1e-4
    tie_tol: float = 1e-9
    support_rel: float = 0.25
    dedup_tol: float | None = None
    inits: tuple = DEFAULT_INITS


def _cyclic_profile_ok(mag: np.ndarray, c: int, sym_eps: float) -> bool:
    P = len(mag)
    prev = mag[c]
    for d in range(1, P // 2 + 1):
        left, right = mag[(c - d) % P], mag[(c + d) % P]
        if abs(left - right) > sym_eps:
            return False
        level = max(left, right)
        if level > prev + sym_eps:
            return False
        prev = level
    return True


def classify(M, zero_eps: float = 1e-6, sym_eps: float = 1e-4, support_rel: float = 0.0) -> PhaseLabel:
    """Label a converged magnetisation.

    Works on ``|M|`` so the label is invariant under ``M -> -M``, cyclic
    shifts and reflections.  A component is non-vanishing when it reaches
    ``max(zero_eps, support_rel * max|M|)``.
    """
    mag = np.abs(np.asarray(M, dtype=float))
    top = float(mag.max())
    if top < zero_eps:
        return PhaseLabel.ERGODIC
    mean = float(mag.mean())
    if np.all(np.abs(mag - mean) <= sym_eps) and mean >= zero_eps:
        return PhaseLabel.SYMMETRIC
    support = max(zero_eps, support_rel * top)
    if int(np.sum(mag >= support)) == 1:
        return PhaseLabel.RETRIEVAL
    levels = np.unique(np.round(mag / sym_eps))
    if len(levels) >= 2:
        for c in np.flatnonzero(mag >= top - sym_eps):
            if _cyclic_profile_ok(mag, int(c), sym_eps):
                return PhaseLabel.CORRELATED
    return PhaseLabel.UNCLASSIFIED


def canonical(M) -> np.ndarray:
    """Representative of ``M`` under cyclic shifts, reflection and sign."""
    M = np.asarray(M, dtype=float)
    P = len(M)
    best = None
    for v in (M, -M, M[::-1], -M[::-1]):
        for k in range(P):
            r = np.roll(v, -k)
            if best is None or tuple(r) > tuple(best):
                best = r
    return best


@dataclass
class PhasePoint:
    T: float
    a: float
    best: FixedPointResult
    label: PhaseLabel
    sublabel: str | None = None
    all_solutions: list = field(default_factory=list)
    failed: list = field(default_factory=list)

    @property
    def max_abs_M(self) -> float:
        return self.best.max_abs


def _dedup(results: list, tol: float) -> list:
    distinct: list = []
    keys: list = []
    for r in results:
        key = canonical(r.M)
        if any(np.max(np.abs(key - k)) < tol for k in keys):
            continue
        keys.append(key)
        distinct.append(r)
    return distinct


def _select(solutions: list, tie_tol: float) -> FixedPointResult:
    top = max(r.pressure for r in solutions)
    tied = [r for r in solutions if r.pressure >= top - tie_tol]
    # ties go to the larger max|M| (retrieval over symmetric)
    return max(tied, key=lambda r: (r.max_abs, r.pressure))


def multi_start(
    params: ModelParams,
    cfg: SolverConfig = SolverConfig(),
    phase_cfg: PhaseConfig = PhaseConfig(),
    inits=None,
) -> PhasePoint:
    """Solve from every initial state, keep the distinct converged fixed
    points and select the one with the largest pressure."""
    names = phase_cfg.inits if inits is None else inits
    results = [solve(params, parse_init(n, params.P), cfg, init_label=n) for n in names]
    failed = [r for r in results if not r.converged]
    for r in failed:
        log.info("start %s did not converge at P=%d a=%g T=%g (residual %.3g)",
                 r.init_label, params.P, params.a, params.T, r.residual)
    ok = [r for r in results if r.converged]
    if not ok:
        best = min(results, key=lambda r: r.residual)
        return PhasePoint(T=params.T, a=params.a, best=best, label=PhaseLabel.UNCLASSIFIED,
                          all_solutions=[], failed=failed)
    dedup_tol = phase_cfg.dedup_tol or max(10 * cfg.tol, 1e-7)
    distinct = _dedup(ok, dedup_tol)
    best = _select(distinct, phase_cfg.tie_tol)

    def label_of(r):
        return classify(r.M, cfg.zero_eps, phase_cfg.sym_eps, phase_cfg.support_rel)

    sublabel = None
    pure = next((r for r in ok if r.init_label == "pure"), None)
    if pure is not None and label_of(pure) is PhaseLabel.RETRIEVAL:
        key = canonical(pure.M)
        others = [r for r in distinct if np.max(np.abs(canonical(r.M) - key)) >= dedup_tol]
        wins = all(pure.pressure > r.pressure + phase_cfg.tie_tol for r in others)
        sublabel = "R1" if wins else "R2"
    return PhasePoint(T=params.T, a=params.a, best=best, label=label_of(best),
                      sublabel=sublabel, all_solutions=distinct, failed=failed)


@dataclass(frozen=True)
class SweepGrid:
    T_min: float
    T_max: float
    T_steps: int
    a_min: float
    a_max: float
    a_steps: int
    P: int
    init_set: tuple = DEFAULT_INITS

    def __post_init__(self):
        for name in ("T", "a"):
            lo, hi, n = getattr(self, f"{name}_min"), getattr(self, f"{name}_max"), getattr(self, f"{name}_steps")
            if n < 1 or (n >= 2 and not hi > lo) or (n == 1 and hi != lo):
                raise ValueError(f"bad {name} range {lo}:{hi}:{n}")
        if not (0.0 <= self.a_min and self.a_max <= 1.0):
            raise ValueError("a range must lie in [0, 1]")
        if self.T_min <= 0:
            raise ValueError("T_min must be > 0")

    @property
    def T_values(self) -> np.ndarray:
        return np.linspace(self.T_min, self.T_max, self.T_steps)

    @property
    def a_values(self) -> np.ndarray:
        return np.linspace(self.a_min, self.a_max, self.a_steps)


def _sweep_row(args) -> list:
    T, a_values, P, inits, cfg, phase_cfg = args
    row = []
    for a in a_values:
        params = ModelParams.from_temperature(P, float(a), float(T))
        try:
            row.append(multi_start(params, cfg, phase_cfg, inits))
        except Exception as exc:  # per-cell failures are recorded, the sweep goes on
            log.error("cell T=%g a=%g failed: %s", T, a, exc)
            dummy = FixedPointResult(M=np.full(P, np.nan), pressure=math.nan, iterations=0,
                                     converged=False, residual=math.nan, params=params)
            row.append(PhasePoint(T=float(T), a=float(a), best=dummy,
                                  label=PhaseLabel.UNCLASSIFIED, failed=[dummy]))
    return row


def default_threads() -> int:
    env = os.environ.get("HOPCORR_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def sweep(grid: SweepGrid, cfg: SolverConfig = SolverConfig(), phase_cfg: PhaseConfig = PhaseConfig(),
          threads: int | None = None) -> list[PhasePoint]:
    """One :class:`PhasePoint` per cell, T-major (T outer, a inner)."""
    threads = default_threads() if threads is None else threads
    tasks = [(T, grid.a_values, grid.P, tuple(grid.init_set), cfg, phase_cfg) for T in grid.T_values]
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(t) for t in tasks]
    return [p for row in rows for p in row]


def _ordered(a: float, P: int, T: float, cfg: SolverConfig) -> bool:
    res = solve(ModelParams.from_temperature(P, a, T), symmetric_state(P), cfg)
    return res.max_abs >= cfg.zero_eps


def find_tc(a: float, P: int, cfg: SolverConfig = SolverConfig(), T_resolution: float = 0.01,
            T_lo: float = 0.5, T_hi: float = 3.5) -> float:
    """Bisect the ergodic boundary on ``max|M| >= zero_eps`` from the
    symmetric start."""
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"a must lie in [0, 1], got {a}")
    if not _ordered(a, P, T_lo, cfg) or _ordered(a, P, T_hi, cfg):
        raise ValueError(f"no ergodicity transition inside [{T_lo}, {T_hi}] for a={a}")
    lo, hi = T_lo, T_hi
    while hi - lo > T_resolution:
        mid = 0.5 * (lo + hi)
        if _ordered(a, P, mid, cfg):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def magnetization_curves(a: float, P: int, T_values, cfg: SolverConfig = SolverConfig()) -> np.ndarray:
    """Rows ``(T, M_1, ..., M_P)`` from the pure start on pattern 1, so the
    stimulated component comes first."""
    rows = []
    for T in T_values:
        res = solve(ModelParams.from_temperature(P, a, float(T)), pure_state(P), cfg)
        rows.append(np.concatenate([[T], res.M]))
    return np.array(rows)
