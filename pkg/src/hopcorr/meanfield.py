"""Low-load mean-field theory: quenched averages over the P pattern bits, the
pressure functional, self-consistency maps and the damped fixed-point solver.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numba
import numpy as np

from .correlation import apply_x
from .model import ModelParams

log = logging.getLogger(__name__)

#: largest P for exact 2^P quenched averages
QUENCHED_CAP = 20
#: |denominator| below this is reported as singular
SINGULAR_DEN = 1e-10
#: denominators below 1 - DEN_SLACK are counted as diagnostic events
DEN_SLACK = 1e-9


class Model(str, Enum):
    REL_CORR = "rel"
    CL_CORR = "cl"


class SingularDenominatorError(ArithmeticError):
    pass


@lru_cache(maxsize=None)
def pattern_table(P: int, half: bool = False) -> np.ndarray:
    """All ``2^P`` sign vectors as rows (``half``: only those with ``xi^1 = +1``)."""
    if P > QUENCHED_CAP:
        raise ValueError(f"P={P} exceeds the quenched-average cap {QUENCHED_CAP}")
    s = np.arange(1 << P)[:, None]
    xi = 1.0 - 2.0 * ((s >> np.arange(P)) & 1)
    if half:
        xi = np.ascontiguousarray(xi[xi[:, 0] > 0])
    xi.setflags(write=False)
    return xi


def quenched_avg(P: int, f):
    """Exact average ``2^-P sum_xi f(xi)`` over all sign vectors.

    ``f`` is vectorised: it receives the ``(2^P, P)`` table of sign vectors and
    returns one value (or one row of values) per sign vector.
    """
    xi = pattern_table(P)
    vals = np.asarray(f(xi), dtype=float)
    return vals.mean(axis=0)


def _logcosh(x):
    x = np.abs(x)
    return x + np.log1p(np.exp(-2.0 * x)) - math.log(2.0)


def pressure(M, params: ModelParams) -> float:
    """Thermodynamic pressure of the relativistic correlated model at the
    order parameter ``M``:
    ``log 2 + E log cosh(beta xi.(XM)/s) + beta/s`` with ``s = sqrt(1 + M^T X M)``.
    """
    if params.zero_temperature:
        raise ValueError("pressure is infinite at zero temperature")
    M = np.asarray(M, dtype=float)
    h = apply_x(M, params.a)
    s2 = 1.0 + float(M @ h)
    if s2 <= 0:
        raise ValueError(f"1 + M^T X M = {s2} is not positive")
    s = math.sqrt(s2)
    xi = pattern_table(params.P, half=True)
    return math.log(2.0) + float(_logcosh(params.beta * (xi @ h) / s).mean()) + params.beta / s


def pressure_cl(M, params: ModelParams) -> float:
    """Classical correlated pressure ``log 2 + E log cosh(beta xi.(XM)) - beta M^T X M / 2``."""
    M = np.asarray(M, dtype=float)
    h = apply_x(M, params.a)
    xi = pattern_table(params.P, half=True)
    return (
        math.log(2.0)
        + float(_logcosh(params.beta * (xi @ h)).mean())
        - 0.5 * params.beta * float(M @ h)
    )


def _tanh_avg(field_, beta: float) -> np.ndarray:
    if math.isinf(beta):
        return np.sign(field_)
    return np.tanh(beta * field_)


def rel_corr_terms(M, params: ModelParams) -> tuple[np.ndarray, float]:
    """Numerator vector and scalar denominator of the relativistic
    self-consistency map."""
    M = np.asarray(M, dtype=float)
    h = apply_x(M, params.a)
    s2 = 1.0 + float(M @ h)
    if s2 <= 0:
        raise ValueError(f"1 + M^T X M = {s2} is not positive")
    xi = pattern_table(params.P, half=True)
    # xi -> -xi leaves xi^mu tanh(beta xi.h) unchanged: half the table suffices
    t = _tanh_avg((xi @ h) / math.sqrt(s2), params.beta)
    g = xi.T @ t / xi.shape[0]
    return s2 * g, 1.0 + float(h @ g)


def rhs_rel_corr(M, params: ModelParams) -> np.ndarray:
    num, den = rel_corr_terms(M, params)
    if abs(den) < SINGULAR_DEN:
        raise SingularDenominatorError(f"denominator {den:.3e} at M={M}")
    return num / den


def rhs_cl_corr(M, params: ModelParams) -> np.ndarray:
    """``E[xi^mu tanh(beta sum_rho xi^rho (XM)_rho)]``."""
    h = apply_x(np.asarray(M, dtype=float), params.a)
    xi = pattern_table(params.P, half=True)
    t = _tanh_avg(xi @ h, params.beta)
    return xi.T @ t / xi.shape[0]


def pressure_gradient(M, params: ModelParams, step: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of :func:`pressure`."""
    M = np.asarray(M, dtype=float)
    grad = np.empty_like(M)
    for mu in range(len(M)):
        e = np.zeros_like(M)
        e[mu] = step
        grad[mu] = (pressure(M + e, params) - pressure(M - e, params)) / (2 * step)
    return grad


@dataclass(frozen=True)
class SolverConfig:
    damping: float = 0.5
    tol: float = 1e-10
    max_iter: int = 100_000
    zero_eps: float = 1e-6

    def __post_init__(self):
        if not 0.0 < self.damping <= 1.0:
            raise ValueError(f"damping must lie in (0, 1], got {self.damping}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class FixedPointResult:
    M: np.ndarray
    pressure: float
    iterations: int
    converged: bool
    residual: float
    model: Model = Model.REL_CORR
    params: ModelParams | None = None
    init_label: str = ""
    gradient_norm: float = math.nan
    den_violations: int = 0
    min_denominator: float = math.nan
    extra: dict = field(default_factory=dict)

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.M)))

    def to_json(self) -> dict:
        p = self.params
        return {
            "P": p.P if p else len(self.M),
            "a": p.a if p else None,
            "T": p.T if p else None,
            "model": self.model.value,
            "init_label": self.init_label,
            "M": [float(x) for x in self.M],
            "pressure": float(self.pressure),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "residual": float(self.residual),
        }


@numba.njit(cache=True)
def _iterate(xi, a, beta, M0, gamma, tol, max_iter, relativistic):
    # Compiled twin of the rel_corr_terms / rhs_cl_corr path in solve().
    n, P = xi.shape
    M = M0.copy()
    h = np.empty(P)
    g = np.empty(P)
    nxt = np.empty(P)
    zero_t = np.isinf(beta)
    delta = np.inf
    min_den = np.inf
    violations = 0
    it = 0
    while it < max_iter:
        it += 1
        s2 = 1.0
        for mu in range(P):
            h[mu] = M[mu] + a * (M[(mu + 1) % P] + M[(mu - 1) % P])
            s2 += M[mu] * h[mu]
        if relativistic and s2 <= 0.0:
            break
        scale = 1.0 / np.sqrt(s2) if relativistic else 1.0
        g[:] = 0.0
        for k in range(n):
            f = 0.0
            for mu in range(P):
                f += xi[k, mu] * h[mu]
            f *= scale
            t = np.sign(f) if zero_t else np.tanh(beta * f)
            for mu in range(P):
                g[mu] += xi[k, mu] * t
        den = 1.0
        for mu in range(P):
            g[mu] /= n
            den += h[mu] * g[mu]
        if relativistic:
            min_den = min(min_den, den)
            if den < 1.0 - DEN_SLACK:
                violations += 1
            if abs(den) < SINGULAR_DEN:
                break
        delta = 0.0
        for mu in range(P):
            new = s2 * g[mu] / den if relativistic else g[mu]
            nxt[mu] = (1.0 - gamma) * M[mu] + gamma * new
            delta = max(delta, abs(nxt[mu] - M[mu]))
        M[:] = nxt
        if delta <= tol:
            break
    return M, it, delta, min_den, violations


def _iterate_numpy(params, M, cfg, model):
    gamma = cfg.damping
    delta = math.inf
    violations = 0
    min_den = math.inf
    it = 0
    while it < cfg.max_iter:
        it += 1
        if model is Model.REL_CORR:
            num, den = rel_corr_terms(M, params)
            min_den = min(min_den, den)
            if den < 1.0 - DEN_SLACK:
                violations += 1
            if abs(den) < SINGULAR_DEN:
                break
            new = num / den
        else:
            new = rhs_cl_corr(M, params)
        nxt = (1.0 - gamma) * M + gamma * new
        delta = float(np.max(np.abs(nxt - M)))
        M = nxt
        if delta <= cfg.tol:
            break
    return M, it, delta, min_den, violations


def solve(
    params: ModelParams,
    init,
    cfg: SolverConfig = SolverConfig(),
    model: Model = Model.REL_CORR,
    init_label: str = "",
    compiled: bool = True,
) -> FixedPointResult:
    """Damped fixed-point iteration ``M <- (1-g) M + g rhs(M)``.

    Stops when the sup-norm step falls to ``cfg.tol`` or after ``cfg.max_iter``
    iterations; non-convergence is reported in the result, never raised.
    ``compiled=False`` runs the same iteration through the numpy right-hand
    sides (slower, used as a cross-check).
    """
    model = Model(model)
    M = np.array(init, dtype=float)
    if M.shape != (params.P,):
        raise ValueError(f"init has shape {M.shape}, expected ({params.P},)")
    if compiled:
        xi = pattern_table(params.P, half=True)
        M, it, delta, min_den, violations = _iterate(
            xi, float(params.a), float(params.beta), M, float(cfg.damping),
            float(cfg.tol), int(cfg.max_iter), model is Model.REL_CORR,
        )
        it, delta, violations = int(it), float(delta), int(violations)
    else:
        M, it, delta, min_den, violations = _iterate_numpy(params, M, cfg, model)
    if violations:
        log.warning("%d denominator values below 1 (min %.6g) at P=%d a=%g T=%g",
                    violations, min_den, params.P, params.a, params.T)
    converged = delta <= cfg.tol
    if params.zero_temperature:
        F = math.inf
    elif model is Model.REL_CORR:
        F = pressure(M, params)
    else:
        F = pressure_cl(M, params)
    grad = math.nan
    if converged and model is Model.REL_CORR and not params.zero_temperature:
        grad = float(np.max(np.abs(pressure_gradient(M, params))))
    return FixedPointResult(
        M=M,
        pressure=F,
        iterations=it,
        converged=converged,
        residual=delta,
        model=model,
        params=params,
        init_label=init_label,
        gradient_norm=grad,
        den_violations=violations,
        min_denominator=float(min_den) if model is Model.REL_CORR else math.nan,
    )


def critical_temperature(a: float) -> float:
    """Ergodicity-breaking temperature ``1 + 2a`` (largest eigenvalue of X)."""
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"a must lie in [0, 1], got {a}")
    return 1.0 + 2.0 * a
