"""Cyclic temporal-correlation matrix, its spectrum and the pattern rotation.

The matrix couples every pattern to its two cyclic neighbours with strength
``a``.  For ``P >= 3`` it is a symmetric circulant with stencil ``(a, 1, a)``.
The small cases follow the literal reading of the neighbour sum: for ``P = 2``
both neighbours of a pattern are the same pattern, so the off-diagonal entry
is ``2a``; for ``P = 1`` the pattern is its own neighbour and ``X = [1 + 2a]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: eigenvalues closer than this are treated as one eigenspace
DEGENERACY_TOL = 1e-9
#: smallest eigenvalue admitted by :func:`rotate_patterns`
POSITIVITY_TOL = 1e-12


class NotPositiveDefiniteError(ValueError):
    """Raised when a square root of the correlation spectrum is requested but
    some eigenvalue is not strictly positive."""


def apply_x(M, a: float) -> np.ndarray:
    """Matrix-free product ``X @ M`` using the three-term cyclic stencil.

    Works for every ``P``: with ``np.roll`` the two neighbours coincide for
    ``P = 2`` and equal the vector itself for ``P = 1``, which reproduces the
    dense matrices built by :func:`build_x`.
    """
    M = np.asarray(M, dtype=float)
    return M + a * (np.roll(M, 1, axis=-1) + np.roll(M, -1, axis=-1))


@dataclass(frozen=True)
class CorrelationMatrix:
    P: int
    a: float
    dense: np.ndarray = field(repr=False)

    def apply(self, M) -> np.ndarray:
        return apply_x(M, self.a)

    def quadratic(self, M) -> float:
        """``M^T X M``."""
        M = np.asarray(M, dtype=float)
        return float(M @ self.apply(M))


def build_x(P: int, a: float) -> CorrelationMatrix:
    if P < 1:
        raise ValueError(f"P must be >= 1, got {P}")
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"a must lie in [0, 1], got {a}")
    X = np.eye(P)
    for mu in range(P):
        X[mu, (mu + 1) % P] += a
        X[mu, (mu - 1) % P] += a
    X.setflags(write=False)
    return CorrelationMatrix(P=P, a=float(a), dense=X)


def closed_form_eigenvalues(P: int, a: float) -> np.ndarray:
    """``1 + 2a cos(2 pi k / P)`` for ``k = 0..P-1``, sorted descending."""
    k = np.arange(P)
    lam = 1.0 + 2.0 * a * np.cos(2.0 * np.pi * k / P)
    return np.sort(lam)[::-1]


def char_poly_value(P: int, a: float, lam: float) -> float:
    """Closed-form characteristic polynomial ``det(X - lam I)``.

    With ``phi = (1 - lam)/2`` the value is
    ``(phi - r)^P + (phi + r)^P - 2 (-1)^P a^P`` where ``r = sqrt(phi^2 - a^2)``.
    ``r`` is imaginary inside the band ``|phi| < a``; the two powers are then
    complex conjugates and the imaginary parts cancel.
    """
    phi = (1.0 - lam) / 2.0
    r = np.sqrt(complex(phi * phi - a * a))
    val = (phi - r) ** P + (phi + r) ** P - 2.0 * (-1) ** P * a**P
    scale = max(1.0, abs(phi - r) ** P, abs(phi + r) ** P)
    if abs(val.imag) > 1e-9 * scale:
        raise ArithmeticError(
            f"imaginary part {val.imag:.3e} did not cancel (P={P}, a={a}, lam={lam})"
        )
    return float(val.real)


@dataclass(frozen=True)
class Spectrum:
    P: int
    a: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def sqrtD(self) -> np.ndarray | None:
        if np.any(self.eigenvalues <= POSITIVITY_TOL):
            return None
        return np.sqrt(self.eigenvalues)

    @property
    def positive_definite(self) -> bool:
        return bool(np.all(self.eigenvalues > POSITIVITY_TOL))

    def reconstruct(self) -> np.ndarray:
        U = self.eigenvectors
        return U @ np.diag(self.eigenvalues) @ U.T

    def formula_residuals(self) -> np.ndarray:
        return self.eigenvalues - closed_form_eigenvalues(self.P, self.a)

    def to_json(self) -> dict:
        return {
            "P": self.P,
            "a": self.a,
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "formula_residuals": [float(x) for x in self.formula_residuals()],
            "char_poly_residuals": [
                char_poly_value(self.P, self.a, float(x)) for x in self.eigenvalues
            ],
        }


def _canonical_basis(Q: np.ndarray) -> np.ndarray:
    # Gram-Schmidt on the projections of e_0, e_1, ... onto span(Q). For a
    # (k, P-k) pair this yields the normalised cosine then sine vector; for a
    # fully degenerate X (a = 0) it yields the identity.
    P, d = Q.shape
    basis: list[np.ndarray] = []
    for j in range(P):
        if len(basis) == d:
            break
        v = Q @ Q[j]
        for b in basis:
            v = v - (b @ v) * b
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            basis.append(v / norm)
    return np.column_stack(basis)


def spectrum(X: CorrelationMatrix) -> Spectrum:
    """Eigen-decomposition of ``X`` with eigenvalues sorted descending.

    Degenerate eigenspaces get a deterministic orthonormal basis so that the
    rotated patterns do not depend on the LAPACK build.
    """
    w, V = np.linalg.eigh(X.dense)
    order = np.argsort(-w, kind="stable")
    w, V = w[order], V[:, order]
    cols = []
    start = 0
    while start < len(w):
        stop = start + 1
        while stop < len(w) and abs(w[stop] - w[start]) < DEGENERACY_TOL:
            stop += 1
        cols.append(_canonical_basis(V[:, start:stop]))
        start = stop
    U = np.column_stack(cols)
    lam = np.einsum("ik,ij,jk->k", U, X.dense, U)
    return Spectrum(P=X.P, a=X.a, eigenvalues=lam, eigenvectors=U)


@dataclass(frozen=True)
class RotatedPatterns:
    tilde: np.ndarray

    def covariance(self, normalized: bool = True) -> np.ndarray:
        """Sample covariance of the rotated pattern columns.

        With ``normalized`` the Pearson correlation matrix is returned, which
        tends to the identity as ``N`` grows; otherwise the raw covariance,
        which tends to ``diag(lambda)``.
        """
        t = self.tilde
        c = t - t.mean(axis=0)
        cov = c.T @ c / t.shape[0]
        if not normalized:
            return cov
        d = np.sqrt(np.diag(cov))
        return cov / np.outer(d, d)


def rotate_patterns(patterns, spec: Spectrum) -> RotatedPatterns:
    """Rotate every neuron's pattern row by ``sqrt(D) U^T``.

    ``patterns`` is a :class:`hopcorr.model.PatternSet` or a plain ``N x P``
    array.  The Hebbian coupling is preserved:
    ``tilde_i . tilde_j == xi_i^T X xi_j``.
    """
    bits = getattr(patterns, "bits", patterns)
    bits = np.asarray(bits, dtype=float)
    if bits.shape[1] != spec.P:
        raise ValueError(f"pattern count {bits.shape[1]} != spectrum size {spec.P}")
    if not spec.positive_definite:
        raise NotPositiveDefiniteError(
            f"min eigenvalue {spec.eigenvalues.min():.3e} <= {POSITIVITY_TOL} "
            f"(P={spec.P}, a={spec.a}); rotation needs a positive spectrum"
        )
    return RotatedPatterns(tilde=bits @ spec.eigenvectors * spec.sqrtD)
