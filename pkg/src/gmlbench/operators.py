"""Dense complex operator algebra for small Hilbert spaces.

Matrices are plain ``numpy`` arrays. Functions that accept an operator
validate it at the boundary and hand back read-only arrays, so values can be
shared freely between callers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, DegenerateGroundState, NotHermitian

HERMITIAN_RTOL = 1e-12
GROUND_GAP_MIN = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def as_matrix(m) -> np.ndarray:
    """Return ``m`` as a finite, square complex matrix."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def max_norm(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def hermiticity_deviation(m) -> float:
    a = np.asarray(m)
    return max_norm(a - a.conj().T)


def is_real(m) -> bool:
    return not np.iscomplexobj(m) or not np.any(np.asarray(m).imag)


def assert_hermitian(m, field: str = "matrix") -> np.ndarray:
    """Validate Hermiticity to ``1e-12 * (1 + max|A|)``.

    Raises NotHermitian carrying the maximal deviation.
    """
    a = as_matrix(m)
    dev = hermiticity_deviation(a)
    if dev > HERMITIAN_RTOL * (1.0 + max_norm(a)):
        raise NotHermitian(dev, field)
    if a.flags.writeable and a is m:
        a = a.copy()
    return _frozen(a)


def unitarity_deviation(u) -> float:
    u = np.asarray(u)
    return max_norm(u.conj().T @ u - np.eye(u.shape[0]))


def fix_phase(vec: np.ndarray) -> np.ndarray:
    """Rotate ``vec`` so that its largest-magnitude component is real positive."""
    vec = np.asarray(vec)
    k = int(np.argmax(np.abs(vec)))
    z = vec[k]
    if z == 0:
        return vec
    out = vec * (abs(z) / z)
    if np.iscomplexobj(out):
        out[k] = abs(z)
    return out


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in ascending order with orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.conj().T

    def function(self, f) -> np.ndarray:
        """Apply the scalar function ``f`` to the operator through its eigenbasis."""
        q = self.eigenvectors
        return (q * f(self.eigenvalues)) @ q.conj().T

    def vector(self, k: int) -> np.ndarray:
        return self.eigenvectors[:, k]


def spectral_decompose(h) -> SpectralDecomposition:
    """Diagonalize a Hermitian operator.

    Real symmetric input is diagonalized in real arithmetic, which keeps the
    eigenvectors real. Each eigenvector is phase-fixed so its largest component
    is real positive; the result is deterministic for a given input.
    """
    a = assert_hermitian(h)
    if is_real(a):
        a = a.real
    try:
        w, q = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    q = np.array(q)
    for k in range(q.shape[1]):
        q[:, k] = fix_phase(q[:, k])
    return SpectralDecomposition(_frozen(np.array(w, dtype=float)), _frozen(q))


def unitary_exponential(h, tau: float) -> np.ndarray:
    """``exp(-i tau H)`` through the eigenbasis of ``H``."""
    if not np.isfinite(tau):
        raise ValueError("tau must be finite")
    if tau == 0:
        return _frozen(np.eye(np.asarray(h).shape[0], dtype=complex))
    dec = spectral_decompose(h)
    return _frozen(dec.function(lambda w: np.exp(-1j * tau * w)))


def ground_state(h) -> tuple[float, np.ndarray]:
    """Lowest eigenpair, normalized, phase-fixed."""
    dec = spectral_decompose(h)
    w = dec.eigenvalues
    if len(w) > 1 and w[1] - w[0] <= GROUND_GAP_MIN:
        raise DegenerateGroundState(f"gap {w[1] - w[0]:.3e} between lowest eigenvalues")
    return float(w[0]), dec.vector(0).astype(complex)


def inner(a, b) -> complex:
    """``<a|b>`` with the first argument conjugated."""
    return complex(np.vdot(a, b))


def nondegenerate_gap(eigenvalues, k: int) -> float:
    """Distance from eigenvalue ``k`` to its nearest neighbour (inf for d=1)."""
    w = np.asarray(eigenvalues)
    others = np.delete(w, k)
    if others.size == 0:
        return float("inf")
    return float(np.min(np.abs(others - w[k])))
