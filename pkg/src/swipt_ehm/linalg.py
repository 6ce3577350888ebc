"""Complex Hermitian linear-algebra primitives shared by all solvers.

Everything here operates on plain ``numpy`` arrays.  Matrices that are
Hermitian by construction are re-symmetrized as ``(A + A^H)/2`` before any
decomposition to suppress floating-point drift; eigenvalues are always
reported in descending order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "NonHermitianError",
    "NotPositiveDefiniteError",
    "EvdResult",
    "hermitianize",
    "hermitian_defect",
    "require_hermitian",
    "psd_defect",
    "evd_hermitian",
    "inv_sqrt_pd",
    "water_fill_levels",
]

# Absolute tolerance for the Hermitian-symmetry check; scaled by the matrix
# magnitude once entries exceed unity.
HERMITIAN_ATOL = 1e-12

# A positive-definite input must have smallest eigenvalue above this floor.
PD_EIG_FLOOR = 1e-12


class NonHermitianError(ValueError):
    """Input matrix is not Hermitian within tolerance."""

    def __init__(self, defect: float):
        self.defect = defect
        super().__init__(f"matrix is not Hermitian: max |A - A^H| = {defect:.3e}")


class NotPositiveDefiniteError(ValueError):
    """Input matrix is singular or indefinite where PD is required."""

    def __init__(self, smallest_eigenvalue: float):
        self.smallest_eigenvalue = smallest_eigenvalue
        super().__init__(
            f"matrix is not positive definite: smallest eigenvalue = "
            f"{smallest_eigenvalue:.3e}"
        )


@dataclass
class EvdResult:
    """Eigendecomposition with eigenvalues sorted descending.

    ``eigenvectors[:, i]`` is the unit eigenvector for ``eigenvalues[i]``;
    the reconstruction ``U diag(w) U^H`` matches the input to working
    precision.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T


def hermitianize(a: np.ndarray) -> np.ndarray:
    """Return the Hermitian part (A + A^H)/2."""
    return 0.5 * (a + a.conj().T)


def hermitian_defect(a: np.ndarray) -> float:
    """Largest entrywise deviation from Hermitian symmetry."""
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def require_hermitian(a: np.ndarray, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Validate Hermitian symmetry and return the symmetrized matrix.

    Raises :class:`NonHermitianError` carrying the max asymmetry when the
    defect exceeds ``atol`` (scaled by the matrix magnitude).
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    defect = hermitian_defect(a)
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if defect > atol * scale:
        raise NonHermitianError(defect)
    return hermitianize(a)


def psd_defect(a: np.ndarray) -> float:
    """How far below zero the spectrum dips, relative to max(1, lambda_max).

    Returns 0 for a PSD matrix; a positive number is the normalized
    magnitude of the most negative eigenvalue.
    """
    w = np.linalg.eigvalsh(hermitianize(np.asarray(a)))
    lo, hi = float(w[0]), float(w[-1])
    return max(0.0, -lo / max(1.0, hi))


def evd_hermitian(a: np.ndarray, atol: float = HERMITIAN_ATOL) -> EvdResult:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Ties between equal eigenvalues keep LAPACK's eigenvector ordering;
    callers must not rely on a particular basis inside degenerate
    eigenspaces.
    """
    a = require_hermitian(a, atol=atol)
    w, u = np.linalg.eigh(a)
    return EvdResult(eigenvalues=w[::-1].copy(), eigenvectors=u[:, ::-1].copy())


def inv_sqrt_pd(q: np.ndarray, eig_floor: float = PD_EIG_FLOOR) -> np.ndarray:
    """Inverse PSD square root R of a positive-definite Q, with R R Q = I.

    Raises :class:`NotPositiveDefiniteError` (carrying the smallest
    eigenvalue) when Q is singular or indefinite.
    """
    q = require_hermitian(q)
    w, u = np.linalg.eigh(q)
    if w[0] <= eig_floor:
        raise NotPositiveDefiniteError(float(w[0]))
    r = (u / np.sqrt(w)) @ u.conj().T
    return hermitianize(r)


def water_fill_levels(level: float, inverse_gains: np.ndarray) -> np.ndarray:
    """Water-filling allocation p_i = max(level - inverse_gains[i], 0).

    ``inverse_gains`` are the per-mode floors 1/delta_i^2; they must be
    strictly positive and finite.  The positive-part clamp keeps the
    allocation inside the PSD cone.
    """
    if level < 0:
        raise ValueError(f"water level must be nonnegative, got {level}")
    g = np.asarray(inverse_gains, dtype=float)
    if g.size and (not np.all(np.isfinite(g)) or np.any(g <= 0)):
        raise ValueError("inverse gains must be positive and finite")
    return np.maximum(level - g, 0.0)
