"""Small dense linear algebra helpers for density matrices.

Everything here works on plain ``numpy`` arrays; dimensions are tiny (d <= 4 in
practice) so no attempt is made at sparsity or batching except where noted.
"""
import numpy as np

from .errors import NonHermitianInput

__all__ = [
    "hermitian_check",
    "determinant",
    "min_eigenvalue",
    "is_density_matrix",
]


def hermitian_check(m, tol=1e-12):
    """True iff ``max |m - m^H| <= tol`` entrywise."""
    m = np.asarray(m)
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


def determinant(m):
    """Complex determinant of a square matrix."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return complex(np.linalg.det(m))


def min_eigenvalue(m, tol=1e-10):
    """Smallest eigenvalue of a hermitian matrix.

    Accepts a stack of matrices with shape ``(..., d, d)``; the hermiticity
    check is applied to every member.
    """
    m = np.asarray(m)
    dev = np.max(np.abs(m - np.swapaxes(m.conj(), -1, -2))) if m.size else 0.0
    if dev > tol:
        raise NonHermitianInput(f"matrix deviates from hermitian by {dev:.3g}")
    lam = np.linalg.eigvalsh(m)[..., 0]
    return float(lam) if np.ndim(lam) == 0 else lam


def is_density_matrix(m, herm_tol=1e-12, trace_tol=1e-12, eig_tol=1e-10):
    m = np.asarray(m)
    if not hermitian_check(m, herm_tol):
        return False
    if abs(np.trace(m) - 1.0) > trace_tol:
        return False
    return min_eigenvalue(m, tol=herm_tol) >= -eig_tol
