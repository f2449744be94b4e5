"""Symmetric eigendecomposition and PSD-cone projection."""

from __future__ import annotations

import numpy as np

from . import backend


class NotSymmetric(ValueError):
    pass


def _check_symmetric(M: np.ndarray, rel: float = 1e-12) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.abs(M).max(initial=0.0)))
    gap = float(np.abs(M - M.T).max(initial=0.0))
    if gap > rel * scale:
        raise NotSymmetric(f"matrix is not symmetric: max |M - M.T| = {gap:.3e}")
    return M


def _sign_normalize(V: np.ndarray) -> np.ndarray:
    """Flip each column so its first non-negligible coordinate is positive."""
    V = V.copy()
    for k in range(V.shape[1]):
        col = V[:, k]
        thresh = 1e-12 * max(1.0, float(np.abs(col).max(initial=0.0)))
        for x in col:
            if abs(x) > thresh:
                if x < 0:
                    V[:, k] = -col
                break
    return V


def sym_eig(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix.

    Returns (eigenvalues descending, eigenvector columns), with vectors
    orthonormal and sign-normalized for determinism.  Raises NotSymmetric
    if the input is asymmetric beyond 1e-12 relative.
    """
    M = _check_symmetric(M)
    w, V = backend.jacobi_eig(0.5 * (M + M.T))
    order = np.argsort(-w, kind="stable")
    return w[order], _sign_normalize(V[:, order])


def psd_project(M: np.ndarray) -> np.ndarray:
    """Nearest positive-semidefinite matrix in Frobenius norm (eigenvalue clip)."""
    M = _check_symmetric(M)
    Msym = 0.5 * (M + M.T)
    w, V = backend.jacobi_eig(Msym)
    if w.min(initial=0.0) >= 0.0:
        return Msym
    Wc = np.where(w > 0.0, w, 0.0)
    P = (V * Wc) @ V.T
    return 0.5 * (P + P.T)
