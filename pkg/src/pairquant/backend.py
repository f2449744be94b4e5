"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The cyclic Jacobi eigensolver is the inner loop of the whole package (one
eigendecomposition per solver iteration), so it is compiled with numba when
available.  Set ``PAIRQUANT_BACKEND=numpy`` to force the fallback, or
``PAIRQUANT_BACKEND=numba`` to require the compiled path (raises if numba
is missing).  Both paths run the same sweep order and rotation formulas;
they agree to machine-level tolerance but are not guaranteed bitwise equal
to each other.
"""

from __future__ import annotations

import os

import numpy as np

_SWEEP_TOL = 1e-13
_MAX_SWEEPS = 64

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on stripped installs
    njit = None
    HAS_NUMBA = False


def _jacobi_eig_numpy(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigendecomposition, vectorized row/column rotations."""
    A = np.array(A, dtype=np.float64)
    n = A.shape[0]
    V = np.eye(n)
    if n == 1:
        return np.array([A[0, 0]]), V
    fro = max(1.0, float(np.sqrt((A * A).sum())))
    for _ in range(_MAX_SWEEPS):
        off = A.copy()
        np.fill_diagonal(off, 0.0)
        if np.sqrt((off * off).sum()) <= _SWEEP_TOL * fro:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(1.0 + theta * theta))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                tau = s / (1.0 + c)
                app, aqq = A[p, p], A[q, q]
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = rp - s * (rq + tau * rp)
                A[q, :] = rq + s * (rp - tau * rq)
                A[:, p] = A[p, :]
                A[:, q] = A[q, :]
                A[p, p] = app - t * apq
                A[q, q] = aqq + t * apq
                A[p, q] = 0.0
                A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = vp - s * (vq + tau * vp)
                V[:, q] = vq + s * (vp - tau * vq)
    return np.diag(A).copy(), V


if HAS_NUMBA:

    @njit(cache=True)
    def _jacobi_eig_numba(A):  # pragma: no cover - compiled
        n = A.shape[0]
        A = A.copy()
        V = np.eye(n)
        w = np.empty(n)
        if n == 1:
            w[0] = A[0, 0]
            return w, V
        fro = 0.0
        for i in range(n):
            for j in range(n):
                fro += A[i, j] * A[i, j]
        fro = np.sqrt(fro)
        if fro < 1.0:
            fro = 1.0
        for _ in range(_MAX_SWEEPS):
            off = 0.0
            for i in range(n):
                for j in range(n):
                    if i != j:
                        off += A[i, j] * A[i, j]
            if np.sqrt(off) <= _SWEEP_TOL * fro:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = A[p, q]
                    if apq == 0.0:
                        continue
                    theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                    t = 1.0 / (abs(theta) + np.sqrt(1.0 + theta * theta))
                    if theta < 0.0:
                        t = -t
                    c = 1.0 / np.sqrt(1.0 + t * t)
                    s = t * c
                    tau = s / (1.0 + c)
                    app = A[p, p]
                    aqq = A[q, q]
                    for i in range(n):
                        aip = A[p, i]
                        aiq = A[q, i]
                        A[p, i] = aip - s * (aiq + tau * aip)
                        A[q, i] = aiq + s * (aip - tau * aiq)
                    for i in range(n):
                        A[i, p] = A[p, i]
                        A[i, q] = A[q, i]
                    A[p, p] = app - t * apq
                    A[q, q] = aqq + t * apq
                    A[p, q] = 0.0
                    A[q, p] = 0.0
                    for i in range(n):
                        vip = V[i, p]
                        viq = V[i, q]
                        V[i, p] = vip - s * (viq + tau * vip)
                        V[i, q] = viq + s * (vip - tau * viq)
        for i in range(n):
            w[i] = A[i, i]
        return w, V

    def _jacobi_numba_wrapper(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _jacobi_eig_numba(np.ascontiguousarray(A, dtype=np.float64))

else:
    _jacobi_numba_wrapper = None


_BACKENDS = {"numpy": _jacobi_eig_numpy}
if HAS_NUMBA:
    _BACKENDS["numba"] = _jacobi_numba_wrapper


def _resolve_default() -> str:
    requested = os.environ.get("PAIRQUANT_BACKEND", "").strip().lower()
    if requested:
        if requested not in ("numba", "numpy"):
            raise ValueError(f"PAIRQUANT_BACKEND must be 'numba' or 'numpy', got {requested!r}")
        if requested == "numba" and not HAS_NUMBA:
            raise RuntimeError("PAIRQUANT_BACKEND=numba but numba is not importable")
        return requested
    return "numba" if HAS_NUMBA else "numpy"


_ACTIVE = _resolve_default()


def active_backend() -> str:
    return _ACTIVE


def use_backend(name: str) -> None:
    """Switch the active kernel implementation (used by tests and benchmarks)."""
    global _ACTIVE
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; have {sorted(_BACKENDS)}")
    _ACTIVE = name


def jacobi_eig(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigs of a symmetric matrix via cyclic Jacobi: (values, vector columns), unsorted."""
    return _BACKENDS[_ACTIVE](A)
