"""Spectral decomposition of a recovered interaction matrix.

The squared interaction values decompose exactly into squared eigenvalues
(sum_ij w_ij^2 = sum_i lambda_i^2), so each eigen component owns a sum of
squares.  Dividing by a simulated pseudo-degrees-of-freedom turns the table
into a variance-decomposition analogue of a two-way ANOVA, with the trailing
components pooled as the error term.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .linalg import sym_eig


class DfMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray    # descending
    vectors: np.ndarray        # orthonormal columns, sign-normalized

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    def trace_share(self) -> np.ndarray:
        """Per-component share of the eigenvalue sum (the trace)."""
        total = self.eigenvalues.sum()
        return self.eigenvalues / total if total else np.zeros(self.n)

    def squared_share(self) -> np.ndarray:
        """Per-component share of the squared-eigenvalue sum (the total SS)."""
        total = (self.eigenvalues ** 2).sum()
        return self.eigenvalues ** 2 / total if total else np.zeros(self.n)

    def to_dict(self) -> dict:
        return {"eigenvalues": [float(x) for x in self.eigenvalues],
                "vectors": [[float(x) for x in row] for row in self.vectors]}


def spectrum(W: np.ndarray) -> Spectrum:
    """Descending eigendecomposition of a symmetric interaction matrix."""
    w, V = sym_eig(W)
    return Spectrum(w, V)


@dataclass(frozen=True)
class PseudoDfTable:
    """Simulated pseudo-degrees-of-freedom: the expected i-th squared singular
    value of an n-by-n matrix of independent standard normal entries."""

    n: int
    M: np.ndarray              # length n, decreasing
    se: np.ndarray             # Monte-Carlo standard errors
    replicates: int
    seed: int

    def term(self, i: int) -> float:
        """Pseudo-DF of term i (1-based)."""
        return float(self.M[i - 1])

    def to_dict(self) -> dict:
        return {"n": self.n, "replicates": self.replicates, "seed": self.seed,
                "M": [float(x) for x in self.M], "se": [float(x) for x in self.se]}


def mc_pseudo_df(n: int, replicates: int = 20_000, seed: int = 0,
                 chunk: int | None = None) -> PseudoDfTable:
    """Monte-Carlo pseudo-degrees-of-freedom for all n terms.

    Each replicate's random stream is derived from (seed, replicate index),
    so results do not depend on chunking or evaluation order.
    """
    if replicates < 1000:
        raise ValueError("use at least 1000 replicates")
    if chunk is None:
        chunk = max(1, 4_000_000 // (n * n))
    sums = np.zeros(n)
    sq_sums = np.zeros(n)
    for start in range(0, replicates, chunk):
        stop = min(start + chunk, replicates)
        block = np.empty((stop - start, n, n))
        for r in range(start, stop):
            block[r - start] = np.random.default_rng([seed, r]).standard_normal((n, n))
        sv = np.linalg.svd(block, compute_uv=False) ** 2
        sums += sv.sum(axis=0)
        sq_sums += (sv ** 2).sum(axis=0)
    M = sums / replicates
    var = np.maximum(sq_sums / replicates - M ** 2, 0.0)
    return PseudoDfTable(n=n, M=M, se=np.sqrt(var / replicates),
                         replicates=replicates, seed=seed)


@dataclass(frozen=True)
class AnovaRow:
    source: str
    df: float
    ss: float
    ms: float | None

    def to_dict(self) -> dict:
        return {"source": self.source, "df": self.df, "ss": self.ss, "ms": self.ms}


@dataclass(frozen=True)
class AnovaTable:
    total: AnovaRow
    terms: tuple[AnovaRow, ...]
    error: AnovaRow
    shares: tuple[float, ...]      # per-term share of total SS

    @property
    def mse(self) -> float:
        return float(self.error.ms)

    def to_dict(self) -> dict:
        return {"total": self.total.to_dict(),
                "terms": [t.to_dict() for t in self.terms],
                "error": self.error.to_dict(),
                "shares": list(self.shares)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def to_text(self) -> str:
        rows = [self.total, *self.terms, self.error]
        lines = [f"{'Source':<12}{'DF':>12}{'SS':>14}{'MS':>12}"]
        for r in rows:
            ms = f"{r.ms:12.4f}" if r.ms is not None else " " * 12
            lines.append(f"{r.source:<12}{r.df:>12.2f}{r.ss:>14.4f}{ms}")
        return "\n".join(lines)


def _ordinal(i: int) -> str:
    suffix = {1: "st", 2: "nd", 3: "rd"}.get(i if i < 20 else i % 10, "th")
    return f"{i}{suffix}"


def select_k(spec: Spectrum, threshold: float = 0.90) -> int:
    """Smallest k whose cumulative squared-eigenvalue share reaches the threshold."""
    cum = np.cumsum(spec.squared_share())
    return int(np.searchsorted(cum, threshold - 1e-12) + 1)


def anova(W: np.ndarray, k: int, df: PseudoDfTable) -> AnovaTable:
    """Variance-decomposition table with k retained components.

    Term i carries SS = lambda_i^2 and DF = M_i; the error row pools the
    rest by subtraction, so DFs sum to n^2 and SSs to the total exactly.
    """
    spec = spectrum(W)
    n = spec.n
    if df.n != n:
        raise DfMismatch(f"pseudo-DF table built for n={df.n}, matrix has n={n}")
    if not (1 <= k <= n):
        raise ValueError(f"k must be in 1..{n}, got {k}")
    lam = spec.eigenvalues.copy()
    if lam.min(initial=0.0) < -1e-7:
        raise ValueError(f"matrix has eigenvalue {lam.min():.3e} below the PSD tolerance")
    lam = np.maximum(lam, 0.0)
    total_ss = float((lam ** 2).sum())
    total = AnovaRow("Total", float(n * n), total_ss, None)
    terms = []
    for i in range(1, k + 1):
        ss = float(lam[i - 1] ** 2)
        m = df.term(i)
        terms.append(AnovaRow(f"{_ordinal(i)} term", m, ss, ss / m))
    err_df = float(n * n - sum(t.df for t in terms))
    err_ss = total_ss - sum(t.ss for t in terms)
    error = AnovaRow("Error", err_df, err_ss, err_ss / err_df if err_df > 0 else None)
    shares = tuple(t.ss / total_ss if total_ss else 0.0 for t in terms)
    return AnovaTable(total, tuple(terms), error, shares)


def pca_coords(spec: Spectrum, k: int) -> np.ndarray:
    """Component coordinates u_i * sqrt(lambda_i); the Gram matrix of the
    result is the Frobenius-best rank-k PSD approximation of W."""
    if not (1 <= k <= spec.n):
        raise ValueError(f"k must be in 1..{spec.n}")
    lam = spec.eigenvalues[:k].copy()
    if lam.min(initial=0.0) < -1e-7:
        raise ValueError(f"component eigenvalue {lam.min():.3e} below the PSD tolerance")
    return spec.vectors[:, :k] * np.sqrt(np.maximum(lam, 0.0))
