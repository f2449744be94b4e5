"""Bundled classification datasets.

Two published classification tables (amino-acid contact propensities and
drug-combination indices, both coded low/moderate/high) plus a synthetic
image-grid similarity generator (elevation x azimuth cells, neighbors
similar, azimuth wrapping around).
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import ClassificationMatrix

# Contact-propensity classes for 13 amino-acid residues; codes are the
# lower triangle, row by row (-1 low, 0 moderate, 1 high).  Thresholds in
# the source study: 0.8 / 1.2.
_RESIDUE_LABELS = ("A", "C", "D", "E", "G", "H", "I", "K", "L", "M", "N", "Q", "R")
_RESIDUE_CODES = [
    [],
    [0],
    [-1, 0],
    [-1, 0, -1],
    [0, 0, -1, 1],
    [0, 0, -1, 0, -1],
    [0, 0, 0, 0, 0, 1],
    [1, 0, 1, -1, 0, 0, 0],
    [0, 0, -1, 0, 0, -1, 0, 0],
    [0, 0, -1, 1, -1, 1, 1, -1, -1],
    [0, 0, -1, -1, -1, 1, 1, 0, -1, 0],
    [0, 0, 1, 0, -1, 1, 0, -1, 0, 0, 1],
    [0, 0, -1, 0, 0, -1, 0, -1, 0, 0, -1, 1],
]

# Combination-index classes for 13 drugs (-1 synergistic, 0 additive,
# 1 antagonistic); thresholds 0.4584 / 1.9739.
_DRUG_LABELS = ("DYC", "FEN", "HAL", "PEN", "TAC", "TER", "LAT",
                "BEN", "STA", "RAP", "TUN", "CAL", "BRO")
_DRUG_CODES = [
    [],
    [1],
    [1, 0],
    [-1, -1, -1],
    [0, -1, -1, -1],
    [-1, -1, -1, -1, -1],
    [-1, -1, -1, -1, -1, -1],
    [1, 0, 0, -1, -1, 0, 1],
    [-1, -1, -1, -1, -1, -1, 1, 1],
    [0, -1, 0, 0, 1, -1, 0, 0, 0],
    [1, 1, 1, 0, 0, 0, 0, 0, 0, 1],
    [-1, -1, -1, -1, 0, -1, 1, 1, 1, 1, 0],
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
]


def table1() -> ClassificationMatrix:
    """13 amino-acid residues, ternary contact-propensity classes."""
    return ClassificationMatrix.from_codes(_RESIDUE_LABELS, _RESIDUE_CODES)


def table2() -> ClassificationMatrix:
    """13 drugs, ternary combination-index classes."""
    return ClassificationMatrix.from_codes(_DRUG_LABELS, _DRUG_CODES)


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    """Image-grid layout: elevation levels x azimuth steps."""
    elevations: int = 5
    azimuths: int = 18
    wrap_azimuth: bool = True
    eight_neighborhood: bool = False   # also treat diagonal cells as similar

    def __post_init__(self):
        if self.elevations < 2:
            raise SpecError("need at least 2 elevation levels")
        if self.azimuths < 3:
            raise SpecError("need at least 3 azimuth steps")


def imaging(spec: GridSpec = GridSpec()) -> ClassificationMatrix:
    """Binary similar/dissimilar classification of grid cells.

    A pair is similar (class above) iff the cells are immediate row
    neighbors (same azimuth, adjacent elevation) or immediate column
    neighbors (same elevation, adjacent azimuth, first and last azimuth
    adjacent when wrapping); every other pair is dissimilar (below).
    The optional eight-neighborhood flag also marks diagonal cells similar.
    """
    E, A = spec.elevations, spec.azimuths

    def idx(e: int, a: int) -> int:
        return e * A + a

    labels = tuple(f"e{e + 1}a{a:02d}" for e in range(E) for a in range(A))
    similar: set[tuple[int, int]] = set()

    def mark(u: int, v: int) -> None:
        similar.add((min(u, v), max(u, v)))

    for e in range(E):
        for a in range(A):
            if e + 1 < E:
                mark(idx(e, a), idx(e + 1, a))
            nxt = (a + 1) % A
            if a + 1 < A or spec.wrap_azimuth:
                mark(idx(e, a), idx(e, nxt))
            if spec.eight_neighborhood:
                for da in (-1, 1):
                    aa = a + da
                    if spec.wrap_azimuth:
                        aa %= A
                    if 0 <= aa < A and e + 1 < E:
                        mark(idx(e, a), idx(e + 1, aa))
    n = E * A
    codes = [[1 if (j, i) in similar else -1 for j in range(i)] for i in range(n)]
    return ClassificationMatrix.from_codes(labels, codes)


_BUILTIN = {"table1": table1, "table2": table2, "imaging": imaging}


def builtin(name: str) -> ClassificationMatrix:
    try:
        return _BUILTIN[name]()
    except KeyError:
        raise KeyError(f"unknown dataset {name!r}; have {sorted(_BUILTIN)}") from None
