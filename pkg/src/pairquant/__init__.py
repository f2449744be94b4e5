"""pairquant: continuous pairwise interaction values from ternary pair classes.

Classify every pair of objects as below / within / above an interaction
interval (plus an optional free class), and the package recovers a positive
semidefinite interaction matrix maximizing the separation between the two
outer classes, then decomposes it spectrally.
"""

from .datasets import GridSpec, imaging, table1, table2
from .linalg import NotSymmetric, psd_project, sym_eig
from .model import (ClassificationMatrix, ConfigError, KnownBounds, PairClass, ParseError,
                    QqrConfig, Restriction, UnknownBounds, ValidationError, delta_of,
                    parse_classification, serialize_classification, validate)
from .qqr import (BracketError, InfeasibleError, QqrResult, build_problem, correlations,
                  pair_objective, quantify, result_from_json, result_to_json, scale_solution,
                  scan_min_R)
from .solver import (ConicProblem, ConicSolution, IterationLimitError, LinearConstraint,
                     MatrixEntry, Scalar, SolverSettings, Status, feasibility_margin, solve)
from .spectral import (AnovaTable, DfMismatch, PseudoDfTable, Spectrum, anova, mc_pseudo_df,
                       pca_coords, select_k, spectrum)

__version__ = "0.1.0"

__all__ = [
    "AnovaTable", "BracketError", "ClassificationMatrix", "ConfigError", "ConicProblem",
    "ConicSolution", "DfMismatch", "GridSpec", "InfeasibleError", "IterationLimitError",
    "KnownBounds", "LinearConstraint", "MatrixEntry", "NotSymmetric", "PairClass",
    "ParseError", "PseudoDfTable", "QqrConfig", "QqrResult", "Restriction", "Scalar",
    "SolverSettings", "Spectrum", "Status", "UnknownBounds", "ValidationError",
    "anova", "build_problem", "correlations", "delta_of", "feasibility_margin", "imaging",
    "mc_pseudo_df", "pair_objective", "parse_classification", "pca_coords", "psd_project",
    "quantify", "result_from_json", "result_to_json", "scale_solution", "scan_min_R",
    "select_k", "serialize_classification", "solve", "spectrum", "sym_eig", "table1",
    "table2", "validate",
]
