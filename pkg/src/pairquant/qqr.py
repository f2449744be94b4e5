"""Build and solve quantification programs from pair classifications.

The recovered matrix W holds one continuous interaction value per pair,
maximizing the sign-weighted separation between the below and above
classes subject to the class intervals, the value box [0, R], the trace
budget and positive semidefiniteness.  With unknown thresholds the
interval endpoints join the program as variables.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .model import (ClassificationMatrix, ConfigError, KnownBounds, PairClass, QqrConfig,
                    Restriction, UnknownBounds, delta_of, require_valid)
from .solver import (ConicProblem, ConicSolution, IterationLimitError, LinearConstraint,
                     MatrixEntry, Scalar, SolverSettings, Status, feasibility_margin, solve)


class QqrError(Exception):
    pass


class InfeasibleError(QqrError):
    def __init__(self, margin: float, R: float):
        super().__init__(f"no PSD matrix satisfies the class constraints at R={R} "
                         f"(phase-1 margin {margin:.3e}); try a larger R or scan_min_R")
        self.margin = margin
        self.R = R


class BracketError(QqrError):
    pass


@dataclass(frozen=True)
class BoundaryReport:
    at_lower: int     # pairs within tol of a*
    at_upper: int     # pairs within tol of b*
    tol: float

    def to_dict(self) -> dict:
        return {"at_lower": self.at_lower, "at_upper": self.at_upper, "tol": self.tol}


@dataclass(frozen=True)
class QqrResult:
    labels: tuple[str, ...]
    W: np.ndarray
    a_star: float
    b_star: float
    R: float
    objective: float
    status: str
    boundary_report: BoundaryReport
    solution: ConicSolution | None = None
    margin: float | None = None

    @property
    def n(self) -> int:
        return len(self.labels)

    def value(self, i: int, j: int) -> float:
        return float(self.W[i, j])


def build_problem(data: ClassificationMatrix, config: QqrConfig) -> ConicProblem:
    """Translate a classification into the conic program.

    The objective counts every ordered pair, so each unordered pair carries
    coefficient 2*delta; with unknown bounds the width term (b - a) enters
    once.  Within-class intervals are closed: solvers cannot represent open
    sets and boundary contact is expected behavior.
    """
    require_valid(data)
    config.check()
    n = data.n
    R = config.resolved_R()
    p = ConicProblem(n=n)
    for i in range(n):
        for j in range(i, n):
            p.box[MatrixEntry(i, j)] = (0.0, R)
    p.constraints.append(LinearConstraint(
        tuple((MatrixEntry(i, i), 1.0) for i in range(n)), "<=", n * R))

    unknown = isinstance(config.bounds, UnknownBounds)
    if unknown:
        p.scalar_count = 2
        a_ref, b_ref = Scalar(0), Scalar(1)
        p.box[a_ref] = (0.0, R)
        p.box[b_ref] = (0.0, R)
        p.constraints.append(LinearConstraint(((a_ref, 1.0), (b_ref, -1.0)), "<=", 0.0))
        if config.bounds.restriction is Restriction.SUM_EQUALS_R:
            p.constraints.append(LinearConstraint(((a_ref, 1.0), (b_ref, 1.0)), "==", R))
        p.objective.append((b_ref, 1.0))
        p.objective.append((a_ref, -1.0))
    else:
        a_val, b_val = config.bounds.a, config.bounds.b

    for (i, j), pc in sorted(data.classes.items()):
        ref = MatrixEntry(i, j)
        delta = delta_of(pc)
        if delta:
            p.objective.append((ref, 2.0 * delta))
        if pc is PairClass.FREE:
            continue
        if unknown:
            if pc is PairClass.BELOW:
                p.constraints.append(LinearConstraint(((ref, 1.0), (a_ref, -1.0)), "<=", 0.0))
            elif pc is PairClass.ABOVE:
                p.constraints.append(LinearConstraint(((ref, 1.0), (b_ref, -1.0)), ">=", 0.0))
            else:
                p.constraints.append(LinearConstraint(((ref, 1.0), (a_ref, -1.0)), ">=", 0.0))
                p.constraints.append(LinearConstraint(((ref, 1.0), (b_ref, -1.0)), "<=", 0.0))
        else:
            if pc is PairClass.BELOW:
                p.constraints.append(LinearConstraint(((ref, 1.0),), "<=", a_val))
            elif pc is PairClass.ABOVE:
                p.constraints.append(LinearConstraint(((ref, 1.0),), ">=", b_val))
            else:
                p.constraints.append(LinearConstraint(((ref, 1.0),), ">=", a_val))
                p.constraints.append(LinearConstraint(((ref, 1.0),), "<=", b_val))
    return p


def pair_objective(data: ClassificationMatrix, W: np.ndarray) -> float:
    """Sign-weighted interaction sum over ordered pairs (each pair twice)."""
    total = 0.0
    for (i, j), pc in data.classes.items():
        total += 2.0 * delta_of(pc) * W[i, j]
    return float(total)


def _boundary_report(data: ClassificationMatrix, W: np.ndarray, a: float, b: float,
                     R: float) -> BoundaryReport:
    tol = 1e-3 * R
    lo = hi = 0
    for (i, j) in data.classes:
        w = W[i, j]
        if abs(w - a) <= tol:
            lo += 1
        if abs(w - b) <= tol:
            hi += 1
    return BoundaryReport(lo, hi, tol)


def quantify(data: ClassificationMatrix, config: QqrConfig) -> QqrResult:
    """Validate, gate on phase-1 feasibility, solve, and package the result.

    Raises InfeasibleError when the phase-1 margin certifies the constraint
    system empty beyond solver tolerance, and IterationLimitError (with the
    partial result attached) when the solver runs out of iterations.
    """
    settings = config.settings or SolverSettings()
    problem = build_problem(data, config)
    R = config.resolved_R()
    margin = None
    if isinstance(config.bounds, KnownBounds):
        margin = feasibility_margin(problem, settings)
        # accept borderline negatives consistent with the solve's own
        # feasibility tolerance, not just feas_tol: quantification is run
        # deliberately near the feasibility border
        scale = max(1.0, float(data.n * R))
        if margin < -(settings.feas_tol + settings.eps_rel * scale):
            raise InfeasibleError(margin, R)
    sol = solve(problem, settings)
    if isinstance(config.bounds, KnownBounds):
        a_star, b_star = config.bounds.a, config.bounds.b
    else:
        a_star, b_star = float(sol.scalars[0]), float(sol.scalars[1])
    objective = pair_objective(data, sol.W)
    if not isinstance(config.bounds, KnownBounds):
        objective += b_star - a_star
    result = QqrResult(labels=data.labels, W=sol.W, a_star=a_star, b_star=b_star, R=R,
                       objective=objective, status=sol.status.value,
                       boundary_report=_boundary_report(data, sol.W, a_star, b_star, R),
                       solution=sol, margin=margin)
    if sol.status is Status.ITERATION_LIMIT:
        raise IterationLimitError(
            f"solver stopped after {sol.iterations} iterations "
            f"(primal {sol.primal_residual:.2e}, dual {sol.dual_residual:.2e})", result)
    return result


def scan_min_R(data: ClassificationMatrix, a: float, b: float,
               search: tuple[float, float], tol_R: float = 1e-4,
               settings: SolverSettings | None = None) -> dict:
    """Bisect for the smallest R whose constraint system is feasible.

    The caller supplies a bracket with an infeasible low end and a feasible
    high end; returns the border R, a recommended operating point slightly
    above it, and the endpoint margins.
    """
    require_valid(data)
    settings = settings or SolverSettings()
    R_lo, R_hi = search
    if not (0 < R_lo < R_hi):
        raise BracketError(f"need 0 < R_lo < R_hi, got {search}")

    def margin_at(R: float) -> float:
        cfg = QqrConfig(KnownBounds(a, b), R=R)
        if R < b:
            return -np.inf   # above-class demands w >= b > R: box conflict
        return feasibility_margin(build_problem(data, cfg), settings)

    m_lo, m_hi = margin_at(R_lo), margin_at(R_hi)
    if m_lo >= 0:
        raise BracketError(f"R_lo={R_lo} is already feasible (margin {m_lo:.3e}); widen the bracket down")
    if m_hi < 0:
        raise BracketError(f"R_hi={R_hi} is still infeasible (margin {m_hi:.3e}); widen the bracket up")
    evaluations = 2
    while R_hi - R_lo > tol_R:
        mid = 0.5 * (R_lo + R_hi)
        if margin_at(mid) >= 0:
            R_hi = mid
        else:
            R_lo = mid
        evaluations += 1
    return {"R_border": R_hi, "R_recommended": R_hi * (1.0 + 1e-3),
            "margin_lo": m_lo, "margin_hi": m_hi, "evaluations": evaluations,
            "bracket": [R_lo, R_hi], "tol_R": tol_R}


def correlations(result: QqrResult) -> np.ndarray:
    """Interaction values rescaled by the range: entries live in [0, 1]."""
    return result.W / result.R


def scale_solution(result: QqrResult, gamma: float) -> QqrResult:
    """Rescale a solution to the range gamma*R; every constraint transfers."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return replace(result,
                   W=gamma * result.W,
                   a_star=gamma * result.a_star,
                   b_star=gamma * result.b_star,
                   R=gamma * result.R,
                   objective=gamma * result.objective,
                   boundary_report=replace(result.boundary_report, tol=gamma * result.boundary_report.tol),
                   solution=None,
                   margin=None if result.margin is None else gamma * result.margin)


# --------------------------------------------------------------------------
# serialization


def result_to_dict(result: QqrResult, manifest: dict | None = None) -> dict:
    doc = {
        "labels": list(result.labels),
        "W": [float(x) for x in result.W.ravel()],
        "a_star": result.a_star,
        "b_star": result.b_star,
        "R": result.R,
        "objective": result.objective,
        "status": result.status,
        "boundary_report": result.boundary_report.to_dict(),
    }
    if result.margin is not None:
        doc["margin"] = result.margin
    if manifest is not None:
        doc["manifest"] = manifest
    return doc


def result_to_json(result: QqrResult, manifest: dict | None = None) -> str:
    return json.dumps(result_to_dict(result, manifest), indent=1)


def result_from_json(text: str) -> QqrResult:
    doc = json.loads(text)
    labels = tuple(doc["labels"])
    n = len(labels)
    W = np.asarray(doc["W"], dtype=float).reshape(n, n)
    br = doc["boundary_report"]
    return QqrResult(labels=labels, W=W, a_star=doc["a_star"], b_star=doc["b_star"],
                     R=doc["R"], objective=doc["objective"], status=doc["status"],
                     boundary_report=BoundaryReport(br["at_lower"], br["at_upper"], br["tol"]),
                     margin=doc.get("margin"))
