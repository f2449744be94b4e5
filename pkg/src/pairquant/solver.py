"""Operator-splitting solver for linear objectives over one PSD cone.

The solver alternates exact projection onto the polyhedral part (per-entry
intervals, one trace-style cap row, scalar couplings) with projection onto
the PSD cone, with over-relaxation and dual updates; the penalty parameter
self-adapts by residual balancing.  Infeasibility is never inferred from
divergence: :func:`feasibility_margin` solves an explicit phase-1 problem
whose sign is the verdict.

Supported constraint structure (everything the problem builders emit):

* per-variable boxes,
* rows touching a single matrix entry or a single scalar,
* rows coupling one matrix entry with one scalar (coefficient-scaled),
* one cap row ``sum of diagonal entries (+ scalar) <= rhs``,
* scalar-pair rows ``s_i <= s_j`` and ``s_i + s_j == rhs``.

Anything else raises :class:`UnsupportedConstraint`.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .linalg import psd_project, sym_eig  # noqa: F401  (sym_eig re-exported as the shared kernel)

_BISECT_STEPS = 60


class UnsupportedConstraint(ValueError):
    pass


class SolverError(Exception):
    pass


class IterationLimitError(SolverError):
    def __init__(self, message: str, solution: "ConicSolution | None" = None):
        super().__init__(message)
        self.solution = solution


# --------------------------------------------------------------------------
# problem data model


@dataclass(frozen=True)
class MatrixEntry:
    """Variable reference for W[i, j] (== W[j, i]); normalized to i <= j."""
    i: int
    j: int

    def __post_init__(self):
        if self.i > self.j:
            object.__setattr__(self, "i", self.j)
            object.__setattr__(self, "j", self.i)


@dataclass(frozen=True)
class Scalar:
    k: int


VarRef = MatrixEntry | Scalar


@dataclass(frozen=True)
class LinearConstraint:
    terms: tuple[tuple[VarRef, float], ...]
    sense: str  # one of "<=", "==", ">="
    rhs: float

    def __post_init__(self):
        if not self.terms:
            raise ValueError("constraint needs at least one term")
        if self.sense not in ("<=", "==", ">="):
            raise ValueError(f"bad sense {self.sense!r}")
        for _, c in self.terms:
            if not np.isfinite(c):
                raise ValueError("non-finite coefficient")
        object.__setattr__(self, "terms", tuple(self.terms))


@dataclass
class ConicProblem:
    """Maximize a linear objective subject to linear constraints, boxes and W >= 0 (PSD)."""

    n: int
    scalar_count: int = 0
    objective: list[tuple[VarRef, float]] = field(default_factory=list)
    constraints: list[LinearConstraint] = field(default_factory=list)
    box: dict[VarRef, tuple[float, float]] = field(default_factory=dict)

    def check_refs(self) -> None:
        refs = [r for r, _ in self.objective]
        for c in self.constraints:
            refs.extend(r for r, _ in c.terms)
        refs.extend(self.box)
        for r in refs:
            if isinstance(r, MatrixEntry):
                if not (0 <= r.i <= r.j < self.n):
                    raise ValueError(f"matrix entry {r} out of range for n={self.n}")
            elif isinstance(r, Scalar):
                if not (0 <= r.k < self.scalar_count):
                    raise ValueError(f"scalar {r.k} out of range (count={self.scalar_count})")
            else:
                raise TypeError(f"bad VarRef {r!r}")


@dataclass(frozen=True)
class SolverSettings:
    eps_abs: float = 1e-7
    eps_rel: float = 1e-6
    max_iter: int = 200_000
    rho: float = 1.0              # initial penalty; self-adapting
    alpha: float = 1.6            # over-relaxation
    feas_tol: float = 1e-6        # phase-1 margin below -feas_tol*scale reports infeasible
    accel: bool = True            # momentum with restart (helps thin feasible sets)
    check_every: int = 25
    verbose: bool = False
    trace_every: int = 500

    def __post_init__(self):
        if not (0.0 < self.alpha < 2.0):
            raise ValueError("alpha must lie in (0, 2)")
        for name in ("eps_abs", "eps_rel", "rho", "feas_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


class Status(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    ITERATION_LIMIT = "iteration_limit"


@dataclass
class ConicSolution:
    status: Status
    W: np.ndarray
    scalars: np.ndarray
    objective: float
    primal_residual: float
    dual_residual: float
    max_violation: float
    iterations: int
    stalled: bool = False   # converged at a residual floor (borderline-feasible run)


# --------------------------------------------------------------------------
# constraint analysis


class _Coupled:
    """Entries whose interval depends on scalars: flat cell indices plus
    static bounds and at most one affine bound per side."""

    def __init__(self):
        self.idx: list[int] = []
        self.slo: list[float] = []
        self.shi: list[float] = []
        self.lo_c0: list[float] = []
        self.lo_cf: list[float] = []
        self.lo_k: list[int] = []
        self.hi_c0: list[float] = []
        self.hi_cf: list[float] = []
        self.hi_k: list[int] = []

    def freeze(self):
        for name in ("idx", "lo_k", "hi_k"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.int64))
        for name in ("slo", "shi", "lo_c0", "lo_cf", "hi_c0", "hi_cf"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        return self


class _Structure:
    """Canonicalized problem: static intervals, couplings, cap row, scalar domain."""

    def __init__(self, p: ConicProblem):
        p.check_refs()
        n, ns = p.n, p.scalar_count
        self.n, self.ns = n, ns
        self.stat_lo = np.full((n, n), -np.inf)
        self.stat_hi = np.full((n, n), np.inf)
        self.scal_lo = np.full(ns, -np.inf)
        self.scal_hi = np.full(ns, np.inf)
        # affine bounds keyed by (i, j): [lo(c0, cf, k), hi(c0, cf, k)]
        aff_lo: dict[tuple[int, int], tuple[float, float, int]] = {}
        aff_hi: dict[tuple[int, int], tuple[float, float, int]] = {}
        self.cap = None            # (member_flat_idx array over diag, T0, Tc, Tk)
        self.scal_le: list[tuple[int, int]] = []       # (i, j): s_i <= s_j
        self.scal_eq: list[tuple[int, int, float]] = []  # s_i + s_j == rhs

        for ref, (lo, hi) in p.box.items():
            self._fold_interval(ref, lo, hi)

        for con in p.constraints:
            ent = [(r, c) for r, c in con.terms if isinstance(r, MatrixEntry) and c != 0.0]
            sca = [(r, c) for r, c in con.terms if isinstance(r, Scalar) and c != 0.0]
            if len(ent) == 1 and not sca:
                self._fold_row_single(ent[0], con.sense, con.rhs)
            elif not ent and len(sca) == 1:
                self._fold_row_single(sca[0], con.sense, con.rhs)
            elif len(ent) == 1 and len(sca) == 1:
                self._fold_row_coupled(ent[0], sca[0], con.sense, con.rhs, aff_lo, aff_hi)
            elif not ent and len(sca) == 2:
                self._fold_row_scalar_pair(sca, con.sense, con.rhs)
            elif len(ent) >= 2:
                self._fold_row_cap(ent, sca, con.sense, con.rhs)
            else:
                raise UnsupportedConstraint(f"cannot analyze row {con}")

        self._freeze_coupled(aff_lo, aff_hi)
        self._structural_domain()
        self.rhs_scale = self._rhs_scale()

    # -- row folding ------------------------------------------------------

    def _fold_interval(self, ref: VarRef, lo: float, hi: float) -> None:
        if lo > hi:
            raise UnsupportedConstraint(f"empty box for {ref}")
        if isinstance(ref, MatrixEntry):
            i, j = ref.i, ref.j
            for a, b in ((i, j), (j, i)):
                self.stat_lo[a, b] = max(self.stat_lo[a, b], lo)
                self.stat_hi[a, b] = min(self.stat_hi[a, b], hi)
        else:
            self.scal_lo[ref.k] = max(self.scal_lo[ref.k], lo)
            self.scal_hi[ref.k] = min(self.scal_hi[ref.k], hi)

    def _fold_row_single(self, term, sense, rhs) -> None:
        ref, c = term
        bound = rhs / c
        le = (sense == "<=") if c > 0 else (sense == ">=")
        if sense == "==":
            self._fold_interval(ref, bound, bound)
        elif le:
            self._fold_interval(ref, -np.inf, bound)
        else:
            self._fold_interval(ref, bound, np.inf)

    def _fold_row_coupled(self, ent, sca, sense, rhs, aff_lo, aff_hi) -> None:
        (eref, ce), (sref, cs) = ent, sca
        # ce*w + cs*t <sense> rhs  ->  w <sense'> rhs/ce - (cs/ce) t
        c0, cf = rhs / ce, -cs / ce
        senses = ("<=", ">=") if sense == "==" else (sense,)
        for s in senses:
            upper = (s == "<=") if ce > 0 else (s == ">=")
            target = aff_hi if upper else aff_lo
            key = (eref.i, eref.j)
            if key in target:
                # same-slope bounds merge (the tighter constant wins); bounds
                # with different slopes on one side are not representable
                o0, ocf, ok = target[key]
                if (ocf, ok) != (cf, sref.k):
                    raise UnsupportedConstraint(
                        f"entry {key} has two coupled {'upper' if upper else 'lower'} bounds "
                        "with different slopes")
                c0_merged = min(c0, o0) if upper else max(c0, o0)
                target[key] = (c0_merged, cf, sref.k)
            else:
                target[key] = (c0, cf, sref.k)

    def _fold_row_scalar_pair(self, sca, sense, rhs) -> None:
        (r1, c1), (r2, c2) = sca
        if sense == "==" and c1 == c2 and c1 != 0:
            self.scal_eq.append((r1.k, r2.k, rhs / c1))
            return
        if sense in ("<=", ">=") and abs(c1 + c2) < 1e-15 and rhs == 0.0:
            # c*(s_i - s_j) <= 0 style
            i, j = (r1.k, r2.k) if c1 > 0 else (r2.k, r1.k)
            if sense == ">=":
                i, j = j, i
            self.scal_le.append((i, j))
            return
        raise UnsupportedConstraint("scalar rows must be 's_i <= s_j' or 's_i + s_j == rhs'")

    def _fold_row_cap(self, ent, sca, sense, rhs) -> None:
        if self.cap is not None:
            raise UnsupportedConstraint("only one cap row is supported")
        if sense != "<=":
            raise UnsupportedConstraint("cap row must have sense <=")
        coeff = ent[0][1]
        if coeff <= 0:
            raise UnsupportedConstraint("cap row needs positive coefficients")
        idx = []
        for r, c in ent:
            if c != coeff:
                raise UnsupportedConstraint("cap row needs equal coefficients")
            if r.i != r.j:
                raise UnsupportedConstraint("cap row must cover diagonal entries")
            if r.i in idx:
                raise UnsupportedConstraint("cap row repeats an entry")
            idx.append(r.i)
        T0, Tc, Tk = rhs / coeff, 0.0, -1
        if len(sca) == 1:
            Tc, Tk = -sca[0][1] / coeff, sca[0][0].k
        elif sca:
            raise UnsupportedConstraint("cap row supports at most one scalar term")
        self.cap = (np.asarray(sorted(idx), dtype=np.int64), T0, Tc, Tk)

    # -- finalize -----------------------------------------------------------

    def _freeze_coupled(self, aff_lo, aff_hi) -> None:
        cp = _Coupled()
        n = self.n
        cap_members = set(self.cap[0].tolist()) if self.cap is not None else set()
        diag_coupled = []
        for key in sorted(set(aff_lo) | set(aff_hi)):
            i, j = key
            lo = aff_lo.get(key, (0.0, 0.0, -1))
            hi = aff_hi.get(key, (0.0, 0.0, -1))
            if i == j and i in cap_members:
                # handled jointly with the cap row (phase-1 relaxes both)
                diag_coupled.append((i, lo, hi))
                continue
            cells = ((i, j), (j, i)) if i != j else ((i, i),)
            for a, b in cells:
                cp.idx.append(a * n + b)
                cp.slo.append(self.stat_lo[a, b])
                cp.shi.append(self.stat_hi[a, b])
                cp.lo_c0.append(lo[0]); cp.lo_cf.append(lo[1]); cp.lo_k.append(lo[2])
                cp.hi_c0.append(hi[0]); cp.hi_cf.append(hi[1]); cp.hi_k.append(hi[2])
        self.coupled = cp.freeze()
        self.diag_aff = None
        if diag_coupled:
            los, his = {}, {}
            for i, lo, hi in diag_coupled:
                los[i], his[i] = lo, hi
            if set(los) != cap_members:
                raise UnsupportedConstraint("all cap-row entries must share the coupling")
            cfs = {(los[i][1], los[i][2], his[i][1], his[i][2]) for i in los}
            if len(cfs) != 1:
                raise UnsupportedConstraint("cap-row couplings must share slopes")
            lo_cf, lo_k, hi_cf, hi_k = cfs.pop()
            self.diag_aff = (
                np.array([los[i][0] for i in self.cap[0]]),
                lo_cf, lo_k,
                np.array([his[i][0] for i in self.cap[0]]),
                hi_cf, hi_k,
            )

    def _tighten(self, k: int, alpha: float, beta: float) -> None:
        # require alpha + beta * s_k >= 0 for every feasible s_k
        if k < 0 or beta == 0.0:
            return
        if beta > 0:
            self.scal_lo[k] = max(self.scal_lo[k], -alpha / beta)
        else:
            self.scal_hi[k] = min(self.scal_hi[k], alpha / -beta)

    def _structural_domain(self) -> None:
        """Shrink scalar boxes so every coupled interval (and the cap) stays nonempty."""
        cp = self.coupled
        for t in range(len(cp.idx)):
            lo_k, hi_k = int(cp.lo_k[t]), int(cp.hi_k[t])
            if lo_k >= 0 and np.isfinite(cp.shi[t]):
                self._tighten(lo_k, cp.shi[t] - cp.lo_c0[t], -cp.lo_cf[t])
            if hi_k >= 0 and np.isfinite(cp.slo[t]):
                self._tighten(hi_k, cp.hi_c0[t] - cp.slo[t], cp.hi_cf[t])
            if lo_k >= 0 and hi_k >= 0:
                if lo_k == hi_k:
                    self._tighten(lo_k, cp.hi_c0[t] - cp.lo_c0[t], cp.hi_cf[t] - cp.lo_cf[t])
                elif (lo_k, hi_k) not in [(i, j) for i, j in self.scal_le] \
                        and not any(lo_k in (i, j) and hi_k in (i, j) for i, j, _ in self.scal_eq):
                    raise UnsupportedConstraint(
                        "cross-scalar interval needs a declared ordering between the scalars")
        if self.cap is not None and self.diag_aff is not None:
            members, T0, Tc, Tk = self.cap
            lo_c0, lo_cf, lo_k, hi_c0, hi_cf, hi_k = self.diag_aff
            m = len(members)
            if lo_k >= 0:
                if Tk not in (-1, lo_k):
                    raise UnsupportedConstraint("cap scalar must match the diagonal coupling")
                # sum of lower bounds must stay below the cap
                self._tighten(lo_k, T0 - float(lo_c0.sum()), Tc - m * lo_cf)
                if hi_k == lo_k:
                    gaps = hi_c0 - lo_c0
                    self._tighten(lo_k, float(gaps.min()), hi_cf - lo_cf)

    def _rhs_scale(self) -> float:
        vals = [1.0]
        for arr in (self.stat_lo, self.stat_hi, self.scal_lo, self.scal_hi):
            finite = np.asarray(arr)[np.isfinite(arr)]
            if finite.size:
                vals.append(float(np.abs(finite).max()))
        if self.cap is not None:
            vals.append(abs(self.cap[1]))
        return max(vals)

    # -- interval evaluation ---------------------------------------------

    def coupled_bounds(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        cp = self.coupled
        lo = cp.slo.copy()
        hi = cp.shi.copy()
        has_lo = cp.lo_k >= 0
        has_hi = cp.hi_k >= 0
        if has_lo.any():
            aff = cp.lo_c0[has_lo] + cp.lo_cf[has_lo] * theta[cp.lo_k[has_lo]]
            lo[has_lo] = np.maximum(lo[has_lo], aff)
        if has_hi.any():
            aff = cp.hi_c0[has_hi] + cp.hi_cf[has_hi] * theta[cp.hi_k[has_hi]]
            hi[has_hi] = np.minimum(hi[has_hi], aff)
        return lo, hi

    def diag_bounds(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
        members, T0, Tc, Tk = self.cap
        T = T0 + (Tc * theta[Tk] if Tk >= 0 else 0.0)
        lo = self.stat_lo[members, members].copy()
        hi = self.stat_hi[members, members].copy()
        if self.diag_aff is not None:
            lo_c0, lo_cf, lo_k, hi_c0, hi_cf, hi_k = self.diag_aff
            if lo_k >= 0:
                lo = np.maximum(lo, lo_c0 + lo_cf * theta[lo_k])
            if hi_k >= 0:
                hi = np.minimum(hi, hi_c0 + hi_cf * theta[hi_k])
        return lo, hi, T


# --------------------------------------------------------------------------
# projections


def _waterfill(v: np.ndarray, lo: np.ndarray, hi: np.ndarray, cap: float):
    """Project v onto {lo <= y <= hi, sum(y) <= cap}; returns (y, tau)."""
    y = np.clip(v, lo, hi)
    if y.sum() <= cap or v.size == 0:
        return y, 0.0
    t_lo, t_hi = 0.0, max(float((v - lo).max()), 1e-30)
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (t_lo + t_hi)
        if np.clip(v - mid, lo, hi).sum() > cap:
            t_lo = mid
        else:
            t_hi = mid
    return np.clip(v - t_hi, lo, hi), t_hi


def _wf_envelope_deriv(v, lo, hi, cap, lo_cf, hi_cf, cap_cf):
    """d/ds of the squared distance to the waterfill set when its bounds
    move affinely with a common scalar (slopes lo_cf, hi_cf, cap_cf)."""
    y, tau = _waterfill(v, lo, hi, cap)
    at_lo = y <= lo + 1e-14 * (1.0 + np.abs(lo))
    at_hi = y >= hi - 1e-14 * (1.0 + np.abs(hi))
    interior = ~(at_lo | at_hi)
    d = 2.0 * float(((lo - v)[at_lo]).sum()) * lo_cf \
        - 2.0 * float(((v - hi)[at_hi]).sum()) * hi_cf
    n_int = int(interior.sum())
    if tau > 0.0 and n_int > 0:
        dtau = (at_lo.sum() * lo_cf + at_hi.sum() * hi_cf - cap_cf) / n_int
        d += 2.0 * tau * dtau * n_int
    return d


class _Projector:
    """Exact Euclidean projection onto the polyhedral set of a _Structure."""

    def __init__(self, st: _Structure):
        self.st = st
        ns = st.ns
        if ns > 2:
            raise UnsupportedConstraint("at most two scalar variables are supported")
        self.eq = st.scal_eq[0] if st.scal_eq else None
        if len(st.scal_eq) > 1 or (self.eq and ns != 2):
            raise UnsupportedConstraint("at most one scalar equality between two scalars")
        self.le = st.scal_le[0] if st.scal_le else None
        if len(st.scal_le) > 1:
            raise UnsupportedConstraint("at most one scalar ordering row")
        for k in range(ns):
            if st.scal_lo[k] > st.scal_hi[k] + 1e-12:
                raise UnsupportedConstraint(f"scalar {k} has empty structural domain "
                                            f"[{st.scal_lo[k]}, {st.scal_hi[k]}]")
            if not (np.isfinite(st.scal_lo[k]) and np.isfinite(st.scal_hi[k])):
                raise UnsupportedConstraint(f"scalar {k} needs a finite box")

    # derivative of the squared distance wrt scalar k at scalar vector theta
    def _deriv(self, k: int, theta: np.ndarray, vmat_flat: np.ndarray, vscal: np.ndarray) -> float:
        st = self.st
        cp = st.coupled
        d = 2.0 * (theta[k] - vscal[k])
        if len(cp.idx):
            lo, hi = st.coupled_bounds(theta)
            v = vmat_flat[cp.idx]
            # lanes where scalar k owns the bound AND the affine part is the
            # active (binding) side of the max/min with the static bound
            m_lo = (cp.lo_k == k) & (v < lo) & (cp.lo_c0 + cp.lo_cf * theta[k] >= cp.slo - 1e-15)
            m_hi = (cp.hi_k == k) & (v > hi) & (cp.hi_c0 + cp.hi_cf * theta[k] <= cp.shi + 1e-15)
            if m_lo.any():
                d += 2.0 * float(((lo - v) * cp.lo_cf)[m_lo].sum())
            if m_hi.any():
                d -= 2.0 * float(((v - hi) * cp.hi_cf)[m_hi].sum())
        if st.cap is not None and st.diag_aff is not None:
            members, T0, Tc, Tk = st.cap
            lo_c0, lo_cf, lo_k, hi_c0, hi_cf, hi_k = st.diag_aff
            if k in (lo_k, hi_k, Tk):
                lo, hi, T = st.diag_bounds(theta)
                vd = vmat_flat[members * st.n + members]
                d += _wf_envelope_deriv(vd, lo, hi, T,
                                        lo_cf if lo_k == k else 0.0,
                                        hi_cf if hi_k == k else 0.0,
                                        Tc if Tk == k else 0.0)
        return d

    def _bisect(self, fun, lo: float, hi: float) -> float:
        if fun(lo) >= 0.0:
            return lo
        if fun(hi) <= 0.0:
            return hi
        for _ in range(_BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            if fun(mid) < 0.0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def _solve_theta(self, vmat_flat: np.ndarray, vscal: np.ndarray) -> np.ndarray:
        st = self.st
        ns = st.ns
        if ns == 0:
            return np.zeros(0)
        box_lo, box_hi = st.scal_lo.copy(), st.scal_hi.copy()
        if ns == 1:
            theta = np.zeros(1)

            def f(t):
                theta[0] = t
                return self._deriv(0, theta, vmat_flat, vscal)

            theta[0] = self._bisect(f, box_lo[0], box_hi[0])
            return theta
        # two scalars
        if self.eq is not None:
            i, j, rhs = self.eq
            lo = max(box_lo[i], rhs - box_hi[j])
            hi = min(box_hi[i], rhs - box_lo[j])
            if self.le is not None:
                a, b = self.le
                # s_a <= s_b with s_j = rhs - s_i
                if (a, b) == (i, j):
                    hi = min(hi, rhs / 2.0)
                elif (a, b) == (j, i):
                    lo = max(lo, rhs / 2.0)
            theta = np.zeros(2)

            def f(t):
                theta[i] = t
                theta[j] = rhs - t
                return self._deriv(i, theta, vmat_flat, vscal) - self._deriv(j, theta, vmat_flat, vscal)

            t = self._bisect(f, lo, hi)
            theta[i], theta[j] = t, rhs - t
            return theta
        # independent minimization, then tie-break on the ordering row
        theta = np.zeros(2)

        def f_k(k):
            def f(t):
                theta[k] = t
                return self._deriv(k, theta, vmat_flat, vscal)
            return f

        for k in range(2):
            theta[k] = self._bisect(f_k(k), box_lo[k], box_hi[k])
        if self.le is not None:
            a, b = self.le
            if theta[a] > theta[b]:
                lo = max(box_lo[a], box_lo[b])
                hi = min(box_hi[a], box_hi[b])

                def g(t):
                    theta[a] = theta[b] = t
                    return (self._deriv(a, theta, vmat_flat, vscal)
                            + self._deriv(b, theta, vmat_flat, vscal))

                t = self._bisect(g, lo, hi)
                theta[a] = theta[b] = t
        return theta

    def project(self, vmat: np.ndarray, vscal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        st = self.st
        flat = vmat.ravel()
        theta = self._solve_theta(flat, vscal)
        x = np.clip(vmat, st.stat_lo, st.stat_hi)
        xf = x.ravel()
        cp = st.coupled
        if len(cp.idx):
            lo, hi = st.coupled_bounds(theta)
            xf[cp.idx] = np.clip(flat[cp.idx], lo, hi)
        if st.cap is not None:
            members = st.cap[0]
            lo, hi, T = st.diag_bounds(theta)
            y, _ = _waterfill(flat[members * st.n + members], lo, hi, T)
            xf[members * st.n + members] = y
        return xf.reshape(st.n, st.n), theta

    def max_violation(self, W: np.ndarray, theta: np.ndarray) -> float:
        st = self.st
        flat = W.ravel()
        viol = max(0.0, float((st.stat_lo - W).max(initial=0.0)), float((W - st.stat_hi).max(initial=0.0)))
        cp = st.coupled
        if len(cp.idx):
            lo, hi = st.coupled_bounds(theta)
            v = flat[cp.idx]
            viol = max(viol, float((lo - v).max(initial=0.0)), float((v - hi).max(initial=0.0)))
        if st.cap is not None:
            members = st.cap[0]
            lo, hi, T = st.diag_bounds(theta)
            vd = flat[members * st.n + members]
            viol = max(viol, float((lo - vd).max(initial=0.0)), float((vd - hi).max(initial=0.0)),
                       float(vd.sum() - T))
        return viol


# --------------------------------------------------------------------------
# ADMM driver


def _objective_arrays(p: ConicProblem) -> tuple[np.ndarray, np.ndarray]:
    Q = np.zeros((p.n, p.n))
    qs = np.zeros(p.scalar_count)
    for ref, c in p.objective:
        if isinstance(ref, MatrixEntry):
            if ref.i == ref.j:
                Q[ref.i, ref.i] += c
            else:
                Q[ref.i, ref.j] += 0.5 * c
                Q[ref.j, ref.i] += 0.5 * c
        else:
            qs[ref.k] += c
    return Q, qs


def solve(p: ConicProblem, settings: SolverSettings | None = None) -> ConicSolution:
    """Maximize the problem objective by consensus splitting between the
    polyhedral set and the PSD cone.

    Deterministic for fixed inputs and settings.  Never reports
    infeasibility (see :func:`feasibility_margin`); a run that cannot reach
    the tolerances within ``max_iter`` returns the best iterate with status
    ITERATION_LIMIT.
    """
    s = settings or SolverSettings()
    st = _Structure(p)
    proj = _Projector(st)
    Q, qs = _objective_arrays(p)
    n, ns = p.n, p.scalar_count
    N = n * n + ns
    sqrtN = np.sqrt(N)

    rho = s.rho
    Z = np.zeros((n, n))
    zs = np.zeros(ns)
    U = np.zeros((n, n))
    us = np.zeros(ns)
    # momentum state: the hatted variables feed the next x-update
    Zh_m, zsh_m, Uh_m, ush_m = Z, zs, U, us
    a_k = 1.0
    c_old = np.inf
    X, xs = Z, zs
    r_norm = d_norm = viol = np.inf
    it = 0
    converged = False
    stalled = False
    history: list[float] = []     # primal residuals at check points
    stall_checks = 40             # one window = stall_checks * check_every iterations

    if s.verbose:
        print("iter,rho,primal_residual,dual_residual,max_violation,objective", file=sys.stderr)

    for it in range(1, s.max_iter + 1):
        X, theta = proj.project(Zh_m - Uh_m + Q / rho, zsh_m - ush_m + qs / rho)
        xs = theta
        Xh = s.alpha * X + (1.0 - s.alpha) * Zh_m
        xsh = s.alpha * xs + (1.0 - s.alpha) * zsh_m
        Z_old, zs_old = Z, zs
        U_old, us_old = U, us
        Z = psd_project(Xh + Uh_m)
        zs = xsh + ush_m
        U = Uh_m + Xh - Z
        us = ush_m + xsh - zs

        if s.accel:
            c_new = float(((U - Uh_m) ** 2).sum() + ((us - ush_m) ** 2).sum()
                          + ((Z - Zh_m) ** 2).sum() + ((zs - zsh_m) ** 2).sum())
            if c_new < 0.999 * c_old:
                a_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * a_k * a_k))
                beta = (a_k - 1.0) / a_next
                Zh_m = Z + beta * (Z - Z_old)
                zsh_m = zs + beta * (zs - zs_old)
                Uh_m = U + beta * (U - U_old)
                ush_m = us + beta * (us - us_old)
                a_k = a_next
                c_old = c_new
            else:  # restart momentum from the last plain iterate
                a_k = 1.0
                Zh_m, zsh_m, Uh_m, ush_m = Z_old, zs_old, U_old, us_old
                c_old = c_old / 0.999
        else:
            Zh_m, zsh_m, Uh_m, ush_m = Z, zs, U, us

        if it % s.check_every == 0 or it == s.max_iter:
            r_norm = np.sqrt(((X - Z) ** 2).sum() + ((xs - zs) ** 2).sum())
            d_norm = rho * np.sqrt(((Z - Z_old) ** 2).sum() + ((zs - zs_old) ** 2).sum())
            eps_pri = sqrtN * s.eps_abs + s.eps_rel * max(
                np.sqrt((X ** 2).sum() + (xs ** 2).sum()),
                np.sqrt((Z ** 2).sum() + (zs ** 2).sum()))
            eps_dua = sqrtN * s.eps_abs + s.eps_rel * rho * np.sqrt((U ** 2).sum() + (us ** 2).sum())
            viol = proj.max_violation(Z, xs)
            feas_ok = viol <= s.eps_abs + s.eps_rel * st.rhs_scale
            if s.verbose and it % s.trace_every == 0:
                obj = float((Q * Z).sum() + qs @ xs)
                print(f"{it},{rho:.3e},{r_norm:.3e},{d_norm:.3e},{viol:.3e},{obj:.10f}", file=sys.stderr)
            if r_norm <= eps_pri and d_norm <= eps_dua and feas_ok:
                converged = True
                break
            # Borderline problems (run deliberately at the feasibility border)
            # floor the consensus residual at the gap between the two sets even
            # though the PSD iterate already satisfies every constraint within
            # tolerance.  Accept the floor once progress stops.
            history.append(float(r_norm))
            if len(history) > stall_checks:
                progress = history[-stall_checks - 1] - r_norm
                if (feas_ok and progress <= 0.01 * r_norm
                        and r_norm <= 100.0 * eps_pri
                        and d_norm <= r_norm + eps_dua):
                    converged = True
                    stalled = True
                    break
            rho_new = rho
            if r_norm > 10.0 * d_norm and rho < 1e7:
                rho_new = rho * 2.0
                U = U / 2.0
                us = us / 2.0
            elif d_norm > 10.0 * r_norm and rho > 1e-5:
                rho_new = rho / 2.0
                U = U * 2.0
                us = us * 2.0
            if rho_new != rho:
                rho = rho_new
                a_k = 1.0
                c_old = np.inf
                Zh_m, zsh_m, Uh_m, ush_m = Z, zs, U, us

    objective = float((Q * Z).sum() + qs @ xs)
    if s.verbose:
        print(f"{it},{rho:.3e},{r_norm:.3e},{d_norm:.3e},{viol:.3e},{objective:.10f}", file=sys.stderr)
    return ConicSolution(status=Status.OPTIMAL if converged else Status.ITERATION_LIMIT,
                         W=Z, scalars=xs.copy(), objective=objective,
                         primal_residual=float(r_norm), dual_residual=float(d_norm),
                         max_violation=float(viol), iterations=it, stalled=stalled)


def feasibility_margin(p: ConicProblem, settings: SolverSettings | None = None) -> float:
    """Largest uniform slack by which every linear constraint of ``p`` can be
    tightened while staying feasible (PSD kept exact).

    Positive margin: strictly feasible.  Margin below ``-feas_tol * scale``:
    report the problem infeasible.  Only defined for problems without scalar
    variables.
    """
    if p.scalar_count:
        raise UnsupportedConstraint("feasibility_margin expects a problem without scalar variables")
    s_ref = Scalar(0)
    probe = ConicProblem(n=p.n, scalar_count=1, objective=[(s_ref, 1.0)])
    bound = 1.0
    for ref, (lo, hi) in p.box.items():
        for val, sense in ((lo, ">="), (hi, "<=")):
            if np.isfinite(val):
                sgn = 1.0 if sense == "<=" else -1.0
                probe.constraints.append(LinearConstraint(((ref, 1.0), (s_ref, sgn)), sense, val))
                bound = max(bound, abs(val))
    for con in p.constraints:
        sgn = {"<=": 1.0, ">=": -1.0}.get(con.sense)
        if sgn is None:
            raise UnsupportedConstraint("phase-1 cannot relax equality rows")
        probe.constraints.append(LinearConstraint(con.terms + ((s_ref, sgn),), con.sense, con.rhs))
        bound = max(bound, abs(con.rhs))
    probe.box[s_ref] = (-10.0 * bound, 10.0 * bound)
    sol = solve(probe, settings)
    if sol.status is Status.ITERATION_LIMIT:
        raise IterationLimitError("phase-1 feasibility solve hit the iteration limit", sol)
    return float(sol.scalars[0])
