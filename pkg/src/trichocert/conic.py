"""Small second-order-cone programs.

A :class:`ConicProgram` minimizes a linear objective over real variables
subject to linear equalities, linear inequalities, per-variable bounds and
second-order cones ``||A v + b|| <= c.v + d``. Every qubit positivity
constraint ``0 <= F <= c*1`` is a pair of such cones in Bloch coordinates,
so this is all the optimization machinery the package needs.

The numerical work is delegated to the Clarabel interior-point solver; the
rest of the package only talks to :func:`solve` and
:func:`max_violation_relaxation`, so another backend can be dropped in here.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

import clarabel

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_FAILURE = "numerical_failure"

# lower limit on the shared slack so strictly feasible problems stay bounded
SLACK_FLOOR = -1.0


class SolverError(RuntimeError):
    """Raised when a solve ends in ``numerical_failure`` and the caller needs a verdict."""


@dataclass
class SecondOrderCone:
    """The constraint ``||A v + b||_2 <= c.v + d``."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float = 0.0

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        self.d = float(self.d)
        if self.A.shape[0] < 1 or self.A.shape[0] != self.b.shape[0]:
            raise ValueError("cone needs k >= 1 rows and len(b) == k")

    def violation(self, v: np.ndarray) -> float:
        return float(np.linalg.norm(self.A @ v + self.b) - (self.c @ v + self.d))


@dataclass
class ConicProgram:
    """Linear objective, linear (in)equalities, bounds and second-order cones.

    Parameters
    ----------
    n_vars : int
        Number of real variables.
    objective : array of shape (n_vars,), optional
        Minimize ``objective . v``. ``None`` means a pure feasibility problem.
    equalities : list of (row, rhs)
        ``row . v == rhs``.
    inequalities : list of (row, rhs)
        ``row . v <= rhs``.
    cones : list of SecondOrderCone
    bounds : list of (lo, hi), optional
        Per-variable intervals; use ``-inf``/``inf`` for open ends.
    """

    n_vars: int
    objective: Optional[np.ndarray] = None
    equalities: list = field(default_factory=list)
    inequalities: list = field(default_factory=list)
    cones: list = field(default_factory=list)
    bounds: Optional[list] = None

    def __post_init__(self):
        n = self.n_vars
        if self.objective is not None:
            self.objective = np.asarray(self.objective, dtype=float).reshape(-1)
            if self.objective.shape != (n,):
                raise ValueError("objective has wrong length")
        for row, _ in list(self.equalities) + list(self.inequalities):
            if np.shape(row) != (n,):
                raise ValueError("constraint row has wrong length")
        for cone in self.cones:
            if cone.A.shape[1] != n or cone.c.shape != (n,):
                raise ValueError("cone dimensions inconsistent with n_vars")
        if self.bounds is not None and len(self.bounds) != n:
            raise ValueError("bounds must list one interval per variable")

    def add_equality(self, row, rhs):
        self.equalities.append((np.asarray(row, dtype=float), float(rhs)))

    def add_inequality(self, row, rhs):
        self.inequalities.append((np.asarray(row, dtype=float), float(rhs)))

    def add_cone(self, A, b, c, d=0.0):
        self.cones.append(SecondOrderCone(A, b, c, d))

    @property
    def n_constraints(self) -> int:
        nb = 0
        if self.bounds is not None:
            nb = sum(np.isfinite(lo) + np.isfinite(hi) for lo, hi in self.bounds)
        return len(self.equalities) + len(self.inequalities) + len(self.cones) + int(nb)

    def max_violation(self, v) -> float:
        """Largest violation of any constraint at ``v`` (0 if all hold)."""
        v = np.asarray(v, dtype=float)
        worst = 0.0
        for row, rhs in self.equalities:
            worst = max(worst, abs(row @ v - rhs))
        for row, rhs in self.inequalities:
            worst = max(worst, row @ v - rhs)
        for cone in self.cones:
            worst = max(worst, cone.violation(v))
        if self.bounds is not None:
            for vi, (lo, hi) in zip(v, self.bounds):
                worst = max(worst, lo - vi, vi - hi)
        return float(worst)

    def dump(self) -> str:
        """Plain-text listing, one constraint per line, for cross-checking elsewhere."""
        out = io.StringIO()
        fmt = lambda a: " ".join(f"{x:.17g}" for x in np.ravel(a))
        out.write(f"vars {self.n_vars}\n")
        if self.objective is not None:
            out.write(f"min {fmt(self.objective)}\n")
        for row, rhs in self.equalities:
            out.write(f"eq {fmt(row)} = {rhs:.17g}\n")
        for row, rhs in self.inequalities:
            out.write(f"le {fmt(row)} <= {rhs:.17g}\n")
        for cone in self.cones:
            k = cone.A.shape[0]
            out.write(f"soc k={k} A {fmt(cone.A)} b {fmt(cone.b)} c {fmt(cone.c)} d {cone.d:.17g}\n")
        if self.bounds is not None:
            for i, (lo, hi) in enumerate(self.bounds):
                if np.isfinite(lo) or np.isfinite(hi):
                    out.write(f"bound {i} {lo:.17g} {hi:.17g}\n")
        return out.getvalue()


@dataclass
class SolverResult:
    status: str
    v: Optional[np.ndarray]
    objective_value: float
    certified_gap: float
    infeasibility: Optional[float] = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _assemble(p: ConicProgram):
    """Translate to Clarabel's ``A v + s = b, s in K`` form."""
    n = p.n_vars
    rows, rhs, cones = [], [], []

    if p.equalities:
        rows.append(np.array([r for r, _ in p.equalities]))
        rhs.append(np.array([b for _, b in p.equalities]))
        cones.append(clarabel.ZeroConeT(len(p.equalities)))

    lin_rows = [r for r, _ in p.inequalities]
    lin_rhs = [b for _, b in p.inequalities]
    if p.bounds is not None:
        eye = np.eye(n)
        for i, (lo, hi) in enumerate(p.bounds):
            if np.isfinite(lo):
                lin_rows.append(-eye[i])
                lin_rhs.append(-lo)
            if np.isfinite(hi):
                lin_rows.append(eye[i])
                lin_rhs.append(hi)
    if lin_rows:
        rows.append(np.array(lin_rows))
        rhs.append(np.array(lin_rhs, dtype=float))
        cones.append(clarabel.NonnegativeConeT(len(lin_rows)))

    for cone in p.cones:
        rows.append(-cone.c[None, :])
        rhs.append(np.array([cone.d]))
        rows.append(-cone.A)
        rhs.append(cone.b)
        cones.append(clarabel.SecondOrderConeT(cone.A.shape[0] + 1))

    if rows:
        A = sp.csc_matrix(np.vstack(rows))
        b = np.concatenate(rhs)
    else:
        A = sp.csc_matrix((0, n))
        b = np.zeros(0)
    return A, b, cones


# tried in order until the returned point passes the feasibility and gap checks
_FALLBACKS = ({}, {"max_step_fraction": 0.9}, {"max_step_fraction": 0.8, "equilibrate_enable": False})


def _settings(tol: float, max_iter: int, **overrides):
    s = clarabel.DefaultSettings()
    s.verbose = False
    s.max_iter = max_iter
    s.tol_feas = tol
    s.tol_gap_abs = tol
    s.tol_gap_rel = tol
    s.tol_infeas_abs = tol
    s.tol_infeas_rel = tol
    s.max_threads = 1
    for key, value in overrides.items():
        setattr(s, key, value)
    return s


def _raw_solve(p: ConicProgram, tol: float, max_iter: int, attempt: int = 0):
    n = p.n_vars
    q = np.zeros(n) if p.objective is None else p.objective
    A, b, cones = _assemble(p)
    P = sp.csc_matrix((n, n))
    settings = _settings(tol, max_iter, **_FALLBACKS[attempt])
    return clarabel.DefaultSolver(P, q, A, b, cones, settings).solve()


def solve(p: ConicProgram, feas_tol: float = 1e-8, gap_tol: float = 1e-8,
          max_iter: int = 200) -> SolverResult:
    """Solve ``p``.

    ``optimal`` is only returned after checking the returned point against
    every constraint at ``feas_tol`` and the duality gap against
    ``gap_tol``; anything the backend cannot settle is reported as
    ``numerical_failure`` rather than guessed. For ``infeasible`` the
    optimal shared slack of :func:`max_violation_relaxation` is attached as
    ``infeasibility``.
    """
    n = p.n_vars
    if p.n_constraints == 0:
        if p.objective is None or not np.any(p.objective):
            return SolverResult(OPTIMAL, np.zeros(n), 0.0, 0.0)
        return SolverResult(UNBOUNDED, None, -np.inf, np.inf)

    for attempt in range(len(_FALLBACKS)):
        sol = _raw_solve(p, min(feas_tol, gap_tol) * 1e-1, max_iter, attempt)
        status = str(sol.status)
        iters = int(sol.iterations)
        if status not in ("Solved", "AlmostSolved"):
            break
        v = np.array(sol.x)
        obj = 0.0 if p.objective is None else float(p.objective @ v)
        gap = abs(float(sol.obj_val) - float(sol.obj_val_dual))
        if p.max_violation(v) <= feas_tol and gap <= gap_tol:
            return SolverResult(OPTIMAL, v, obj, gap, iterations=iters)
    if status in ("Solved", "AlmostSolved"):
        return SolverResult(NUMERICAL_FAILURE, v, obj, gap, iterations=iters)
    if status in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        s_star, _ = max_violation_relaxation(p, feas_tol=feas_tol, gap_tol=gap_tol)
        if s_star > feas_tol:
            return SolverResult(INFEASIBLE, None, np.inf, np.nan,
                                infeasibility=s_star, iterations=iters)
        return SolverResult(NUMERICAL_FAILURE, None, np.nan, np.nan,
                            infeasibility=s_star, iterations=iters)
    if status in ("DualInfeasible", "AlmostDualInfeasible"):
        return SolverResult(UNBOUNDED, None, -np.inf, np.nan, iterations=iters)
    return SolverResult(NUMERICAL_FAILURE, None, np.nan, np.nan, iterations=iters)


def relax(p: ConicProgram) -> ConicProgram:
    """Copy of ``p`` with one extra variable ``s`` loosening every inequality-type constraint.

    Cones become ``||Av+b|| <= c.v + d + s``, inequalities ``row.v <= rhs + s``
    and bounds ``lo - s <= v_i <= hi + s``. Equalities stay exact. The new
    objective is to minimize ``s`` with ``s >= SLACK_FLOOR``.
    """
    n = p.n_vars
    pad = lambda row: np.append(row, 0.0)
    e_s = np.zeros(n + 1)
    e_s[n] = 1.0
    q = ConicProgram(n + 1, objective=e_s.copy())
    for row, rhs in p.equalities:
        q.add_equality(pad(row), rhs)
    for row, rhs in p.inequalities:
        q.add_inequality(pad(row) - e_s, rhs)
    if p.bounds is not None:
        for i, (lo, hi) in enumerate(p.bounds):
            row = np.zeros(n + 1)
            row[i] = 1.0
            if np.isfinite(lo):
                q.add_inequality(-row - e_s, -lo)
            if np.isfinite(hi):
                q.add_inequality(row - e_s, hi)
    for cone in p.cones:
        q.cones.append(SecondOrderCone(np.hstack([cone.A, np.zeros((cone.A.shape[0], 1))]),
                                       cone.b, pad(cone.c) + e_s, cone.d))
    q.bounds = [(-np.inf, np.inf)] * n + [(SLACK_FLOOR, np.inf)]
    return q


def max_violation_relaxation(p: ConicProgram, feas_tol: float = 1e-8,
                             gap_tol: float = 1e-8, max_iter: int = 200):
    """Minimize a shared slack over all inequality-type constraints of ``p``.

    Returns ``(s_star, v)`` where ``v`` excludes the slack. ``p`` is feasible
    iff ``s_star <= feas_tol``. A program with no inequality-type
    constraints gives ``s_star = 0``. Inconsistent equalities give
    ``(inf, None)``.

    Raises
    ------
    SolverError
        If the backend does not converge.
    """
    if not (p.inequalities or p.cones or (p.bounds is not None and any(
            np.isfinite(lo) or np.isfinite(hi) for lo, hi in p.bounds))):
        if not p.equalities:
            return 0.0, np.zeros(p.n_vars)
        res = solve(ConicProgram(p.n_vars, equalities=list(p.equalities)), feas_tol, gap_tol)
        if res.status == OPTIMAL:
            return 0.0, res.v
        return np.inf, None

    q = relax(p)
    for attempt in range(len(_FALLBACKS)):
        sol = _raw_solve(q, min(feas_tol, gap_tol) * 1e-1, max_iter, attempt)
        status = str(sol.status)
        if status in ("Solved", "AlmostSolved"):
            v = np.array(sol.x)
            if q.max_violation(v) <= feas_tol:
                return float(v[-1]), v[:-1]
        elif status in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
            return np.inf, None
    raise SolverError(f"slack minimization did not converge (backend status {status})")


def is_feasible(p: ConicProgram, feas_tol: float = 1e-8) -> bool:
    s_star, _ = max_violation_relaxation(p, feas_tol=feas_tol)
    return s_star <= feas_tol
