"""Upper bounds on the distance to simulable correlations by seesaw optimization.

With the three effects fixed, the best states solve a small conic program;
with the states fixed, so do the best simulable effects. Alternating the two
from random states gives a nonincreasing sequence of distances, each attained
by an explicit simulable scenario, hence an upper bound on the true distance.

Simulable three-outcome measurements are written in absorbed form::

    F1 = F'1 + F'0,   F2 = F'2 + f0*1 - F'0,
    0 <= F'j <= fj*1,  f0 + f1 + f2 = 1,

and the auxiliary binary measurement is ``(F3, 1 - F3)`` with ``0 <= F3 <= 1``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator

from . import conic
from .conic import ConicProgram, SolverError
from .qubit import BlochEffect, BlochState, Povm, Scenario, random_bloch_vectors
from .validation import (EUCLID, SUP, check_correlation_matrix, check_is_fitted, check_norm,
                         check_positive)

logger = logging.getLogger(__name__)

TIE_TOL = 1e-9


def distance(P, Q, norm) -> float:
    """Sup-norm or Euclidean distance between two correlation matrices."""
    diff = np.asarray(P, dtype=float) - np.asarray(Q, dtype=float)
    if check_norm(norm) == SUP:
        return float(np.max(np.abs(diff)))
    return float(np.linalg.norm(diff.ravel()))


@dataclass
class SimulableDecomposition:
    """A dichotomic simulation of a three-outcome measurement plus the binary effect ``F3``.

    ``weights`` holds ``(f0, f1, f2)``; ``primed`` is a ``(3, 4)`` array of
    Bloch coordinates of ``F'0, F'1, F'2``; ``f3`` the coordinates of ``F3``.
    """

    weights: np.ndarray
    primed: np.ndarray
    f3: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))

    def column_effects(self) -> np.ndarray:
        """Bloch rows of ``F1, F2, F3``, the effects behind the three matrix columns."""
        e0, e1, e2 = self.primed
        f1 = e0 + e1
        f2 = e2 - e0
        f2[0] += 2.0 * self.weights[0]
        return np.vstack([f1, f2, self.f3])

    def violation(self) -> float:
        """Largest violation of the decomposition's invariants."""
        w = self.weights
        worst = max(0.0, -w.min(), abs(w.sum() - 1.0))
        for fj, e in zip(w, self.primed):
            nx = np.linalg.norm(e[1:])
            worst = max(worst, nx - e[0], nx - (2 * fj - e[0]))
        nx = np.linalg.norm(self.f3[1:])
        return float(max(worst, nx - self.f3[0], nx - (2 - self.f3[0])))

    def repaired(self) -> "SimulableDecomposition":
        """Copy with solver round-off removed so every invariant holds exactly."""
        w = np.clip(self.weights, 0.0, None)
        w = w / w.sum()
        primed = np.array([_shrink(e, fj) for fj, e in zip(w, self.primed)])
        return SimulableDecomposition(w, primed, _shrink(self.f3, 1.0))

    def povms(self):
        F1, F2, F3 = (BlochEffect.from_array(r) for r in self.column_effects())
        return Povm.from_partial([F1, F2]), Povm.from_partial([F3])

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "primed": self.primed.tolist(),
                "f3": self.f3.tolist()}


def _shrink(e, f):
    """Project Bloch coordinates ``e`` into ``0 <= E <= f*1``, shrinking only the vector part."""
    e = np.array(e, dtype=float)
    e[0] = min(max(e[0], 0.0), 2.0 * f)
    bound = min(e[0], 2.0 * f - e[0])
    nx = np.linalg.norm(e[1:])
    if nx > bound:
        e[1:] *= bound / nx if nx > 0 else 0.0
    return e


def _model(R, X):
    """Correlation matrix for state rows ``R`` (3x3) and effect rows ``X`` (3x4)."""
    return 0.5 * (X[:, 0][None, :] + R @ X[:, 1:].T)


def _add_distance(prog: ConicProgram, G, g, P, norm, t_index):
    """Constrain ``dist(P, G v + g) <= v[t_index]`` and minimize that variable."""
    target = np.asarray(P, dtype=float).ravel() - g
    e_t = np.zeros(prog.n_vars)
    e_t[t_index] = 1.0
    if norm == SUP:
        for k in range(9):
            prog.inequalities.append((-G[k] - e_t, -target[k]))
            prog.inequalities.append((G[k] - e_t, target[k]))
    else:
        prog.add_cone(-G, target, e_t, 0.0)
    prog.objective = e_t


def _bloch_ball_cone(n, start, scale_index=None, offset=0.0, scale=0.0):
    """Cone ``|v[start:start+3]| <= scale*v[scale_index] + offset``."""
    A = np.zeros((3, n))
    A[:, start:start + 3] = np.eye(3)
    c = np.zeros(n)
    if scale_index is not None:
        c[scale_index] = scale
    return conic.SecondOrderCone(A, np.zeros(3), c, offset)


def _effect_cones(n, i0, weight_index=None, cap=1.0):
    """The pair of cones encoding ``0 <= E <= w*1`` for ``E`` stored at ``v[i0:i0+4]``.

    ``w`` is ``v[weight_index]`` when given, otherwise the constant ``cap``.
    """
    lower = _bloch_ball_cone(n, i0 + 1, i0, 0.0, 1.0)
    A = np.zeros((3, n))
    A[:, i0 + 1:i0 + 4] = np.eye(3)
    c = np.zeros(n)
    c[i0] = -1.0
    d = 0.0
    if weight_index is None:
        d = 2.0 * cap
    else:
        c[weight_index] = 2.0
    return [lower, conic.SecondOrderCone(A, np.zeros(3), c, d)]


def states_program(P, X, norm) -> ConicProgram:
    """Variables: three Bloch vectors then ``t``."""
    n = 10
    G = np.zeros((9, n))
    g = np.zeros(9)
    for i in range(3):
        for j in range(3):
            G[3 * i + j, 3 * i:3 * i + 3] = 0.5 * X[j, 1:]
            g[3 * i + j] = 0.5 * X[j, 0]
    prog = ConicProgram(n, cones=[_bloch_ball_cone(n, 3 * i, offset=1.0) for i in range(3)])
    _add_distance(prog, G, g, P, norm, 9)
    return prog


# variable layout of the effects step
_W, _E0, _E1, _E2, _F3, _T = 0, 3, 7, 11, 15, 19
_NV = 20


def _column_maps():
    """Linear maps from the effects-step variables to the Bloch rows of F1, F2, F3."""
    L = np.zeros((3, 4, _NV))
    L[0, :, _E0:_E0 + 4] = np.eye(4)
    L[0, :, _E1:_E1 + 4] = np.eye(4)
    L[1, :, _E2:_E2 + 4] = np.eye(4)
    L[1, :, _E0:_E0 + 4] -= np.eye(4)
    L[1, 0, _W] = 2.0
    L[2, :, _F3:_F3 + 4] = np.eye(4)
    return L


_L = _column_maps()


def _simulable_cones(n):
    cones = []
    for j, i0 in enumerate((_E0, _E1, _E2)):
        cones += _effect_cones(n, i0, weight_index=_W + j)
    return cones


def effects_program(P, R, norm) -> ConicProgram:
    G = np.zeros((9, _NV))
    for i in range(3):
        row = 0.5 * np.concatenate([[1.0], R[i]])
        for j in range(3):
            G[3 * i + j] = row @ _L[j]
    prog = ConicProgram(_NV, cones=_simulable_cones(_NV) + _effect_cones(_NV, _F3, cap=1.0))
    w = np.zeros(_NV)
    w[_W:_W + 3] = 1.0
    prog.add_equality(w, 1.0)
    _add_distance(prog, G, np.zeros(9), P, norm, _T)
    return prog


def _solve(prog, what):
    res = conic.solve(prog)
    if not res.optimal:
        raise SolverError(f"{what} step ended with status {res.status}")
    return res.v


def _states_step(P, X, norm):
    v = _solve(states_program(P, X, norm), "states")
    R = v[:9].reshape(3, 3)
    norms = np.linalg.norm(R, axis=1)
    R = R / np.maximum(norms, 1.0)[:, None]
    return R, distance(P, _model(R, X), norm)


def _effects_step(P, R, norm):
    v = _solve(effects_program(P, R, norm), "effects")
    dec = SimulableDecomposition(v[_W:_W + 3].copy(),
                                 np.vstack([v[_E0:_E0 + 4], v[_E1:_E1 + 4], v[_E2:_E2 + 4]]),
                                 v[_F3:_F3 + 4].copy()).repaired()
    return dec, distance(P, _model(R, dec.column_effects()), norm)


def optimize_states(P, decomposition: SimulableDecomposition, norm):
    """Best three states for fixed simulable effects. Returns ``(states, t)``."""
    norm = check_norm(norm)
    R, t = _states_step(np.asarray(P, dtype=float), decomposition.column_effects(), norm)
    return [BlochState(r) for r in R], t


def optimize_effects(P, states, norm):
    """Best simulable effects for three fixed states. Returns ``(decomposition, t)``."""
    norm = check_norm(norm)
    R = np.array([s.r if isinstance(s, BlochState) else s for s in states], dtype=float)
    return _effects_step(np.asarray(P, dtype=float), R, norm)


@dataclass
class DistanceResult:
    norm: str
    r_upper: float
    nearest: np.ndarray
    states: np.ndarray
    decomposition: SimulableDecomposition
    iterations_used: int
    restarts_used: int
    best_restart: int
    restart_values: np.ndarray
    trace: Optional[list] = None

    def witness_scenario(self) -> Scenario:
        m1, m2 = self.decomposition.povms()
        return Scenario(tuple(BlochState(r) for r in self.states), m1, m2)

    def to_dict(self) -> dict:
        return {
            "norm": self.norm,
            "r_upper": self.r_upper,
            "nearest": self.nearest.tolist(),
            "witness_scenario": {"states": self.states.tolist(),
                                 "decomposition": self.decomposition.to_dict()},
            "iterations_used": self.iterations_used,
            "restarts_used": self.restarts_used,
            "best_restart": self.best_restart,
        }


def _run_restart(P, norm, R0, max_iters, conv_tol):
    """One seesaw descent from the state rows ``R0``; returns ``(t, R, dec, trace)``."""
    R = R0
    trace = []
    t_prev = np.inf
    dec = None
    for _ in range(max_iters):
        dec, _ = _effects_step(P, R, norm)
        R, t = _states_step(P, dec.column_effects(), norm)
        trace.append(t)
        if t_prev - t < conv_tol:
            break
        t_prev = t
    return trace[-1], R, dec, trace


def _restart_worker(args):
    P, norm, seed_seq, purity_range, max_iters, conv_tol = args
    rng = np.random.default_rng(seed_seq)
    R0 = random_bloch_vectors(rng, 3, purity_range)
    try:
        return _run_restart(P, norm, R0, max_iters, conv_tol)
    except SolverError as exc:
        logger.warning("seesaw restart skipped: %s", exc)
        return None


def seesaw(P, norm="euclid", restarts=4500, max_iters=300, conv_tol=1e-6,
           purity_range=(0.5, 1.0), seed=0, n_jobs=1, keep_trace=False,
           initial_states=None) -> DistanceResult:
    """Minimum seesaw distance from ``P`` to simulable correlations over random restarts.

    Restart ``k`` draws its three starting states from child ``k`` of
    ``SeedSequence(seed)``, so the result does not depend on ``n_jobs``.
    Ties between restarts (within 1e-9) go to the lowest restart index.
    ``initial_states`` (a 3x3 array of Bloch rows) replaces the random start
    of restart 0.
    """
    P = check_correlation_matrix(P)
    norm = check_norm(norm)
    restarts = check_positive("restarts", restarts, integer=True)
    max_iters = check_positive("max_iters", max_iters, integer=True)
    children = np.random.SeedSequence(seed).spawn(restarts)
    jobs = [(P, norm, s, tuple(purity_range), max_iters, conv_tol) for s in children]

    if initial_states is not None:
        R0 = np.asarray(initial_states, dtype=float).reshape(3, 3)
        outcomes = [_run_restart(P, norm, R0, max_iters, conv_tol)]
        jobs = jobs[1:]
    else:
        outcomes = []
    if n_jobs is not None and n_jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            outcomes += list(pool.map(_restart_worker, jobs, chunksize=max(1, len(jobs) // (4 * n_jobs))))
    else:
        outcomes += [_restart_worker(job) for job in jobs]

    values = np.array([np.nan if o is None else o[0] for o in outcomes])
    if np.all(np.isnan(values)):
        raise SolverError("every seesaw restart failed numerically")
    best_t = np.nanmin(values)
    best = int(np.flatnonzero(values <= best_t + TIE_TOL)[0])
    t, R, dec, trace = outcomes[best]
    nearest = _model(R, dec.column_effects())
    all_traces = None
    if keep_trace:
        all_traces = [(k, i, ti) for k, o in enumerate(outcomes) if o is not None
                      for i, ti in enumerate(o[3])]
    return DistanceResult(
        norm=norm, r_upper=float(t), nearest=nearest, states=R, decomposition=dec,
        iterations_used=len(trace), restarts_used=int(np.sum(~np.isnan(values))),
        best_restart=best, restart_values=values, trace=all_traces)


def simulability_program(m1: Povm) -> ConicProgram:
    """Feasibility program: does ``m1`` admit a dichotomic simulation?"""
    n = 15
    prog = ConicProgram(n, cones=_simulable_cones(n))
    F1, F2 = m1[0].as_array(), m1[1].as_array()
    eye = np.eye(4)
    for k in range(4):
        row = np.zeros(n)
        row[_E0 + k] = row[_E1 + k] = 1.0
        prog.add_equality(row, F1[k])
        row = np.zeros(n)
        row[_E2 + k] = 1.0
        row[_E0 + k] = -1.0
        row[_W] = 2.0 * eye[0, k]
        prog.add_equality(row, F2[k])
    w = np.zeros(n)
    w[_W:_W + 3] = 1.0
    prog.add_equality(w, 1.0)
    return prog


def is_simulable(m1: Povm, tol: float = 1e-8):
    """Decide whether a three-outcome POVM is a mixture of dichotomic ones.

    Returns ``(simulable, decomposition)``; the decomposition is ``None``
    when the shared-slack minimum exceeds ``tol``.
    """
    if len(m1) != 3:
        raise ValueError("is_simulable expects a three-outcome POVM")
    s_star, v = conic.max_violation_relaxation(simulability_program(m1), feas_tol=tol * 1e-1)
    if s_star > tol:
        return False, None
    dec = SimulableDecomposition(v[_W:_W + 3].copy(),
                                 np.vstack([v[_E0:_E0 + 4], v[_E1:_E1 + 4], v[_E2:_E2 + 4]]),
                                 np.zeros(4))
    return True, dec


class SeesawDistance(BaseEstimator):
    """Estimator wrapper around :func:`seesaw`.

    ``fit(P)`` runs the restarts and stores ``result_``, ``r_upper_`` and
    ``nearest_``.

    Examples
    --------
    >>> from trichocert.correlations import usd_matrix
    >>> est = SeesawDistance(norm="euclid", restarts=5, seed=1).fit(usd_matrix(1, 0, 1))
    >>> est.r_upper_ < 1e-6
    True
    """

    def __init__(self, norm="euclid", restarts=200, max_iters=300, conv_tol=1e-6,
                 purity_range=(0.5, 1.0), seed=0, n_jobs=1, keep_trace=False):
        self.norm = norm
        self.restarts = restarts
        self.max_iters = max_iters
        self.conv_tol = conv_tol
        self.purity_range = purity_range
        self.seed = seed
        self.n_jobs = n_jobs
        self.keep_trace = keep_trace

    def fit(self, P, y=None):
        self.result_ = seesaw(P, norm=self.norm, restarts=self.restarts,
                              max_iters=self.max_iters, conv_tol=self.conv_tol,
                              purity_range=self.purity_range, seed=self.seed,
                              n_jobs=self.n_jobs, keep_trace=self.keep_trace)
        self.r_upper_ = self.result_.r_upper
        self.nearest_ = self.result_.nearest
        return self

    def score(self, P=None, y=None):
        """Negative upper-bound distance (larger is closer to simulable)."""
        check_is_fitted(self, "result_")
        return -self.r_upper_
