"""Certified lower bounds on the sup-norm distance of USD correlations to simulable ones.

If some simulable ``Q`` lies within ``eps`` of a USD-form ``P``, the states
and the binary measurement of ``Q`` are pinned near an idealized frame up to
``O(sqrt(eps))``. Fixing that frame (``rho_1 = -n``, ``rho_2 = n``, binary
effect ``(1, n)``, ``n = e_x``) and ``rho_3 = t(phi)`` in the xy-plane, the
remaining question "is there a simulable three-outcome measurement matching
``P`` within the propagated tolerances?" is a conic feasibility problem.

For each angle the smallest feasible radius ``eps_c(phi)`` is found by
bisection; ``eps_c`` is 1/2-Lipschitz in ``phi``, so a grid of step ``delta``
certifies ``min eps_c - delta/4`` as a lower bound on the distance.
"""

from __future__ import annotations

import heapq
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from . import conic
from .conic import ConicProgram, SolverError
from .correlations import is_usd_form
from .seesaw import _E0, _E1, _E2, _W, _simulable_cones
from .validation import check_correlation_matrix, check_is_fitted, check_positive
from .qubit import ValidationError

logger = logging.getLogger(__name__)

FAST_DELTA = 2 * math.pi * 1e-3
FINE_DELTA = 2 * math.pi * 1e-5


class DegenerateToleranceError(ValueError):
    """The probed radius is too large for the trace bounds to say anything."""


class MonotonicityError(RuntimeError):
    """Feasibility verdicts are not monotone in the radius (a solver-tolerance problem)."""


@dataclass(frozen=True)
class ToleranceBundle:
    eps: float
    c1: float
    c2: float
    eps2xy: float
    eps2z: float
    eps3xy: float
    eps3z: float
    tol_row1: float
    tol_q33: float


def _pinning(eps, c):
    """Deviation of an almost-orthogonal Bloch vector from the xy unit circle.

    Returns the in-plane bound ``2 eps/(c - eps)`` and the matching bound on
    the z-component; the latter saturates at 1 once the in-plane bound
    exceeds 1.
    """
    u = 2.0 * eps / (c - eps)
    return u, math.sqrt(1.0 - max(0.0, 1.0 - u) ** 2)


def trace_constants(P):
    """Lower bounds on the traces of the first two effects implied by columns 1 and 2."""
    P = np.asarray(P, dtype=float)
    return float(max(P[0, 0], P[1, 0])), float(max(P[0, 1], P[2, 1]))


def tolerances(P, eps: float) -> ToleranceBundle:
    """Propagated tolerances for a candidate radius ``eps``."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    c1, c2 = trace_constants(P)
    if eps == 0:
        return ToleranceBundle(0.0, c1, c2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    if eps >= min(c1, c2):
        raise DegenerateToleranceError(
            f"tolerance bound degenerate: eps = {eps:.6g} >= min(c1, c2) = {min(c1, c2):.6g}")
    e2xy, e2z = _pinning(eps, c2)
    e3xy, e3z = _pinning(eps, c1)
    root = math.sqrt(4 * eps + eps * eps)
    return ToleranceBundle(
        eps=eps, c1=c1, c2=c2, eps2xy=e2xy, eps2z=e2z, eps3xy=e3xy, eps3z=e3z,
        tol_row1=e2xy + 2 * root,
        tol_q33=e2xy + e3xy + e2xy * e3xy + e2z * e3z + root,
    )


def q33_precheck(P, phi, tol: ToleranceBundle, loose: bool = False, slack: float = 1e-8) -> bool:
    """The only entry that does not involve the unknown effects.

    ``Q33 = (y0 + y.r3)/2`` with ``|y0 - 1| <= eps``, so the idealized value
    ``(1 + cos phi)/2`` must be within ``eps + (tol_q33 + eps)/2`` of ``P33``.
    ``loose`` widens this to ``eps + tol_q33``. ``slack`` absorbs round-off
    in ``cos phi``, matching the feasibility tolerance of the conic part.
    """
    width = tol.eps + (tol.tol_q33 if loose else 0.5 * (tol.tol_q33 + tol.eps))
    return abs(0.5 * (1 + math.cos(phi)) - P[2, 2]) <= width + slack


# effect rows of F1 and F2 as linear maps of the simulability variables
_N = 15


def _first_two_effects():
    L = np.zeros((2, 4, _N))
    eye = np.eye(4)
    L[0, :, _E0:_E0 + 4] = eye
    L[0, :, _E1:_E1 + 4] = eye
    L[1, :, _E2:_E2 + 4] = eye
    L[1, :, _E0:_E0 + 4] -= eye
    L[1, 0, _W] = 2.0
    return L


_F12 = _first_two_effects()


def feasibility_program(P, phi, tol: ToleranceBundle, loose: bool = False) -> ConicProgram:
    """Relaxed matching problem over a simulable ``(F1, F2)`` with planar Bloch vectors.

    Each entry is ``Q = (x0 + d.x)/2 + err/2`` with ``|err| <= tol``, so the
    idealized half-sum has to match ``P`` within ``eps + tol/2``. ``loose``
    uses the wider ``eps + tol``.
    """
    P = np.asarray(P, dtype=float)
    n = np.array([1.0, 0.0, 0.0])
    t = np.array([math.cos(phi), math.sin(phi), 0.0])
    prog = ConicProgram(_N, cones=_simulable_cones(_N))
    w = np.zeros(_N)
    w[_W:_W + 3] = 1.0
    prog.add_equality(w, 1.0)
    for k in range(2):
        prog.add_equality(_F12[k, 3], 0.0)

    eps = tol.eps
    k = 1.0 if loose else 0.5
    # (row, Bloch direction paired with the effect, half-width)
    entries = [
        (0, -n, eps + k * tol.tol_row1),
        (1, n, eps + k * tol.eps2xy),
        (2, t, eps + k * tol.eps3xy),
    ]
    for row, direction, width in entries:
        for col in range(2):
            half_sum = 0.5 * (_F12[col, 0] + direction @ _F12[col, 1:])
            prog.add_inequality(half_sum, P[row, col] + width)
            prog.add_inequality(-half_sum, -(P[row, col] - width))
    return prog


def feasibility(P, phi, eps, tol: ToleranceBundle = None, feas_tol: float = 1e-8,
                loose: bool = False) -> bool:
    """Is there a simulable measurement compatible with ``P`` at radius ``eps`` and angle ``phi``?

    Raises
    ------
    SolverError
        When the slack minimization does not converge; never turned into a verdict.
    """
    P = np.asarray(P, dtype=float)
    if tol is None:
        tol = tolerances(P, eps)
    if not q33_precheck(P, phi, tol, loose, slack=feas_tol):
        return False
    prog = feasibility_program(P, phi, tol, loose)
    s_star, _ = conic.max_violation_relaxation(prog, feas_tol=feas_tol)
    return s_star <= feas_tol


@dataclass
class CriticalRadius:
    eps_c: float
    lower: float
    upper: float
    evaluations: int = 0


def critical_eps(P, phi, eps_hi: float = None, bis_tol: float = 1e-6, oracle=None) -> CriticalRadius:
    """Bisection for the transition radius at angle ``phi``.

    ``oracle(eps) -> bool`` overrides the feasibility test (used for
    testing). Without ``eps_hi`` the upper end starts at 0.1 and doubles
    until feasible, staying below 1 and below the degeneracy radius.
    ``lower`` is the largest radius verified infeasible.
    """
    cap = 1.0
    if P is not None:
        P = np.asarray(P, dtype=float)
        cmin = min(trace_constants(P))
        if cmin > 0:
            cap = min(cap, cmin * (1 - 1e-9))
    if oracle is None:
        oracle = lambda e: feasibility(P, phi, e)
    verdicts = {}

    def ask(e):
        verdicts[e] = oracle(e)
        return verdicts[e]

    if ask(0.0):
        return CriticalRadius(0.0, 0.0, 0.0, len(verdicts))
    if eps_hi is None:
        hi = min(0.1, cap)
        while not ask(hi):
            if hi >= cap:
                raise MonotonicityError(f"no feasible radius below {cap:.6g} at phi = {phi:.6g}")
            hi = min(2 * hi, cap)
    else:
        hi = float(eps_hi)
        if not ask(hi):
            raise MonotonicityError(f"upper bracket {hi} is infeasible at phi = {phi:.6g}")
    lo = 0.0
    while hi - lo > bis_tol:
        mid = 0.5 * (lo + hi)
        if ask(mid):
            hi = mid
        else:
            lo = mid
    if lo > 0 and ask(0.5 * lo):
        raise MonotonicityError(
            f"feasible at {0.5 * lo:.6g} but infeasible at {lo:.6g} (phi = {phi:.6g})")
    return CriticalRadius(0.5 * (lo + hi), lo, hi, len(verdicts))


@dataclass
class LowerBoundResult:
    eps_grid_min: float
    delta: float
    certified_lower: float
    samples: list = field(default_factory=list)
    bisection_tol: float = 1e-6
    phi_min: float = float("nan")
    adaptive: bool = False

    def to_dict(self) -> dict:
        return {"eps_grid_min": self.eps_grid_min, "delta": self.delta,
                "certified_lower": self.certified_lower, "phi_min": self.phi_min,
                "bisection_tol": self.bisection_tol, "adaptive": self.adaptive,
                "n_samples": len(self.samples)}


class ScanAborted(RuntimeError):
    def __init__(self, message, samples):
        super().__init__(message)
        self.samples = samples


def _eval_phi(args):
    P, phi, bis_tol = args
    return critical_eps(P, phi, bis_tol=bis_tol)


def _evaluate(P, phis, bis_tol, n_jobs, done):
    jobs = [(P, phi, bis_tol) for phi in phis]
    try:
        if n_jobs and n_jobs > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=n_jobs) as pool:
                results = list(pool.map(_eval_phi, jobs, chunksize=max(1, len(jobs) // (4 * n_jobs))))
        else:
            results = []
            for job in jobs:
                results.append(_eval_phi(job))
                done[job[1]] = results[-1]
    except (SolverError, MonotonicityError, DegenerateToleranceError) as exc:
        raise ScanAborted(str(exc), sorted((p, r.eps_c) for p, r in done.items())) from exc
    for phi, r in zip(phis, results):
        done[phi] = r
    return results


def _check_target(P):
    P = check_correlation_matrix(P)
    if not is_usd_form(P):
        raise ValidationError("lower bounds are only available for USD-form correlation matrices")
    return P


def scan(P, delta: float = FAST_DELTA, adaptive: bool = False, bis_tol: float = 1e-6,
         n_jobs: int = 1, coarse_delta: float = FAST_DELTA) -> LowerBoundResult:
    """Certified lower bound from a scan of ``eps_c`` over the angle of the third state.

    The grid step is the largest ``2*pi/m`` not exceeding ``delta``. With
    ``adaptive`` the scan starts from a grid of step ``coarse_delta`` and
    splits an interval only while the Lipschitz bound on it could fall below
    the current certificate, so the returned certificate is the same
    ``min - delta/4`` a full grid would give. The certificate uses the
    verified-infeasible end of each bisection bracket.
    """
    P = _check_target(P)
    delta = check_positive("delta", delta)
    m = math.ceil(2 * math.pi / delta - 1e-9)
    step = 2 * math.pi / m
    done = {}

    if not adaptive or coarse_delta <= step:
        phis = [k * step for k in range(m)]
        _evaluate(P, phis, bis_tol, n_jobs, done)
    else:
        m0 = math.ceil(2 * math.pi / coarse_delta - 1e-9)
        # refine by halving, so make the fine step a power-of-two fraction of the coarse one
        levels = max(0, math.ceil(math.log2((2 * math.pi / m0) / delta) - 1e-12))
        step = 2 * math.pi / (m0 * 2 ** levels)
        coarse = [k * 2 * math.pi / m0 for k in range(m0)]
        _evaluate(P, coarse, bis_tol, n_jobs, done)
        _refine(P, coarse, step, bis_tol, n_jobs, done)

    samples = sorted((phi, r.eps_c) for phi, r in done.items())
    best_phi = min(done, key=lambda p: (done[p].eps_c, p))
    eps_min = done[best_phi].eps_c
    lower_min = min(r.lower for r in done.values())
    return LowerBoundResult(
        eps_grid_min=eps_min, delta=step, certified_lower=max(0.0, lower_min - step / 4),
        samples=samples, bisection_tol=bis_tol, phi_min=best_phi, adaptive=adaptive)


def _refine(P, coarse, step, bis_tol, n_jobs, done):
    """Split intervals whose Lipschitz floor could undercut ``min lower - step/4``."""
    two_pi = 2 * math.pi
    knots = coarse + [two_pi]
    value = lambda phi: done[phi % two_pi].lower
    heap = []
    for a, b in zip(knots[:-1], knots[1:]):
        heapq.heappush(heap, ((value(a) + value(b)) / 2 - (b - a) / 4, a, b))
    while heap:
        floor, a, b = heapq.heappop(heap)
        if floor >= min(r.lower for r in done.values()) - step / 4:
            break
        if b - a <= step * (1 + 1e-9):
            continue
        mid = 0.5 * (a + b)
        _evaluate(P, [mid], bis_tol, n_jobs, done)
        for lo, hi in ((a, mid), (mid, b)):
            heapq.heappush(heap, ((value(lo) + value(hi)) / 2 - (hi - lo) / 4, lo, hi))


class LowerBoundCertifier(BaseEstimator):
    """Estimator wrapper around :func:`scan`; ``fit(P)`` sets ``result_`` and ``certified_lower_``."""

    def __init__(self, delta=FAST_DELTA, adaptive=False, bis_tol=1e-6, n_jobs=1):
        self.delta = delta
        self.adaptive = adaptive
        self.bis_tol = bis_tol
        self.n_jobs = n_jobs

    def fit(self, P, y=None):
        self.result_ = scan(P, delta=self.delta, adaptive=self.adaptive,
                            bis_tol=self.bis_tol, n_jobs=self.n_jobs)
        self.certified_lower_ = self.result_.certified_lower
        self.eps_grid_min_ = self.result_.eps_grid_min
        return self

    def score(self, P=None, y=None):
        check_is_fitted(self, "result_")
        return self.certified_lower_
