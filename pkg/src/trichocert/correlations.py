"""Correlation matrices of the minimal prepare-and-measure scenario.

A correlation matrix is a ``(3, 3)`` float array: row ``x`` is the
preparation, the columns are the outcomes ``M_{1|1}``, ``M_{2|1}`` and
``M_{1|2}``. The remaining outcomes follow by normalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qubit import BlochEffect, BlochState, Povm, Scenario, ValidationError, born

STRUCT_TOL = 1e-9
REALIZABLE_TOL = 1e-12


@dataclass(frozen=True)
class UsdParams:
    """Parameters ``(p, q, xi)`` of the two-dimensional USD family."""

    p: float
    q: float
    xi: float
    degenerate: bool = False

    def __post_init__(self):
        for name in ("p", "q", "xi"):
            v = float(getattr(self, name))
            if not (0.0 <= v <= 1.0):
                raise ValidationError(f"USD parameter {name} = {v} outside [0, 1]")
            object.__setattr__(self, name, v)

    @property
    def realizable(self) -> bool:
        return (1 - self.p) * (1 - self.q) >= self.p * self.q * self.xi - REALIZABLE_TOL

    def astuple(self):
        return (self.p, self.q, self.xi)


@dataclass(frozen=True)
class SimulableUsdParams:
    """Parameters ``(f2, f3, kappa, xi)`` of USD correlations reachable with dichotomic simulations."""

    f2: float
    f3: float
    kappa: float
    xi: float

    def __post_init__(self):
        for name in ("f2", "f3", "kappa", "xi"):
            v = float(getattr(self, name))
            if not (0.0 <= v <= 1.0):
                raise ValidationError(f"{name} = {v} outside [0, 1]")
            object.__setattr__(self, name, v)
        if self.xi == 0.0:
            raise ValidationError("xi must be nonzero")


def correlations_of(s: Scenario) -> np.ndarray:
    cols = (s.m1[0], s.m1[1], s.m2[0])
    return np.array([[born(rho, f) for f in cols] for rho in s.states])


def usd_matrix(p, q=None, xi=None) -> np.ndarray:
    """USD correlations for ``(p, q, xi)``; total on the unit cube, realizable or not."""
    if isinstance(p, UsdParams):
        p, q, xi = p.astuple()
    prm = UsdParams(p, q, xi)
    p, q, xi = prm.p, prm.q, prm.xi
    return np.array([
        [p * xi, q, 0.0],
        [p * (1 - xi), 0.0, 1.0],
        [0.0, q * (1 - xi), xi],
    ])


D0 = usd_matrix(1.0, 0.0, 1.0)
D1 = usd_matrix(1.0, 1.0, 0.0)


def usd_params_of(P, tol: float = STRUCT_TOL):
    """Recover ``(p, q, xi)`` from a USD matrix, or ``None`` if ``P`` is not of that form.

    ``degenerate`` is set when ``p``, ``q`` or ``xi`` sits at a corner where
    the realizing states and effects are no longer fixed up to a unitary.
    """
    P = np.asarray(P, dtype=float)
    xi, q, p = P[2, 2], P[0, 1], P[0, 0] + P[1, 0]
    if not all(-tol <= v <= 1 + tol for v in (p, q, xi)):
        return None
    p, q, xi = (min(1.0, max(0.0, v)) for v in (p, q, xi))
    if np.max(np.abs(usd_matrix(p, q, xi) - P)) > tol:
        return None
    degenerate = min(p, q) <= tol or xi <= tol or xi >= 1 - tol
    return UsdParams(p, q, xi, degenerate=degenerate)


def usd_realization(params: UsdParams) -> Scenario:
    """Explicit qubit scenario producing ``usd_matrix(params)``.

    The unitary freedom is fixed by putting ``rho_2`` on ``+z`` and taking
    ``rho_3`` in the ``xz`` half-plane with positive ``x``.
    """
    p, q, xi = params.astuple()
    if not params.realizable:
        raise ValidationError(
            f"parameters ({p}, {q}, {xi}) are not realizable: need (1-p)(1-q) >= pq*xi")
    s = 2.0 * np.sqrt(xi * (1.0 - xi))
    up, down = np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, -1.0])
    states = (BlochState(down), BlochState(up), BlochState([s, 0.0, 2 * xi - 1]))
    m11 = BlochEffect(p, p * np.array([-s, 0.0, 1 - 2 * xi]))
    m21 = BlochEffect(q, q * down)
    m1 = Povm.from_partial([m11, m21])
    m2 = Povm((BlochEffect.projector(up), BlochEffect.projector(down)))
    return Scenario(states, m1, m2)


def witness_w(P) -> float:
    """Linear witness ``-P11 - P12 + P32 + P33``; negative values exclude simulable USD correlations."""
    P = np.asarray(P, dtype=float)
    return float(-P[0, 0] - P[0, 1] + P[2, 1] + P[2, 2])


def simulable_usd_matrix(f2, f3=None, kappa=None, xi=None) -> np.ndarray:
    if isinstance(f2, SimulableUsdParams):
        f2, f3, kappa, xi = f2.f2, f2.f3, f2.kappa, f2.xi
    prm = SimulableUsdParams(f2, f3, kappa, xi)
    f2, f3, k, xi = prm.f2, prm.f3, prm.kappa, prm.xi
    return np.array([
        [f3 * (1 - k) * xi, f2 * k, 0.0],
        [f3 * (1 - k) * (1 - xi), 0.0, 1.0],
        [0.0, f2 * k * (1 - xi), xi],
    ])


def is_usd_form(P, tol: float = STRUCT_TOL) -> bool:
    P = np.asarray(P, dtype=float)
    return bool(abs(P[0, 2]) <= tol and abs(P[1, 1]) <= tol
                and abs(P[2, 0]) <= tol and abs(P[1, 2] - 1.0) <= tol)


def trine_matrix() -> np.ndarray:
    return np.array([[0.5, 0.5, 0.0], [0.5, 0.0, 0.75], [0.0, 0.5, 0.75]])
