"""Effective state-space dimension from the rank of prepare-and-measure data.

Rows of the data matrix are preparations, columns all outcomes of all
measurements (measurement-major, outcome-minor). For a ``d``-level system the
rank is bounded by the affine dimension ``d**2 - 1`` of its state space, so
the rank gives a lower estimate of ``d``. It is only an estimate: a channel
that dephases a qutrit produces rank-3 data although the system is a qutrit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .qubit import ValidationError
from .validation import check_is_fitted

CAVEAT = (
    "rank alone cannot exclude a higher effective dimension: qutrit data passed "
    "through the dephasing channel rho -> sum_k |k><k|rho|k><k| has rank 3 and "
    "suggests d = 2 although d = 3; certify the shape of the state and effect "
    "spaces to rule this out"
)


def build_data_matrix(tables, complete: bool = False, tol: float = 1e-9) -> np.ndarray:
    """Stack per-measurement outcome tables into one ``s x L`` data matrix.

    Parameters
    ----------
    tables : sequence of array_like, each of shape (s, k_y)
        ``tables[y][x, a] = p(a | x, y)``.
    complete : bool
        If true each table lists all but the last outcome, which is appended
        as one minus the row sum.
    tol : float
        Allowed deviation of each measurement's row sums from one.
    """
    blocks = []
    n_rows = None
    for y, table in enumerate(tables):
        t = np.atleast_2d(np.asarray(table, dtype=float))
        if n_rows is None:
            n_rows = t.shape[0]
        elif t.shape[0] != n_rows:
            raise ValidationError(f"measurement {y + 1} has {t.shape[0]} rows, expected {n_rows}")
        if complete:
            t = np.hstack([t, 1.0 - t.sum(axis=1, keepdims=True)])
        if t.min() < -tol or t.max() > 1 + tol:
            raise ValidationError(f"measurement {y + 1} has probabilities outside [0, 1]")
        dev = np.max(np.abs(t.sum(axis=1) - 1.0))
        if dev > tol:
            raise ValidationError(f"measurement {y + 1}: row sums deviate from 1 by {dev:.3g}")
        blocks.append(t)
    if not blocks:
        raise ValidationError("no measurement tables given")
    return np.hstack(blocks)


def data_matrix_from_correlations(P) -> np.ndarray:
    """3x5 data matrix of the minimal scenario from its 3x3 correlation matrix."""
    P = np.asarray(P, dtype=float)
    return build_data_matrix([P[:, :2], P[:, 2:]], complete=True)


def singular_values(a) -> np.ndarray:
    return np.linalg.svd(np.asarray(a, dtype=float), compute_uv=False)


def numerical_rank(a, tol: float = None, rtol: float = 1e-8) -> int:
    """Number of singular values above ``tol`` (default ``rtol * sigma_max``)."""
    s = singular_values(a)
    if s.size == 0 or s[0] == 0:
        return 0
    if tol is None:
        tol = rtol * s[0]
    return int(np.sum(s > tol))


def min_consistent_dimension(rank: int) -> int:
    """Smallest ``d`` with ``d**2 - 1 >= rank``."""
    if rank < 1:
        raise ValueError("rank must be at least 1")
    d = max(1, math.isqrt(rank + 1))
    while d * d - 1 < rank:
        d += 1
    return d


@dataclass
class DimensionReport:
    rank: int
    singular_values: np.ndarray
    tol: float
    min_dimension: int
    caveat: str = CAVEAT

    def to_dict(self) -> dict:
        return {"rank": self.rank, "singular_values": self.singular_values.tolist(),
                "tol": self.tol, "min_consistent_dimension": self.min_dimension,
                "caveat": self.caveat}


def estimate_dimension(a, tol: float = None, rtol: float = 1e-8) -> DimensionReport:
    s = singular_values(a)
    if tol is None:
        tol = rtol * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    return DimensionReport(rank, s, float(tol), min_consistent_dimension(max(rank, 1)))


class EffectiveDimension(BaseEstimator):
    """``fit(A)`` sets ``rank_``, ``singular_values_``, ``dimension_`` and ``caveat_``."""

    def __init__(self, tol=None, rtol=1e-8):
        self.tol = tol
        self.rtol = rtol

    def fit(self, A, y=None):
        report = estimate_dimension(A, tol=self.tol, rtol=self.rtol)
        self.report_ = report
        self.rank_ = report.rank
        self.singular_values_ = report.singular_values
        self.dimension_ = report.min_dimension
        self.caveat_ = report.caveat
        return self

    def predict(self, A=None):
        """The minimal dimension consistent with the fitted data."""
        check_is_fitted(self, "report_")
        return self.dimension_


# ---- dephased qutrit fixture -------------------------------------------------

def _random_density(rng, d):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def _random_povm(rng, d, n_outcomes):
    gs = []
    for _ in range(n_outcomes):
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        gs.append(g @ g.conj().T)
    w, v = np.linalg.eigh(sum(gs))
    s_inv_half = v @ np.diag(w ** -0.5) @ v.conj().T
    return [s_inv_half @ g @ s_inv_half for g in gs]


def dephase(rho):
    """The qutrit dephasing channel: keep only the diagonal."""
    return np.diag(np.diag(rho))


def dephased_qutrit_data(rng, n_states: int = 12, n_measurements: int = 4,
                         n_outcomes: int = 3, channel=dephase) -> np.ndarray:
    """Data matrix of random qutrit preparations sent through ``channel`` before random POVMs."""
    states = [channel(_random_density(rng, 3)) for _ in range(n_states)]
    tables = []
    for _ in range(n_measurements):
        povm = _random_povm(rng, 3, n_outcomes)
        tables.append([[np.trace(rho @ m).real for m in povm] for rho in states])
    return build_data_matrix(tables, tol=1e-9)
