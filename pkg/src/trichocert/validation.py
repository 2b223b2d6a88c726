"""Input checks shared by the estimators and the command line."""

from __future__ import annotations

import numbers

import numpy as np

from .qubit import ValidationError

SUP = "sup"
EUCLID = "euclid"

_NORM_ALIASES = {
    "sup": SUP, "linf": SUP, "inf": SUP, "max": SUP,
    "euclid": EUCLID, "l2": EUCLID, "2": EUCLID, "euclidean": EUCLID,
}


def check_norm(norm) -> str:
    key = str(norm).lower()
    if key not in _NORM_ALIASES:
        raise ValidationError(f"unknown norm {norm!r}; use 'sup'/'linf' or 'euclid'/'l2'")
    return _NORM_ALIASES[key]


def check_correlation_matrix(P, tol: float = 1e-9) -> np.ndarray:
    """Return ``P`` as a ``(3, 3)`` float array after checking its invariants.

    Entries must lie in ``[0, 1]`` and the two listed outcomes of the
    three-outcome measurement may not exceed probability one together.
    """
    P = np.array(P, dtype=float)
    if P.shape != (3, 3):
        raise ValidationError(f"correlation matrix must be 3x3, got shape {P.shape}")
    if not np.all(np.isfinite(P)):
        raise ValidationError("correlation matrix has non-finite entries")
    if P.min() < -tol or P.max() > 1 + tol:
        raise ValidationError("correlation matrix entries must lie in [0, 1]")
    rows = P[:, 0] + P[:, 1]
    if rows.max() > 1 + tol:
        x = int(np.argmax(rows)) + 1
        raise ValidationError(
            f"row {x}: outcomes 1 and 2 of the three-outcome measurement sum to {rows.max():.6g} > 1")
    return np.clip(P, 0.0, 1.0)


def check_random_state(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise ValidationError(f"cannot build a random generator from {seed!r}")


def check_positive(name, value, integer=False):
    if integer:
        if not isinstance(value, numbers.Integral) or value < 1:
            raise ValidationError(f"{name} must be a positive integer, got {value!r}")
        return int(value)
    value = float(value)
    if not value > 0:
        raise ValidationError(f"{name} must be positive, got {value!r}")
    return value


def check_is_fitted(estimator, attribute):
    if not hasattr(estimator, attribute):
        from sklearn.exceptions import NotFittedError

        raise NotFittedError(
            f"This {type(estimator).__name__} instance is not fitted yet; call 'fit' first.")
