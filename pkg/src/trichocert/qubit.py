"""Qubit states, effects and POVMs in Bloch coordinates.

A state is ``rho = (1 + r.sigma)/2`` with ``|r| <= 1``; an effect is
``F = (x0*1 + x.sigma)/2`` with ``0 <= F <= 1``, which in these coordinates
reads ``|x| <= x0`` and ``|x| <= 2 - x0``. No complex matrices are built
here; they only appear in the test oracles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

ALG_TOL = 1e-12
PURE_TOL = 1e-9
POVM_TOL = 1e-10


class ValidationError(ValueError):
    """An input violates a named invariant."""


def _vec3(v) -> np.ndarray:
    a = np.array(v, dtype=float).reshape(-1)
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise ValidationError(f"expected a finite real 3-vector, got {v!r}")
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class BlochState:
    """Qubit density operator ``(1 + r.sigma)/2``."""

    r: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "r", _vec3(self.r))
        norm = float(np.linalg.norm(self.r))
        if norm > 1 + ALG_TOL:
            raise ValidationError(f"state Bloch vector has |r| = {norm:.17g} > 1")

    @property
    def purity(self) -> float:
        return 0.5 * (1.0 + float(self.r @ self.r))

    @property
    def is_pure(self) -> bool:
        return abs(np.linalg.norm(self.r) - 1.0) <= PURE_TOL

    @classmethod
    def maximally_mixed(cls) -> "BlochState":
        return cls(np.zeros(3))

    def as_effect(self) -> "BlochEffect":
        """The state viewed as an effect (same operator)."""
        return BlochEffect(1.0, self.r)

    def tolist(self) -> list:
        return [float(c) for c in self.r]


@dataclass(frozen=True)
class EffectReport:
    ok: bool
    positivity_margin: float
    subnormalization_margin: float
    violations: tuple

    def __bool__(self):
        return self.ok


@dataclass(frozen=True, eq=False)
class BlochEffect:
    """Effect operator ``(x0*1 + x.sigma)/2``.

    Construction does not enforce ``0 <= F <= 1``; use :func:`validate_effect`
    or :meth:`check` where a valid effect is required.
    """

    x0: float
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x0", float(self.x0))
        object.__setattr__(self, "x", _vec3(self.x))
        if not np.isfinite(self.x0):
            raise ValidationError("effect trace must be finite")

    @classmethod
    def identity(cls) -> "BlochEffect":
        return cls(2.0, np.zeros(3))

    @classmethod
    def zero(cls) -> "BlochEffect":
        return cls(0.0, np.zeros(3))

    @classmethod
    def projector(cls, direction) -> "BlochEffect":
        """Rank-one projector onto the pure state with unit Bloch vector ``direction``."""
        n = np.asarray(direction, dtype=float)
        return cls(1.0, n / np.linalg.norm(n))

    @classmethod
    def from_array(cls, a) -> "BlochEffect":
        a = np.asarray(a, dtype=float).reshape(-1)
        if a.shape != (4,):
            raise ValidationError(f"effect needs 4 Bloch coordinates, got {a.shape[0]}")
        return cls(a[0], a[1:])

    def as_array(self) -> np.ndarray:
        return np.concatenate([[self.x0], self.x])

    def complement(self) -> "BlochEffect":
        return BlochEffect(2.0 - self.x0, -self.x)

    def __add__(self, other: "BlochEffect") -> "BlochEffect":
        return BlochEffect(self.x0 + other.x0, self.x + other.x)

    def __sub__(self, other: "BlochEffect") -> "BlochEffect":
        return BlochEffect(self.x0 - other.x0, self.x - other.x)

    def __mul__(self, s: float) -> "BlochEffect":
        return BlochEffect(s * self.x0, s * self.x)

    __rmul__ = __mul__

    def check(self, tol: float = ALG_TOL) -> "BlochEffect":
        report = validate_effect(self, tol)
        if not report.ok:
            raise ValidationError("invalid effect: " + "; ".join(report.violations))
        return self

    def tolist(self) -> list:
        return [self.x0] + [float(c) for c in self.x]


def validate_effect(e: BlochEffect, tol: float = ALG_TOL) -> EffectReport:
    """Report which of ``|x| <= x0`` (positivity) and ``|x| <= 2 - x0`` fail, and by how much."""
    nx = float(np.linalg.norm(e.x))
    pos = e.x0 - nx
    sub = 2.0 - e.x0 - nx
    violations = []
    if pos < -tol:
        violations.append(f"positivity |x| <= x0 violated by {-pos:.3g}")
    if sub < -tol:
        violations.append(f"subnormalization |x| <= 2 - x0 violated by {-sub:.3g}")
    return EffectReport(not violations, pos, sub, tuple(violations))


def born(state: BlochState, effect: BlochEffect) -> float:
    """Outcome probability ``tr(rho F) = (x0 + r.x)/2``, clamped to ``[0, 1]``."""
    effect.check()
    p = 0.5 * (effect.x0 + float(state.r @ effect.x))
    if p < -ALG_TOL or p > 1 + ALG_TOL:  # pragma: no cover - excluded by the checks above
        raise ValidationError(f"Born probability {p} outside [0, 1]")
    return min(1.0, max(0.0, p))


@dataclass(frozen=True, eq=False)
class Povm:
    effects: tuple

    def __post_init__(self):
        effects = tuple(self.effects)
        object.__setattr__(self, "effects", effects)
        for k, e in enumerate(effects):
            report = validate_effect(e)
            if not report.ok:
                raise ValidationError(f"effect {k + 1}: " + "; ".join(report.violations))
        tr = sum(e.x0 for e in effects)
        vec = sum((e.x for e in effects), np.zeros(3))
        if abs(tr - 2.0) > POVM_TOL or np.linalg.norm(vec) > POVM_TOL:
            raise ValidationError(
                f"effects do not sum to the identity (trace sum {tr:.12g}, "
                f"Bloch sum {np.linalg.norm(vec):.3g})")

    def __len__(self):
        return len(self.effects)

    def __getitem__(self, k) -> BlochEffect:
        return self.effects[k]

    @classmethod
    def from_partial(cls, effects: Sequence[BlochEffect]) -> "Povm":
        """Complete ``effects`` with ``1 - sum(effects)`` as the last outcome."""
        last = BlochEffect.identity()
        for e in effects:
            last = last - e
        return cls(tuple(effects) + (last,))


@dataclass(frozen=True, eq=False)
class Scenario:
    """Three preparations, a three-outcome measurement ``m1`` and a binary ``m2``."""

    states: tuple
    m1: Povm
    m2: Povm

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if len(self.states) != 3:
            raise ValidationError("scenario needs exactly three states")
        if len(self.m1) != 3 or len(self.m2) != 2:
            raise ValidationError("scenario needs a 3-outcome m1 and a 2-outcome m2")

    def to_dict(self) -> dict:
        return {
            "states": [s.tolist() for s in self.states],
            "m1": [e.tolist() for e in self.m1.effects],
            "m2": [e.tolist() for e in self.m2.effects],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        try:
            states = [BlochState(r) for r in d["states"]]
            m1 = Povm(tuple(BlochEffect.from_array(e) for e in d["m1"]))
            m2 = Povm(tuple(BlochEffect.from_array(e) for e in d["m2"]))
        except KeyError as exc:
            raise ValidationError(f"scenario JSON lacks key {exc}") from None
        return cls(tuple(states), m1, m2)


def usd_povm(s1: BlochState, s2: BlochState) -> Povm:
    """Optimal unambiguous discrimination measurement for two pure states.

    Outcome 1 (2) excludes ``s2`` (``s1``); outcome 3 is inconclusive.
    """
    if not (s1.is_pure and s2.is_pure):
        raise ValidationError("unambiguous discrimination needs pure input states")
    overlap = np.sqrt(max(0.0, (1.0 + float(s1.r @ s2.r)) / 2.0))
    m1 = BlochEffect(1.0, -s2.r) * (1.0 / (1.0 + overlap))
    m2 = BlochEffect(1.0, -s1.r) * (1.0 / (1.0 + overlap))
    return Povm.from_partial([m1, m2])


def trine_scenario() -> Scenario:
    """Trine states with the trine measurement and a projective auxiliary measurement."""
    h = np.sqrt(3.0) / 2.0
    states = (BlochState([0, 0, 1]), BlochState([-h, 0, -0.5]), BlochState([h, 0, -0.5]))
    m1 = Povm(tuple(BlochEffect(2 / 3, -2 / 3 * states[3 - a].r) for a in (1, 2, 3)))
    m2 = Povm((states[0].as_effect().complement(), states[0].as_effect()))
    return Scenario(states, m1, m2)


def random_bloch_vectors(rng: np.random.Generator, n: int, purity_range=(0.5, 1.0)) -> np.ndarray:
    """``n`` Bloch vectors with Haar-random direction and purity uniform in ``purity_range``."""
    lo, hi = (float(v) for v in purity_range)
    if not (0.5 <= lo <= hi <= 1.0):
        raise ValidationError(f"purity range {purity_range} must satisfy 1/2 <= lo <= hi <= 1")
    g = rng.standard_normal((n, 3))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    purity = rng.uniform(lo, hi, size=n) if hi > lo else np.full(n, lo)
    return g * np.sqrt(np.maximum(0.0, 2.0 * purity - 1.0))[:, None]


def random_state(rng: np.random.Generator, purity_range=(0.5, 1.0)) -> BlochState:
    return BlochState(random_bloch_vectors(rng, 1, purity_range)[0])
