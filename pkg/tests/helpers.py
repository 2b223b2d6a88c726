"""Random instance generators shared by the test modules."""

import numpy as np

from trichocert.qubit import BlochEffect, BlochState, Povm, Scenario, random_bloch_vectors

PAIRS = ((0, 1), (0, 2), (1, 2))


def random_effect(rng):
    """Uniform-ish valid effect: x0 in [0, 2], |x| <= min(x0, 2 - x0)."""
    x0 = rng.uniform(0, 2)
    d = rng.standard_normal(3)
    d /= np.linalg.norm(d)
    return BlochEffect(x0, d * rng.uniform(0, 1) * min(x0, 2 - x0))


def random_state(rng):
    d = rng.standard_normal(3)
    return BlochState(d / np.linalg.norm(d) * rng.uniform(0, 1) ** (1 / 3))


def random_simulable_povm(rng):
    """Mixture of three two-outcome POVMs, one on each pair of outcomes."""
    w = rng.dirichlet(np.ones(3))
    parts = [BlochEffect.zero() for _ in range(3)]
    for wk, (a, b) in zip(w, PAIRS):
        e = random_effect(rng)
        parts[a] = parts[a] + wk * e
        parts[b] = parts[b] + wk * e.complement()
    return Povm.from_partial(parts[:2])


def random_simulable_scenario(rng):
    states = tuple(BlochState(r) for r in random_bloch_vectors(rng, 3, (0.5, 1.0)))
    return Scenario(states, random_simulable_povm(rng), Povm.from_partial([random_effect(rng)]))


def dense(obj):
    """2x2 complex matrix of a Bloch state or effect."""
    s = [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]),
         np.diag([1.0, -1.0])]
    if isinstance(obj, BlochState):
        c = np.concatenate([[1.0], obj.r])
    else:
        c = obj.as_array()
    return 0.5 * sum(ck * sk for ck, sk in zip(c, s))
