import numpy as np
import pytest
from hypothesis import given, strategies as st

from trichocert.qubit import (BlochEffect, BlochState, Povm, Scenario, ValidationError, born,
                              random_bloch_vectors, trine_scenario, usd_povm, validate_effect)

from helpers import dense, random_effect, random_state

unit = st.floats(-1, 1, allow_nan=False)
vec3 = st.tuples(unit, unit, unit)


def test_born_matches_dense_trace(rng):
    for _ in range(2000):
        rho, F = random_state(rng), random_effect(rng)
        expected = np.trace(dense(rho) @ dense(F)).real
        assert born(rho, F) == pytest.approx(expected, abs=1e-12)


def test_dense_positivity_agrees_with_validate_effect(rng):
    for _ in range(500):
        e = BlochEffect(rng.uniform(-0.5, 2.5), rng.uniform(-1.5, 1.5, 3))
        w = np.linalg.eigvalsh(dense(e))
        ok = w.min() >= -1e-12 and w.max() <= 1 + 1e-12
        assert validate_effect(e).ok == ok


def test_validate_effect_margins():
    rep = validate_effect(BlochEffect(1.0, [0, 0, 0.5]))
    assert rep.ok and rep.positivity_margin == pytest.approx(0.5)
    assert rep.subnormalization_margin == pytest.approx(0.5)
    rep = validate_effect(BlochEffect(1.5, [0, 0, 0.6]))
    assert not rep.ok
    assert rep.subnormalization_margin == pytest.approx(-0.1)
    assert any("subnormalization" in v for v in rep.violations)
    rep = validate_effect(BlochEffect(0.2, [0.3, 0, 0]))
    assert any("positivity" in v for v in rep.violations)


def test_state_outside_ball_rejected():
    with pytest.raises(ValidationError):
        BlochState([1.0, 0.1, 0.0])
    with pytest.raises(ValidationError):
        BlochState([np.nan, 0, 0])


def test_purity_and_pure_flag():
    assert BlochState([0, 0, 1]).is_pure
    assert BlochState.maximally_mixed().purity == pytest.approx(0.5)
    assert BlochState([0.6, 0, 0]).purity == pytest.approx(0.68)


def test_povm_must_sum_to_identity():
    up = BlochEffect.projector([0, 0, 1])
    Povm((up, up.complement()))
    with pytest.raises(ValidationError):
        Povm((up, up))


def test_born_rejects_invalid_effect():
    with pytest.raises(ValidationError):
        born(BlochState([0, 0, 1]), BlochEffect(1.5, [0, 0, 0.6]))


@given(vec3, st.floats(0, 2))
def test_complement_is_valid_iff_effect_is(x, x0):
    e = BlochEffect(x0, x)
    assert validate_effect(e).ok == validate_effect(e.complement()).ok


@given(vec3, vec3)
def test_born_probabilities_of_a_povm_sum_to_one(r, d):
    r = np.array(r)
    if np.linalg.norm(r) > 1:
        r = r / np.linalg.norm(r)
    d = np.array(d)
    if np.linalg.norm(d) < 1e-6:
        return
    rho = BlochState(r)
    povm = Povm.from_partial([BlochEffect(0.5, 0.5 * d / np.linalg.norm(d))])
    assert sum(born(rho, e) for e in povm.effects) == pytest.approx(1.0, abs=1e-12)


def _pure(rng):
    v = rng.standard_normal(3)
    return BlochState(v / np.linalg.norm(v))


def test_usd_povm_is_unambiguous_and_optimal(rng):
    for _ in range(300):
        s1, s2 = _pure(rng), _pure(rng)
        if abs(s1.r @ s2.r) > 1 - 1e-6:
            continue
        m = usd_povm(s1, s2)
        assert born(s2, m[0]) == pytest.approx(0, abs=1e-10)
        assert born(s1, m[1]) == pytest.approx(0, abs=1e-10)
        overlap = np.sqrt((1 + s1.r @ s2.r) / 2)
        # equal priors: optimal success probability is 1 - |<psi1|psi2>|
        success = 0.5 * (born(s1, m[0]) + born(s2, m[1]))
        assert success == pytest.approx(1 - overlap, abs=1e-10)
        w = np.linalg.eigvalsh(dense(m[2]))
        assert w.min() == pytest.approx(0, abs=1e-10)  # inconclusive effect is rank one


def test_usd_povm_requires_pure_states():
    with pytest.raises(ValidationError):
        usd_povm(BlochState([0, 0, 0.5]), BlochState([1, 0, 0]))


def test_trine_scenario_structure():
    s = trine_scenario()
    for e in s.m1.effects:
        assert e.x0 == pytest.approx(2 / 3)
        assert np.linalg.norm(e.x) == pytest.approx(2 / 3)
    xs = np.array([e.x for e in s.m1.effects])
    gram = xs @ xs.T / (4 / 9)
    assert np.allclose(gram[~np.eye(3, dtype=bool)], -0.5)


def test_scenario_json_round_trip():
    s = trine_scenario()
    s2 = Scenario.from_dict(s.to_dict())
    assert s2.to_dict() == s.to_dict()
    with pytest.raises(ValidationError):
        Scenario.from_dict({"states": []})


def test_random_bloch_vectors_purity_range(rng):
    r = random_bloch_vectors(rng, 5000, (0.6, 0.9))
    purity = 0.5 * (1 + np.sum(r * r, axis=1))
    assert purity.min() >= 0.6 - 1e-12 and purity.max() <= 0.9 + 1e-12
    with pytest.raises(ValidationError):
        random_bloch_vectors(rng, 3, (0.2, 0.9))
