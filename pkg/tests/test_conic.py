import numpy as np
import pytest

from trichocert.conic import (INFEASIBLE, OPTIMAL, UNBOUNDED, ConicProgram, SecondOrderCone,
                              is_feasible, max_violation_relaxation, solve)


def test_cone_violation():
    cone = SecondOrderCone(np.eye(2), [0.0, 0.0], [0.0, 0.0], 1.0)
    assert cone.violation(np.array([3.0, 4.0])) == pytest.approx(4.0)
    assert cone.violation(np.zeros(2)) == pytest.approx(-1.0)


def test_bound_constraint():
    p = ConicProgram(1, objective=[1.0])
    p.add_inequality([-1.0], -3.0)  # v >= 3
    res = solve(p)
    assert res.status == OPTIMAL and res.v[0] == pytest.approx(3, abs=1e-7)
    assert res.certified_gap <= 1e-8


def test_constant_cone():
    p = ConicProgram(1, objective=[1.0])
    p.add_cone(np.zeros((3, 1)), [1.0, 0, 0], [1.0], 0.0)  # ||(1,0,0)|| <= v
    res = solve(p)
    assert res.optimal and res.objective_value == pytest.approx(1, abs=1e-7)


def test_infeasible_pair_and_slack_value():
    p = ConicProgram(1, objective=[1.0])
    p.add_inequality([-1.0], -1.0)
    p.add_inequality([1.0], 0.0)
    res = solve(p)
    assert res.status == INFEASIBLE
    assert res.infeasibility == pytest.approx(0.5, abs=1e-7)
    s, _ = max_violation_relaxation(p)
    assert s == pytest.approx(0.5, abs=1e-7)
    assert not is_feasible(p)


def test_empty_program():
    s, _ = max_violation_relaxation(ConicProgram(2))
    assert s == 0
    assert solve(ConicProgram(2)).optimal
    assert solve(ConicProgram(1, objective=[1.0])).status == UNBOUNDED


def test_interior_feasible_program_has_negative_slack():
    p = ConicProgram(1)
    p.add_inequality([1.0], 1.0)
    p.add_inequality([-1.0], 1.0)
    s, v = max_violation_relaxation(p)
    assert s < 0 and abs(v[0]) <= 1 + 1e-9


def planted_socp(rng, n=4, k=3):
    """min c.v over k balls ||v - a_i|| <= rad_i; c is chosen so a planted point is optimal.

    The optimum is the point where the first ball touches the supporting plane.
    Returns the program and the planted objective value.
    """
    a0 = rng.standard_normal(n)
    rad0 = rng.uniform(0.5, 1.5)
    c = rng.standard_normal(n)
    c /= np.linalg.norm(c)
    v_star = a0 - rad0 * c
    p = ConicProgram(n, objective=c)
    p.add_cone(np.eye(n), -a0, np.zeros(n), rad0)
    for _ in range(k - 1):
        # larger balls containing the first ball: inactive
        shift = rng.standard_normal(n) * 0.3
        p.add_cone(np.eye(n), -(a0 + shift), np.zeros(n),
                   rad0 + np.linalg.norm(shift) + rng.uniform(0.1, 1))
    return p, float(c @ v_star)


def test_planted_optima(rng):
    for _ in range(300):
        p, opt = planted_socp(rng)
        res = solve(p)
        assert res.optimal
        assert res.objective_value == pytest.approx(opt, abs=1e-6)
        assert p.max_violation(res.v) <= 1e-8


def test_relaxing_a_constraint_never_increases_minimum(rng):
    for _ in range(100):
        A = rng.standard_normal((6, 3))
        x0 = rng.standard_normal(3)
        b = A @ x0 + rng.uniform(0.1, 1, 6)
        c = A.T @ rng.uniform(0.1, 1, 6)  # bounded below
        tight = ConicProgram(3, objective=-c)
        loose = ConicProgram(3, objective=-c)
        j = rng.integers(6)
        for i in range(6):
            tight.add_inequality(A[i], b[i])
            loose.add_inequality(A[i], b[i] + (1.0 if i == j else 0.0))
        r1, r2 = solve(tight), solve(loose)
        assert r1.optimal and r2.optimal
        assert r2.objective_value <= r1.objective_value + 1e-7


def test_deterministic(rng):
    p, _ = planted_socp(rng)
    a, b = solve(p), solve(p)
    assert a.status == b.status
    assert a.objective_value == b.objective_value
    assert np.array_equal(a.v, b.v)


def test_dump_lists_constraints():
    p = ConicProgram(2, objective=[1.0, 0.0])
    p.add_equality([1.0, 1.0], 1.0)
    p.add_inequality([-1.0, 0.0], 0.0)
    text = p.dump()
    assert len(text.strip().splitlines()) >= 3
    assert p.n_constraints == 2
