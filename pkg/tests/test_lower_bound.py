import math

import numpy as np
import pytest
from sklearn.base import clone

from trichocert.correlations import simulable_usd_matrix, trine_matrix, usd_matrix
from trichocert.lower_bound import (DegenerateToleranceError, LowerBoundCertifier,
                                    MonotonicityError, ScanAborted, critical_eps, feasibility,
                                    q33_precheck, scan, tolerances, trace_constants)
from trichocert.qubit import ValidationError
from trichocert.seesaw import seesaw

import audits

TARGET = usd_matrix(0.577, 0.726, 0.276)


def test_trace_constants_example():
    c1, c2 = trace_constants(TARGET)
    assert c1 == pytest.approx(0.577 * 0.724)
    assert c2 == pytest.approx(0.726)


def test_tolerances_example():
    tb = tolerances(TARGET, 1e-3)
    assert tb.eps3xy == pytest.approx(0.002 / (tb.c1 - 1e-3))
    assert tb.eps3xy == pytest.approx(0.00480, abs=1e-5)
    assert tb.eps2xy == pytest.approx(0.00276, abs=1e-5)
    u = tb.eps2xy
    assert tb.eps2z == pytest.approx(math.sqrt(1 - (1 - u) ** 2))
    root = math.sqrt(4e-3 + 1e-6)
    assert tb.tol_row1 == pytest.approx(tb.eps2xy + 2 * root)
    assert tb.tol_q33 == pytest.approx(tb.eps2xy + tb.eps3xy + tb.eps2xy * tb.eps3xy
                                       + tb.eps2z * tb.eps3z + root)


def test_tolerances_zero_and_degenerate():
    tb = tolerances(TARGET, 0.0)
    assert all(getattr(tb, f) == 0 for f in
               ("eps2xy", "eps2z", "eps3xy", "eps3z", "tol_row1", "tol_q33"))
    with pytest.raises(DegenerateToleranceError, match="degenerate"):
        tolerances(TARGET, trace_constants(TARGET)[0])


def test_tolerances_monotone_and_nonnegative():
    c = min(trace_constants(TARGET))
    prev = None
    for eps in np.linspace(0, 0.95 * c, 200):
        tb = tolerances(TARGET, eps)
        vals = np.array([tb.eps2xy, tb.eps2z, tb.eps3xy, tb.eps3z, tb.tol_row1, tb.tol_q33])
        assert np.all(vals >= 0)
        if prev is not None:
            assert np.all(vals >= prev - 1e-15)
        prev = vals


def test_precheck_rejects_far_angles():
    tb = tolerances(TARGET, 1e-3)
    assert not q33_precheck(TARGET, 0.0, tb)  # (1 + cos 0)/2 = 1, far from 0.276
    assert not feasibility(TARGET, 0.0, 1e-3)


def test_simulable_family_feasible_at_realizing_angle(rng):
    for _ in range(20):
        f2, f3, k = rng.uniform(0.2, 1, 3)
        xi = rng.uniform(0.1, 0.9)
        P = simulable_usd_matrix(f2, f3, k, xi)
        phi = math.acos(2 * xi - 1)
        assert feasibility(P, phi, 1e-4)


def test_target_infeasible_at_zero():
    phi = math.acos(2 * 0.276 - 1)
    assert not feasibility(TARGET, phi, 0.0)
    assert critical_eps(TARGET, phi).eps_c > 0


def test_feasibility_monotone_in_eps(rng):
    checked = 0
    while checked < 1000:
        p, q, xi = rng.uniform(0.05, 0.95, 3)
        if (1 - p) * (1 - q) < p * q * xi:
            continue
        P = usd_matrix(p, q, xi)
        c = min(trace_constants(P))
        e1, e2 = np.sort(rng.uniform(0, 0.5 * min(c, 0.2), 2))
        phi = math.acos(2 * xi - 1) + rng.normal(0, 0.2)
        if feasibility(P, phi, e1):
            assert feasibility(P, phi, e2)
        checked += 1


def test_critical_eps_synthetic_oracle():
    r = critical_eps(None, 0.0, eps_hi=1.0, oracle=lambda e: e >= 0.5)
    assert r.eps_c == pytest.approx(0.5, abs=1e-6)
    assert r.lower < 0.5 <= r.upper and r.upper - r.lower <= 1e-6
    r = critical_eps(None, 0.0, oracle=lambda e: e >= 0.3)  # auto bracket
    assert r.eps_c == pytest.approx(0.3, abs=1e-6)
    assert critical_eps(None, 0.0, oracle=lambda e: True).eps_c == 0


def test_critical_eps_detects_non_monotone_oracle():
    with pytest.raises(MonotonicityError):
        # bisection on [0, 0.6] settles at 0.5; the probe at 0.25 then hits the feasible island
        critical_eps(None, 0.0, eps_hi=0.6, oracle=lambda e: e >= 0.5 or 0.2 < e < 0.3)
    with pytest.raises(MonotonicityError):
        critical_eps(None, 0.0, eps_hi=1.0, oracle=lambda e: False)


def test_lipschitz_audit():
    phi0 = 2.194
    step = 1e-3
    phis = phi0 + step * np.arange(-60, 61)
    vals = np.array([critical_eps(TARGET, p, bis_tol=1e-8).eps_c for p in phis])
    assert np.max(np.abs(np.diff(vals))) / step <= 0.5 + 0.05


def test_scan_invariants_and_sandwich():
    res = scan(TARGET, delta=2 * math.pi / 64)
    phis = np.array([s[0] for s in res.samples])
    assert phis[0] == 0 and np.all(np.diff(phis) <= res.delta + 1e-12)
    assert 2 * math.pi - phis[-1] <= res.delta + 1e-12
    assert res.certified_lower <= res.eps_grid_min
    assert res.certified_lower <= max(0, res.eps_grid_min - res.delta / 4) + 1e-12
    r_sup = seesaw(TARGET, "sup", restarts=100, seed=0).r_upper
    assert res.certified_lower <= r_sup + 1e-6


def test_scan_on_simulable_target_is_zero():
    xi = 0.25  # realizing angle acos(-0.5) = 2 pi / 3 lies on a 48-point grid
    P = simulable_usd_matrix(0.7, 0.8, 0.4, xi)
    res = scan(P, delta=2 * math.pi / 48)
    assert res.eps_grid_min == 0
    assert res.certified_lower == 0


def test_adaptive_matches_full_grid():
    step = 2 * math.pi / 200
    full = scan(TARGET, delta=step)
    ada = scan(TARGET, delta=step, adaptive=True, coarse_delta=2 * math.pi / 25)
    assert ada.delta == pytest.approx(full.delta)
    assert len(ada.samples) < len(full.samples)
    assert full.certified_lower - 1e-9 <= ada.certified_lower <= full.certified_lower + step / 4


def test_scan_requires_usd_form():
    with pytest.raises(ValidationError):
        scan(trine_matrix())


def test_scan_abort_keeps_samples(monkeypatch):
    import trichocert.lower_bound as lb
    calls = []

    def flaky(P, phi, bis_tol=1e-6):
        calls.append(phi)
        if len(calls) > 3:
            raise MonotonicityError("planted")
        return lb.CriticalRadius(0.1, 0.1, 0.1)

    monkeypatch.setattr(lb, "critical_eps", flaky)
    with pytest.raises(ScanAborted) as info:
        scan(TARGET, delta=2 * math.pi / 10)
    assert len(info.value.samples) == 3


def test_estimator_api():
    est = LowerBoundCertifier(delta=2 * math.pi / 16)
    assert clone(est).get_params()["delta"] == est.delta
    est.fit(TARGET)
    assert est.score() == est.certified_lower_ >= 0


@pytest.mark.parametrize("audit", [audits.trace_lemma, audits.trace_corollary,
                                   audits.purity_lemma, audits.y_corollary])
def test_pinning_audits(audit):
    assert audit(np.random.default_rng(7), n=2000) == 0
